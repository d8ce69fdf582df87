// Test-only brute-force reference implementations. These deliberately use
// naive nested loops and stay independent of the library's computation paths.
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "lfb/eval.hpp"
#include "lfb/spectral.hpp"
#include "lfb/tensor.hpp"

namespace oracle {

constexpr double kPi = 3.141592653589793238462643383279502884;

// O(P^4) forward DFT, unnormalized: X[u,v] = sum_xy x[y,x] e^{-2pi i(uy+vx)/P}.
inline lfb::ComplexGrid dft2d(const lfb::RealGrid& patch) {
    const int P = patch.height;
    lfb::ComplexGrid out(P, P);
    for (int u = 0; u < P; ++u) {
        for (int v = 0; v < P; ++v) {
            std::complex<double> s = 0.0;
            for (int y = 0; y < P; ++y) {
                for (int x = 0; x < P; ++x) {
                    const double ang = -2.0 * kPi * (static_cast<double>(u) * y + static_cast<double>(v) * x) / P;
                    s += patch.at(y, x) * std::complex<double>(std::cos(ang), std::sin(ang));
                }
            }
            out.re[static_cast<size_t>(u) * P + v] = s.real();
            out.im[static_cast<size_t>(u) * P + v] = s.imag();
        }
    }
    return out;
}

// Naive cross-correlation-with-dilation reference, double precision.
// Kernel KH x KW x Cin x Cout, same-padding (dilated_k - 1)/2.
inline std::vector<double> conv2d_ref(const std::vector<double>& in, int h, int w, int cin,
                                      const std::vector<double>& kernel, int kh, int kw, int cout,
                                      const std::vector<double>* bias, int dilation, int stride,
                                      bool reflect, int& oh, int& ow) {
    const int dkh = (kh - 1) * dilation + 1, dkw = (kw - 1) * dilation + 1;
    const int py = (dkh - 1) / 2, px = (dkw - 1) / 2;
    oh = (h + 2 * py - dkh) / stride + 1;
    ow = (w + 2 * px - dkw) / stride + 1;
    auto fold = [](int i, int n) {
        while (i < 0 || i >= n) i = i < 0 ? -1 - i : 2 * n - 1 - i;
        return i;
    };
    std::vector<double> out(static_cast<size_t>(oh) * ow * cout, 0.0);
    for (int oy = 0; oy < oh; ++oy)
        for (int ox = 0; ox < ow; ++ox)
            for (int co = 0; co < cout; ++co) {
                double acc = bias ? (*bias)[static_cast<size_t>(co)] : 0.0;
                for (int ky = 0; ky < kh; ++ky)
                    for (int kx = 0; kx < kw; ++kx) {
                        int yy = oy * stride + ky * dilation - py;
                        int xx = ox * stride + kx * dilation - px;
                        if (reflect) {
                            yy = fold(yy, h);
                            xx = fold(xx, w);
                        } else if (yy < 0 || yy >= h || xx < 0 || xx >= w) {
                            continue;
                        }
                        for (int ci = 0; ci < cin; ++ci)
                            acc += in[(static_cast<size_t>(yy) * w + xx) * cin + ci] *
                                   kernel[((static_cast<size_t>(ky) * kw + kx) * cin + ci) * cout + co];
                    }
                out[(static_cast<size_t>(oy) * ow + ox) * cout + co] = acc;
            }
    return out;
}

inline std::vector<double> to_double(const std::vector<float>& v) {
    return std::vector<double>(v.begin(), v.end());
}

// AP via explicit score-cutoff enumeration: every distinct score defines a
// cutoff; the PR point set is integrated under the monotone envelope.
inline double ap_by_cutoffs(const std::vector<std::pair<double, bool>>& scored_flags,
                            int total_gts) {
    if (total_gts == 0) return 0.0;
    std::set<double, std::greater<double>> cutoffs;
    for (const auto& [score, tp] : scored_flags) cutoffs.insert(score);
    std::vector<std::pair<double, double>> points;  // (recall, precision)
    for (double cut : cutoffs) {
        int tp = 0, n = 0;
        for (const auto& [score, is_tp] : scored_flags) {
            if (score >= cut) {
                ++n;
                if (is_tp) ++tp;
            }
        }
        points.emplace_back(static_cast<double>(tp) / total_gts,
                            n ? static_cast<double>(tp) / n : 0.0);
    }
    std::sort(points.begin(), points.end());
    double ap = 0.0, prev_r = 0.0;
    for (size_t i = 0; i < points.size(); ++i) {
        double best = 0.0;  // interpolated precision at recall >= points[i]
        for (size_t j = i; j < points.size(); ++j) best = std::max(best, points[j].second);
        ap += (points[i].first - prev_r) * best;
        prev_r = points[i].first;
    }
    return ap;
}

// Maximum achievable TP count over all injective det->gt assignments with
// IoU >= tau. Exponential; callers keep instances at <= 5 boxes.
inline int max_tp_assignment(const std::vector<lfb::eval::Detection>& dets,
                             const std::vector<lfb::eval::BBox>& gts, double tau) {
    std::vector<bool> used(gts.size(), false);
    std::function<int(size_t)> rec = [&](size_t i) -> int {
        if (i == dets.size()) return 0;
        int best = rec(i + 1);  // leave detection i unmatched
        for (size_t g = 0; g < gts.size(); ++g) {
            if (!used[g] && lfb::eval::iou(dets[i].box, gts[g]) >= tau) {
                used[g] = true;
                best = std::max(best, 1 + rec(i + 1));
                used[g] = false;
            }
        }
        return best;
    };
    return rec(0);
}

// Full guidance 6-vector computed with explicit loops straight from the
// spectra, independent of the library's helpers.
struct GuidanceRef {
    double d_x, d_y, s_phi, c_hf, c_lf, coh;
};

inline GuidanceRef guidance_ref(const lfb::ComplexGrid& fr, const lfb::ComplexGrid& ft,
                                double rho) {
    const int P = fr.height;
    auto wrap1 = [](double a) {
        while (a > kPi) a -= 2.0 * kPi;
        while (a < -kPi) a += 2.0 * kPi;
        return a;
    };
    double ssin = 0, scos = 0, sabs = 0;
    for (int u = 0; u < P; ++u)
        for (int v = 0; v < P; ++v) {
            const size_t i = static_cast<size_t>(u) * P + v;
            const double pr = std::hypot(fr.re[i], fr.im[i]) == 0.0
                                  ? 0.0
                                  : std::atan2(fr.im[i], fr.re[i]);
            const double pt = std::hypot(ft.re[i], ft.im[i]) == 0.0
                                  ? 0.0
                                  : std::atan2(ft.im[i], ft.re[i]);
            const double dphi = wrap1(pr - pt);
            ssin += std::sin(dphi);
            scos += std::cos(dphi);
            sabs += std::abs(dphi);
        }
    const double n = static_cast<double>(P) * P;

    auto bands = [&](const lfb::ComplexGrid& f, double& ehf, double& elf) {
        double shf = 0, slf = 0;
        int nhf = 0, nlf = 0;
        for (int u = 0; u < P; ++u)
            for (int v = 0; v < P; ++v) {
                const int du = u < P / 2 ? u : u - P;
                const int dv = v < P / 2 ? v : v - P;
                const double r = std::sqrt(static_cast<double>(du) * du + static_cast<double>(dv) * dv) / (P / 2.0);
                const size_t i = static_cast<size_t>(u) * P + v;
                const double p = f.re[i] * f.re[i] + f.im[i] * f.im[i];
                if (r <= 2.0 * rho) {
                    slf += p;
                    ++nlf;
                } else {
                    shf += p;
                    ++nhf;
                }
            }
        ehf = nhf ? shf / nhf : 0.0;
        elf = nlf ? slf / nlf : 0.0;
    };
    double er_hf, er_lf, et_hf, et_lf;
    bands(fr, er_hf, er_lf);
    bands(ft, et_hf, et_lf);

    std::complex<double> num = 0.0;
    double powr = 0, powt = 0;
    for (size_t i = 0; i < fr.re.size(); ++i) {
        const std::complex<double> a(fr.re[i], fr.im[i]), b(ft.re[i], ft.im[i]);
        num += a * std::conj(b);
        powr += std::norm(a);
        powt += std::norm(b);
    }
    GuidanceRef g;
    g.d_x = ssin / n;
    g.d_y = scos / n;
    g.s_phi = sabs / n;
    g.c_hf = (er_hf + et_hf) == 0.0 ? 0.5 : er_hf / (er_hf + et_hf);
    g.c_lf = (er_lf + et_lf) == 0.0 ? 0.5 : et_lf / (er_lf + et_lf);
    g.coh = (powr == 0.0 || powt == 0.0) ? 0.0 : std::abs(num) / std::sqrt(powr * powt);
    return g;
}

// Single-head softmax attention over one window, double precision.
// q, k, v are [n][d]; returns [n][d].
inline std::vector<std::vector<double>> attention_ref(const std::vector<std::vector<double>>& q,
                                                      const std::vector<std::vector<double>>& k,
                                                      const std::vector<std::vector<double>>& v) {
    const size_t n = q.size(), d = q[0].size();
    std::vector<std::vector<double>> out(n, std::vector<double>(d, 0.0));
    for (size_t i = 0; i < n; ++i) {
        std::vector<double> s(n, 0.0);
        for (size_t j = 0; j < n; ++j)
            for (size_t c = 0; c < d; ++c) s[j] += q[i][c] * k[j][c];
        double smax = s[0];
        for (double x : s) smax = std::max(smax, x);
        double z = 0.0;
        for (size_t j = 0; j < n; ++j) {
            s[j] = std::exp(s[j] / std::sqrt(static_cast<double>(d)) -
                            smax / std::sqrt(static_cast<double>(d)));
            z += s[j];
        }
        for (size_t j = 0; j < n; ++j)
            for (size_t c = 0; c < d; ++c) out[i][c] += (s[j] / z) * v[j][c];
    }
    return out;
}

}  // namespace oracle
