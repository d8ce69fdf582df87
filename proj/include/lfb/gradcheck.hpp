/**
 * @file gradcheck.hpp
 * @brief Central finite differences against analytic gradients for the
 *        learnable pathways: amplitude blend (alpha), phase interpolation
 *        (beta), sigmoid gate (conv weights), bilinear sampling (coords),
 *        and conv2d (weights). Evaluation runs in double precision through
 *        the same templated kernels the float pipeline uses.
 */
#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "lfb/fgsa.hpp"
#include "lfb/lfca.hpp"
#include "lfb/rng.hpp"
#include "lfb/tensor.hpp"

namespace lfb {

struct GradReport {
    std::string op;
    int n_params = 0;
    double max_rel_error = 0.0;
    double mean_rel_error = 0.0;
    double tolerance = 1e-4;  // 1e-3 near bilinear kinks
    bool pass = false;
};

inline const std::vector<std::string>& supported_gradcheck_ops() {
    static const std::vector<std::string> ops = {"blend_alpha", "phase_beta", "sigmoid_gate",
                                                 "bilinear_coords", "conv_weights"};
    return ops;
}

namespace gradcheck_detail {

/// Per-parameter errors are relative to max(|analytic|, |fd|), floored at
/// 1e-3 of the op's largest gradient component so near-zero entries do not
/// divide away the comparison.
inline void finish(GradReport& r, const std::vector<double>& analytic,
                   const std::vector<double>& fd) {
    r.n_params = static_cast<int>(analytic.size());
    double gscale = 0.0;
    for (size_t i = 0; i < analytic.size(); ++i)
        gscale = std::max({gscale, std::abs(analytic[i]), std::abs(fd[i])});
    const double floor = std::max(1e-3 * gscale, 1e-12);
    double sum = 0.0;
    for (size_t i = 0; i < analytic.size(); ++i) {
        const double e = std::abs(analytic[i] - fd[i]) /
                         std::max({std::abs(analytic[i]), std::abs(fd[i]), floor});
        r.max_rel_error = std::max(r.max_rel_error, e);
        sum += e;
    }
    r.mean_rel_error = analytic.empty() ? 0.0 : sum / static_cast<double>(analytic.size());
    r.pass = r.max_rel_error <= r.tolerance;
}

inline RealGrid random_grid(Rng& rng, int n, double lo, double hi) {
    RealGrid g(n, n);
    for (double& v : g.v) v = rng.uniform(lo, hi);
    return g;
}

inline GradReport blend_alpha(std::uint64_t seed, double eps) {
    Rng rng(seed);
    const int P = 8;
    const RealGrid a_r = normalize_amplitude(random_grid(rng, P, 0.0, 1.0));
    const RealGrid a_t = normalize_amplitude(random_grid(rng, P, 0.0, 1.0));
    const RealGrid weights = random_grid(rng, P, -1.0, 1.0);
    const double alpha = rng.uniform(0.1, 0.9);

    auto loss = [&](double a) {
        const RealGrid out = blend_amplitude(a_r, a_t, a);
        double L = 0.0;
        for (size_t i = 0; i < out.v.size(); ++i) L += weights.v[i] * out.v[i];
        return L;
    };
    double analytic = 0.0;
    for (size_t i = 0; i < a_r.v.size(); ++i)
        analytic += weights.v[i] * (a_r.v[i] - a_t.v[i]);
    const double fd = (loss(alpha + eps) - loss(alpha - eps)) / (2.0 * eps);

    GradReport r;
    r.op = "blend_alpha";
    finish(r, {rel_error(analytic, fd)});
    return r;
}

inline GradReport phase_beta(std::uint64_t seed, double eps) {
    Rng rng(seed);
    const int P = 8;
    const RealGrid phi_r = random_grid(rng, P, -kPi + 0.01, kPi - 0.01);
    const RealGrid phi_t = random_grid(rng, P, -kPi + 0.01, kPi - 0.01);
    const RealGrid weights = random_grid(rng, P, -1.0, 1.0);
    const double beta = rng.uniform(0.1, 0.9);

    // The outer wrap jumps where the interpolated angle crosses +-pi; those
    // bins are masked out so the loss stays smooth across beta +- eps.
    const double margin = 4.0 * eps * kPi;
    std::vector<bool> mask(phi_r.v.size());
    for (size_t i = 0; i < mask.size(); ++i) {
        const double inner = phi_t.v[i] + beta * wrap(phi_r.v[i] - phi_t.v[i]);
        mask[i] = std::abs(std::abs(inner) - kPi) > margin;
    }
    auto loss = [&](double b) {
        const RealGrid out = align_phase(phi_r, phi_t, b);
        double L = 0.0;
        for (size_t i = 0; i < out.v.size(); ++i)
            if (mask[i]) L += weights.v[i] * out.v[i];
        return L;
    };
    double analytic = 0.0;
    for (size_t i = 0; i < phi_r.v.size(); ++i)
        if (mask[i]) analytic += weights.v[i] * wrap(phi_r.v[i] - phi_t.v[i]);
    const double fd = (loss(beta + eps) - loss(beta - eps)) / (2.0 * eps);

    GradReport r;
    r.op = "phase_beta";
    finish(r, {rel_error(analytic, fd)});
    return r;
}

inline GradReport sigmoid_gate(std::uint64_t seed, double eps) {
    Rng rng(seed);
    const int H = 6, W = 6, CIN = 8, COUT = 6;
    std::vector<double> input(static_cast<size_t>(H) * W * CIN);
    std::vector<double> guidance(static_cast<size_t>(H) * W * COUT);
    std::vector<double> upstream(static_cast<size_t>(H) * W * COUT);
    for (double& v : input) v = rng.uniform(-1.0, 1.0);
    for (double& v : guidance) v = rng.uniform(-1.0, 1.0);
    for (double& v : upstream) v = rng.uniform(-1.0, 1.0);
    std::vector<double> kernel(static_cast<size_t>(CIN) * COUT);
    std::vector<double> bias(COUT);
    for (double& v : kernel) v = rng.uniform(-0.5, 0.5);
    for (double& v : bias) v = rng.uniform(-0.5, 0.5);

    auto loss = [&](const std::vector<double>& k, const std::vector<double>& b) {
        int oh = 0, ow = 0;
        const std::vector<double> z = detail::conv2d_raw<double>(
            input.data(), H, W, CIN, k.data(), 1, 1, COUT, b.data(), 1, 1, Padding::zero, oh, ow);
        double L = 0.0;
        for (size_t i = 0; i < z.size(); ++i) L += upstream[i] * sigmoid(z[i]) * guidance[i];
        return L;
    };

    int oh = 0, ow = 0;
    const std::vector<double> z = detail::conv2d_raw<double>(
        input.data(), H, W, CIN, kernel.data(), 1, 1, COUT, bias.data(), 1, 1, Padding::zero, oh,
        ow);
    std::vector<double> errors;
    for (int ci = 0; ci < CIN; ++ci) {
        for (int co = 0; co < COUT; ++co) {
            double analytic = 0.0;
            for (int p = 0; p < H * W; ++p) {
                const size_t o = static_cast<size_t>(p) * COUT + co;
                const double s = sigmoid(z[o]);
                analytic += upstream[o] * guidance[o] * s * (1.0 - s) *
                            input[static_cast<size_t>(p) * CIN + ci];
            }
            std::vector<double> kp = kernel, km = kernel;
            kp[static_cast<size_t>(ci) * COUT + co] += eps;
            km[static_cast<size_t>(ci) * COUT + co] -= eps;
            const double fd = (loss(kp, bias) - loss(km, bias)) / (2.0 * eps);
            errors.push_back(rel_error(analytic, fd));
        }
    }
    for (int co = 0; co < COUT; ++co) {
        double analytic = 0.0;
        for (int p = 0; p < H * W; ++p) {
            const size_t o = static_cast<size_t>(p) * COUT + co;
            const double s = sigmoid(z[o]);
            analytic += upstream[o] * guidance[o] * s * (1.0 - s);
        }
        std::vector<double> bp = bias, bm = bias;
        bp[static_cast<size_t>(co)] += eps;
        bm[static_cast<size_t>(co)] -= eps;
        const double fd = (loss(kernel, bp) - loss(kernel, bm)) / (2.0 * eps);
        errors.push_back(rel_error(analytic, fd));
    }

    GradReport r;
    r.op = "sigmoid_gate";
    finish(r, errors);
    return r;
}

inline GradReport bilinear_coords(std::uint64_t seed, double eps) {
    Rng rng(seed);
    const int H = 12, W = 12, C = 3;
    std::vector<double> map(static_cast<size_t>(H) * W * C);
    for (double& v : map) v = rng.uniform(0.0, 1.0);

    double x = rng.uniform(1.0, W - 2.0);
    double y = rng.uniform(1.0, H - 2.0);
    // Keep the central-difference interval inside one bilinear cell.
    auto nudge = [&](double v) {
        const double f = v - std::floor(v);
        if (f < 2.0 * eps) return std::floor(v) + 2.0 * eps;
        if (f > 1.0 - 2.0 * eps) return std::floor(v) + 1.0 - 2.0 * eps;
        return v;
    };
    x = nudge(x);
    y = nudge(y);
    const double fx = x - std::floor(x), fy = y - std::floor(y);
    const bool near_kink = std::min({fx, 1.0 - fx, fy, 1.0 - fy}) < 8.0 * eps;

    std::vector<double> errors;
    for (int c = 0; c < C; ++c) {
        double ddx = 0.0, ddy = 0.0;
        detail::bilinear_grad_raw<double>(map.data(), H, W, C, c, x, y, ddx, ddy);
        const double fdx = (detail::bilinear_raw<double>(map.data(), H, W, C, c, x + eps, y) -
                            detail::bilinear_raw<double>(map.data(), H, W, C, c, x - eps, y)) /
                           (2.0 * eps);
        const double fdy = (detail::bilinear_raw<double>(map.data(), H, W, C, c, x, y + eps) -
                            detail::bilinear_raw<double>(map.data(), H, W, C, c, x, y - eps)) /
                           (2.0 * eps);
        errors.push_back(rel_error(ddx, fdx));
        errors.push_back(rel_error(ddy, fdy));
    }

    GradReport r;
    r.op = "bilinear_coords";
    if (near_kink) r.tolerance = 1e-3;
    finish(r, errors);
    return r;
}

inline GradReport conv_weights(std::uint64_t seed, double eps) {
    Rng rng(seed);
    const int H = 7, W = 7, CIN = 3, COUT = 4, K = 3;
    const int dilation = 1 + static_cast<int>(seed % 2);
    const Padding padding = (seed >> 1) % 2 ? Padding::reflect : Padding::zero;
    std::vector<double> input(static_cast<size_t>(H) * W * CIN);
    std::vector<double> kernel(static_cast<size_t>(K) * K * CIN * COUT);
    for (double& v : input) v = rng.uniform(-1.0, 1.0);
    for (double& v : kernel) v = rng.uniform(-0.5, 0.5);

    int oh = 0, ow = 0;
    auto forward = [&](const std::vector<double>& k) {
        return detail::conv2d_raw<double>(input.data(), H, W, CIN, k.data(), K, K, COUT, nullptr,
                                          dilation, 1, padding, oh, ow);
    };
    const std::vector<double> base = forward(kernel);
    std::vector<double> upstream(base.size());
    for (double& v : upstream) v = rng.uniform(-1.0, 1.0);

    auto loss_of = [&](const std::vector<double>& out) {
        double L = 0.0;
        for (size_t i = 0; i < out.size(); ++i) L += upstream[i] * out[i];
        return L;
    };

    // Independent analytic weight gradient with explicit padded indexing.
    const int dk = (K - 1) * dilation + 1;
    const int pad = (dk - 1) / 2;
    auto input_at = [&](int yy, int xx, int ci) -> double {
        if (padding == Padding::zero) {
            if (yy < 0 || yy >= H || xx < 0 || xx >= W) return 0.0;
        } else {
            yy = reflect_index(yy, H);
            xx = reflect_index(xx, W);
        }
        return input[(static_cast<size_t>(yy) * W + xx) * CIN + ci];
    };

    std::vector<double> errors;
    for (int ky = 0; ky < K; ++ky) {
        for (int kx = 0; kx < K; ++kx) {
            for (int ci = 0; ci < CIN; ++ci) {
                for (int co = 0; co < COUT; ++co) {
                    double analytic = 0.0;
                    for (int oy = 0; oy < oh; ++oy) {
                        for (int ox = 0; ox < ow; ++ox) {
                            analytic += upstream[(static_cast<size_t>(oy) * ow + ox) * COUT + co] *
                                        input_at(oy + ky * dilation - pad,
                                                 ox + kx * dilation - pad, ci);
                        }
                    }
                    const size_t w = ((static_cast<size_t>(ky) * K + kx) * CIN + ci) * COUT + co;
                    std::vector<double> kp = kernel, km = kernel;
                    kp[w] += eps;
                    km[w] -= eps;
                    const double fd = (loss_of(forward(kp)) - loss_of(forward(km))) / (2.0 * eps);
                    errors.push_back(rel_error(analytic, fd));
                }
            }
        }
    }

    GradReport r;
    r.op = "conv_weights";
    finish(r, errors);
    return r;
}

}  // namespace gradcheck_detail

/// Central finite differences vs analytic gradient at one random point drawn
/// from `seed`. Unsupported op ids raise an error listing the supported set.
inline GradReport check_gradient(const std::string& op_id, std::uint64_t seed,
                                 double eps = 1e-3) {
    if (op_id == "blend_alpha") return gradcheck_detail::blend_alpha(seed, eps);
    if (op_id == "phase_beta") return gradcheck_detail::phase_beta(seed, eps);
    if (op_id == "sigmoid_gate") return gradcheck_detail::sigmoid_gate(seed, eps);
    if (op_id == "bilinear_coords") return gradcheck_detail::bilinear_coords(seed, eps);
    if (op_id == "conv_weights") return gradcheck_detail::conv_weights(seed, eps);
    std::string supported;
    for (const std::string& s : supported_gradcheck_ops()) supported += " " + s;
    throw data_error("check_gradient: unknown op '" + op_id + "'; supported:" + supported);
}

}  // namespace lfb
