/**
 * @file selftest.hpp
 * @brief Embedded invariant suite behind the `selftest` CLI subcommand.
 *
 * Each check recomputes a known identity from scratch. The optional fault id
 * is a test hook: the matching check perturbs its own computation so the
 * failure path and exit-code contract stay exercisable.
 */
#pragma once

#include <cmath>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "lfb/backbone.hpp"
#include "lfb/eval.hpp"
#include "lfb/fgsa.hpp"
#include "lfb/lfca.hpp"
#include "lfb/lfgm.hpp"
#include "lfb/rng.hpp"
#include "lfb/spectral.hpp"
#include "lfb/tensor.hpp"

namespace lfb::selftest {

struct CheckResult {
    std::string name;
    bool pass = false;
    std::string detail;
};

struct Report {
    std::vector<CheckResult> checks;
    int n_failed = 0;
    bool all_pass() const { return n_failed == 0; }
};

namespace detail {

class Checker {
  public:
    void expect(bool cond, const std::string& what) {
        if (!cond) {
            if (!detail_.empty()) detail_ += "; ";
            detail_ += what;
        }
    }
    void expect_near(double got, double want, double tol, const std::string& what) {
        if (!(std::abs(got - want) <= tol)) {
            std::ostringstream os;
            os << what << " (got " << got << ", want " << want << " +- " << tol << ")";
            expect(false, os.str());
        }
    }
    std::string detail() const { return detail_; }

  private:
    std::string detail_;
};

inline RealGrid random_patch(Rng& rng, int n, double lo = 0.0, double hi = 1.0) {
    RealGrid g(n, n);
    for (double& v : g.v) v = rng.uniform(lo, hi);
    return g;
}

}  // namespace detail

/// Runs every embedded check; `fault` names a check to corrupt (test hook).
inline Report run(const std::string& fault = "") {
    Report report;
    auto add = [&](const std::string& name,
                   const std::function<void(detail::Checker&, bool)>& fn) {
        detail::Checker c;
        try {
            fn(c, name == fault);
        } catch (const std::exception& e) {
            c.expect(false, std::string("exception: ") + e.what());
        }
        CheckResult r{name, c.detail().empty(), c.detail()};
        if (!r.pass) report.n_failed++;
        report.checks.push_back(std::move(r));
    };

    add("wrap", [](detail::Checker& c, bool faulted) {
        auto w = [&](double x) {
            double v = wrap(x);
            if (faulted) v = -v + 0.05;  // injected sign flip
            return v;
        };
        c.expect_near(w(0.0), 0.0, 1e-12, "wrap(0)");
        c.expect_near(w(3.0 * kPi / 2.0), -kPi / 2.0, 1e-12, "wrap(3pi/2)");
        c.expect_near(w(-5.0 * kPi / 2.0), -kPi / 2.0, 1e-12, "wrap(-5pi/2)");
        Rng rng(11);
        for (int i = 0; i < 50; ++i) {
            const double x = rng.uniform(-40.0, 40.0);
            const double v = w(x);
            c.expect(v >= -kPi - 1e-12 && v <= kPi + 1e-12, "wrap range");
            c.expect_near(w(x + kTwoPi * 3), v, 1e-9, "wrap periodicity");
        }
    });

    add("sigmoid", [](detail::Checker& c, bool) {
        c.expect_near(sigmoid(0.0), 0.5, 1e-15, "sigmoid(0)");
        c.expect_near(sigmoid(50.0), 1.0, 1e-9, "sigmoid saturation");
        c.expect_near(sigmoid(1.7) + sigmoid(-1.7), 1.0, 1e-12, "sigmoid symmetry");
    });

    add("conv_identity", [](detail::Checker& c, bool) {
        Rng rng(12);
        FeatureMap m(6, 5, 2);
        for (float& v : m.data) v = static_cast<float>(rng.uniform(-1.0, 1.0));
        Tensor k = Tensor::zeros({1, 1, 2, 2});
        k.data[0] = 1.0f;  // (ci=0,co=0)
        k.data[3] = 1.0f;  // (ci=1,co=1)
        const FeatureMap out = conv2d(m, k);
        for (size_t i = 0; i < m.data.size(); ++i)
            c.expect(out.data[i] == m.data[i], "identity kernel changed a value");
    });

    add("conv_average_reflect", [](detail::Checker& c, bool) {
        FeatureMap m(5, 5, 1);
        for (float& v : m.data) v = 0.37f;
        Tensor k = Tensor::zeros({3, 3, 1, 1});
        for (float& v : k.data) v = 1.0f / 9.0f;
        const FeatureMap out = conv2d(m, k, nullptr, 1, 1, Padding::reflect);
        for (float v : out.data) c.expect_near(v, 0.37, 1e-6, "averaging a constant");
    });

    add("fft_dc", [](detail::Checker& c, bool) {
        RealGrid p(16, 16);
        for (double& v : p.v) v = 0.4;
        const ComplexGrid s = fft2d(p);
        c.expect_near(s.re[0], 256 * 0.4, 1e-9, "DC bin");
        for (size_t i = 1; i < s.size(); ++i)
            c.expect(std::hypot(s.re[i], s.im[i]) < 1e-4, "non-DC leakage");
    });

    add("fft_impulse", [](detail::Checker& c, bool) {
        RealGrid p(8, 8);
        p.at(0, 0) = 1.0;
        const ComplexGrid s = fft2d(p);
        for (size_t i = 0; i < s.size(); ++i)
            c.expect_near(std::hypot(s.re[i], s.im[i]), 1.0, 1e-12, "flat spectrum of delta");
    });

    add("fft_roundtrip", [](detail::Checker& c, bool) {
        Rng rng(13);
        const RealGrid p = detail::random_patch(rng, 16);
        const RealGrid back = ifft2d(fft2d(p));
        for (size_t i = 0; i < p.v.size(); ++i)
            c.expect_near(back.v[i], p.v[i], 1e-10, "fft/ifft round trip");
    });

    add("fft_parseval", [](detail::Checker& c, bool) {
        Rng rng(14);
        const RealGrid p = detail::random_patch(rng, 16, -1.0, 1.0);
        const ComplexGrid s = fft2d(p);
        double spatial = 0.0, spectral = 0.0;
        for (double v : p.v) spatial += v * v;
        for (size_t i = 0; i < s.size(); ++i) spectral += s.re[i] * s.re[i] + s.im[i] * s.im[i];
        c.expect_near(spectral / 256.0, spatial, 1e-4 * std::abs(spatial), "Parseval");
    });

    add("decompose_compose", [](detail::Checker& c, bool) {
        Rng rng(15);
        const ComplexGrid s = fft2d(detail::random_patch(rng, 8, -1.0, 1.0));
        auto [amp, phase] = decompose(s);
        const ComplexGrid back = compose(amp, phase);
        for (size_t i = 0; i < s.size(); ++i) {
            c.expect_near(back.re[i], s.re[i], 1e-6, "compose(decompose) real");
            c.expect_near(back.im[i], s.im[i], 1e-6, "compose(decompose) imag");
        }
    });

    add("overlap_add_identity", [](detail::Checker& c, bool) {
        Rng rng(16);
        FeatureMap m(40, 40, 1);
        for (float& v : m.data) v = static_cast<float>(rng.uniform());
        const PatchGrid grid(40, 40, 16, 8);
        const FeatureMap back = overlap_add(partition(m, grid), grid);
        for (size_t i = 0; i < m.data.size(); ++i)
            c.expect_near(back.data[i], m.data[i], 1e-5, "partition/overlap_add identity");
    });

    add("normalize_amplitude", [](detail::Checker& c, bool) {
        Rng rng(17);
        const RealGrid a = detail::random_patch(rng, 16);
        const RealGrid n = normalize_amplitude(a);
        double sq = 0.0;
        for (double v : n.v) sq += v * v;
        c.expect(std::sqrt(sq) <= 1.0 + 1e-12, "normalized norm above 1");
        const RealGrid z = normalize_amplitude(RealGrid(16, 16));
        for (double v : z.v) c.expect(v == 0.0, "zero amplitude must stay zero");
    });

    add("blend_convexity", [](detail::Checker& c, bool) {
        Rng rng(18);
        for (int t = 0; t < 20; ++t) {
            const RealGrid a = detail::random_patch(rng, 8);
            const RealGrid b = detail::random_patch(rng, 8);
            const RealGrid out = blend_amplitude(a, b, rng.uniform());
            for (size_t i = 0; i < out.v.size(); ++i) {
                c.expect(out.v[i] >= std::min(a.v[i], b.v[i]) - 1e-12 &&
                             out.v[i] <= std::max(a.v[i], b.v[i]) + 1e-12,
                         "blend outside convex bounds");
            }
        }
    });

    add("align_phase_distance", [](detail::Checker& c, bool) {
        Rng rng(19);
        const RealGrid pr = detail::random_patch(rng, 8, -kPi, kPi);
        const RealGrid pt = detail::random_patch(rng, 8, -kPi, kPi);
        const double beta = 0.37;
        const RealGrid out = align_phase(pr, pt, beta);
        for (size_t i = 0; i < out.v.size(); ++i) {
            c.expect_near(std::abs(wrap(out.v[i] - pt.v[i])),
                          beta * std::abs(wrap(pr.v[i] - pt.v[i])), 1e-6,
                          "phase interpolation distance");
        }
    });

    add("coherence_bounds", [](detail::Checker& c, bool) {
        Rng rng(20);
        const ComplexGrid s = fft2d(detail::random_patch(rng, 8));
        c.expect(coherence(s, s) == 1.0, "coherence of identical spectra must be exactly 1");
        ComplexGrid scaled = s;
        for (size_t i = 0; i < scaled.size(); ++i) {
            scaled.re[i] *= 2.5;
            scaled.im[i] *= 2.5;
        }
        c.expect_near(coherence(s, scaled), 1.0, 1e-6, "coherence scale invariance");
        const ComplexGrid other = fft2d(detail::random_patch(rng, 8));
        const double v = coherence(s, other);
        c.expect(v >= 0.0 && v <= 1.0, "coherence outside [0,1]");
    });

    add("reliability_complement", [](detail::Checker& c, bool) {
        Rng rng(21);
        for (int t = 0; t < 20; ++t) {
            const double a = rng.uniform(0.0, 5.0), b = rng.uniform(0.0, 5.0);
            const double lhs = reliability(a, b, 1.0, 1.0).c_hf;
            const double rhs = reliability(b, a, 1.0, 1.0).c_hf;
            c.expect_near(lhs + rhs, 1.0, 1e-7, "reliability complement");
        }
    });

    add("guidance_identity", [](detail::Checker& c, bool) {
        Rng rng(22);
        const LocalSpectrum s = make_local_spectrum(0, detail::random_patch(rng, 16));
        const GuidanceVector g = guidance_vector(s, s);
        c.expect(g.d_x == 0.0, "d_x at identity");
        c.expect(g.d_y == 1.0, "d_y at identity");
        c.expect(g.s_phi == 0.0, "S_phi at identity");
        c.expect(g.c_hf == 0.5, "C_hf at identity");
        c.expect(g.c_lf == 0.5, "C_lf at identity");
        c.expect(g.coh == 1.0, "Coh at identity");
    });

    add("displacement_identities", [](detail::Checker& c, bool) {
        RealGrid zero(8, 8);
        const Displacement d0 = displacement(zero);
        c.expect(d0.d_x == 0.0 && d0.d_y == 1.0 && d0.s_phi == 0.0, "zero phase difference");
        RealGrid quarter(8, 8);
        for (double& v : quarter.v) v = kPi / 2.0;
        const Displacement d1 = displacement(quarter);
        c.expect_near(d1.d_x, 1.0, 1e-12, "sin(pi/2)");
        c.expect_near(d1.d_y, 0.0, 1e-12, "cos(pi/2)");
        c.expect_near(d1.s_phi, kPi / 2.0, 1e-12, "|pi/2|");
    });

    add("project_guidance_constant", [](detail::Checker& c, bool) {
        const PatchGrid grid(24, 24, 8, 4);
        GuidanceVector v;
        v.d_x = 0.25;
        v.coh = 0.75;
        const GuidanceMap g = project_guidance(
            std::vector<GuidanceVector>(static_cast<size_t>(grid.patch_count()), v), grid);
        for (int y = 0; y < g.height; ++y) {
            c.expect_near(g.at(y, y % g.width, 0), 0.25, 1e-6, "constant projection d_x");
            c.expect_near(g.at(y, y % g.width, 5), 0.75, 1e-6, "constant projection coh");
        }
    });

    add("bilinear_exact", [](detail::Checker& c, bool) {
        FeatureMap m(6, 6, 1);
        for (int y = 0; y < 6; ++y)
            for (int x = 0; x < 6; ++x) m.at(y, x, 0) = static_cast<float>(0.3 * x - 0.2 * y + 0.1);
        c.expect_near(bilinear_sample(m, 2.0, 3.0, 0), m.at(3, 2, 0), 1e-12, "integer sample");
        c.expect_near(bilinear_sample(m, 2.5, 1.25, 0), 0.3 * 2.5 - 0.2 * 1.25 + 0.1, 1e-7,
                      "affine reproduction");
        FeatureMap two(1, 2, 1);
        two.at(0, 1, 0) = 2.0f;
        c.expect_near(bilinear_sample(two, 0.5, 0.0, 0), 1.0, 1e-12, "midpoint of 0 and 2");
    });

    add("deformable_identity", [](detail::Checker& c, bool) {
        Rng rng(23);
        FeatureMap m(9, 9, 3);
        for (float& v : m.data) v = static_cast<float>(rng.uniform(-1.0, 1.0));
        const OffsetField zero(9, 9, 9);
        Tensor w = Tensor::zeros({9, 3});
        for (int ch = 0; ch < 3; ++ch) w.data[4 * 3 + ch] = 1.0f;
        const FeatureMap out = deformable_sample(m, zero, w, sampling_lattice(9));
        for (size_t i = 0; i < m.data.size(); ++i)
            c.expect(out.data[i] == m.data[i], "identity deformable changed a value");
    });

    add("deformable_box_blur", [](detail::Checker& c, bool) {
        Rng rng(24);
        FeatureMap m(10, 10, 1);
        for (float& v : m.data) v = static_cast<float>(rng.uniform());
        const OffsetField zero(10, 10, 9);
        Tensor w = Tensor::zeros({9, 1});
        for (int k = 0; k < 9; ++k) w.data[k] = 1.0f / 9.0f;
        const FeatureMap got = deformable_sample(m, zero, w, sampling_lattice(9));
        Tensor box = Tensor::zeros({3, 3, 1, 1});
        for (float& v : box.data) v = 1.0f / 9.0f;
        const FeatureMap want = conv2d(m, box, nullptr, 1, 1, Padding::zero);
        for (size_t i = 0; i < got.data.size(); ++i)
            c.expect_near(got.data[i], want.data[i], 1e-6, "box blur vs conv");
    });

    add("iou_cases", [](detail::Checker& c, bool) {
        using eval::BBox;
        c.expect(eval::iou(BBox{0, 0, 2, 2}, BBox{0, 0, 2, 2}) == 1.0, "identical boxes");
        c.expect(eval::iou(BBox{0, 0, 2, 2}, BBox{5, 5, 2, 2}) == 0.0, "disjoint boxes");
        c.expect_near(eval::iou(BBox{0, 0, 2, 2}, BBox{1, 0, 2, 2}), 1.0 / 3.0, 1e-12,
                      "1/3 overlap");
    });

    add("ap_cases", [](detail::Checker& c, bool) {
        c.expect(eval::average_precision({true}, 1) == 1.0, "single TP");
        c.expect(eval::average_precision({false, false}, 2) == 0.0, "all FP");
        c.expect_near(eval::average_precision({true, false, true}, 2), 5.0 / 6.0, 1e-12,
                      "TP,FP,TP with 2 gts");
    });

    add("ap_range_mean", [](detail::Checker& c, bool) {
        std::vector<eval::Detection> dets{{"a", {0, 0, 10, 10}, 0.9}};
        std::vector<eval::GroundTruth> gts{{"a", {0, 0, 10, 10}}};
        const eval::EvalReport r = eval::ap_range(dets, gts);
        double mean = 0.0;
        for (const auto& tr : r.per_tau) mean += tr.ap;
        mean /= 10.0;
        c.expect(r.ap_range_mean == mean, "AP(0.5:0.95) must equal the mean bit-exactly");
        c.expect(r.ap_range_mean == 1.0, "perfect detection sweep");
    });

    add("luma_weights", [](detail::Checker& c, bool) {
        FeatureMap px(1, 1, 3);
        px.data = {1.0f, 1.0f, 1.0f};
        c.expect_near(luma(px).data[0], 1.0, 1e-6, "luma of white");
        px.data = {1.0f, 0.0f, 0.0f};
        c.expect_near(luma(px).data[0], 0.299, 1e-6, "luma of red");
    });

    add("guidance_bounds", [](detail::Checker& c, bool) {
        Rng rng(25);
        for (int t = 0; t < 50; ++t) {
            const LocalSpectrum a = make_local_spectrum(0, detail::random_patch(rng, 8, -1, 1));
            const LocalSpectrum b = make_local_spectrum(0, detail::random_patch(rng, 8, -1, 1));
            const GuidanceVector g = guidance_vector(a, b);
            c.expect(g.d_x * g.d_x + g.d_y * g.d_y <= 1.0 + 1e-6, "circular mean length");
            c.expect(g.s_phi <= kPi + 1e-12, "S_phi bound");
            c.expect(g.c_hf >= 0.0 && g.c_hf <= 1.0, "C_hf range");
            c.expect(g.c_lf >= 0.0 && g.c_lf <= 1.0, "C_lf range");
            c.expect(g.coh >= 0.0 && g.coh <= 1.0, "Coh range");
        }
    });

    return report;
}

}  // namespace lfb::selftest
