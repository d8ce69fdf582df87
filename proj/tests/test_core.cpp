// Tensor containers, convolution, and the patch-spectral substrate.
#include <gtest/gtest.h>

#include <cmath>
#include <complex>

#include "lfb/rng.hpp"
#include "lfb/spectral.hpp"
#include "lfb/tensor.hpp"
#include "oracles.hpp"

using namespace lfb;

namespace {

FeatureMap random_map(Rng& rng, int h, int w, int c, float lo = -1.0f, float hi = 1.0f) {
    FeatureMap m(h, w, c);
    for (float& v : m.data) v = static_cast<float>(rng.uniform(lo, hi));
    return m;
}

RealGrid random_patch(Rng& rng, int n, double lo = 0.0, double hi = 1.0) {
    RealGrid g(n, n);
    for (double& v : g.v) v = rng.uniform(lo, hi);
    return g;
}

}  // namespace

// ---- conv2d -----------------------------------------------------------

TEST(Conv2d, IdentityKernelIsNoop) {
    Rng rng(1);
    const FeatureMap m = random_map(rng, 7, 9, 3);
    Tensor k = Tensor::zeros({1, 1, 3, 3});
    for (int c = 0; c < 3; ++c) k.data[static_cast<size_t>(c) * 3 + c] = 1.0f;
    const FeatureMap out = conv2d(m, k);
    ASSERT_EQ(out.height, m.height);
    ASSERT_EQ(out.width, m.width);
    for (size_t i = 0; i < m.data.size(); ++i) EXPECT_EQ(out.data[i], m.data[i]);
}

TEST(Conv2d, ZeroKernelGivesZeroOutput) {
    Rng rng(2);
    const FeatureMap m = random_map(rng, 8, 8, 2);
    const FeatureMap out = conv2d(m, Tensor::zeros({3, 3, 2, 4}));
    for (float v : out.data) EXPECT_EQ(v, 0.0f);
}

TEST(Conv2d, AveragingConstantWithReflectPaddingKeepsConstant) {
    FeatureMap m(5, 5, 1);
    for (float& v : m.data) v = 0.42f;
    Tensor k = Tensor::zeros({3, 3, 1, 1});
    for (float& v : k.data) v = 1.0f / 9.0f;
    const FeatureMap out = conv2d(m, k, nullptr, 1, 1, Padding::reflect);
    ASSERT_EQ(out.height, 5);
    ASSERT_EQ(out.width, 5);
    for (float v : out.data) EXPECT_NEAR(v, 0.42f, 1e-6f);
}

TEST(Conv2d, ShapeMismatchNamesBothShapes) {
    const FeatureMap m(4, 4, 3);
    try {
        conv2d(m, Tensor::zeros({3, 3, 2, 4}));
        FAIL() << "expected data_error";
    } catch (const data_error& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("4x4x3"), std::string::npos) << msg;
        EXPECT_NE(msg.find("[3,3,2,4]"), std::string::npos) << msg;
    }
}

TEST(Conv2d, IsLinear) {
    Rng rng(3);
    const FeatureMap x = random_map(rng, 16, 16, 2);
    const FeatureMap y = random_map(rng, 16, 16, 2);
    Tensor k = Tensor::zeros({3, 3, 2, 3});
    for (float& v : k.data) v = static_cast<float>(rng.uniform(-1.0, 1.0));
    const float a = 0.7f, b = -1.3f;
    FeatureMap combo(16, 16, 2);
    for (size_t i = 0; i < combo.data.size(); ++i) combo.data[i] = a * x.data[i] + b * y.data[i];

    const FeatureMap lhs = conv2d(combo, k);
    const FeatureMap cx = conv2d(x, k);
    const FeatureMap cy = conv2d(y, k);
    double max_abs = 0.0;
    for (float v : lhs.data) max_abs = std::max(max_abs, std::abs(static_cast<double>(v)));
    for (size_t i = 0; i < lhs.data.size(); ++i) {
        EXPECT_NEAR(lhs.data[i], a * cx.data[i] + b * cy.data[i], 1e-5 * std::max(1.0, max_abs));
    }
}

TEST(Conv2d, MatchesBruteForceReference) {
    Rng rng(4);
    for (int trial = 0; trial < 8; ++trial) {
        const int dilation = 1 + trial % 3;
        const int stride = 1 + (trial / 3) % 2;
        const Padding pad = trial % 2 ? Padding::reflect : Padding::zero;
        const FeatureMap m = random_map(rng, 8, 8, 3);
        Tensor k = Tensor::zeros({3, 3, 3, 2});
        for (float& v : k.data) v = static_cast<float>(rng.uniform(-1.0, 1.0));
        Tensor bias = Tensor::zeros({2});
        for (float& v : bias.data) v = static_cast<float>(rng.uniform(-0.5, 0.5));

        const FeatureMap got = conv2d(m, k, &bias, dilation, stride, pad);
        int oh = 0, ow = 0;
        const std::vector<double> bias_d = oracle::to_double(bias.data);
        const std::vector<double> want =
            oracle::conv2d_ref(oracle::to_double(m.data), 8, 8, 3, oracle::to_double(k.data), 3,
                               3, 2, &bias_d, dilation, stride, pad == Padding::reflect, oh, ow);
        ASSERT_EQ(got.height, oh);
        ASSERT_EQ(got.width, ow);
        for (size_t i = 0; i < want.size(); ++i) {
            EXPECT_NEAR(got.data[i], want[i], 1e-6 * std::max(1.0, std::abs(want[i])))
                << "trial " << trial << " index " << i;
        }
    }
}

TEST(Conv2d, StrideTwoHalvesEvenDimensions) {
    const FeatureMap m(16, 24, 1);
    const FeatureMap out = conv2d(m, Tensor::zeros({3, 3, 1, 1}), nullptr, 1, 2);
    EXPECT_EQ(out.height, 8);
    EXPECT_EQ(out.width, 12);
}

TEST(Sigmoid, Examples) {
    EXPECT_DOUBLE_EQ(sigmoid(0.0), 0.5);
    EXPECT_NEAR(sigmoid(50.0), 1.0, 1e-9);
    EXPECT_NEAR(sigmoid(1.7) + sigmoid(-1.7), 1.0, 1e-12);
    EXPECT_LT(sigmoid(-1.0), sigmoid(1.0));
}

TEST(TensorUtils, ConcatAndDownsample) {
    Rng rng(5);
    const FeatureMap a = random_map(rng, 4, 4, 2);
    const FeatureMap b = random_map(rng, 4, 4, 1);
    const FeatureMap cat = concat_channels({&a, &b});
    ASSERT_EQ(cat.channels, 3);
    EXPECT_EQ(cat.at(2, 1, 0), a.at(2, 1, 0));
    EXPECT_EQ(cat.at(2, 1, 2), b.at(2, 1, 0));

    FeatureMap c(4, 4, 1);
    for (float& v : c.data) v = 2.5f;
    const FeatureMap down = area_downsample(c, 2);
    ASSERT_EQ(down.height, 2);
    for (float v : down.data) EXPECT_FLOAT_EQ(v, 2.5f);
    EXPECT_THROW(area_downsample(c, 3), data_error);
}

TEST(ReflectIndex, FoldsIntoRange) {
    EXPECT_EQ(reflect_index(-1, 8), 0);
    EXPECT_EQ(reflect_index(-2, 8), 1);
    EXPECT_EQ(reflect_index(8, 8), 7);
    EXPECT_EQ(reflect_index(9, 8), 6);
    EXPECT_EQ(reflect_index(17, 4), 1);  // repeated folding
    EXPECT_EQ(reflect_index(0, 1), 0);
    EXPECT_EQ(reflect_index(5, 1), 0);
}

// ---- wrap ---------------------------------------------------------------

TEST(Wrap, Examples) {
    EXPECT_DOUBLE_EQ(wrap(0.0), 0.0);
    EXPECT_NEAR(wrap(3.0 * kPi / 2.0), -kPi / 2.0, 1e-12);
    EXPECT_NEAR(wrap(-5.0 * kPi / 2.0), -kPi / 2.0, 1e-12);
}

TEST(Wrap, PeriodicAndBounded) {
    Rng rng(6);
    for (int i = 0; i < 200; ++i) {
        const double x = rng.uniform(-50.0, 50.0);
        const double w = wrap(x);
        EXPECT_GE(w, -kPi);
        EXPECT_LE(w, kPi);
        for (int k = -2; k <= 2; ++k) EXPECT_NEAR(wrap(x + kTwoPi * k), w, 1e-9);
    }
}

// ---- fft2d / ifft2d ------------------------------------------------------

TEST(Fft2d, ZeroPatchGivesZeroSpectrum) {
    const ComplexGrid s = fft2d(RealGrid(16, 16));
    for (size_t i = 0; i < s.size(); ++i) {
        EXPECT_EQ(s.re[i], 0.0);
        EXPECT_EQ(s.im[i], 0.0);
    }
}

TEST(Fft2d, ConstantPatchIsDcOnly) {
    RealGrid p(16, 16);
    for (double& v : p.v) v = 0.3;
    const ComplexGrid s = fft2d(p);
    EXPECT_NEAR(s.re[0], 256 * 0.3, 1e-9);
    EXPECT_NEAR(s.im[0], 0.0, 1e-9);
    for (size_t i = 1; i < s.size(); ++i)
        EXPECT_LT(std::hypot(s.re[i], s.im[i]), 1e-4);
}

TEST(Fft2d, ImpulseHasFlatSpectrum) {
    RealGrid p(8, 8);
    p.at(0, 0) = 1.0;
    const ComplexGrid s = fft2d(p);
    for (size_t i = 0; i < s.size(); ++i) {
        EXPECT_NEAR(s.re[i], 1.0, 1e-12);
        EXPECT_NEAR(s.im[i], 0.0, 1e-12);
    }
}

TEST(Fft2d, RejectsNonPowerOfTwo) {
    EXPECT_THROW(fft2d(RealGrid(6, 6)), data_error);
    EXPECT_THROW(fft2d(RealGrid(8, 16)), data_error);
}

TEST(Fft2d, MatchesBruteForceDft) {
    Rng rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        const RealGrid p = random_patch(rng, 8, -1.0, 1.0);
        const ComplexGrid fast = fft2d(p);
        const ComplexGrid slow = oracle::dft2d(p);
        double max_err = 0.0, max_mag = 0.0;
        for (size_t i = 0; i < fast.size(); ++i) {
            max_err = std::max(max_err, std::hypot(fast.re[i] - slow.re[i],
                                                   fast.im[i] - slow.im[i]));
            max_mag = std::max(max_mag, std::hypot(slow.re[i], slow.im[i]));
        }
        EXPECT_LT(max_err, 1e-5 * max_mag);
    }
}

TEST(Fft2d, ShiftMultipliesByPhaseRamp) {
    Rng rng(8);
    const int P = 8, sy = 3, sx = 5;
    const RealGrid p = random_patch(rng, P);
    RealGrid shifted(P, P);
    for (int y = 0; y < P; ++y)
        for (int x = 0; x < P; ++x)
            shifted.at(y, x) = p.at((y - sy + P) % P, (x - sx + P) % P);

    const ComplexGrid f = oracle::dft2d(p);
    const ComplexGrid g = fft2d(shifted);
    for (int u = 0; u < P; ++u) {
        for (int v = 0; v < P; ++v) {
            const double ang = -kTwoPi * (static_cast<double>(u) * sy + static_cast<double>(v) * sx) / P;
            const std::complex<double> ramp(std::cos(ang), std::sin(ang));
            const size_t i = static_cast<size_t>(u) * P + v;
            const std::complex<double> want = std::complex<double>(f.re[i], f.im[i]) * ramp;
            EXPECT_NEAR(g.re[i], want.real(), 1e-9);
            EXPECT_NEAR(g.im[i], want.imag(), 1e-9);
        }
    }
}

TEST(Ifft2d, RoundTripAndNormalization) {
    Rng rng(9);
    const RealGrid p = random_patch(rng, 16, -2.0, 2.0);
    const RealGrid back = ifft2d(fft2d(p));
    for (size_t i = 0; i < p.v.size(); ++i) EXPECT_NEAR(back.v[i], p.v[i], 1e-5);

    const RealGrid zero = ifft2d(ComplexGrid(8, 8));
    for (double v : zero.v) EXPECT_EQ(v, 0.0);

    ComplexGrid dc(16, 16);
    dc.re[0] = 256 * 0.7;
    const RealGrid c = ifft2d(dc);
    for (double v : c.v) EXPECT_NEAR(v, 0.7, 1e-9);
}

TEST(Ifft2d, RejectsCorruptedSpectrum) {
    ComplexGrid s(8, 8);
    s.im[3] = 1.0;  // not conjugate-symmetric: inverse has imaginary residue
    s.re[0] = 0.5;
    EXPECT_THROW(ifft2d(s), numeric_error);
    EXPECT_NO_THROW(ifft2d(s, 1.0));  // relaxed gate accepts it
}

TEST(Parseval, HoldsAtPatchLevel) {
    Rng rng(10);
    for (int t = 0; t < 10; ++t) {
        const RealGrid p = random_patch(rng, 16, -1.0, 1.0);
        const ComplexGrid s = fft2d(p);
        double spatial = 0.0, spectral = 0.0;
        for (double v : p.v) spatial += v * v;
        for (size_t i = 0; i < s.size(); ++i) spectral += s.re[i] * s.re[i] + s.im[i] * s.im[i];
        EXPECT_NEAR(spectral / 256.0, spatial, 1e-4 * spatial);
    }
}

// ---- decompose / compose -------------------------------------------------

TEST(Decompose, Examples) {
    ComplexGrid s(1, 4);
    s.re = {1.0, 0.0, -2.0, 0.0};
    s.im = {0.0, 1.0, 0.0, 0.0};
    auto [amp, phase] = decompose(s);
    EXPECT_DOUBLE_EQ(amp.v[0], 1.0);
    EXPECT_DOUBLE_EQ(phase.v[0], 0.0);
    EXPECT_DOUBLE_EQ(amp.v[1], 1.0);
    EXPECT_NEAR(phase.v[1], kPi / 2.0, 1e-12);
    EXPECT_DOUBLE_EQ(amp.v[2], 2.0);
    EXPECT_NEAR(phase.v[2], kPi, 1e-12);
    EXPECT_DOUBLE_EQ(phase.v[3], 0.0);  // zero modulus -> phase 0
}

TEST(Compose, ExamplesAndInversePair) {
    RealGrid amp(1, 2), phase(1, 2);
    amp.v = {1.0, 2.0};
    phase.v = {0.0, kPi / 2.0};
    const ComplexGrid s = compose(amp, phase);
    EXPECT_NEAR(s.re[0], 1.0, 1e-12);
    EXPECT_NEAR(s.im[0], 0.0, 1e-12);
    EXPECT_NEAR(s.re[1], 0.0, 1e-7);
    EXPECT_NEAR(s.im[1], 2.0, 1e-7);

    amp.v[0] = -0.5;
    EXPECT_THROW(compose(amp, phase), numeric_error);

    Rng rng(11);
    const ComplexGrid spec = fft2d(random_patch(rng, 8, -1.0, 1.0));
    auto [a, p] = decompose(spec);
    const ComplexGrid back = compose(a, p);
    for (size_t i = 0; i < spec.size(); ++i) {
        EXPECT_NEAR(back.re[i], spec.re[i], 1e-6);
        EXPECT_NEAR(back.im[i], spec.im[i], 1e-6);
    }
}

// ---- PatchGrid / partition / overlap_add ----------------------------------

TEST(PatchGrid, ValidatesConfiguration) {
    EXPECT_THROW(PatchGrid(32, 32, 12, 8), data_error);  // not in {8,16,32}
    EXPECT_THROW(PatchGrid(32, 32, 16, 0), data_error);
    EXPECT_THROW(PatchGrid(32, 32, 16, 17), data_error);
    EXPECT_THROW(PatchGrid(0, 32, 16, 8), data_error);
}

TEST(PatchGrid, EveryPixelCovered) {
    for (int h : {16, 24, 33, 40}) {
        for (int w : {16, 30, 48}) {
            const PatchGrid g(h, w, 16, 8);
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) EXPECT_GE(g.count_at(y, x), 1);
        }
    }
}

TEST(Partition, CornerPatchEqualsMapWhenSizesMatch) {
    Rng rng(12);
    const FeatureMap m = random_map(rng, 16, 16, 1, 0.0f, 1.0f);
    const PatchGrid g(16, 16, 16, 8);
    const std::vector<RealGrid> patches = partition(m, g);
    ASSERT_EQ(static_cast<int>(patches.size()), g.patch_count());
    for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 16; ++x)
            EXPECT_DOUBLE_EQ(patches[0].at(y, x), m.at(y, x, 0));
}

TEST(Partition, ConstantMapGivesConstantPatches) {
    FeatureMap m(24, 24, 1);
    for (float& v : m.data) v = 0.6f;
    const PatchGrid g(24, 24, 16, 8);
    for (const RealGrid& p : partition(m, g))
        for (double v : p.v) EXPECT_FLOAT_EQ(static_cast<float>(v), 0.6f);
}

TEST(Partition, RampWindowAtStrideOffset) {
    FeatureMap m(32, 32, 1);
    for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 32; ++x) m.at(y, x, 0) = static_cast<float>(y * 32 + x);
    const PatchGrid g(32, 32, 16, 8);
    // patch with origin (8, 8): direct indexing oracle
    int q = -1;
    for (int i = 0; i < g.patch_count(); ++i) {
        if (g.origin(i) == std::pair<int, int>{8, 8}) q = i;
    }
    ASSERT_GE(q, 0);
    const std::vector<RealGrid> patches = partition(m, g);
    for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 16; ++x)
            EXPECT_DOUBLE_EQ(patches[static_cast<size_t>(q)].at(y, x), m.at(8 + y, 8 + x, 0));
}

TEST(Partition, DimensionMismatchIsError) {
    const FeatureMap m(16, 16, 1);
    const PatchGrid g(32, 32, 16, 8);
    EXPECT_THROW(partition(m, g), data_error);
    const FeatureMap multi(32, 32, 3);
    EXPECT_THROW(partition(multi, g), data_error);
}

TEST(OverlapAdd, ConstantPatchesGiveConstantMap) {
    const PatchGrid g(24, 24, 16, 8);
    std::vector<RealGrid> patches(static_cast<size_t>(g.patch_count()), RealGrid(16, 16));
    for (RealGrid& p : patches)
        for (double& v : p.v) v = 1.25;
    const FeatureMap out = overlap_add(patches, g);
    for (float v : out.data) EXPECT_FLOAT_EQ(v, 1.25f);
}

TEST(OverlapAdd, MeanOfTwoCoveringPatches) {
    const PatchGrid g(16, 24, 16, 8);  // two patch columns overlap on x in [8, 16)
    ASSERT_EQ(g.patch_count(), 2);
    std::vector<RealGrid> patches(2, RealGrid(16, 16));
    for (double& v : patches[0].v) v = 0.0;
    for (double& v : patches[1].v) v = 2.0;
    const FeatureMap out = overlap_add(patches, g);
    EXPECT_EQ(g.count_at(0, 12), 2);
    EXPECT_FLOAT_EQ(out.at(0, 12, 0), 1.0f);
    EXPECT_FLOAT_EQ(out.at(0, 2, 0), 0.0f);
}

TEST(OverlapAdd, ReconstructionIdentity) {
    Rng rng(13);
    for (const auto [h, w] : {std::pair{64, 64}, std::pair{40, 56}, std::pair{33, 47}}) {
        const FeatureMap m = random_map(rng, h, w, 1, 0.0f, 1.0f);
        const PatchGrid g(h, w, 16, 8);
        const FeatureMap back = overlap_add(partition(m, g), g);
        for (size_t i = 0; i < m.data.size(); ++i)
            EXPECT_NEAR(back.data[i], m.data[i], 1e-5) << h << "x" << w << " @" << i;
    }
}

TEST(OverlapAdd, CountMismatchIsError) {
    const PatchGrid g(24, 24, 16, 8);
    std::vector<RealGrid> patches(2, RealGrid(16, 16));
    EXPECT_THROW(overlap_add(patches, g), data_error);
}

TEST(LocalSpectrum, AmplitudePhaseConsistency) {
    Rng rng(14);
    const LocalSpectrum s = make_local_spectrum(3, random_patch(rng, 16));
    EXPECT_EQ(s.q, 3);
    for (size_t i = 0; i < s.spectrum.size(); ++i) {
        EXPECT_NEAR(s.amplitude.v[i], std::hypot(s.spectrum.re[i], s.spectrum.im[i]), 1e-6);
        EXPECT_NEAR(s.amplitude.v[i] * std::cos(s.phase.v[i]), s.spectrum.re[i], 1e-6);
        EXPECT_NEAR(s.amplitude.v[i] * std::sin(s.phase.v[i]), s.spectrum.im[i], 1e-6);
    }
}
