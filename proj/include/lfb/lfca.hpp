/**
 * @file lfca.hpp
 * @brief Local frequency cross-modal alignment: per-patch amplitude
 *        normalization and blending, phase interpolation on the circle,
 *        spectral reconstruction, and windowed cross-attention injection.
 */
#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "lfb/param_store.hpp"
#include "lfb/spectral.hpp"
#include "lfb/tensor.hpp"

namespace lfb {

/// A_tilde = A / (||A||_F + eps). The Frobenius norm is accumulated in double.
inline RealGrid normalize_amplitude(const RealGrid& amplitude, double eps = 1e-6) {
    if (eps <= 0.0) throw data_error("normalize_amplitude: eps must be > 0");
    double sq = 0.0;
    for (double a : amplitude.v) sq += a * a;
    const double scale = 1.0 / (std::sqrt(sq) + eps);
    RealGrid out(amplitude.height, amplitude.width);
    for (size_t i = 0; i < out.v.size(); ++i) out.v[i] = amplitude.v[i] * scale;
    return out;
}

/// alpha * A_r + (1 - alpha) * A_t, elementwise.
inline RealGrid blend_amplitude(const RealGrid& a_r, const RealGrid& a_t, double alpha) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) {
        throw numeric_error("blend_amplitude: alpha " + std::to_string(alpha) +
                            " outside [0,1]");
    }
    if (a_r.height != a_t.height || a_r.width != a_t.width) {
        throw data_error("blend_amplitude: shape mismatch " + std::to_string(a_r.height) + "x" +
                         std::to_string(a_r.width) + " vs " + std::to_string(a_t.height) + "x" +
                         std::to_string(a_t.width));
    }
    RealGrid out(a_r.height, a_r.width);
    for (size_t i = 0; i < out.v.size(); ++i)
        out.v[i] = alpha * a_r.v[i] + (1.0 - alpha) * a_t.v[i];
    return out;
}

/// phi_t + beta * wrap(phi_r - phi_t), wrapped once more into [-pi, pi].
inline RealGrid align_phase(const RealGrid& phi_r, const RealGrid& phi_t, double beta) {
    if (phi_r.height != phi_t.height || phi_r.width != phi_t.width) {
        throw data_error("align_phase: shape mismatch");
    }
    RealGrid out(phi_r.height, phi_r.width);
    for (size_t i = 0; i < out.v.size(); ++i)
        out.v[i] = wrap(phi_t.v[i] + beta * wrap(phi_r.v[i] - phi_t.v[i]));
    return out;
}

/// Aligned amplitude-phase pair for one patch plus the coefficients used.
struct AlignedSpectrum {
    int q = 0;
    RealGrid amplitude;
    RealGrid phase;
    double alpha = 0.5;
    double beta = 0.5;
};

inline AlignedSpectrum align_patch(const LocalSpectrum& r, const LocalSpectrum& t,
                                   double alpha, double beta, double eps = 1e-6) {
    AlignedSpectrum out;
    out.q = r.q;
    out.alpha = alpha;
    out.beta = beta;
    out.amplitude = blend_amplitude(normalize_amplitude(r.amplitude, eps),
                                    normalize_amplitude(t.amplitude, eps), alpha);
    out.phase = align_phase(r.phase, t.phase, beta);
    return out;
}

/// compose -> iFFT -> overlap-add. Blended spectra are generally not
/// conjugate-symmetric, so the imaginary-residue gate is relaxed to 1e-2 and
/// the real part is kept.
inline FeatureMap reconstruct_aligned(const std::vector<AlignedSpectrum>& aligned,
                                      const PatchGrid& grid) {
    if (static_cast<int>(aligned.size()) != grid.patch_count()) {
        throw data_error("reconstruct_aligned: got " + std::to_string(aligned.size()) +
                         " spectra, grid has " + std::to_string(grid.patch_count()));
    }
    std::vector<RealGrid> patches(aligned.size());
    parallel::parallel_for(static_cast<std::int64_t>(aligned.size()),
                           [&](std::int64_t q0, std::int64_t q1) {
                               for (std::int64_t q = q0; q < q1; ++q) {
                                   const AlignedSpectrum& a = aligned[static_cast<size_t>(q)];
                                   patches[static_cast<size_t>(q)] =
                                       ifft2d(compose(a.amplitude, a.phase), 1e-2);
                               }
                           });
    return overlap_add(patches, grid);
}

/// Single-head scaled dot-product attention within non-overlapping square
/// windows. Queries come from a 1x1 projection of `f_m`; keys and values from
/// a 1x1 projection of the single-channel `f_align` (first half of the
/// projection output is K, second half is V). The attended value is projected
/// back and added residually: F_X = F_m + Proj(Attn).
inline FeatureMap cross_attend(const FeatureMap& f_m, const FeatureMap& f_align,
                               const ParamStore& params, int window = 16) {
    if (f_m.height != f_align.height || f_m.width != f_align.width) {
        throw data_error("cross_attend: spatial mismatch " + f_m.shape_str() + " vs " +
                         f_align.shape_str());
    }
    if (f_align.channels != 1) {
        throw data_error("cross_attend: f_align must be single-channel, got " +
                         f_align.shape_str());
    }
    const std::string sfx = "." + std::to_string(f_m.scale_index);
    const Tensor& q_proj = params.get("lfca.q_proj" + sfx);
    const Tensor& kv_proj = params.get("lfca.kv_proj" + sfx);
    const Tensor& out_proj = params.get("lfca.out_proj" + sfx);
    const int d = q_proj.shape[3];
    if (kv_proj.shape != std::vector<int>{1, 1, 1, 2 * d}) {
        throw data_error("cross_attend: kv_proj shape " + shape_to_string(kv_proj.shape) +
                         " inconsistent with embed dim " + std::to_string(d));
    }

    const FeatureMap q_map = conv2d(f_m, q_proj);
    const FeatureMap kv_map = conv2d(f_align, kv_proj);

    const int H = f_m.height, W = f_m.width;
    const int wy_n = (H + window - 1) / window;
    const int wx_n = (W + window - 1) / window;
    FeatureMap attended(H, W, d, f_m.scale_index);
    const float inv_sqrt_d = static_cast<float>(1.0 / std::sqrt(static_cast<double>(d)));

    parallel::parallel_for(static_cast<std::int64_t>(wy_n) * wx_n,
                           [&](std::int64_t t0, std::int64_t t1) {
        std::vector<float> keys, vals, scores, probs, acc(static_cast<size_t>(d));
        for (std::int64_t t = t0; t < t1; ++t) {
            const int wy = static_cast<int>(t) / wx_n, wx = static_cast<int>(t) % wx_n;
            const int y0 = wy * window, x0 = wx * window;
            const int yn = std::min(window, H - y0), xn = std::min(window, W - x0);
            const int n = yn * xn;
            keys.resize(static_cast<size_t>(n) * d);
            vals.resize(static_cast<size_t>(n) * d);
            for (int j = 0; j < n; ++j) {
                const float* kv =
                    kv_map.data.data() +
                    (static_cast<size_t>(y0 + j / xn) * W + (x0 + j % xn)) * (2 * d);
                for (int c = 0; c < d; ++c) {
                    keys[static_cast<size_t>(j) * d + c] = kv[c];
                    vals[static_cast<size_t>(j) * d + c] = kv[d + c];
                }
            }
            scores.resize(static_cast<size_t>(n));
            probs.resize(static_cast<size_t>(n));
            for (int i = 0; i < n; ++i) {
                const float* qi = q_map.data.data() +
                                  (static_cast<size_t>(y0 + i / xn) * W + (x0 + i % xn)) * d;
                float smax = -std::numeric_limits<float>::infinity();
                for (int j = 0; j < n; ++j) {
                    const float* kj = keys.data() + static_cast<size_t>(j) * d;
                    // lane-wise partial sums keep a fixed summation order and
                    // let the dot vectorize
                    float lanes[8] = {0, 0, 0, 0, 0, 0, 0, 0};
                    int c = 0;
                    for (; c + 8 <= d; c += 8)
                        for (int l = 0; l < 8; ++l) lanes[l] += qi[c + l] * kj[c + l];
                    float s = ((lanes[0] + lanes[1]) + (lanes[2] + lanes[3])) +
                              ((lanes[4] + lanes[5]) + (lanes[6] + lanes[7]));
                    for (; c < d; ++c) s += qi[c] * kj[c];
                    s *= inv_sqrt_d;
                    scores[static_cast<size_t>(j)] = s;
                    smax = std::max(smax, s);
                }
                double z = 0.0;
                for (int j = 0; j < n; ++j) {
                    const float e = std::exp(scores[static_cast<size_t>(j)] - smax);
                    probs[static_cast<size_t>(j)] = e;
                    z += static_cast<double>(e);
                }
                const float inv_z = static_cast<float>(1.0 / z);
                std::fill(acc.begin(), acc.end(), 0.0f);
                int j = 0;
                for (; j + 4 <= n; j += 4) {
                    const float p0 = probs[static_cast<size_t>(j)] * inv_z;
                    const float p1 = probs[static_cast<size_t>(j) + 1] * inv_z;
                    const float p2 = probs[static_cast<size_t>(j) + 2] * inv_z;
                    const float p3 = probs[static_cast<size_t>(j) + 3] * inv_z;
                    const float* v0 = vals.data() + static_cast<size_t>(j) * d;
                    const float* v1 = v0 + d;
                    const float* v2 = v1 + d;
                    const float* v3 = v2 + d;
                    for (int c = 0; c < d; ++c)
                        acc[static_cast<size_t>(c)] +=
                            (p0 * v0[c] + p1 * v1[c]) + (p2 * v2[c] + p3 * v3[c]);
                }
                for (; j < n; ++j) {
                    const float p = probs[static_cast<size_t>(j)] * inv_z;
                    const float* vj = vals.data() + static_cast<size_t>(j) * d;
                    for (int c = 0; c < d; ++c) acc[static_cast<size_t>(c)] += p * vj[c];
                }
                float* out = &attended.at(y0 + i / xn, x0 + i % xn, 0);
                for (int c = 0; c < d; ++c) out[c] = acc[static_cast<size_t>(c)];
            }
        }
    });

    const FeatureMap projected = conv2d(attended, out_proj);
    FeatureMap result = f_m;
    for (size_t i = 0; i < result.data.size(); ++i) result.data[i] += projected.data[i];
    return result;
}

/// Enhanced features and aligned map produced by the LFCA stage at one scale.
struct LfcaResult {
    FeatureMap f_align;  // single channel
    FeatureMap f_r_x;
    FeatureMap f_t_x;
};

/// Runs Eqs. of the alignment stage end to end for one scale: per-patch
/// normalize/blend/interpolate, reconstruct, then cross-attend both
/// modalities against the aligned map.
inline LfcaResult lfca_forward(const FeatureMap& f_r, const FeatureMap& f_t,
                               const std::vector<LocalSpectrum>& spectra_r,
                               const std::vector<LocalSpectrum>& spectra_t,
                               const PatchGrid& grid, const ParamStore& params,
                               double eps = 1e-6, int window = 16) {
    if (spectra_r.size() != spectra_t.size()) {
        throw data_error("lfca_forward: modality spectra counts differ");
    }
    const std::string sfx = "." + std::to_string(f_r.scale_index);
    const double alpha = sigmoid(params.get("lfca.alpha_raw" + sfx, {1}).data[0]);
    const double beta = sigmoid(params.get("lfca.beta_raw" + sfx, {1}).data[0]);

    std::vector<AlignedSpectrum> aligned(spectra_r.size());
    parallel::parallel_for(static_cast<std::int64_t>(spectra_r.size()),
                           [&](std::int64_t q0, std::int64_t q1) {
                               for (std::int64_t q = q0; q < q1; ++q)
                                   aligned[static_cast<size_t>(q)] =
                                       align_patch(spectra_r[static_cast<size_t>(q)],
                                                   spectra_t[static_cast<size_t>(q)],
                                                   alpha, beta, eps);
                           });

    LfcaResult out;
    out.f_align = reconstruct_aligned(aligned, grid);
    out.f_align.scale_index = f_r.scale_index;
    out.f_r_x = cross_attend(f_r, out.f_align, params, window);
    out.f_t_x = cross_attend(f_t, out.f_align, params, window);
    return out;
}

}  // namespace lfb
