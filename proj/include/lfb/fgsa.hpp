/**
 * @file fgsa.hpp
 * @brief Frequency-guided spatial alignment: gated guidance modulation,
 *        offset prediction, deformable bilinear sampling, and symmetric
 *        cross-conditioned fusion.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "lfb/lfgm.hpp"
#include "lfb/param_store.hpp"
#include "lfb/tensor.hpp"

namespace lfb {

/// Per-pixel deformable sampling displacements, 2*K_s values per pixel in
/// pixel units, ordered (dx_1, dy_1, ..., dx_K, dy_K).
struct OffsetField {
    int height = 0;
    int width = 0;
    int k_s = 0;
    std::vector<float> data;

    OffsetField() = default;
    OffsetField(int h, int w, int k)
        : height(h), width(w), k_s(k), data(static_cast<size_t>(h) * w * 2 * k, 0.0f) {}

    float dx(int y, int x, int k) const {
        return data[(static_cast<size_t>(y) * width + x) * 2 * k_s + 2 * k];
    }
    float dy(int y, int x, int k) const {
        return data[(static_cast<size_t>(y) * width + x) * 2 * k_s + 2 * k + 1];
    }
    float& dx(int y, int x, int k) {
        return data[(static_cast<size_t>(y) * width + x) * 2 * k_s + 2 * k];
    }
    float& dy(int y, int x, int k) {
        return data[(static_cast<size_t>(y) * width + x) * 2 * k_s + 2 * k + 1];
    }
};

struct LatticePoint {
    int dx = 0;
    int dy = 0;
};

/// Predefined sampling offsets p_k. K_s = 9 is the 3x3 lattice {-1,0,1}^2 in
/// row-major (dy, dx) order; the center point has index 4.
inline std::vector<LatticePoint> sampling_lattice(int k_s) {
    if (k_s != 9) {
        throw data_error("sampling_lattice: only K_s = 9 (3x3) is supported, got " +
                         std::to_string(k_s));
    }
    std::vector<LatticePoint> pts;
    pts.reserve(9);
    for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) pts.push_back({dx, dy});
    return pts;
}

namespace detail {

/// 4-neighbor bilinear interpolation at (x, y) = (column, row) with zero
/// padding outside the image; channel c of an H x W x C array.
template <typename T>
double bilinear_raw(const T* data, int h, int w, int channels, int c, double x, double y) {
    const double xf = std::floor(x), yf = std::floor(y);
    const int x0 = static_cast<int>(xf), y0 = static_cast<int>(yf);
    const double fx = x - xf, fy = y - yf;
    auto px = [&](int yy, int xx) -> double {
        if (yy < 0 || yy >= h || xx < 0 || xx >= w) return 0.0;
        return static_cast<double>(data[(static_cast<size_t>(yy) * w + xx) * channels + c]);
    };
    return (1.0 - fy) * ((1.0 - fx) * px(y0, x0) + fx * px(y0, x0 + 1)) +
           fy * ((1.0 - fx) * px(y0 + 1, x0) + fx * px(y0 + 1, x0 + 1));
}

/// Analytic d/dx, d/dy of bilinear_raw; piecewise constant between integer
/// coordinates (kinks at the integers themselves).
template <typename T>
void bilinear_grad_raw(const T* data, int h, int w, int channels, int c, double x, double y,
                       double& ddx, double& ddy) {
    const double xf = std::floor(x), yf = std::floor(y);
    const int x0 = static_cast<int>(xf), y0 = static_cast<int>(yf);
    const double fx = x - xf, fy = y - yf;
    auto px = [&](int yy, int xx) -> double {
        if (yy < 0 || yy >= h || xx < 0 || xx >= w) return 0.0;
        return static_cast<double>(data[(static_cast<size_t>(yy) * w + xx) * channels + c]);
    };
    const double v00 = px(y0, x0), v01 = px(y0, x0 + 1);
    const double v10 = px(y0 + 1, x0), v11 = px(y0 + 1, x0 + 1);
    ddx = (1.0 - fy) * (v01 - v00) + fy * (v11 - v10);
    ddy = (1.0 - fx) * (v10 - v00) + fx * (v11 - v01);
}

}  // namespace detail

/// All channels of `map` sampled at real coordinates (x = column, y = row).
inline std::vector<double> bilinear_sample(const FeatureMap& map, double x, double y) {
    std::vector<double> out(static_cast<size_t>(map.channels));
    for (int c = 0; c < map.channels; ++c)
        out[static_cast<size_t>(c)] =
            detail::bilinear_raw(map.data.data(), map.height, map.width, map.channels, c, x, y);
    return out;
}

inline double bilinear_sample(const FeatureMap& map, double x, double y, int c) {
    return detail::bilinear_raw(map.data.data(), map.height, map.width, map.channels, c, x, y);
}

/// Analytic gradient of bilinear_sample(map, x, y, c) with respect to (x, y).
inline std::pair<double, double> bilinear_sample_grad(const FeatureMap& map, double x, double y,
                                                      int c) {
    double ddx = 0.0, ddy = 0.0;
    detail::bilinear_grad_raw(map.data.data(), map.height, map.width, map.channels, c, x, y,
                              ddx, ddy);
    return {ddx, ddy};
}

/// Gated modulation: sigma(Conv1x1([F_r_X, F_t_X])) elementwise-multiplied
/// into the guidance map.
inline GuidanceMap gate(const FeatureMap& f_r_x, const FeatureMap& f_t_x,
                        const GuidanceMap& g_freq, const ParamStore& params) {
    if (f_r_x.height != g_freq.height || f_r_x.width != g_freq.width ||
        f_t_x.height != g_freq.height || f_t_x.width != g_freq.width) {
        throw data_error("gate: spatial mismatch, features " + f_r_x.shape_str() + "/" +
                         f_t_x.shape_str() + " vs guidance " + g_freq.shape_str());
    }
    const std::string sfx = "." + std::to_string(f_r_x.scale_index);
    const Tensor& w = params.get("fgsa.gate_conv" + sfx,
                                 {1, 1, f_r_x.channels + f_t_x.channels, g_freq.channels});
    const Tensor* b = params.find("fgsa.gate_conv" + sfx + ".bias");
    const FeatureMap z = conv2d(concat_channels({&f_r_x, &f_t_x}), w, b);
    GuidanceMap out(g_freq.height, g_freq.width, g_freq.channels, g_freq.scale_index);
    for (size_t i = 0; i < out.data.size(); ++i) {
        out.data[i] = static_cast<float>(sigmoid(z.data[i]) * g_freq.data[i]);
    }
    return out;
}

inline void relu_inplace(FeatureMap& m) {
    for (float& v : m.data) v = v > 0.0f ? v : 0.0f;
}

/// Offset predictor f_theta: two stacked 3x3 convolutions with max(0,x)
/// nonlinearities, then a 1x1 projection to 2*K_s channels. The projection is
/// zero-initialized by the weight builders, so an untrained predictor emits
/// the zero field. Offset components are clamped to [-clamp_px, clamp_px].
inline OffsetField predict_offsets(const FeatureMap& f_r_x, const FeatureMap& f_t_x,
                                   const GuidanceMap& g_tilde, const ParamStore& params,
                                   double clamp_px = 8.0) {
    const std::string sfx = "." + std::to_string(f_r_x.scale_index);
    const Tensor& w1 = params.get("fgsa.offset_conv1" + sfx);
    const Tensor& w2 = params.get("fgsa.offset_conv2" + sfx);
    const Tensor& wp = params.get("fgsa.offset_proj" + sfx);
    FeatureMap h = conv2d(concat_channels({&f_r_x, &f_t_x, &g_tilde}), w1,
                          params.find("fgsa.offset_conv1" + sfx + ".bias"));
    relu_inplace(h);
    h = conv2d(h, w2, params.find("fgsa.offset_conv2" + sfx + ".bias"));
    relu_inplace(h);
    h = conv2d(h, wp, params.find("fgsa.offset_proj" + sfx + ".bias"));
    if (h.channels % 2 != 0) {
        throw data_error("predict_offsets: projection must emit 2*K_s channels, got " +
                         std::to_string(h.channels));
    }
    OffsetField out(h.height, h.width, h.channels / 2);
    const float lim = static_cast<float>(clamp_px);
    for (size_t i = 0; i < h.data.size(); ++i)
        out.data[i] = std::clamp(h.data[i], -lim, lim);
    return out;
}

/// Deformable aggregation: F_hat(p0) = sum_k w_k * S(F, p0 + p_k + dp_k(p0))
/// per channel, with zero padding outside the map. Weights are per sampling
/// point and channel (shape [K_s, C]).
inline FeatureMap deformable_sample(const FeatureMap& f, const OffsetField& offsets,
                                    const Tensor& w_k,
                                    const std::vector<LatticePoint>& lattice) {
    if (offsets.height != f.height || offsets.width != f.width) {
        throw data_error("deformable_sample: offsets " + std::to_string(offsets.height) + "x" +
                         std::to_string(offsets.width) + " vs map " + f.shape_str());
    }
    if (w_k.shape.size() != 2 || w_k.shape[0] != offsets.k_s || w_k.shape[1] != f.channels) {
        throw data_error("deformable_sample: weights " + shape_to_string(w_k.shape) +
                         " vs K_s " + std::to_string(offsets.k_s) + ", channels " +
                         std::to_string(f.channels));
    }
    if (static_cast<int>(lattice.size()) != offsets.k_s) {
        throw data_error("deformable_sample: lattice size " + std::to_string(lattice.size()) +
                         " vs K_s " + std::to_string(offsets.k_s));
    }
    const int C = f.channels;
    FeatureMap out(f.height, f.width, C, f.scale_index);
    parallel::parallel_for(f.height, [&](std::int64_t y0, std::int64_t y1) {
        std::vector<double> acc(static_cast<size_t>(C));
        const std::vector<float> zeros(static_cast<size_t>(C), 0.0f);
        for (std::int64_t y = y0; y < y1; ++y) {
            for (int x = 0; x < f.width; ++x) {
                std::fill(acc.begin(), acc.end(), 0.0);
                for (int k = 0; k < offsets.k_s; ++k) {
                    const double sx = x + lattice[static_cast<size_t>(k)].dx +
                                      offsets.dx(static_cast<int>(y), x, k);
                    const double sy = y + lattice[static_cast<size_t>(k)].dy +
                                      offsets.dy(static_cast<int>(y), x, k);
                    const double xf = std::floor(sx), yf = std::floor(sy);
                    const int ix = static_cast<int>(xf), iy = static_cast<int>(yf);
                    const double fx = sx - xf, fy = sy - yf;
                    // corner pointers, zero padding outside the map
                    auto corner = [&](int cy, int cx) -> const float* {
                        if (cy < 0 || cy >= f.height || cx < 0 || cx >= f.width)
                            return zeros.data();
                        return f.data.data() + (static_cast<size_t>(cy) * f.width + cx) * C;
                    };
                    const float* p00 = corner(iy, ix);
                    const float* p01 = corner(iy, ix + 1);
                    const float* p10 = corner(iy + 1, ix);
                    const float* p11 = corner(iy + 1, ix + 1);
                    const double w00 = (1.0 - fy) * (1.0 - fx), w01 = (1.0 - fy) * fx;
                    const double w10 = fy * (1.0 - fx), w11 = fy * fx;
                    const float* wk = w_k.data.data() + static_cast<size_t>(k) * C;
                    for (int c = 0; c < C; ++c) {
                        acc[static_cast<size_t>(c)] +=
                            static_cast<double>(wk[c]) * (w00 * p00[c] + w01 * p01[c] +
                                                          w10 * p10[c] + w11 * p11[c]);
                    }
                }
                float* op = &out.at(static_cast<int>(y), x, 0);
                for (int c = 0; c < C; ++c) op[c] = static_cast<float>(acc[static_cast<size_t>(c)]);
            }
        }
    });
    return out;
}

/// Symmetric cross-conditioned fusion:
/// Conv3x3([F_r, F_hat_t]) + Conv3x3([F_t, F_hat_r]).
inline FeatureMap fuse(const FeatureMap& f_r, const FeatureMap& f_hat_t, const FeatureMap& f_t,
                       const FeatureMap& f_hat_r, const ParamStore& params) {
    const FeatureMap* maps[4] = {&f_r, &f_hat_t, &f_t, &f_hat_r};
    for (const FeatureMap* m : maps) {
        if (m->height != f_r.height || m->width != f_r.width || m->channels != f_r.channels) {
            throw data_error("fuse: all maps must share shape, got " + f_r.shape_str() +
                             " vs " + m->shape_str());
        }
    }
    const std::string sfx = "." + std::to_string(f_r.scale_index);
    const FeatureMap a = conv2d(concat_channels({&f_r, &f_hat_t}),
                                params.get("fgsa.fuse_rt" + sfx),
                                params.find("fgsa.fuse_rt" + sfx + ".bias"));
    const FeatureMap b = conv2d(concat_channels({&f_t, &f_hat_r}),
                                params.get("fgsa.fuse_tr" + sfx),
                                params.find("fgsa.fuse_tr" + sfx + ".bias"));
    FeatureMap out = a;
    for (size_t i = 0; i < out.data.size(); ++i) out.data[i] += b.data[i];
    return out;
}

/// Full FGSA stage: gate -> predict offsets -> warp both modalities with the
/// shared field -> fuse. When the pre-enhancement features are supplied they
/// feed the fusion stage directly; otherwise the enhanced features do.
inline FeatureMap fgsa_forward(const FeatureMap& f_r_x, const FeatureMap& f_t_x,
                               const GuidanceMap& g_freq, const ParamStore& params,
                               double clamp_px = 8.0, const FeatureMap* f_r_raw = nullptr,
                               const FeatureMap* f_t_raw = nullptr) {
    const GuidanceMap g_tilde = gate(f_r_x, f_t_x, g_freq, params);
    const OffsetField offsets = predict_offsets(f_r_x, f_t_x, g_tilde, params, clamp_px);
    const std::string sfx = "." + std::to_string(f_r_x.scale_index);
    const Tensor& w_k = params.get("fgsa.w_k" + sfx);
    const std::vector<LatticePoint> lattice = sampling_lattice(offsets.k_s);
    const FeatureMap f_hat_r = deformable_sample(f_r_x, offsets, w_k, lattice);
    const FeatureMap f_hat_t = deformable_sample(f_t_x, offsets, w_k, lattice);
    return fuse(f_r_raw ? *f_r_raw : f_r_x, f_hat_t, f_t_raw ? *f_t_raw : f_t_x, f_hat_r,
                params);
}

}  // namespace lfb
