/**
 * @file tensor.hpp
 * @brief Dense real/complex containers and the shared conv/elementwise kernels.
 *
 * Storage is 32-bit float for feature maps; reductions accumulate in double.
 * All operations return new containers and never mutate their inputs.
 */
#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "lfb/errors.hpp"
#include "lfb/parallel.hpp"

namespace lfb {

enum class Padding { zero, reflect };

/// Dense H x W x C real-valued grid at one pyramid scale, row-major,
/// channels innermost.
struct FeatureMap {
    int height = 0;
    int width = 0;
    int channels = 0;
    int scale_index = 0;
    std::vector<float> data;

    FeatureMap() = default;
    FeatureMap(int h, int w, int c, int scale = 0)
        : height(h), width(w), channels(c), scale_index(scale),
          data(static_cast<size_t>(h) * w * c, 0.0f) {}

    float& at(int y, int x, int c) {
        return data[(static_cast<size_t>(y) * width + x) * channels + c];
    }
    float at(int y, int x, int c) const {
        return data[(static_cast<size_t>(y) * width + x) * channels + c];
    }
    size_t size() const { return data.size(); }

    std::string shape_str() const {
        std::ostringstream os;
        os << height << "x" << width << "x" << channels;
        return os.str();
    }
};

/// Patch-sized double-precision grid (FFT inputs, amplitudes, phases).
struct RealGrid {
    int height = 0;
    int width = 0;
    std::vector<double> v;

    RealGrid() = default;
    RealGrid(int h, int w) : height(h), width(w), v(static_cast<size_t>(h) * w, 0.0) {}

    double& at(int y, int x) { return v[static_cast<size_t>(y) * width + x]; }
    double at(int y, int x) const { return v[static_cast<size_t>(y) * width + x]; }
    size_t size() const { return v.size(); }
};

/// Split-storage complex grid; real and imag always share dimensions.
struct ComplexGrid {
    int height = 0;
    int width = 0;
    std::vector<double> re, im;

    ComplexGrid() = default;
    ComplexGrid(int h, int w)
        : height(h), width(w),
          re(static_cast<size_t>(h) * w, 0.0), im(static_cast<size_t>(h) * w, 0.0) {}

    size_t size() const { return re.size(); }
};

/// Named dense tensor for learnable quantities (shape + f32 values).
struct Tensor {
    std::vector<int> shape;
    std::vector<float> data;

    Tensor() = default;
    Tensor(std::vector<int> s, std::vector<float> d) : shape(std::move(s)), data(std::move(d)) {}

    static Tensor zeros(std::vector<int> s) {
        size_t n = 1;
        for (int d : s) n *= static_cast<size_t>(d);
        return Tensor(std::move(s), std::vector<float>(n, 0.0f));
    }
    size_t elements() const { return data.size(); }
};

inline std::string shape_to_string(const std::vector<int>& s) {
    std::string out = "[";
    for (size_t i = 0; i < s.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(s[i]);
    }
    return out + "]";
}

/// Mirror index into [0, n) with edge duplication: -1 -> 0, n -> n-1.
/// Folds repeatedly so it stays valid even when the overhang exceeds n.
inline int reflect_index(int i, int n) {
    if (n == 1) return 0;
    while (i < 0 || i >= n) {
        if (i < 0) i = -1 - i;
        if (i >= n) i = 2 * n - 1 - i;
    }
    return i;
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
inline double relu(double x) { return x > 0.0 ? x : 0.0; }

inline void assert_finite(const FeatureMap& m, const char* what) {
    for (float v : m.data) {
        if (!std::isfinite(v)) {
            throw numeric_error(std::string("non-finite value in ") + what);
        }
    }
}

namespace detail {

/// Core cross-correlation with dilation over raw T arrays. Kernel layout is
/// KH x KW x Cin x Cout. Padding amount is (dilated_k - 1) / 2 per axis;
/// accumulation is double regardless of T.
template <typename T>
std::vector<T> conv2d_raw(const T* in, int h, int w, int cin,
                          const T* kernel, int kh, int kw, int cout,
                          const T* bias, int dilation, int stride,
                          Padding padding, int& out_h, int& out_w) {
    const int dkh = (kh - 1) * dilation + 1;
    const int dkw = (kw - 1) * dilation + 1;
    const int pad_y = (dkh - 1) / 2;
    const int pad_x = (dkw - 1) / 2;
    out_h = (h + 2 * pad_y - dkh) / stride + 1;
    out_w = (w + 2 * pad_x - dkw) / stride + 1;
    if (out_h <= 0 || out_w <= 0) {
        throw data_error("conv2d: input " + std::to_string(h) + "x" + std::to_string(w) +
                         " too small for dilated kernel " + std::to_string(dkh) + "x" +
                         std::to_string(dkw));
    }
    std::vector<T> out(static_cast<size_t>(out_h) * out_w * cout);
    const size_t krow = static_cast<size_t>(cout);

    parallel::parallel_for(out_h, [&](std::int64_t y0, std::int64_t y1) {
        std::vector<double> acc(static_cast<size_t>(cout));
        double* const accp = acc.data();
        for (std::int64_t oy = y0; oy < y1; ++oy) {
            for (int ox = 0; ox < out_w; ++ox) {
                for (int co = 0; co < cout; ++co)
                    accp[co] = bias ? static_cast<double>(bias[co]) : 0.0;
                for (int ky = 0; ky < kh; ++ky) {
                    int yy = static_cast<int>(oy) * stride + ky * dilation - pad_y;
                    if (padding == Padding::zero) {
                        if (yy < 0 || yy >= h) continue;
                    } else {
                        yy = reflect_index(yy, h);
                    }
                    for (int kx = 0; kx < kw; ++kx) {
                        int xx = ox * stride + kx * dilation - pad_x;
                        if (padding == Padding::zero) {
                            if (xx < 0 || xx >= w) continue;
                        } else {
                            xx = reflect_index(xx, w);
                        }
                        const T* px = in + (static_cast<size_t>(yy) * w + xx) * cin;
                        const T* kr = kernel + (static_cast<size_t>(ky) * kw + kx) * cin * cout;
                        int ci = 0;
                        for (; ci + 4 <= cin; ci += 4) {  // block ci to amortize acc traffic
                            const double a0 = static_cast<double>(px[ci]);
                            const double a1 = static_cast<double>(px[ci + 1]);
                            const double a2 = static_cast<double>(px[ci + 2]);
                            const double a3 = static_cast<double>(px[ci + 3]);
                            const T* k0 = kr + static_cast<size_t>(ci) * krow;
                            const T* k1 = k0 + krow;
                            const T* k2 = k1 + krow;
                            const T* k3 = k2 + krow;
                            for (int co = 0; co < cout; ++co) {
                                accp[co] += a0 * static_cast<double>(k0[co]) +
                                            a1 * static_cast<double>(k1[co]) +
                                            a2 * static_cast<double>(k2[co]) +
                                            a3 * static_cast<double>(k3[co]);
                            }
                        }
                        for (; ci < cin; ++ci) {
                            const double a = static_cast<double>(px[ci]);
                            const T* kc = kr + static_cast<size_t>(ci) * krow;
                            for (int co = 0; co < cout; ++co)
                                accp[co] += a * static_cast<double>(kc[co]);
                        }
                    }
                }
                T* op = out.data() + (static_cast<size_t>(oy) * out_w + ox) * cout;
                for (int co = 0; co < cout; ++co) op[co] = static_cast<T>(accp[co]);
            }
        }
    });
    return out;
}

}  // namespace detail

/// Standard cross-correlation with dilation; kernel is KH x KW x Cin x Cout,
/// optional bias of size Cout. Output spatial size is
/// floor((H + 2*pad - dilated_K) / stride) + 1 with pad = (dilated_K - 1) / 2.
inline FeatureMap conv2d(const FeatureMap& input, const Tensor& kernel,
                         const Tensor* bias = nullptr, int dilation = 1,
                         int stride = 1, Padding padding = Padding::reflect) {
    if (kernel.shape.size() != 4) {
        throw data_error("conv2d: kernel must be KHxKWxCinxCout, got shape " +
                         shape_to_string(kernel.shape));
    }
    const int kh = kernel.shape[0], kw = kernel.shape[1];
    const int cin = kernel.shape[2], cout = kernel.shape[3];
    if (cin != input.channels) {
        throw data_error("conv2d: kernel Cin mismatch, input " + input.shape_str() +
                         " vs kernel " + shape_to_string(kernel.shape));
    }
    if (bias && static_cast<int>(bias->elements()) != cout) {
        throw data_error("conv2d: bias size " + std::to_string(bias->elements()) +
                         " vs Cout " + std::to_string(cout));
    }
    if (dilation < 1 || stride < 1) throw data_error("conv2d: dilation and stride must be >= 1");

    FeatureMap out;
    out.channels = cout;
    out.scale_index = input.scale_index;
    out.data = detail::conv2d_raw<float>(input.data.data(), input.height, input.width, cin,
                                         kernel.data.data(), kh, kw, cout,
                                         bias ? bias->data.data() : nullptr, dilation, stride,
                                         padding, out.height, out.width);
    return out;
}

/// Channel-wise concatenation of maps sharing spatial dimensions.
inline FeatureMap concat_channels(const std::vector<const FeatureMap*>& maps) {
    if (maps.empty()) throw data_error("concat_channels: no inputs");
    const int h = maps[0]->height, w = maps[0]->width;
    int c_total = 0;
    for (const FeatureMap* m : maps) {
        if (m->height != h || m->width != w) {
            throw data_error("concat_channels: spatial mismatch " + maps[0]->shape_str() +
                             " vs " + m->shape_str());
        }
        c_total += m->channels;
    }
    FeatureMap out(h, w, c_total, maps[0]->scale_index);
    parallel::parallel_for(static_cast<std::int64_t>(h) * w, [&](std::int64_t i0, std::int64_t i1) {
        for (std::int64_t i = i0; i < i1; ++i) {
            float* dst = out.data.data() + i * c_total;
            for (const FeatureMap* m : maps) {
                const float* src = m->data.data() + i * m->channels;
                for (int c = 0; c < m->channels; ++c) *dst++ = src[c];
            }
        }
    });
    return out;
}

/// Block-mean downsample by an integer factor (both dims must divide).
inline FeatureMap area_downsample(const FeatureMap& m, int factor) {
    if (factor == 1) return m;
    if (factor < 1 || m.height % factor || m.width % factor) {
        throw data_error("area_downsample: factor " + std::to_string(factor) +
                         " does not divide " + m.shape_str());
    }
    FeatureMap out(m.height / factor, m.width / factor, m.channels, m.scale_index);
    const double inv = 1.0 / (static_cast<double>(factor) * factor);
    for (int y = 0; y < out.height; ++y) {
        for (int x = 0; x < out.width; ++x) {
            for (int c = 0; c < m.channels; ++c) {
                double s = 0.0;
                for (int dy = 0; dy < factor; ++dy)
                    for (int dx = 0; dx < factor; ++dx)
                        s += m.at(y * factor + dy, x * factor + dx, c);
                out.at(y, x, c) = static_cast<float>(s * inv);
            }
        }
    }
    return out;
}

}  // namespace lfb
