/**
 * @file synth.hpp
 * @brief Synthetic RGB-T pairs with known misalignment, low-contrast targets
 *        over cluttered textures, and alignment-error measurement. All
 *        randomness flows through the documented xorshift64* generator, so a
 *        fixed seed reproduces fixtures bit-exactly.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "lfb/backbone.hpp"
#include "lfb/errors.hpp"
#include "lfb/eval.hpp"
#include "lfb/fgsa.hpp"
#include "lfb/rng.hpp"
#include "lfb/tensor.hpp"

namespace lfb::synth {

enum class Texture { perlin, checker, blobs };

inline Texture texture_from_string(const std::string& s) {
    if (s == "perlin") return Texture::perlin;
    if (s == "checker") return Texture::checker;
    if (s == "blobs") return Texture::blobs;
    throw data_error("unknown texture '" + s + "' (expected perlin|checker|blobs)");
}

struct SynthConfig {
    std::uint64_t seed = 1;
    int height = 512;
    int width = 640;
    double shift_x = 0.0;  // thermal content displaced by +shift pixels
    double shift_y = 0.0;
    double intensity_gain = 1.0;
    double noise_sigma = 0.0;
    Texture texture = Texture::perlin;
    int n_targets = 3;
    int target_min = 6;   // px
    int target_max = 16;  // px
};

struct SynthPair {
    FeatureMap rgb;      // 3 channels in [0,1]
    FeatureMap thermal;  // 1 channel
    double shift_x = 0.0;
    double shift_y = 0.0;
    std::vector<eval::BBox> boxes;
};

/// Shifts content by (+dx, +dy) pixels: out(y, x) = in(y - dy, x - dx),
/// bilinear with reflect padding. Integer shifts copy exactly.
inline FeatureMap warp_shift(const FeatureMap& m, double dx, double dy) {
    FeatureMap out(m.height, m.width, m.channels, m.scale_index);
    const double fx = std::floor(dx), fy = std::floor(dy);
    const bool integral = dx == fx && dy == fy;
    for (int y = 0; y < m.height; ++y) {
        for (int x = 0; x < m.width; ++x) {
            if (integral) {
                const int sy = reflect_index(y - static_cast<int>(fy), m.height);
                const int sx = reflect_index(x - static_cast<int>(fx), m.width);
                for (int c = 0; c < m.channels; ++c) out.at(y, x, c) = m.at(sy, sx, c);
                continue;
            }
            const double sy = y - dy, sx = x - dx;
            const int y0 = static_cast<int>(std::floor(sy));
            const int x0 = static_cast<int>(std::floor(sx));
            const double wy = sy - y0, wx = sx - x0;
            const int ya = reflect_index(y0, m.height), yb = reflect_index(y0 + 1, m.height);
            const int xa = reflect_index(x0, m.width), xb = reflect_index(x0 + 1, m.width);
            for (int c = 0; c < m.channels; ++c) {
                const double v = (1.0 - wy) * ((1.0 - wx) * m.at(ya, xa, c) + wx * m.at(ya, xb, c)) +
                                 wy * ((1.0 - wx) * m.at(yb, xa, c) + wx * m.at(yb, xb, c));
                out.at(y, x, c) = static_cast<float>(v);
            }
        }
    }
    return out;
}

namespace detail {

inline double smoothstep(double t) { return t * t * (3.0 - 2.0 * t); }

/// Value noise: random lattice values interpolated with smoothstep weights.
inline void add_value_noise(FeatureMap& base, Rng& rng, int cell, double amplitude) {
    const int gy = base.height / cell + 2, gx = base.width / cell + 2;
    std::vector<double> lattice(static_cast<size_t>(gy) * gx);
    for (double& v : lattice) v = rng.uniform();
    for (int y = 0; y < base.height; ++y) {
        const double fy = static_cast<double>(y) / cell;
        const int iy = static_cast<int>(fy);
        const double ty = smoothstep(fy - iy);
        for (int x = 0; x < base.width; ++x) {
            const double fx = static_cast<double>(x) / cell;
            const int ix = static_cast<int>(fx);
            const double tx = smoothstep(fx - ix);
            const double v00 = lattice[static_cast<size_t>(iy) * gx + ix];
            const double v01 = lattice[static_cast<size_t>(iy) * gx + ix + 1];
            const double v10 = lattice[static_cast<size_t>(iy + 1) * gx + ix];
            const double v11 = lattice[static_cast<size_t>(iy + 1) * gx + ix + 1];
            const double v = (1.0 - ty) * ((1.0 - tx) * v00 + tx * v01) +
                             ty * ((1.0 - tx) * v10 + tx * v11);
            base.at(y, x, 0) += static_cast<float>(amplitude * v);
        }
    }
}

inline FeatureMap make_background(const SynthConfig& cfg, Rng& rng) {
    FeatureMap base(cfg.height, cfg.width, 1);
    switch (cfg.texture) {
        case Texture::perlin:
            add_value_noise(base, rng, 32, 0.45);
            add_value_noise(base, rng, 16, 0.30);
            add_value_noise(base, rng, 8, 0.15);
            for (float& v : base.data) v += 0.05f;
            break;
        case Texture::checker: {
            const int block = 8;
            for (int y = 0; y < cfg.height; ++y)
                for (int x = 0; x < cfg.width; ++x)
                    base.at(y, x, 0) = ((y / block + x / block) % 2) ? 0.65f : 0.35f;
            break;
        }
        case Texture::blobs: {
            for (float& v : base.data) v = 0.35f;
            const int k = 12;
            for (int i = 0; i < k; ++i) {
                const double cy = rng.uniform(0.0, cfg.height);
                const double cx = rng.uniform(0.0, cfg.width);
                const double sig = rng.uniform(8.0, std::max(9.0, cfg.width / 8.0));
                const double amp = rng.uniform(-0.25, 0.35);
                for (int y = 0; y < cfg.height; ++y) {
                    for (int x = 0; x < cfg.width; ++x) {
                        const double d2 = (y - cy) * (y - cy) + (x - cx) * (x - cx);
                        base.at(y, x, 0) +=
                            static_cast<float>(amp * std::exp(-d2 / (2.0 * sig * sig)));
                    }
                }
            }
            break;
        }
    }
    for (float& v : base.data) v = std::clamp(v, 0.0f, 1.0f);
    return base;
}

}  // namespace detail

/// Deterministic RGB-T pair: targets composited over clutter, thermal built
/// as gain * warp(luma(rgb), shift) + gaussian noise. Contrast of the small
/// targets is drawn low enough to include near-camouflage cases.
inline SynthPair generate_pair(const SynthConfig& cfg) {
    if (cfg.height < 16 || cfg.width < 16) throw data_error("generate_pair: size below 16x16");
    if (!(cfg.intensity_gain > 0.0)) throw data_error("generate_pair: gain must be > 0");
    if (cfg.noise_sigma < 0.0) throw data_error("generate_pair: noise sigma must be >= 0");
    const double max_shift = std::min(cfg.height, cfg.width) / 4.0;
    if (std::abs(cfg.shift_x) >= max_shift || std::abs(cfg.shift_y) >= max_shift) {
        throw data_error("generate_pair: |shift| must stay below min(H,W)/4 = " +
                         std::to_string(max_shift));
    }
    if (cfg.n_targets < 0 || cfg.target_min < 2 || cfg.target_max < cfg.target_min) {
        throw data_error("generate_pair: bad target configuration");
    }

    Rng rng(cfg.seed);
    FeatureMap base = detail::make_background(cfg, rng);

    SynthPair out;
    const int margin = cfg.target_max + 2;
    for (int i = 0; i < cfg.n_targets; ++i) {
        const int w = cfg.target_min +
                      static_cast<int>(rng.below(static_cast<std::uint64_t>(
                          cfg.target_max - cfg.target_min + 1)));
        const int h = cfg.target_min +
                      static_cast<int>(rng.below(static_cast<std::uint64_t>(
                          cfg.target_max - cfg.target_min + 1)));
        const double cy = rng.uniform(margin, cfg.height - margin);
        const double cx = rng.uniform(margin, cfg.width - margin);
        const double contrast = rng.uniform(0.05, 0.40);  // low end is near-camouflage
        const double ry = h / 2.0, rx = w / 2.0;
        for (int y = std::max(0, static_cast<int>(cy - ry - 2));
             y <= std::min(cfg.height - 1, static_cast<int>(cy + ry + 2)); ++y) {
            for (int x = std::max(0, static_cast<int>(cx - rx - 2));
                 x <= std::min(cfg.width - 1, static_cast<int>(cx + rx + 2)); ++x) {
                const double dn = ((y - cy) / ry) * ((y - cy) / ry) +
                                  ((x - cx) / rx) * ((x - cx) / rx);
                if (dn <= 1.0) {
                    const double fall = 1.0 - dn * dn;  // flat core, soft rim
                    base.at(y, x, 0) = static_cast<float>(
                        std::clamp(base.at(y, x, 0) + contrast * fall, 0.0, 1.0));
                }
            }
        }
        out.boxes.push_back({cx - rx, cy - ry, 2.0 * rx, 2.0 * ry});
    }

    // Per-channel tints keep luma(rgb) == base up to the tint weights.
    const double tint[3] = {rng.uniform(0.85, 1.0), rng.uniform(0.85, 1.0),
                            rng.uniform(0.85, 1.0)};
    out.rgb = FeatureMap(cfg.height, cfg.width, 3);
    for (int y = 0; y < cfg.height; ++y)
        for (int x = 0; x < cfg.width; ++x)
            for (int c = 0; c < 3; ++c)
                out.rgb.at(y, x, c) =
                    static_cast<float>(std::clamp(base.at(y, x, 0) * tint[c], 0.0, 1.0));

    FeatureMap lum = luma(out.rgb);
    FeatureMap warped = warp_shift(lum, cfg.shift_x, cfg.shift_y);
    out.thermal = FeatureMap(cfg.height, cfg.width, 1);
    if (cfg.intensity_gain == 1.0 && cfg.noise_sigma == 0.0) {
        out.thermal.data = warped.data;  // bit-exact in the identity case
    } else {
        for (size_t i = 0; i < warped.data.size(); ++i) {
            double v = cfg.intensity_gain * warped.data[i];
            if (cfg.noise_sigma > 0.0) v += cfg.noise_sigma * rng.gaussian();
            out.thermal.data[i] = static_cast<float>(v);
        }
    }
    out.shift_x = cfg.shift_x;
    out.shift_y = cfg.shift_y;
    return out;
}

/// Inclusive-exclusive pixel rectangle [y0, y1) x [x0, x1).
struct Region {
    int y0 = 0;
    int x0 = 0;
    int y1 = 0;
    int x1 = 0;
};

/// Interior rectangle obtained by eroding `margin` pixels from every side.
inline Region interior(const FeatureMap& m, int margin) {
    return {margin, margin, m.height - margin, m.width - margin};
}

/// Mean absolute difference over the mask region, across all channels.
inline double alignment_error(const FeatureMap& a, const FeatureMap& b, const Region& mask) {
    if (a.height != b.height || a.width != b.width || a.channels != b.channels) {
        throw data_error("alignment_error: shape mismatch " + a.shape_str() + " vs " +
                         b.shape_str());
    }
    if (mask.y0 < 0 || mask.x0 < 0 || mask.y1 > a.height || mask.x1 > a.width ||
        mask.y0 >= mask.y1 || mask.x0 >= mask.x1) {
        throw data_error("alignment_error: empty or out-of-bounds mask");
    }
    double sum = 0.0;
    std::int64_t n = 0;
    for (int y = mask.y0; y < mask.y1; ++y) {
        for (int x = mask.x0; x < mask.x1; ++x) {
            for (int c = 0; c < a.channels; ++c) {
                sum += std::abs(static_cast<double>(a.at(y, x, c)) - b.at(y, x, c));
                ++n;
            }
        }
    }
    return sum / static_cast<double>(n);
}

/// Ground-truth offset field: every sampling point displaced by (dx, dy).
inline OffsetField uniform_offsets(int height, int width, int k_s, double dx, double dy) {
    OffsetField f(height, width, k_s);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            for (int k = 0; k < k_s; ++k) {
                f.dx(y, x, k) = static_cast<float>(dx);
                f.dy(y, x, k) = static_cast<float>(dy);
            }
        }
    }
    return f;
}

}  // namespace lfb::synth
