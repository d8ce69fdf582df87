/**
 * @file weights_init.hpp
 * @brief Deterministic parameter builders. Default weights use He-normal
 *        draws from the fixed seed 0x1FB5EED so any two builds produce
 *        bit-identical stores; the offset projection is zero-initialized so
 *        the untrained predictor emits the zero field.
 */
#pragma once

#include <cmath>
#include <string>

#include "lfb/config.hpp"
#include "lfb/param_store.hpp"
#include "lfb/rng.hpp"
#include "lfb/tensor.hpp"

namespace lfb {

/// A kernel whose only nonzero taps sit at the spatial center. With
/// cin == cout it is the per-channel identity scaled by `gain`; otherwise
/// every output channel averages the inputs (each tap gain/cin).
inline Tensor center_tap_kernel(int k, int cin, int cout, float gain = 1.0f) {
    Tensor t = Tensor::zeros({k, k, cin, cout});
    const int cy = k / 2;
    const size_t base = (static_cast<size_t>(cy) * k + cy) * cin * cout;
    for (int ci = 0; ci < cin; ++ci) {
        for (int co = 0; co < cout; ++co) {
            if (cin == cout) {
                if (ci == co) t.data[base + static_cast<size_t>(ci) * cout + co] = gain;
            } else {
                t.data[base + static_cast<size_t>(ci) * cout + co] = gain / static_cast<float>(cin);
            }
        }
    }
    return t;
}

namespace detail {

inline Tensor he_normal(Rng& rng, std::vector<int> shape, int fan_in) {
    Tensor t = Tensor::zeros(std::move(shape));
    const double std_dev = std::sqrt(2.0 / static_cast<double>(fan_in));
    for (float& v : t.data) v = static_cast<float>(std_dev * rng.gaussian());
    return t;
}

inline void add_conv(ParamStore& store, Rng& rng, const std::string& name, int k, int cin,
                     int cout, bool bias) {
    store.add(name, he_normal(rng, {k, k, cin, cout}, k * k * cin));
    if (bias) store.add(name + ".bias", Tensor::zeros({cout}));
}

}  // namespace detail

/// Builds every parameter the pipeline consumes, for both modalities and all
/// scales. `channels` is the backbone width, `hidden` the offset-predictor
/// width.
inline ParamStore make_default_params(const PipelineConfig& cfg, int channels = 16,
                                      int hidden = 16) {
    Rng rng(0x1FB5EED);
    ParamStore store;
    const int C = channels, d = cfg.embed_dim, K = cfg.k_s;

    for (const std::string mod : {"rgb", "thermal"}) {
        const int c_in0 = mod == "rgb" ? 3 : 1;
        for (int s = 0; s < cfg.scales; ++s) {
            const std::string sfx = "." + std::to_string(s);
            const std::string p = "backbone." + mod;
            detail::add_conv(store, rng, p + ".stem" + sfx, 3, s == 0 ? c_in0 : C, C, true);
            store.add(p + ".atrous1" + sfx, detail::he_normal(rng, {3, 3, C, C}, 9 * C));
            store.add(p + ".atrous2" + sfx, detail::he_normal(rng, {3, 3, C, C}, 9 * C));
            store.add(p + ".atrous4" + sfx, detail::he_normal(rng, {3, 3, C, C}, 9 * C));
        }
    }

    for (int s = 0; s < cfg.scales; ++s) {
        const std::string sfx = "." + std::to_string(s);
        store.add("lfca.alpha_raw" + sfx, Tensor({1}, {0.0f}));
        store.add("lfca.beta_raw" + sfx, Tensor({1}, {0.0f}));
        store.add("lfca.q_proj" + sfx, detail::he_normal(rng, {1, 1, C, d}, C));
        store.add("lfca.kv_proj" + sfx, detail::he_normal(rng, {1, 1, 1, 2 * d}, 1));
        store.add("lfca.out_proj" + sfx, detail::he_normal(rng, {1, 1, d, C}, d));

        detail::add_conv(store, rng, "fgsa.gate_conv" + sfx, 1, 2 * C, 6, true);
        detail::add_conv(store, rng, "fgsa.offset_conv1" + sfx, 3, 2 * C + 6, hidden, true);
        detail::add_conv(store, rng, "fgsa.offset_conv2" + sfx, 3, hidden, hidden, true);
        store.add("fgsa.offset_proj" + sfx, Tensor::zeros({1, 1, hidden, 2 * K}));
        store.add("fgsa.offset_proj" + sfx + ".bias", Tensor::zeros({2 * K}));

        Tensor wk = Tensor::zeros({K, C});  // center tap = identity warp start
        for (int c = 0; c < C; ++c) wk.data[static_cast<size_t>(K / 2) * C + c] = 1.0f;
        store.add("fgsa.w_k" + sfx, wk);

        detail::add_conv(store, rng, "fgsa.fuse_rt" + sfx, 3, 2 * C, C, true);
        detail::add_conv(store, rng, "fgsa.fuse_tr" + sfx, 3, 2 * C, C, true);
    }

    store.set_metadata("patch_size", cfg.patch_size);
    store.set_metadata("stride", cfg.stride);
    store.set_metadata("k_s", cfg.k_s);
    store.set_metadata("eps", cfg.eps);
    store.set_metadata("cutoff_rho", cfg.cutoff_rho);
    store.set_metadata("channels", C);
    return store;
}

}  // namespace lfb
