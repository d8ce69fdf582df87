/**
 * @file pipeline.hpp
 * @brief Full forward pass per scale (spectra -> alignment -> guidance ->
 *        deformable fusion) and the feature-export boundary that replaces a
 *        detection head.
 */
#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lfb/backbone.hpp"
#include "lfb/config.hpp"
#include "lfb/fgsa.hpp"
#include "lfb/image_io.hpp"
#include "lfb/lfca.hpp"
#include "lfb/lfgm.hpp"
#include "lfb/param_store.hpp"
#include "lfb/spectral.hpp"

namespace lfb {

struct FusionResult {
    std::vector<FeatureMap> fused;       // F_out per scale
    std::vector<GuidanceMap> guidance;   // 6-channel per scale
    std::vector<FeatureMap> aligned;     // single-channel F_align per scale
    std::map<std::string, double> timing_ms;
};

namespace detail {

class StageClock {
  public:
    explicit StageClock(std::map<std::string, double>& sink) : sink_(sink) { reset(); }
    void reset() { last_ = std::chrono::steady_clock::now(); }
    void lap(const std::string& stage) {
        const auto now = std::chrono::steady_clock::now();
        sink_[stage] += std::chrono::duration<double, std::milli>(now - last_).count();
        last_ = now;
    }

  private:
    std::map<std::string, double>& sink_;
    std::chrono::steady_clock::time_point last_;
};

}  // namespace detail

/// Runs the full forward pass. Inputs must share dimensions (pre-register and
/// resize first); rgb has 3 channels (or 1, used directly as luma), thermal
/// has 1. Optional precomputed pyramids bypass the stand-in backbone.
inline FusionResult run(const FeatureMap& rgb, const FeatureMap& thermal,
                        const ParamStore& params, const PipelineConfig& cfg,
                        const PyramidFeatures* rgb_features = nullptr,
                        const PyramidFeatures* thermal_features = nullptr) {
    cfg.validate();
    if (rgb.height != thermal.height || rgb.width != thermal.width) {
        throw data_error("pipeline: rgb " + rgb.shape_str() + " and thermal " +
                         thermal.shape_str() +
                         " differ in size; register and resize the pair to a common "
                         "resolution first (default 640x512)");
    }
    if (thermal.channels != 1) {
        throw data_error("pipeline: thermal must be single-channel, got " + thermal.shape_str());
    }
    if (rgb.channels != 3 && rgb.channels != 1) {
        throw data_error("pipeline: rgb must have 3 (or 1) channels, got " + rgb.shape_str());
    }

    FusionResult result;
    detail::StageClock clock(result.timing_ms);
    const auto t_start = std::chrono::steady_clock::now();

    const FeatureMap rgb_p = pad_to_multiple(rgb, 16);
    const FeatureMap th_p = pad_to_multiple(thermal, 16);
    const FeatureMap luma_full = rgb_p.channels == 3 ? luma(rgb_p) : rgb_p;
    clock.lap("prepare");

    PyramidFeatures pyr_r, pyr_t;
    if (rgb_features) {
        pyr_r = *rgb_features;
    } else {
        pyr_r = extract_features(rgb_p, params, "backbone.rgb", cfg.scales);
    }
    if (thermal_features) {
        pyr_t = *thermal_features;
    } else {
        pyr_t = extract_features(th_p, params, "backbone.thermal", cfg.scales);
    }
    clock.lap("backbone");

    for (int s = 0; s < cfg.scales; ++s) {
        const FeatureMap& f_r = pyr_r.levels[static_cast<size_t>(s)];
        const FeatureMap& f_t = pyr_t.levels[static_cast<size_t>(s)];
        if (f_r.height != f_t.height || f_r.width != f_t.width) {
            throw data_error("pipeline: pyramid level " + std::to_string(s) +
                             " size mismatch between modalities");
        }
        clock.reset();
        const FeatureMap lum_s = area_downsample(luma_full, 1 << s);
        const FeatureMap th_s = area_downsample(th_p, 1 << s);
        if (lum_s.height != f_r.height || lum_s.width != f_r.width) {
            throw data_error("pipeline: features at level " + std::to_string(s) + " are " +
                             f_r.shape_str() + " but images downsample to " + lum_s.shape_str());
        }
        const PatchGrid grid(lum_s.height, lum_s.width, cfg.patch_size, cfg.stride);
        const std::vector<LocalSpectrum> spectra_r = compute_spectra(lum_s, grid);
        const std::vector<LocalSpectrum> spectra_t = compute_spectra(th_s, grid);
        clock.lap("spectra");

        LfcaResult lfca = lfca_forward(f_r, f_t, spectra_r, spectra_t, grid, params, cfg.eps,
                                       cfg.patch_size);
        clock.lap("lfca");

        GuidanceMap g_freq = lfgm_forward(spectra_r, spectra_t, grid, cfg.cutoff_rho);
        g_freq.scale_index = s;
        clock.lap("lfgm");

        FeatureMap f_out =
            fgsa_forward(lfca.f_r_x, lfca.f_t_x, g_freq, params, cfg.clamp_px, &f_r, &f_t);
        clock.lap("fgsa");

        assert_finite(f_out, "fused output");
        result.fused.push_back(std::move(f_out));
        result.guidance.push_back(std::move(g_freq));
        result.aligned.push_back(std::move(lfca.f_align));
    }
    result.timing_ms["total"] =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t_start)
            .count();
    return result;
}

inline const char* guidance_channel_name(int c) {
    static const char* names[6] = {"dx", "dy", "sphi", "chf", "clf", "coh"};
    return names[c];
}

/// Writes the six guidance channels as normalized grayscale PNGs and returns
/// per-channel {min, mean, max}.
inline nlohmann::json write_guidance_pngs(const GuidanceMap& g, const std::filesystem::path& dir,
                                          const std::string& prefix) {
    nlohmann::json stats = nlohmann::json::object();
    for (int c = 0; c < 6; ++c) {
        double lo = g.data.empty() ? 0.0 : g.at(0, 0, c);
        double hi = lo, sum = 0.0;
        for (int y = 0; y < g.height; ++y) {
            for (int x = 0; x < g.width; ++x) {
                const double v = g.at(y, x, c);
                lo = std::min(lo, v);
                hi = std::max(hi, v);
                sum += v;
            }
        }
        const double mean = g.data.empty() ? 0.0 : sum / (static_cast<double>(g.height) * g.width);
        FeatureMap gray(g.height, g.width, 1);
        const double span = hi - lo;
        for (int y = 0; y < g.height; ++y)
            for (int x = 0; x < g.width; ++x)
                gray.at(y, x, 0) =
                    span > 0.0 ? static_cast<float>((g.at(y, x, c) - lo) / span) : 0.0f;
        write_png_gray8(dir / (prefix + "_" + guidance_channel_name(c) + ".png"), gray);
        stats[guidance_channel_name(c)] = {{"min", lo}, {"mean", mean}, {"max", hi}};
    }
    return stats;
}

/// Exports fused + aligned features as an f32 blob with manifest, guidance
/// channels as PNGs with a stats summary, and stage timing as JSON.
inline void export_result(const FusionResult& result, const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw data_error("cannot create output directory " + dir.string());

    ParamStore features;
    for (size_t s = 0; s < result.fused.size(); ++s) {
        const FeatureMap& f = result.fused[s];
        features.add("fused." + std::to_string(s),
                     Tensor({f.height, f.width, f.channels}, f.data));
        const FeatureMap& a = result.aligned[s];
        features.add("align." + std::to_string(s),
                     Tensor({a.height, a.width, a.channels}, a.data));
    }
    features.set_metadata("scales", static_cast<double>(result.fused.size()));
    save_params(features, dir / "features.json");

    nlohmann::json stats = nlohmann::json::object();
    for (size_t s = 0; s < result.guidance.size(); ++s) {
        stats["scale_" + std::to_string(s)] =
            write_guidance_pngs(result.guidance[s], dir, "guidance_s" + std::to_string(s));
    }
    std::ofstream gs(dir / "guidance_stats.json");
    if (!gs) throw data_error("cannot write " + (dir / "guidance_stats.json").string());
    gs << stats.dump(2) << "\n";

    nlohmann::json timing = nlohmann::json::object();
    for (const auto& [stage, ms] : result.timing_ms) timing[stage] = ms;
    std::ofstream ts(dir / "timing.json");
    if (!ts) throw data_error("cannot write " + (dir / "timing.json").string());
    ts << timing.dump(2) << "\n";
}

/// Re-imports the fused/aligned feature blobs written by export_result.
inline std::pair<std::vector<FeatureMap>, std::vector<FeatureMap>> import_features(
    const std::filesystem::path& dir) {
    const ParamStore store = load_params(dir / "features.json");
    const int scales = static_cast<int>(store.metadata_or("scales", 0));
    if (scales <= 0) throw data_error("feature manifest missing scales metadata");
    std::vector<FeatureMap> fused, aligned;
    for (int s = 0; s < scales; ++s) {
        for (const char* kind : {"fused", "align"}) {
            const Tensor& t = store.get(std::string(kind) + "." + std::to_string(s));
            if (t.shape.size() != 3) throw data_error("feature tensor must be rank-3");
            FeatureMap m(t.shape[0], t.shape[1], t.shape[2], s);
            m.data = t.data;
            (std::string(kind) == "fused" ? fused : aligned).push_back(std::move(m));
        }
    }
    return {std::move(fused), std::move(aligned)};
}

/// Loads precomputed pyramids from a weight-format manifest whose entries are
/// pyramid.{rgb,thermal}.{scale} rank-3 tensors.
inline std::pair<PyramidFeatures, PyramidFeatures> load_pyramids(
    const std::filesystem::path& manifest, int scales) {
    const ParamStore store = load_params(manifest);
    PyramidFeatures r, t;
    for (int s = 0; s < scales; ++s) {
        for (const std::string mod : {"rgb", "thermal"}) {
            const Tensor& tensor = store.get("pyramid." + mod + "." + std::to_string(s));
            if (tensor.shape.size() != 3) {
                throw data_error("pyramid tensor " + mod + "." + std::to_string(s) +
                                 " must be rank-3 [H,W,C]");
            }
            FeatureMap m(tensor.shape[0], tensor.shape[1], tensor.shape[2], s);
            m.data = tensor.data;
            (mod == "rgb" ? r : t).levels.push_back(std::move(m));
        }
    }
    return {std::move(r), std::move(t)};
}

/// Saves a pyramid pair in the --features-in manifest layout.
inline void save_pyramids(const PyramidFeatures& rgb, const PyramidFeatures& thermal,
                          const std::filesystem::path& manifest) {
    ParamStore store;
    for (size_t s = 0; s < rgb.levels.size(); ++s) {
        const FeatureMap& m = rgb.levels[s];
        store.add("pyramid.rgb." + std::to_string(s),
                  Tensor({m.height, m.width, m.channels}, m.data));
    }
    for (size_t s = 0; s < thermal.levels.size(); ++s) {
        const FeatureMap& m = thermal.levels[s];
        store.add("pyramid.thermal." + std::to_string(s),
                  Tensor({m.height, m.width, m.channels}, m.data));
    }
    save_params(store, manifest);
}

}  // namespace lfb
