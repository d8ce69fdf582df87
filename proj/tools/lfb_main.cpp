/**
 * @file lfb_main.cpp
 * @brief Command-line front end: fuse, guidance, bench, eval, gradcheck,
 *        selftest. Exit codes: 0 success, 1 usage error, 2 data error,
 *        3 numeric-invariant violation.
 */
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "lfb/config.hpp"
#include "lfb/eval.hpp"
#include "lfb/gradcheck.hpp"
#include "lfb/image_io.hpp"
#include "lfb/param_store.hpp"
#include "lfb/pipeline.hpp"
#include "lfb/selftest.hpp"
#include "lfb/synth.hpp"
#include "lfb/weights_init.hpp"

namespace fs = std::filesystem;

namespace {

lfb::PipelineConfig build_config(const std::string& config_path,
                                 const std::vector<std::string>& overrides) {
    lfb::PipelineConfig cfg = config_path.empty() ? lfb::PipelineConfig{}
                                                  : lfb::PipelineConfig::from_file(config_path);
    for (const std::string& kv : overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) {
            throw lfb::data_error("--set expects key=value, got '" + kv + "'");
        }
        cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    cfg.validate();
    return cfg;
}

void echo_config(const lfb::PipelineConfig& cfg, const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    std::ofstream out(dir / "effective_config.txt");
    if (!out) throw lfb::data_error("cannot write " + (dir / "effective_config.txt").string());
    out << cfg.to_text();
}

std::pair<lfb::FeatureMap, lfb::FeatureMap> load_pair(const std::string& rgb_path,
                                                      const std::string& thermal_path) {
    const lfb::FeatureMap rgb = lfb::read_image(rgb_path);
    const lfb::FeatureMap thermal = lfb::read_image(thermal_path);
    if (rgb.channels != 3) {
        throw lfb::data_error(rgb_path + ": expected an 8-bit 3-channel RGB PNG, got " +
                              rgb.shape_str());
    }
    if (thermal.channels != 1) {
        throw lfb::data_error(thermal_path + ": expected a 1-channel thermal image, got " +
                              thermal.shape_str());
    }
    if (rgb.height != thermal.height || rgb.width != thermal.width) {
        throw lfb::data_error("rgb is " + rgb.shape_str() + " but thermal is " +
                              thermal.shape_str() +
                              "; register and resize the pair to a common size first "
                              "(default expectation 640x512)");
    }
    return {rgb, thermal};
}

int run_fuse(const std::string& rgb_path, const std::string& thermal_path,
             const std::string& weights_path, const std::string& config_path,
             const std::string& features_in, const std::string& out_dir,
             const std::vector<std::string>& overrides) {
    const lfb::PipelineConfig cfg = build_config(config_path, overrides);
    auto [rgb, thermal] = load_pair(rgb_path, thermal_path);
    const lfb::ParamStore params = weights_path.empty() ? lfb::make_default_params(cfg)
                                                        : lfb::load_params(weights_path);

    lfb::PyramidFeatures pyr_r, pyr_t;
    const bool bypass = !features_in.empty();
    if (bypass) {
        std::tie(pyr_r, pyr_t) = lfb::load_pyramids(features_in, cfg.scales);
    }
    const lfb::FusionResult result =
        lfb::run(rgb, thermal, params, cfg, bypass ? &pyr_r : nullptr,
                 bypass ? &pyr_t : nullptr);
    lfb::export_result(result, out_dir);
    echo_config(cfg, out_dir);

    std::cout << "fused " << result.fused.size() << " scales -> " << out_dir << "\n";
    for (const auto& [stage, ms] : result.timing_ms) {
        std::cout << "  " << stage << ": " << ms << " ms\n";
    }
    return 0;
}

int run_guidance(const std::string& rgb_path, const std::string& thermal_path,
                 const std::string& config_path, int scale, const std::string& out_dir,
                 const std::vector<std::string>& overrides) {
    const lfb::PipelineConfig cfg = build_config(config_path, overrides);
    if (scale < 0 || scale >= cfg.scales) {
        throw lfb::data_error("--scale must be in [0, " + std::to_string(cfg.scales - 1) + "]");
    }
    auto [rgb, thermal] = load_pair(rgb_path, thermal_path);
    const lfb::FeatureMap lum = lfb::luma(lfb::pad_to_multiple(rgb, 16));
    const lfb::FeatureMap th = lfb::pad_to_multiple(thermal, 16);
    const lfb::FeatureMap lum_s = lfb::area_downsample(lum, 1 << scale);
    const lfb::FeatureMap th_s = lfb::area_downsample(th, 1 << scale);
    const lfb::PatchGrid grid(lum_s.height, lum_s.width, cfg.patch_size, cfg.stride);
    const lfb::GuidanceMap g = lfb::lfgm_forward(lfb::compute_spectra(lum_s, grid),
                                                 lfb::compute_spectra(th_s, grid), grid,
                                                 cfg.cutoff_rho);
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw lfb::data_error("cannot create output directory " + out_dir);
    const nlohmann::json stats =
        lfb::write_guidance_pngs(g, out_dir, "guidance_s" + std::to_string(scale));
    std::ofstream js(fs::path(out_dir) / "guidance_stats.json");
    if (!js) throw lfb::data_error("cannot write guidance_stats.json");
    js << stats.dump(2) << "\n";
    echo_config(cfg, out_dir);
    std::cout << "guidance maps for scale " << scale << " -> " << out_dir << "\n";
    return 0;
}

int run_bench(std::uint64_t seed, const std::string& shift, double gain, double noise,
              int width, int height, const std::string& texture, int targets,
              const std::string& out_dir) {
    lfb::synth::SynthConfig cfg;
    cfg.seed = seed;
    cfg.width = width;
    cfg.height = height;
    cfg.intensity_gain = gain;
    cfg.noise_sigma = noise;
    cfg.texture = lfb::synth::texture_from_string(texture);
    cfg.n_targets = targets;
    const auto comma = shift.find(',');
    if (comma == std::string::npos) {
        throw lfb::data_error("--shift expects dx,dy (e.g. 2.0,0.5), got '" + shift + "'");
    }
    try {
        cfg.shift_x = std::stod(shift.substr(0, comma));
        cfg.shift_y = std::stod(shift.substr(comma + 1));
    } catch (const std::exception&) {
        throw lfb::data_error("--shift expects dx,dy numbers, got '" + shift + "'");
    }

    const lfb::synth::SynthPair pair = lfb::synth::generate_pair(cfg);
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw lfb::data_error("cannot create output directory " + out_dir);
    lfb::write_png_rgb8(fs::path(out_dir) / "rgb.png", pair.rgb);
    lfb::write_png_gray16(fs::path(out_dir) / "thermal.png", pair.thermal);

    const std::string image_id = "bench-" + std::to_string(seed);
    nlohmann::json gt = nlohmann::json::array();
    for (const lfb::eval::BBox& b : pair.boxes) {
        gt.push_back({{"image_id", image_id}, {"bbox", {b.x, b.y, b.w, b.h}}});
    }
    std::ofstream gs(fs::path(out_dir) / "gt.json");
    gs << gt.dump(2) << "\n";

    nlohmann::json report = {{"image_id", image_id},
                             {"seed", seed},
                             {"size", {width, height}},
                             {"true_shift", {cfg.shift_x, cfg.shift_y}},
                             {"gain", gain},
                             {"noise_sigma", noise},
                             {"texture", texture},
                             {"n_targets", targets},
                             {"n_boxes", pair.boxes.size()}};
    std::ofstream rs(fs::path(out_dir) / "report.json");
    rs << report.dump(2) << "\n";
    std::cout << "bench pair (seed " << seed << ") -> " << out_dir << "\n";
    return 0;
}

int run_eval(const std::string& dets_path, const std::string& gt_path) {
    const auto dets = lfb::eval::load_detections(dets_path);
    const auto gts = lfb::eval::load_ground_truth(gt_path);
    const lfb::eval::EvalReport report = lfb::eval::ap_range(dets, gts);
    std::cout << lfb::eval::report_to_json(report).dump(2) << "\n";
    return 0;
}

int run_gradcheck(const std::string& op, std::uint64_t seed, double eps, int trials) {
    std::vector<std::string> ops;
    if (op == "all") {
        ops = lfb::supported_gradcheck_ops();
    } else {
        ops.push_back(op);
    }
    nlohmann::json out = nlohmann::json::array();
    bool all_pass = true;
    for (const std::string& id : ops) {
        double max_err = 0.0, mean_sum = 0.0;
        bool pass = true;
        int n_params = 0;
        for (int t = 0; t < trials; ++t) {
            const lfb::GradReport r = lfb::check_gradient(id, seed + static_cast<unsigned>(t), eps);
            max_err = std::max(max_err, r.max_rel_error);
            mean_sum += r.mean_rel_error;
            pass = pass && r.pass;
            n_params = r.n_params;
        }
        all_pass = all_pass && pass;
        out.push_back({{"op", id},
                       {"trials", trials},
                       {"n_params", n_params},
                       {"max_rel_error", max_err},
                       {"mean_rel_error", mean_sum / trials},
                       {"pass", pass}});
    }
    std::cout << out.dump(2) << "\n";
    return all_pass ? 0 : 3;
}

int run_selftest(const std::string& fault) {
    const lfb::selftest::Report report = lfb::selftest::run(fault);
    nlohmann::json checks = nlohmann::json::array();
    for (const auto& c : report.checks) {
        checks.push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
    }
    std::cout << nlohmann::json{{"n_checks", report.checks.size()},
                                {"n_failed", report.n_failed},
                                {"checks", checks}}
                     .dump(2)
              << "\n";
    if (!report.all_pass()) {
        std::cerr << "selftest failed:";
        for (const auto& c : report.checks)
            if (!c.pass) std::cerr << " " << c.name;
        std::cerr << "\n";
        return 3;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Localized frequency-domain RGB-thermal fusion toolkit"};
    app.require_subcommand(1);
    int threads = 0;
    app.add_option("--threads", threads, "Worker thread cap (0 = auto)");

    std::string rgb_path, thermal_path, weights_path, config_path, out_dir, features_in;
    std::vector<std::string> overrides;

    CLI::App* fuse = app.add_subcommand("fuse", "Run the fusion pipeline on an RGB-T pair");
    fuse->add_option("--rgb", rgb_path, "RGB input (8-bit 3-channel PNG)")->required();
    fuse->add_option("--thermal", thermal_path, "Thermal input (8/16-bit gray PNG or PGM)")
        ->required();
    fuse->add_option("--weights", weights_path, "Weight manifest (default: built-in init)");
    fuse->add_option("--config", config_path, "Config file (key = value lines)");
    fuse->add_option("--features-in", features_in,
                     "Precomputed pyramid manifest bypassing the backbone");
    fuse->add_option("--out", out_dir, "Output directory")->required();
    fuse->add_option("--set", overrides, "Override a config key (key=value, repeatable)");

    int guidance_scale = 0;
    CLI::App* guidance =
        app.add_subcommand("guidance", "Emit the 6-channel guidance map for one scale");
    guidance->add_option("--rgb", rgb_path, "RGB input")->required();
    guidance->add_option("--thermal", thermal_path, "Thermal input")->required();
    guidance->add_option("--config", config_path, "Config file");
    guidance->add_option("--scale", guidance_scale, "Pyramid scale (0..3)");
    guidance->add_option("--out", out_dir, "Output directory")->required();
    guidance->add_option("--set", overrides, "Override a config key (repeatable)");

    std::uint64_t bench_seed = 1;
    std::string bench_shift = "0,0", bench_texture = "perlin";
    double bench_gain = 1.0, bench_noise = 0.0;
    int bench_w = 640, bench_h = 512, bench_targets = 3;
    CLI::App* bench = app.add_subcommand("bench", "Generate a synthetic misaligned RGB-T pair");
    bench->add_option("--seed", bench_seed, "Generator seed");
    bench->add_option("--shift", bench_shift, "Thermal shift dx,dy in pixels");
    bench->add_option("--gain", bench_gain, "Thermal intensity gain");
    bench->add_option("--noise", bench_noise, "Gaussian noise sigma");
    bench->add_option("--width", bench_w, "Image width");
    bench->add_option("--height", bench_h, "Image height");
    bench->add_option("--texture", bench_texture, "Background texture (perlin|checker|blobs)");
    bench->add_option("--targets", bench_targets, "Number of composited targets");
    bench->add_option("--out", out_dir, "Output directory")->required();

    std::string dets_path, gt_path;
    CLI::App* eval_cmd = app.add_subcommand("eval", "Score detections against ground truth");
    eval_cmd->add_option("--dets", dets_path, "Detections JSON")->required();
    eval_cmd->add_option("--gt", gt_path, "Ground-truth JSON")->required();

    std::string grad_op = "all";
    std::uint64_t grad_seed = 42;
    double grad_eps = 1e-3;
    int grad_trials = 20;
    CLI::App* gradcheck = app.add_subcommand("gradcheck", "Finite-difference gradient checks");
    gradcheck->add_option("--op", grad_op, "Op id or 'all'");
    gradcheck->add_option("--seed", grad_seed, "Base seed");
    gradcheck->add_option("--eps", grad_eps, "Finite-difference step");
    gradcheck->add_option("--trials", grad_trials, "Random points per op");

    std::string fault;
    CLI::App* selftest = app.add_subcommand("selftest", "Run the embedded invariant suite");
    selftest->add_option("--inject-fault", fault, "Corrupt the named check (test hook)")
        ->group("");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n\n" << app.help() << "\n";
        return 1;
    }

    try {
        lfb::parallel::set_max_threads(threads);
        if (fuse->parsed()) {
            return run_fuse(rgb_path, thermal_path, weights_path, config_path, features_in,
                            out_dir, overrides);
        }
        if (guidance->parsed()) {
            return run_guidance(rgb_path, thermal_path, config_path, guidance_scale, out_dir,
                                overrides);
        }
        if (bench->parsed()) {
            return run_bench(bench_seed, bench_shift, bench_gain, bench_noise, bench_w, bench_h,
                             bench_texture, bench_targets, out_dir);
        }
        if (eval_cmd->parsed()) return run_eval(dets_path, gt_path);
        if (gradcheck->parsed()) return run_gradcheck(grad_op, grad_seed, grad_eps, grad_trials);
        if (selftest->parsed()) return run_selftest(fault);
    } catch (const lfb::numeric_error& e) {
        std::cerr << "numeric invariant violation: " << e.what() << "\n";
        return 3;
    } catch (const lfb::data_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
