/**
 * @file config.hpp
 * @brief Flat key=value pipeline configuration. Unknown keys are rejected.
 */
#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "lfb/errors.hpp"

namespace lfb {

struct PipelineConfig {
    int patch_size = 16;
    int stride = 8;
    double cutoff_rho = 0.25;
    int k_s = 9;
    double clamp_px = 8.0;
    double eps = 1e-6;
    int scales = 4;
    int embed_dim = 32;

    void set(const std::string& key, const std::string& value) {
        try {
            if (key == "patch_size") patch_size = std::stoi(value);
            else if (key == "stride") stride = std::stoi(value);
            else if (key == "cutoff_rho") cutoff_rho = std::stod(value);
            else if (key == "k_s") k_s = std::stoi(value);
            else if (key == "clamp_px") clamp_px = std::stod(value);
            else if (key == "eps") eps = std::stod(value);
            else if (key == "scales") scales = std::stoi(value);
            else if (key == "embed_dim") embed_dim = std::stoi(value);
            else throw data_error("config: unknown key '" + key + "'");
        } catch (const std::invalid_argument&) {
            throw data_error("config: bad value '" + value + "' for key '" + key + "'");
        } catch (const std::out_of_range&) {
            throw data_error("config: bad value '" + value + "' for key '" + key + "'");
        }
    }

    void validate() const {
        if (patch_size != 8 && patch_size != 16 && patch_size != 32)
            throw data_error("config: patch_size must be one of {8,16,32}");
        if (stride < 1 || stride > patch_size)
            throw data_error("config: stride must be in [1, patch_size]");
        if (!(cutoff_rho > 0.0 && cutoff_rho < 1.0))
            throw data_error("config: cutoff_rho must be in (0,1)");
        if (k_s != 9)
            throw data_error("config: k_s must be 9 (3x3 sampling lattice)");
        if (clamp_px <= 0.0) throw data_error("config: clamp_px must be > 0");
        if (eps <= 0.0) throw data_error("config: eps must be > 0");
        if (scales != 4) throw data_error("config: scales must be 4");
        if (embed_dim < 1) throw data_error("config: embed_dim must be >= 1");
    }

    static PipelineConfig from_string(const std::string& text) {
        PipelineConfig cfg;
        std::istringstream in(text);
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const auto first = line.find_first_not_of(" \t\r");
            if (first == std::string::npos) continue;
            if (line[first] == '#') continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos) {
                throw data_error("config line " + std::to_string(lineno) +
                                 ": expected key = value, got '" + line + "'");
            }
            auto trim = [](std::string s) {
                const auto a = s.find_first_not_of(" \t\r");
                const auto b = s.find_last_not_of(" \t\r");
                return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
            };
            cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
        }
        cfg.validate();
        return cfg;
    }

    static PipelineConfig from_file(const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in) throw data_error("cannot read config file " + path.string());
        std::ostringstream buf;
        buf << in.rdbuf();
        return from_string(buf.str());
    }

    /// Canonical echo used for reproducibility records in output directories.
    std::string to_text() const {
        std::ostringstream os;
        os << "patch_size=" << patch_size << "\n"
           << "stride=" << stride << "\n"
           << "cutoff_rho=" << cutoff_rho << "\n"
           << "k_s=" << k_s << "\n"
           << "clamp_px=" << clamp_px << "\n"
           << "eps=" << eps << "\n"
           << "scales=" << scales << "\n"
           << "embed_dim=" << embed_dim << "\n";
        return os.str();
    }
};

}  // namespace lfb
