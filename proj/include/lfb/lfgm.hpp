/**
 * @file lfgm.hpp
 * @brief Local frequency guidance map: per-patch phase displacement,
 *        band-energy reliabilities, cross-spectral coherence, and dense
 *        overlap-add projection. Purely analytic; no learnable parts.
 */
#pragma once

#include <cmath>
#include <vector>

#include "lfb/spectral.hpp"
#include "lfb/tensor.hpp"

namespace lfb {

/// Dense H x W x 6 guidance grid, channel order
/// [d_x, d_y, S_phi, C_hf, C_lf, Coh].
using GuidanceMap = FeatureMap;

struct GuidanceVector {
    double d_x = 0.0;   // circular-mean sin component, in [-1, 1]
    double d_y = 0.0;   // circular-mean cos component, in [-1, 1]
    double s_phi = 0.0; // mean absolute wrapped phase difference, <= pi
    double c_hf = 0.5;  // high-frequency reliability (RGB numerator), in [0, 1]
    double c_lf = 0.5;  // low-frequency reliability (thermal numerator), in [0, 1]
    double coh = 0.0;   // cross-spectral coherence, in [0, 1]
};

/// Elementwise wrapped phase difference wrap(phi_r - phi_t).
inline RealGrid phase_difference(const RealGrid& phi_r, const RealGrid& phi_t) {
    if (phi_r.height != phi_t.height || phi_r.width != phi_t.width) {
        throw data_error("phase_difference: shape mismatch");
    }
    RealGrid out(phi_r.height, phi_r.width);
    for (size_t i = 0; i < out.v.size(); ++i) out.v[i] = wrap(phi_r.v[i] - phi_t.v[i]);
    return out;
}

struct BandEnergies {
    double hf = 0.0;
    double lf = 0.0;
};

/// Mean power per band. Bins are classified by the centered normalized radius
/// r(u,v) = ||(u', v')|| / (P/2), with u', v' the signed frequency offsets in
/// [-P/2, P/2); the low band is r <= 2*rho, the high band the rest.
inline BandEnergies band_energies(const ComplexGrid& spec, double cutoff_rho = 0.25) {
    if (!(cutoff_rho > 0.0 && cutoff_rho < 1.0)) {
        throw data_error("band_energies: cutoff_rho must be in (0,1)");
    }
    const int P = spec.height;
    const double r_limit = 2.0 * cutoff_rho * (P / 2.0);
    const double limit_sq = r_limit * r_limit;
    double sum_lf = 0.0, sum_hf = 0.0;
    std::int64_t n_lf = 0, n_hf = 0;
    for (int u = 0; u < spec.height; ++u) {
        const int du = u < spec.height / 2 ? u : u - spec.height;
        for (int v = 0; v < spec.width; ++v) {
            const int dv = v < spec.width / 2 ? v : v - spec.width;
            const size_t i = static_cast<size_t>(u) * spec.width + v;
            const double power = spec.re[i] * spec.re[i] + spec.im[i] * spec.im[i];
            if (static_cast<double>(du) * du + static_cast<double>(dv) * dv <= limit_sq) {
                sum_lf += power;
                ++n_lf;
            } else {
                sum_hf += power;
                ++n_hf;
            }
        }
    }
    BandEnergies out;
    out.lf = n_lf ? sum_lf / static_cast<double>(n_lf) : 0.0;
    out.hf = n_hf ? sum_hf / static_cast<double>(n_hf) : 0.0;
    return out;
}

inline BandEnergies band_energies(const LocalSpectrum& spec, double cutoff_rho = 0.25) {
    return band_energies(spec.spectrum, cutoff_rho);
}

struct Reliability {
    double c_hf = 0.5;
    double c_lf = 0.5;
};

/// C_hf = E_r_hf / (E_r_hf + E_t_hf) and C_lf = E_t_lf / (E_r_lf + E_t_lf);
/// note the thermal numerator in the low band. 0/0 is defined as 0.5.
inline Reliability reliability(double e_r_hf, double e_t_hf, double e_r_lf, double e_t_lf) {
    if (e_r_hf < 0.0 || e_t_hf < 0.0 || e_r_lf < 0.0 || e_t_lf < 0.0) {
        throw numeric_error("reliability: negative energy");
    }
    Reliability out;
    out.c_hf = (e_r_hf + e_t_hf) == 0.0 ? 0.5 : e_r_hf / (e_r_hf + e_t_hf);
    out.c_lf = (e_r_lf + e_t_lf) == 0.0 ? 0.5 : e_t_lf / (e_r_lf + e_t_lf);
    return out;
}

/// |sum F_r * conj(F_t)| / sqrt(sum |F_r|^2 * sum |F_t|^2), clamped to [0,1];
/// defined as 0 when either spectrum is all-zero. Computed via the squared
/// ratio so identical spectra give exactly 1.
inline double coherence(const ComplexGrid& f_r, const ComplexGrid& f_t) {
    if (f_r.height != f_t.height || f_r.width != f_t.width) {
        throw data_error("coherence: shape mismatch");
    }
    double num_re = 0.0, num_im = 0.0, pow_r = 0.0, pow_t = 0.0;
    for (size_t i = 0; i < f_r.size(); ++i) {
        const double ar = f_r.re[i], ai = f_r.im[i];
        const double br = f_t.re[i], bi = f_t.im[i];
        num_re += ar * br + ai * bi;
        num_im += ai * br - ar * bi;
        pow_r += ar * ar + ai * ai;
        pow_t += br * br + bi * bi;
    }
    const double denom_sq = pow_r * pow_t;
    if (denom_sq == 0.0) return 0.0;
    const double ratio_sq = (num_re * num_re + num_im * num_im) / denom_sq;
    return std::min(1.0, std::sqrt(ratio_sq));
}

struct Displacement {
    double d_x = 0.0;
    double d_y = 0.0;
    double s_phi = 0.0;
};

/// Circular-mean reduction of the phase-difference grid: d_x is the mean of
/// sin, d_y the mean of cos, S_phi the mean absolute value (radians).
inline Displacement displacement(const RealGrid& dphi) {
    double sum_sin = 0.0, sum_cos = 0.0, sum_abs = 0.0;
    for (double v : dphi.v) {
        sum_sin += std::sin(v);
        sum_cos += std::cos(v);
        sum_abs += std::abs(v);
    }
    const double n = static_cast<double>(dphi.v.size());
    return {sum_sin / n, sum_cos / n, sum_abs / n};
}

/// The six-component guidance vector [d_x, d_y, S_phi, C_hf, C_lf, Coh] for
/// one patch pair.
inline GuidanceVector guidance_vector(const LocalSpectrum& r, const LocalSpectrum& t,
                                      double cutoff_rho = 0.25) {
    const Displacement d = displacement(phase_difference(r.phase, t.phase));
    const BandEnergies e_r = band_energies(r.spectrum, cutoff_rho);
    const BandEnergies e_t = band_energies(t.spectrum, cutoff_rho);
    const Reliability rel = reliability(e_r.hf, e_t.hf, e_r.lf, e_t.lf);
    GuidanceVector g;
    g.d_x = d.d_x;
    g.d_y = d.d_y;
    g.s_phi = d.s_phi;
    g.c_hf = rel.c_hf;
    g.c_lf = rel.c_lf;
    g.coh = coherence(r.spectrum, t.spectrum);
    return g;
}

/// Dense projection: each pixel's 6-vector is the mean of all covering
/// patches' vectors.
inline GuidanceMap project_guidance(const std::vector<GuidanceVector>& vectors,
                                    const PatchGrid& grid) {
    if (static_cast<int>(vectors.size()) != grid.patch_count()) {
        throw data_error("project_guidance: got " + std::to_string(vectors.size()) +
                         " vectors, grid has " + std::to_string(grid.patch_count()));
    }
    std::vector<double> sums(static_cast<size_t>(grid.height) * grid.width * 6, 0.0);
    const int P = grid.patch_size;
    for (int q = 0; q < grid.patch_count(); ++q) {
        const GuidanceVector& g = vectors[static_cast<size_t>(q)];
        const double v6[6] = {g.d_x, g.d_y, g.s_phi, g.c_hf, g.c_lf, g.coh};
        auto [y0, x0] = grid.origin(q);
        const int y1 = std::min(grid.height, y0 + P), x1 = std::min(grid.width, x0 + P);
        for (int y = y0; y < y1; ++y) {
            for (int x = x0; x < x1; ++x) {
                double* dst = sums.data() + (static_cast<size_t>(y) * grid.width + x) * 6;
                for (int c = 0; c < 6; ++c) dst[c] += v6[c];
            }
        }
    }
    GuidanceMap out(grid.height, grid.width, 6);
    for (size_t px = 0; px < grid.counts.size(); ++px) {
        const double inv = 1.0 / grid.counts[px];
        for (int c = 0; c < 6; ++c)
            out.data[px * 6 + c] = static_cast<float>(sums[px * 6 + c] * inv);
    }
    return out;
}

/// Guidance vectors for every patch pair, then the dense projection.
inline GuidanceMap lfgm_forward(const std::vector<LocalSpectrum>& spectra_r,
                                const std::vector<LocalSpectrum>& spectra_t,
                                const PatchGrid& grid, double cutoff_rho = 0.25) {
    if (spectra_r.size() != spectra_t.size()) {
        throw data_error("lfgm_forward: modality spectra counts differ");
    }
    std::vector<GuidanceVector> vectors(spectra_r.size());
    parallel::parallel_for(static_cast<std::int64_t>(spectra_r.size()),
                           [&](std::int64_t q0, std::int64_t q1) {
                               for (std::int64_t q = q0; q < q1; ++q)
                                   vectors[static_cast<size_t>(q)] =
                                       guidance_vector(spectra_r[static_cast<size_t>(q)],
                                                       spectra_t[static_cast<size_t>(q)],
                                                       cutoff_rho);
                           });
    return project_guidance(vectors, grid);
}

}  // namespace lfb
