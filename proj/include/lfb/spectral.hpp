/**
 * @file spectral.hpp
 * @brief Patch partitioning, per-patch 2D FFT/iFFT, amplitude-phase
 *        decomposition, phase wrapping, and overlap-add reconstruction.
 */
#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "lfb/errors.hpp"
#include "lfb/parallel.hpp"
#include "lfb/tensor.hpp"

namespace lfb {

constexpr double kPi = 3.141592653589793238462643383279502884;
constexpr double kTwoPi = 2.0 * kPi;

/// Maps an angle into [-pi, pi] modulo 2*pi.
inline double wrap(double angle) { return std::remainder(angle, kTwoPi); }

inline RealGrid wrap(const RealGrid& g) {
    RealGrid out(g.height, g.width);
    for (size_t i = 0; i < g.v.size(); ++i) out.v[i] = wrap(g.v[i]);
    return out;
}

/// Overlapping patch tiling of an image. Patches start every `stride` pixels;
/// the trailing row/column of patches may overhang the image and is filled by
/// reflection, so every pixel is covered by at least one patch.
struct PatchGrid {
    int patch_size = 0;
    int stride = 0;
    int height = 0;
    int width = 0;
    int ny = 0;
    int nx = 0;
    std::vector<int> counts;  // per-pixel number of covering patches

    PatchGrid(int image_height, int image_width, int patch = 16, int step = 8)
        : patch_size(patch), stride(step), height(image_height), width(image_width) {
        if (patch != 8 && patch != 16 && patch != 32) {
            throw data_error("PatchGrid: patch size must be one of {8,16,32}, got " +
                             std::to_string(patch));
        }
        if (step < 1 || step > patch) {
            throw data_error("PatchGrid: stride must be in [1, patch], got " +
                             std::to_string(step));
        }
        if (image_height < 1 || image_width < 1) {
            throw data_error("PatchGrid: empty image");
        }
        ny = positions(image_height);
        nx = positions(image_width);
        counts.assign(static_cast<size_t>(height) * width, 0);
        for (int qy = 0; qy < ny; ++qy) {
            for (int qx = 0; qx < nx; ++qx) {
                const int y0 = qy * stride, x0 = qx * stride;
                const int y1 = std::min(height, y0 + patch_size);
                const int x1 = std::min(width, x0 + patch_size);
                for (int y = y0; y < y1; ++y)
                    for (int x = x0; x < x1; ++x)
                        counts[static_cast<size_t>(y) * width + x]++;
            }
        }
    }

    int patch_count() const { return ny * nx; }

    /// Top-left pixel coordinate (y0, x0) of patch q.
    std::pair<int, int> origin(int q) const {
        return {(q / nx) * stride, (q % nx) * stride};
    }

    int count_at(int y, int x) const { return counts[static_cast<size_t>(y) * width + x]; }

  private:
    int positions(int extent) const {
        if (extent <= patch_size) return 1;
        return (extent - patch_size + stride - 1) / stride + 1;
    }
};

/// Extracts the P x P patches of a single-channel map, reflect-padded at the
/// borders where a patch overhangs the image.
inline std::vector<RealGrid> partition(const FeatureMap& map, const PatchGrid& grid) {
    if (map.channels != 1) {
        throw data_error("partition: expected single-channel map, got " + map.shape_str());
    }
    if (map.height != grid.height || map.width != grid.width) {
        throw data_error("partition: map " + map.shape_str() + " does not match grid " +
                         std::to_string(grid.height) + "x" + std::to_string(grid.width));
    }
    const int P = grid.patch_size;
    std::vector<RealGrid> patches(static_cast<size_t>(grid.patch_count()), RealGrid(P, P));
    parallel::parallel_for(grid.patch_count(), [&](std::int64_t q0, std::int64_t q1) {
        for (std::int64_t q = q0; q < q1; ++q) {
            auto [y0, x0] = grid.origin(static_cast<int>(q));
            RealGrid& p = patches[static_cast<size_t>(q)];
            for (int y = 0; y < P; ++y) {
                const int yy = reflect_index(y0 + y, grid.height);
                for (int x = 0; x < P; ++x) {
                    const int xx = reflect_index(x0 + x, grid.width);
                    p.at(y, x) = map.at(yy, xx, 0);
                }
            }
        }
    });
    return patches;
}

namespace detail {

inline bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

/// Iterative radix-2 Cooley-Tukey on split re/im arrays with unit stride.
/// Forward uses e^{-2*pi*i*k/len}; inverse flips the sign and applies no
/// normalization (callers scale).
inline void fft1d_radix2(double* re, double* im, int n, bool inverse) {
    for (int i = 1, j = 0; i < n; ++i) {  // bit-reversal permutation
        int bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) {
            std::swap(re[i], re[j]);
            std::swap(im[i], im[j]);
        }
    }
    for (int len = 2; len <= n; len <<= 1) {
        const double ang = (inverse ? kTwoPi : -kTwoPi) / len;
        const double wr = std::cos(ang), wi = std::sin(ang);
        for (int i = 0; i < n; i += len) {
            double cr = 1.0, ci = 0.0;
            for (int k = 0; k < len / 2; ++k) {
                const int a = i + k, b = i + k + len / 2;
                const double tr = re[b] * cr - im[b] * ci;
                const double ti = re[b] * ci + im[b] * cr;
                re[b] = re[a] - tr;
                im[b] = im[a] - ti;
                re[a] += tr;
                im[a] += ti;
                const double ncr = cr * wr - ci * wi;
                ci = cr * wi + ci * wr;
                cr = ncr;
            }
        }
    }
}

/// In-place 2D transform: rows, then columns through a gather/scatter buffer.
inline void fft2d_inplace(ComplexGrid& g, bool inverse) {
    const int h = g.height, w = g.width;
    for (int y = 0; y < h; ++y)
        fft1d_radix2(g.re.data() + static_cast<size_t>(y) * w,
                     g.im.data() + static_cast<size_t>(y) * w, w, inverse);
    std::vector<double> cr(h), ci(h);
    for (int x = 0; x < w; ++x) {
        for (int y = 0; y < h; ++y) {
            cr[y] = g.re[static_cast<size_t>(y) * w + x];
            ci[y] = g.im[static_cast<size_t>(y) * w + x];
        }
        fft1d_radix2(cr.data(), ci.data(), h, inverse);
        for (int y = 0; y < h; ++y) {
            g.re[static_cast<size_t>(y) * w + x] = cr[y];
            g.im[static_cast<size_t>(y) * w + x] = ci[y];
        }
    }
}

}  // namespace detail

/// Unnormalized forward 2D DFT of a square power-of-two patch; the DC bin
/// equals the patch sum.
inline ComplexGrid fft2d(const RealGrid& patch) {
    if (patch.height != patch.width || !detail::is_power_of_two(patch.height)) {
        throw data_error("fft2d: patch must be square power-of-two, got " +
                         std::to_string(patch.height) + "x" + std::to_string(patch.width));
    }
    ComplexGrid g(patch.height, patch.width);
    g.re = patch.v;
    detail::fft2d_inplace(g, false);
    return g;
}

/// Inverse 2D DFT with 1/P^2 normalization. The imaginary residue must stay
/// below `imag_rel_tol` of the peak real magnitude; above that the spectrum
/// is treated as corrupted (non-conjugate-symmetric) and an error is raised.
inline RealGrid ifft2d(const ComplexGrid& spec, double imag_rel_tol = 1e-4) {
    if (spec.height != spec.width || !detail::is_power_of_two(spec.height)) {
        throw data_error("ifft2d: spectrum must be square power-of-two, got " +
                         std::to_string(spec.height) + "x" + std::to_string(spec.width));
    }
    ComplexGrid g = spec;
    detail::fft2d_inplace(g, true);
    const double norm = 1.0 / (static_cast<double>(spec.height) * spec.width);
    double max_re = 0.0, max_im = 0.0;
    RealGrid out(spec.height, spec.width);
    for (size_t i = 0; i < g.size(); ++i) {
        const double r = g.re[i] * norm;
        const double m = g.im[i] * norm;
        out.v[i] = r;
        max_re = std::max(max_re, std::abs(r));
        max_im = std::max(max_im, std::abs(m));
    }
    if (max_im > imag_rel_tol * std::max(max_re, 1e-30)) {
        throw numeric_error("ifft2d: imaginary residue " + std::to_string(max_im) +
                            " exceeds " + std::to_string(imag_rel_tol) + " of peak real " +
                            std::to_string(max_re) + " (corrupted spectrum)");
    }
    return out;
}

/// Amplitude is the modulus, phase is atan2(imag, real) in [-pi, pi]; phase
/// at zero-modulus bins is defined as 0.
inline std::pair<RealGrid, RealGrid> decompose(const ComplexGrid& spec) {
    RealGrid amp(spec.height, spec.width), phase(spec.height, spec.width);
    for (size_t i = 0; i < spec.size(); ++i) {
        const double a = std::hypot(spec.re[i], spec.im[i]);
        amp.v[i] = a;
        phase.v[i] = a == 0.0 ? 0.0 : std::atan2(spec.im[i], spec.re[i]);
    }
    return {std::move(amp), std::move(phase)};
}

/// Rebuilds a spectrum from amplitude and phase: A*cos(phi) + j*A*sin(phi).
inline ComplexGrid compose(const RealGrid& amplitude, const RealGrid& phase) {
    if (amplitude.height != phase.height || amplitude.width != phase.width) {
        throw data_error("compose: amplitude " + std::to_string(amplitude.height) + "x" +
                         std::to_string(amplitude.width) + " vs phase " +
                         std::to_string(phase.height) + "x" + std::to_string(phase.width));
    }
    ComplexGrid out(amplitude.height, amplitude.width);
    for (size_t i = 0; i < out.size(); ++i) {
        const double a = amplitude.v[i];
        if (a < 0.0) throw numeric_error("compose: negative amplitude " + std::to_string(a));
        out.re[i] = a * std::cos(phase.v[i]);
        out.im[i] = a * std::sin(phase.v[i]);
    }
    return out;
}

/// Per-patch complex spectrum with its amplitude-phase decomposition.
struct LocalSpectrum {
    int q = 0;
    ComplexGrid spectrum;
    RealGrid amplitude;
    RealGrid phase;
};

inline LocalSpectrum make_local_spectrum(int q, const RealGrid& patch) {
    LocalSpectrum s;
    s.q = q;
    s.spectrum = fft2d(patch);
    auto ap = decompose(s.spectrum);
    s.amplitude = std::move(ap.first);
    s.phase = std::move(ap.second);
    return s;
}

/// FFT of every patch of a single-channel map.
inline std::vector<LocalSpectrum> compute_spectra(const FeatureMap& map, const PatchGrid& grid) {
    std::vector<RealGrid> patches = partition(map, grid);
    std::vector<LocalSpectrum> out(patches.size());
    parallel::parallel_for(static_cast<std::int64_t>(patches.size()),
                           [&](std::int64_t q0, std::int64_t q1) {
                               for (std::int64_t q = q0; q < q1; ++q)
                                   out[static_cast<size_t>(q)] = make_local_spectrum(
                                       static_cast<int>(q), patches[static_cast<size_t>(q)]);
                           });
    return out;
}

/// Every output pixel is the arithmetic mean of the values contributed by all
/// covering patches; overhanging patch cells fall outside the image and are
/// dropped.
inline FeatureMap overlap_add(const std::vector<RealGrid>& patches, const PatchGrid& grid) {
    if (static_cast<int>(patches.size()) != grid.patch_count()) {
        throw data_error("overlap_add: got " + std::to_string(patches.size()) +
                         " patches, grid has " + std::to_string(grid.patch_count()));
    }
    const int P = grid.patch_size;
    std::vector<double> sums(static_cast<size_t>(grid.height) * grid.width, 0.0);
    for (int q = 0; q < grid.patch_count(); ++q) {
        if (patches[q].height != P || patches[q].width != P) {
            throw data_error("overlap_add: patch " + std::to_string(q) + " is " +
                             std::to_string(patches[q].height) + "x" +
                             std::to_string(patches[q].width) + ", expected " +
                             std::to_string(P) + "x" + std::to_string(P));
        }
        auto [y0, x0] = grid.origin(q);
        const int y1 = std::min(grid.height, y0 + P), x1 = std::min(grid.width, x0 + P);
        for (int y = y0; y < y1; ++y)
            for (int x = x0; x < x1; ++x)
                sums[static_cast<size_t>(y) * grid.width + x] += patches[q].at(y - y0, x - x0);
    }
    FeatureMap out(grid.height, grid.width, 1);
    for (size_t i = 0; i < sums.size(); ++i)
        out.data[i] = static_cast<float>(sums[i] / grid.counts[i]);
    return out;
}

}  // namespace lfb
