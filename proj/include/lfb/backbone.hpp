/**
 * @file backbone.hpp
 * @brief Deterministic multi-scale atrous feature extractor standing in for a
 *        pretrained backbone, plus luma conversion and padding helpers.
 */
#pragma once

#include <string>
#include <vector>

#include "lfb/param_store.hpp"
#include "lfb/tensor.hpp"

namespace lfb {

/// Four FeatureMaps per modality; level s has spatial size (H/2^s, W/2^s).
struct PyramidFeatures {
    std::vector<FeatureMap> levels;
};

/// 0.299 R + 0.587 G + 0.114 B.
inline FeatureMap luma(const FeatureMap& image) {
    if (image.channels != 3) {
        throw data_error("luma: expected 3 channels, got " + image.shape_str());
    }
    FeatureMap out(image.height, image.width, 1, image.scale_index);
    for (size_t i = 0; i < out.data.size(); ++i) {
        const float* px = image.data.data() + i * 3;
        out.data[i] =
            static_cast<float>(0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2]);
    }
    return out;
}

/// Reflect-pads bottom/right so both dimensions are multiples of `multiple`.
inline FeatureMap pad_to_multiple(const FeatureMap& m, int multiple) {
    const int h = ((m.height + multiple - 1) / multiple) * multiple;
    const int w = ((m.width + multiple - 1) / multiple) * multiple;
    if (h == m.height && w == m.width) return m;
    FeatureMap out(h, w, m.channels, m.scale_index);
    for (int y = 0; y < h; ++y) {
        const int yy = reflect_index(y, m.height);
        for (int x = 0; x < w; ++x) {
            const int xx = reflect_index(x, m.width);
            for (int c = 0; c < m.channels; ++c) out.at(y, x, c) = m.at(yy, xx, c);
        }
    }
    return out;
}

/// Per level: a 3x3 stem conv (stride 1 at level 0, stride 2 from the
/// previous level after that), then three parallel 3x3 atrous convs with
/// dilations 1, 2, 4 summed, then max(0, x). Channel width comes from the
/// stem kernel shapes. Parameter names are {prefix}.stem.{s} (+ .bias) and
/// {prefix}.atrous{1,2,4}.{s}.
inline PyramidFeatures extract_features(const FeatureMap& image, const ParamStore& params,
                                        const std::string& prefix = "backbone",
                                        int n_scales = 4) {
    if (image.height < 64 || image.width < 64) {
        throw data_error("extract_features: input must be at least 64x64, got " +
                         image.shape_str());
    }
    if (image.height % 16 != 0 || image.width % 16 != 0) {
        throw data_error("extract_features: dimensions must be multiples of 16 (pad first), got " +
                         image.shape_str());
    }
    PyramidFeatures pyr;
    pyr.levels.reserve(static_cast<size_t>(n_scales));
    const FeatureMap* prev = &image;
    for (int s = 0; s < n_scales; ++s) {
        const std::string sfx = "." + std::to_string(s);
        const Tensor& stem = params.get(prefix + ".stem" + sfx);
        FeatureMap x = conv2d(*prev, stem, params.find(prefix + ".stem" + sfx + ".bias"), 1,
                              s == 0 ? 1 : 2, Padding::reflect);
        FeatureMap sum = conv2d(x, params.get(prefix + ".atrous1" + sfx), nullptr, 1);
        const FeatureMap d2 = conv2d(x, params.get(prefix + ".atrous2" + sfx), nullptr, 2);
        const FeatureMap d4 = conv2d(x, params.get(prefix + ".atrous4" + sfx), nullptr, 4);
        for (size_t i = 0; i < sum.data.size(); ++i) {
            const float v = sum.data[i] + d2.data[i] + d4.data[i];
            sum.data[i] = v > 0.0f ? v : 0.0f;
        }
        sum.scale_index = s;
        pyr.levels.push_back(std::move(sum));
        prev = &pyr.levels.back();
    }
    return pyr;
}

}  // namespace lfb
