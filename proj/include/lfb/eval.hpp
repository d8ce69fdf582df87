/**
 * @file eval.hpp
 * @brief Detection metrics: IoU, greedy score-ordered matching, all-point
 *        interpolated average precision, and the ten-threshold AP sweep.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include <json.hpp>

#include "lfb/errors.hpp"

namespace lfb::eval {

struct BBox {
    double x = 0.0;  // top-left
    double y = 0.0;
    double w = 0.0;
    double h = 0.0;
};

struct Detection {
    std::string image_id;
    BBox box;
    double score = 0.0;
};

struct GroundTruth {
    std::string image_id;
    BBox box;
};

inline void validate_box(const BBox& b, const std::string& what) {
    if (!(b.w > 0.0 && b.h > 0.0)) {
        throw data_error(what + ": box width/height must be > 0, got " + std::to_string(b.w) +
                         "x" + std::to_string(b.h));
    }
}

/// Intersection over union of two boxes; 0 when disjoint.
inline double iou(const BBox& a, const BBox& b) {
    validate_box(a, "iou");
    validate_box(b, "iou");
    const double ix = std::max(0.0, std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x));
    const double iy = std::max(0.0, std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y));
    const double inter = ix * iy;
    const double uni = a.w * a.h + b.w * b.h - inter;
    return uni > 0.0 ? inter / uni : 0.0;
}

/// Match flags for one image's detections, reported in descending score order
/// (ties broken by input order) together with the count of unmatched ground
/// truths.
struct MatchResult {
    std::vector<bool> tp;  // one flag per detection, score order
    int fn = 0;
};

/// Greedy matching: detections sorted by descending score each claim the
/// still-unmatched ground truth of highest IoU >= tau. A ground truth is
/// never assigned twice.
inline MatchResult match(const std::vector<Detection>& dets, const std::vector<BBox>& gts,
                         double tau) {
    if (!(tau > 0.0 && tau < 1.0)) throw data_error("match: tau must be in (0,1)");
    std::vector<size_t> order(dets.size());
    std::iota(order.begin(), order.end(), size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](size_t a, size_t b) { return dets[a].score > dets[b].score; });
    std::vector<bool> taken(gts.size(), false);
    MatchResult out;
    out.tp.resize(dets.size(), false);
    for (size_t rank = 0; rank < order.size(); ++rank) {
        const Detection& d = dets[order[rank]];
        double best = -1.0;
        int best_g = -1;
        for (size_t g = 0; g < gts.size(); ++g) {
            if (taken[g]) continue;
            const double v = iou(d.box, gts[g]);
            if (v >= tau && v > best) {
                best = v;
                best_g = static_cast<int>(g);
            }
        }
        if (best_g >= 0) {
            taken[static_cast<size_t>(best_g)] = true;
            out.tp[rank] = true;
        }
    }
    out.fn = static_cast<int>(std::count(taken.begin(), taken.end(), false));
    return out;
}

/// All-point interpolated area under the precision-recall curve. Flags must
/// be in descending score order. The degenerate case of zero ground truths
/// is defined as 0.
inline double average_precision(const std::vector<bool>& tp_flags, int total_gts) {
    if (total_gts < 0) throw data_error("average_precision: negative gt count");
    if (total_gts == 0) return 0.0;
    const size_t n = tp_flags.size();
    std::vector<double> precision(n), recall(n);
    int tp = 0, fp = 0;
    for (size_t i = 0; i < n; ++i) {
        (tp_flags[i] ? tp : fp)++;
        precision[i] = static_cast<double>(tp) / static_cast<double>(tp + fp);
        recall[i] = static_cast<double>(tp) / static_cast<double>(total_gts);
    }
    for (size_t i = n; i-- > 1;) precision[i - 1] = std::max(precision[i - 1], precision[i]);
    double ap = 0.0, prev_recall = 0.0;
    for (size_t i = 0; i < n; ++i) {
        ap += (recall[i] - prev_recall) * precision[i];
        prev_recall = recall[i];
    }
    return ap;
}

struct ThresholdReport {
    double tau = 0.0;
    double ap = 0.0;
    int tp = 0;
    int fp = 0;
    int fn = 0;
    std::vector<std::pair<double, double>> pr_points;  // (recall, precision)
};

struct EvalReport {
    std::vector<ThresholdReport> per_tau;  // tau = 0.50 .. 0.95 step 0.05
    double ap_50 = 0.0;
    double ap_75 = 0.0;
    double ap_range_mean = 0.0;  // mean of the ten AP(tau) values
};

/// Merged score-ordered TP flags across images at one threshold.
inline std::pair<std::vector<bool>, int> match_all(const std::vector<Detection>& dets,
                                                   const std::vector<GroundTruth>& gts,
                                                   double tau) {
    std::map<std::string, std::vector<BBox>> gt_by_image;
    for (const GroundTruth& g : gts) {
        validate_box(g.box, "ground truth");
        gt_by_image[g.image_id].push_back(g.box);
    }
    std::map<std::string, std::vector<Detection>> det_by_image;
    std::map<std::string, std::vector<size_t>> det_index_by_image;
    for (size_t i = 0; i < dets.size(); ++i) {
        det_by_image[dets[i].image_id].push_back(dets[i]);
        det_index_by_image[dets[i].image_id].push_back(i);
    }

    struct Flagged {
        double score;
        size_t input_index;
        bool tp;
    };
    std::vector<Flagged> flagged;
    flagged.reserve(dets.size());
    int fn = 0;
    for (auto& [image, image_dets] : det_by_image) {
        auto it = gt_by_image.find(image);
        static const std::vector<BBox> kNone;
        const std::vector<BBox>& image_gts = it == gt_by_image.end() ? kNone : it->second;
        const MatchResult mr = match(image_dets, image_gts, tau);
        std::vector<size_t> order(image_dets.size());
        std::iota(order.begin(), order.end(), size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
            return image_dets[a].score > image_dets[b].score;
        });
        const std::vector<size_t>& input_ids = det_index_by_image[image];
        for (size_t rank = 0; rank < order.size(); ++rank)
            flagged.push_back({image_dets[order[rank]].score, input_ids[order[rank]], mr.tp[rank]});
        fn += mr.fn;
    }
    for (const auto& [image, image_gts] : gt_by_image) {
        if (!det_by_image.count(image)) fn += static_cast<int>(image_gts.size());
    }
    std::sort(flagged.begin(), flagged.end(), [](const Flagged& a, const Flagged& b) {
        return a.score != b.score ? a.score > b.score : a.input_index < b.input_index;
    });
    std::vector<bool> flags(flagged.size());
    for (size_t i = 0; i < flags.size(); ++i) flags[i] = flagged[i].tp;
    return {std::move(flags), fn};
}

/// Ten-threshold sweep tau = 0.50, 0.55, ..., 0.95 with per-threshold PR
/// curves; ap_range_mean is exactly the mean of the ten AP values.
inline EvalReport ap_range(const std::vector<Detection>& dets,
                           const std::vector<GroundTruth>& gts) {
    EvalReport report;
    const int total_gts = static_cast<int>(gts.size());
    double ap_sum = 0.0;
    for (int i = 0; i < 10; ++i) {
        ThresholdReport tr;
        tr.tau = static_cast<double>(50 + 5 * i) / 100.0;
        auto [flags, fn] = match_all(dets, gts, tr.tau);
        tr.ap = average_precision(flags, total_gts);
        int tp = 0, fp = 0;
        for (size_t j = 0; j < flags.size(); ++j) {
            (flags[j] ? tp : fp)++;
            tr.pr_points.emplace_back(
                total_gts > 0 ? static_cast<double>(tp) / total_gts : 0.0,
                static_cast<double>(tp) / static_cast<double>(tp + fp));
        }
        tr.tp = tp;
        tr.fp = fp;
        tr.fn = fn;
        ap_sum += tr.ap;
        report.per_tau.push_back(std::move(tr));
    }
    report.ap_50 = report.per_tau[0].ap;
    report.ap_75 = report.per_tau[5].ap;
    report.ap_range_mean = ap_sum / 10.0;
    return report;
}

// ---- JSON interchange -------------------------------------------------

inline BBox parse_bbox(const nlohmann::json& j, const std::string& what) {
    if (!j.is_array() || j.size() != 4) {
        throw data_error(what + ": bbox must be [x,y,w,h]");
    }
    BBox b{j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
    validate_box(b, what);
    return b;
}

/// Detections file: JSON array of {image_id, bbox:[x,y,w,h], score}.
inline std::vector<Detection> load_detections(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot read detections file " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw data_error(path.string() + ": " + e.what());
    }
    if (!j.is_array()) throw data_error(path.string() + ": expected a JSON array");
    std::vector<Detection> out;
    for (const auto& item : j) {
        Detection d;
        try {
            d.image_id = item.at("image_id").get<std::string>();
            d.box = parse_bbox(item.at("bbox"), path.string());
            d.score = item.at("score").get<double>();
        } catch (const nlohmann::json::exception& e) {
            throw data_error(path.string() + ": " + e.what());
        }
        if (!(d.score >= 0.0 && d.score <= 1.0)) {
            throw data_error(path.string() + ": score " + std::to_string(d.score) +
                             " outside [0,1]");
        }
        out.push_back(std::move(d));
    }
    return out;
}

/// Ground truth file: JSON array of {image_id, bbox:[x,y,w,h]}.
inline std::vector<GroundTruth> load_ground_truth(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot read ground-truth file " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw data_error(path.string() + ": " + e.what());
    }
    if (!j.is_array()) throw data_error(path.string() + ": expected a JSON array");
    std::vector<GroundTruth> out;
    for (const auto& item : j) {
        GroundTruth g;
        try {
            g.image_id = item.at("image_id").get<std::string>();
            g.box = parse_bbox(item.at("bbox"), path.string());
        } catch (const nlohmann::json::exception& e) {
            throw data_error(path.string() + ": " + e.what());
        }
        out.push_back(std::move(g));
    }
    return out;
}

inline nlohmann::json report_to_json(const EvalReport& r) {
    nlohmann::json per_tau = nlohmann::json::array();
    for (const ThresholdReport& tr : r.per_tau) {
        nlohmann::json pr = nlohmann::json::array();
        for (const auto& [recall, precision] : tr.pr_points)
            pr.push_back({{"recall", recall}, {"precision", precision}});
        per_tau.push_back({{"tau", tr.tau},
                           {"ap", tr.ap},
                           {"tp", tr.tp},
                           {"fp", tr.fp},
                           {"fn", tr.fn},
                           {"pr_curve", pr}});
    }
    return {{"ap_50", r.ap_50},
            {"ap_75", r.ap_75},
            {"ap_0.5_0.95", r.ap_range_mean},
            {"per_tau", per_tau}};
}

}  // namespace lfb::eval
