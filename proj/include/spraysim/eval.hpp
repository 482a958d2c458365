#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "spraysim/detector.hpp"
#include "spraysim/raster.hpp"

// Detection-evaluation math: IoU, greedy matching, precision/recall/F1,
// average precision (all-point interpolation), and mAP.

namespace spraysim {

inline double iou(const Box& a, const Box& b) {
    const double ix = std::max(0.0, std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min));
    const double iy = std::max(0.0, std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min));
    const double inter = ix * iy;
    const double uni = a.area() + b.area() - inter;
    return uni > 0 ? inter / uni : 0.0;
}

inline double iou(const BinaryMask& a, const BinaryMask& b) {
    if (a.width != b.width || a.height != b.height)
        throw std::invalid_argument("iou: mask grids must have identical dimensions");
    int64_t inter = 0, uni = 0;
    for (size_t i = 0; i < a.v.size(); ++i) {
        inter += a.v[i] & b.v[i];
        uni += a.v[i] | b.v[i];
    }
    return uni > 0 ? double(inter) / double(uni) : 0.0;
}

struct ConfusionCounts {
    int64_t tp = 0;
    int64_t fp = 0;
    int64_t fn = 0;
};

inline double precision(const ConfusionCounts& c) {
    return c.tp + c.fp > 0 ? double(c.tp) / double(c.tp + c.fp) : 0.0;
}

inline double recall(const ConfusionCounts& c) {
    return c.tp + c.fn > 0 ? double(c.tp) / double(c.tp + c.fn) : 0.0;
}

inline double f1(double p, double r) { return p + r > 0 ? 2.0 * p * r / (p + r) : 0.0; }

// One labeled instance for evaluation. Instances are matched within the same
// (image, class) group only.
struct TruthInstance {
    int image_id = 0;
    int class_id = 0;
    Box box;
};

struct PredInstance {
    int image_id = 0;
    int class_id = 0;
    double confidence = 0.0;
    Box box;
};

struct MatchOutcome {
    ConfusionCounts counts;
    // Per prediction (in confidence-descending order): index into truths, or -1.
    std::vector<int> matched_truth;
    // Confidence-descending permutation of the input predictions.
    std::vector<int> pred_order;
};

// Greedy matching: predictions in descending confidence (ties broken by input
// order) claim the unmatched same-image same-class truth with the highest
// IoU >= threshold. Unmatched predictions are FP, unmatched truths FN.
inline MatchOutcome match_and_count(const std::vector<PredInstance>& preds,
                                    const std::vector<TruthInstance>& truths,
                                    double iou_threshold = 0.5) {
    MatchOutcome out;
    out.pred_order.resize(preds.size());
    std::iota(out.pred_order.begin(), out.pred_order.end(), 0);
    std::stable_sort(out.pred_order.begin(), out.pred_order.end(),
                     [&](int a, int b) { return preds[size_t(a)].confidence > preds[size_t(b)].confidence; });

    std::vector<uint8_t> truth_used(truths.size(), 0);
    out.matched_truth.assign(preds.size(), -1);
    for (size_t k = 0; k < out.pred_order.size(); ++k) {
        const PredInstance& p = preds[size_t(out.pred_order[k])];
        int best = -1;
        double best_iou = iou_threshold;
        for (size_t t = 0; t < truths.size(); ++t) {
            if (truth_used[t]) continue;
            const TruthInstance& g = truths[t];
            if (g.image_id != p.image_id || g.class_id != p.class_id) continue;
            const double v = iou(p.box, g.box);
            if (v > best_iou || (v == best_iou && v >= iou_threshold && best == -1)) {
                best = int(t);
                best_iou = v;
            }
        }
        if (best >= 0) {
            truth_used[size_t(best)] = 1;
            out.matched_truth[k] = best;
            ++out.counts.tp;
        } else {
            ++out.counts.fp;
        }
    }
    out.counts.fn = int64_t(truths.size()) - out.counts.tp;
    return out;
}

struct PrPoint {
    double recall = 0.0;
    double precision = 0.0;
    double confidence = 0.0;
};

// Cumulative PR points in confidence-descending order. Predictions tied in
// confidence contribute a single point (they enter or leave a threshold
// sweep together).
inline std::vector<PrPoint> pr_curve(const std::vector<PredInstance>& preds,
                                     const std::vector<TruthInstance>& truths,
                                     double iou_threshold = 0.5) {
    const MatchOutcome m = match_and_count(preds, truths, iou_threshold);
    const int64_t n_truths = int64_t(truths.size());
    std::vector<PrPoint> pts;
    int64_t tp = 0, fp = 0;
    for (size_t k = 0; k < m.pred_order.size(); ++k) {
        if (m.matched_truth[k] >= 0)
            ++tp;
        else
            ++fp;
        const double conf = preds[size_t(m.pred_order[k])].confidence;
        const bool last_of_tie = k + 1 == m.pred_order.size() ||
                                 preds[size_t(m.pred_order[k + 1])].confidence != conf;
        if (!last_of_tie) continue;
        PrPoint pt;
        pt.recall = n_truths > 0 ? double(tp) / double(n_truths) : 0.0;
        pt.precision = double(tp) / double(tp + fp);
        pt.confidence = conf;
        pts.push_back(pt);
    }
    return pts;
}

// Area under the monotonized precision envelope (all-point interpolation).
inline double average_precision(const std::vector<PrPoint>& pts) {
    if (pts.empty()) return 0.0;
    // envelope[i] = max precision at recall >= recall[i]
    std::vector<double> env(pts.size());
    double running = 0.0;
    for (size_t i = pts.size(); i-- > 0;) {
        running = std::max(running, pts[i].precision);
        env[i] = running;
    }
    double ap = 0.0;
    double prev_recall = 0.0;
    for (size_t i = 0; i < pts.size(); ++i) {
        ap += (pts[i].recall - prev_recall) * env[i];
        prev_recall = pts[i].recall;
    }
    return ap;
}

inline double mean_ap(const std::vector<double>& per_class_aps) {
    if (per_class_aps.empty()) return 0.0;
    return std::accumulate(per_class_aps.begin(), per_class_aps.end(), 0.0) / double(per_class_aps.size());
}

struct ClassEval {
    int class_id = 0;
    ConfusionCounts counts;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double ap = 0.0;
    std::vector<PrPoint> pr;
};

struct EvalReport {
    std::vector<ClassEval> per_class;
    ConfusionCounts totals;
    double map = 0.0;
};

// Full evaluation over every class present in the ground truth. Predictions
// for classes with no ground truth count as false positives of their own
// class but do not contribute an AP term.
inline EvalReport evaluate(const std::vector<PredInstance>& preds, const std::vector<TruthInstance>& truths,
                           double iou_threshold = 0.5) {
    std::map<int, std::vector<PredInstance>> preds_by_class;
    std::map<int, std::vector<TruthInstance>> truths_by_class;
    for (const auto& p : preds) preds_by_class[p.class_id].push_back(p);
    for (const auto& t : truths) truths_by_class[t.class_id].push_back(t);

    EvalReport rep;
    std::vector<double> aps;
    std::map<int, bool> classes;
    for (const auto& [c, _] : preds_by_class) classes[c] = true;
    for (const auto& [c, _] : truths_by_class) classes[c] = true;
    for (const auto& [c, _] : classes) {
        ClassEval ce;
        ce.class_id = c;
        const auto& cp = preds_by_class[c];
        const auto& ct = truths_by_class[c];
        ce.counts = match_and_count(cp, ct, iou_threshold).counts;
        ce.precision = spraysim::precision(ce.counts);
        ce.recall = spraysim::recall(ce.counts);
        ce.f1 = spraysim::f1(ce.precision, ce.recall);
        ce.pr = pr_curve(cp, ct, iou_threshold);
        ce.ap = average_precision(ce.pr);
        rep.totals.tp += ce.counts.tp;
        rep.totals.fp += ce.counts.fp;
        rep.totals.fn += ce.counts.fn;
        if (!ct.empty()) aps.push_back(ce.ap);
        rep.per_class.push_back(std::move(ce));
    }
    rep.map = mean_ap(aps);
    return rep;
}

}  // namespace spraysim
