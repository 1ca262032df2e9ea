#pragma once

#include <algorithm>
#include <cstddef>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "cusumseg/binary_mask.hpp"
#include "cusumseg/error.hpp"
#include "cusumseg/imaging.hpp"

namespace cusumseg {

struct ConfusionCounts {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t tn = 0;
    std::size_t fn = 0;

    std::size_t total() const noexcept { return tp + fp + tn + fn; }
    friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

/// Per-pixel confusion counts; reference unity is the positive class.
inline ConfusionCounts confusion(const BinaryMask& mask, const BinaryMask& reference) {
    if (mask.width() != reference.width() || mask.height() != reference.height())
        throw DimensionMismatch("mask " + std::to_string(mask.width()) + "x" +
                                std::to_string(mask.height()) + " vs reference " +
                                std::to_string(reference.width()) + "x" +
                                std::to_string(reference.height()));
    ConfusionCounts c;
    for (std::size_t i = 0; i < mask.size(); ++i) {
        const bool m = mask[i];
        const bool r = reference[i];
        if (m && r) ++c.tp;
        else if (m) ++c.fp;
        else if (r) ++c.fn;
        else ++c.tn;
    }
    return c;
}

struct SegMetrics {
    ConfusionCounts counts;
    double dice = 0.0;
    double tpf = 0.0;  // sensitivity
    double tnf = 0.0;  // specificity
    double acc = 0.0;
    /// At least one ratio had a zero denominator and was reported as 1.
    bool degenerate = false;
};

/// Dice, sensitivity, specificity and accuracy from the counts. A 0/0 ratio
/// is reported as 1 and sets `degenerate`.
inline SegMetrics derive_metrics(const ConfusionCounts& c) {
    if (c.total() == 0) throw EmptyImage("confusion counts are all zero");
    SegMetrics m;
    m.counts = c;
    const auto ratio = [&m](double num, double den) {
        if (den == 0.0) {
            m.degenerate = true;
            return 1.0;
        }
        return num / den;
    };
    const auto tp = static_cast<double>(c.tp);
    const auto fp = static_cast<double>(c.fp);
    const auto tn = static_cast<double>(c.tn);
    const auto fn = static_cast<double>(c.fn);
    m.dice = ratio(2.0 * tp, 2.0 * tp + fp + fn);
    m.tpf = ratio(tp, tp + fn);
    m.tnf = ratio(tn, tn + fp);
    m.acc = ratio(tp + tn, tp + fp + tn + fn);
    return m;
}

inline nlohmann::json to_json(const SegMetrics& m) {
    return {{"tp", m.counts.tp},   {"fp", m.counts.fp}, {"tn", m.counts.tn},
            {"fn", m.counts.fn},   {"dice", m.dice},    {"tpf", m.tpf},
            {"tnf", m.tnf},        {"acc", m.acc},      {"degenerate", m.degenerate}};
}

enum class Polarity {
    AtLeast,  // pixel >= t is unity
    Below,    // pixel < t is unity
};

inline std::string_view to_string(Polarity p) {
    return p == Polarity::AtLeast ? "at-least" : "below";
}

struct BaselineResult {
    double threshold = 0.0;
    Polarity polarity = Polarity::AtLeast;
    SegMetrics metrics;
};

inline BinaryMask threshold_mask(const GrayImage& img, double t, Polarity polarity) {
    BinaryMask m(img.width(), img.height());
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x) {
            const double v = img.at(x, y);
            m.set(x, y, polarity == Polarity::AtLeast ? v >= t : v < t);
        }
    return m;
}

/// Most charitable global threshold: every distinct intensity is tried as t
/// in both polarities and the best Dice against the reference wins (lowest
/// t on ties, at-least before below).
inline BaselineResult best_threshold_baseline(const GrayImage& img, const BinaryMask& reference) {
    if (img.width() != reference.width() || img.height() != reference.height())
        throw DimensionMismatch("image and reference differ in size");

    std::vector<std::pair<double, bool>> px;
    px.reserve(img.size());
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x) px.emplace_back(img.at(x, y), reference.at(x, y));
    std::sort(px.begin(), px.end());

    std::size_t positives = 0;
    for (const auto& p : px) positives += p.second ? 1 : 0;
    const std::size_t negatives = px.size() - positives;

    // Walk distinct values ascending; before value v_i, `pos_below` and
    // `neg_below` count pixels strictly below v_i.
    std::size_t pos_below = 0, neg_below = 0;
    BaselineResult best;
    bool have = false;
    for (std::size_t i = 0; i < px.size();) {
        const double t = px[i].first;
        for (Polarity pol : {Polarity::AtLeast, Polarity::Below}) {
            ConfusionCounts c;
            if (pol == Polarity::AtLeast) {
                c.tp = positives - pos_below;
                c.fp = negatives - neg_below;
            } else {
                c.tp = pos_below;
                c.fp = neg_below;
            }
            c.fn = positives - c.tp;
            c.tn = negatives - c.fp;
            const SegMetrics m = derive_metrics(c);
            if (!have || m.dice > best.metrics.dice) {
                best = {t, pol, m};
                have = true;
            }
        }
        for (; i < px.size() && px[i].first == t; ++i) (px[i].second ? pos_below : neg_below)++;
    }
    return best;
}

inline nlohmann::json to_json(const BaselineResult& b) {
    nlohmann::json j = to_json(b.metrics);
    j["threshold"] = b.threshold;
    j["polarity"] = std::string(to_string(b.polarity));
    return j;
}

}  // namespace cusumseg
