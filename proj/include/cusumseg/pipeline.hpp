#pragma once

#include <numbers>
#include <optional>

#include <nlohmann/json.hpp>

#include "cusumseg/cusum.hpp"
#include "cusumseg/imaging.hpp"
#include "cusumseg/mask.hpp"
#include "cusumseg/planner.hpp"
#include "cusumseg/seed.hpp"
#include "cusumseg/segmenter.hpp"

namespace cusumseg {

/// Knobs of the full seed -> track -> mask pipeline, with the published
/// defaults.
struct SegmentOptions {
    std::optional<Point2D> seed;  // manual override of the diagonal scan
    Corner corner = Corner::BottomLeft;
    std::optional<double> initial_heading;  // defaults to the corner's heading
    double step_factor = kDefaultStepFactor;
    double turn_in_region = std::numbers::pi / 4;
    double turn_at_boundary = std::numbers::pi / 2;
    double loop_shift = std::numbers::pi / 3;
    int loop_lag = 8;
    std::optional<long> max_steps;
    int window_size = kDefaultWindowSize;
    ResetMode reset_mode = ResetMode::HalfCurrent;

    PlannerParams planner_params(const GrayImage& img) const {
        PlannerParams p = PlannerParams::for_image(img, step_factor);
        p.turn_in_region = turn_in_region;
        p.turn_at_boundary = turn_at_boundary;
        p.loop_shift = loop_shift;
        p.loop_lag = loop_lag;
        if (max_steps) p.max_steps = *max_steps;
        return p;
    }

    double heading() const { return initial_heading.value_or(cusumseg::initial_heading(corner)); }
};

struct SegmentResult {
    double otsu = 0.0;
    Point2D seed;
    BoundaryTrace trace;
    MaskResult mask;
};

inline SegmentResult segment_image(const GrayImage& img, const SegmentOptions& opt = {}) {
    SegmentResult r;
    CusumConfig cusum = CusumConfig::from_image(img);
    cusum.window_size = opt.window_size;
    cusum.reset_mode = opt.reset_mode;
    r.otsu = cusum.fallback_threshold;
    r.seed = opt.seed ? *opt.seed : find_initial_point(img, r.otsu, SeedConfig{opt.corner});
    r.trace = run_tracker(img, r.seed, opt.planner_params(img), cusum, opt.heading());
    r.mask = fill_mask(rasterize_contour(r.trace, img.width(), img.height()));
    return r;
}

inline nlohmann::json to_json(const SegmentOptions& o) {
    nlohmann::json j = {{"corner", std::string(to_string(o.corner))},
                        {"initial_heading", o.heading()},
                        {"step_factor", o.step_factor},
                        {"turn_in_region", o.turn_in_region},
                        {"turn_at_boundary", o.turn_at_boundary},
                        {"loop_shift", o.loop_shift},
                        {"loop_lag", o.loop_lag},
                        {"window_size", o.window_size},
                        {"reset_mode", std::string(to_string(o.reset_mode))}};
    j["max_steps"] = o.max_steps ? nlohmann::json(*o.max_steps) : nlohmann::json(nullptr);
    j["seed_override"] =
        o.seed ? nlohmann::json::array({o.seed->x, o.seed->y}) : nlohmann::json(nullptr);
    return j;
}

}  // namespace cusumseg
