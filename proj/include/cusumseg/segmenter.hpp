#pragma once

#include <algorithm>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "cusumseg/cusum.hpp"
#include "cusumseg/error.hpp"
#include "cusumseg/imaging.hpp"
#include "cusumseg/planner.hpp"
#include "cusumseg/region.hpp"

namespace cusumseg {

enum class Termination { ClosedAtSeed, HitBorder, MaxSteps };

inline std::string_view to_string(Termination t) {
    switch (t) {
        case Termination::ClosedAtSeed: return "ClosedAtSeed";
        case Termination::HitBorder: return "HitBorder";
        case Termination::MaxSteps: return "MaxSteps";
    }
    return "?";
}

/// Per-step diagnostics of a tracker run.
struct TraceStep {
    long step = 0;
    Point2D position;
    double intensity = 0.0;
    double sum = 0.0;
    double h = 0.0;
    double mu1 = 0.0;
    double mu2 = 0.0;
    /// Range spanned by both region windows (or their fallback means) before
    /// the update.
    double band_lo = 0.0;
    double band_hi = 0.0;
    RegionLabel label = RegionLabel::Omega1;  // label the sample was scored under
    bool alarm = false;
};

struct BoundaryTrace {
    Point2D seed;
    std::vector<Point2D> change_points;
    std::vector<TraceStep> steps;
    Termination termination = Termination::MaxSteps;
};

class TrackerDiverged : public Error {
public:
    explicit TrackerDiverged(BoundaryTrace partial)
        : Error("TrackerDiverged",
                "tracker did not close or reach the border within " +
                    std::to_string(partial.steps.size()) + " steps"),
          partial_(std::move(partial)) {}

    const BoundaryTrace& partial_trace() const noexcept { return partial_; }

private:
    BoundaryTrace partial_;
};

/// Steps that must pass before returning to the seed pixel counts as closing.
inline constexpr long kClosureWarmupSteps = 20;

inline bool on_image_border(const Pixel& p, int width, int height) {
    return p.x <= 0 || p.y <= 0 || p.x >= width - 1 || p.y >= height - 1;
}

namespace detail {

inline void band_of(const CusumDetector& det, double& lo, double& hi) {
    lo = std::min(det.region_mean(RegionLabel::Omega1), det.region_mean(RegionLabel::Omega2));
    hi = std::max(det.region_mean(RegionLabel::Omega1), det.region_mean(RegionLabel::Omega2));
    for (RegionLabel r : {RegionLabel::Omega1, RegionLabel::Omega2}) {
        const SampleWindow& w = det.window(r);
        if (w.empty()) continue;
        lo = std::min(lo, w.min());
        hi = std::max(hi, w.max());
    }
}

}  // namespace detail

/// Follows the boundary from `seed` along the sinusoidal-like path. Each
/// iteration samples the image at the current point, feeds the CUSUM
/// detector, records the point on alarm, turns and advances by one step.
///
/// Stops with ClosedAtSeed when, after the warm-up, the current point falls
/// in the seed's pixel, or HitBorder when it reaches an edge pixel. Throws
/// TrackerDiverged (carrying the partial trace) after `max_steps`.
inline BoundaryTrace run_tracker(const GrayImage& img, const Point2D& seed,
                                 const PlannerParams& params, const CusumConfig& cusum,
                                 double initial_heading) {
    params.validate();

    BoundaryTrace trace;
    trace.seed = seed;

    const Pixel seed_pixel = nearest_pixel(seed);
    const RegionLabel initial_label =
        sample_bilinear(img, advance(seed, initial_heading, params.step_length)) >
                cusum.fallback_threshold
            ? RegionLabel::Omega1
            : RegionLabel::Omega2;
    CusumDetector detector(cusum, initial_label);

    std::vector<Point2D> visited;
    Point2D pos = seed;
    double theta = normalize_angle(initial_heading);
    long last_alarm = -1;

    for (long k = 0;; ++k) {
        if (k >= params.max_steps) {
            trace.termination = Termination::MaxSteps;
            throw TrackerDiverged(std::move(trace));
        }

        TraceStep diag;
        diag.step = k;
        diag.position = pos;
        detail::band_of(detector, diag.band_lo, diag.band_hi);

        const CusumStep update = detector.update(sample_bilinear(img, pos));
        diag.intensity = update.intensity;
        diag.sum = update.sum;
        diag.h = update.h;
        diag.mu1 = update.mu1;
        diag.mu2 = update.mu2;
        diag.label = update.label_before;
        diag.alarm = update.alarm;
        trace.steps.push_back(diag);
        if (update.alarm) trace.change_points.push_back(pos);

        const Pixel pixel = nearest_pixel(pos);
        if (on_image_border(pixel, img.width(), img.height())) {
            trace.termination = Termination::HitBorder;
            break;
        }
        if (k >= kClosureWarmupSteps && pixel == seed_pixel) {
            trace.termination = Termination::ClosedAtSeed;
            break;
        }

        theta += heading_step(update.label_before, update.alarm, params);
        if (update.alarm) last_alarm = k;
        if (k - last_alarm > params.loop_lag)
            theta += loop_correction(visited, pos, update.label_after, params);
        theta = normalize_angle(theta);
        visited.push_back(pos);
        pos = advance(pos, theta, params.step_length);
    }
    return trace;
}

/// CSV dump of the per-step diagnostics: step,x,y,intensity,S,h,label,alarm
inline void write_trace_csv(std::ostream& out, const BoundaryTrace& trace) {
    out << "step,x,y,intensity,S,h,label,alarm\n";
    const auto old_precision = out.precision(10);
    for (const TraceStep& s : trace.steps)
        out << s.step << ',' << s.position.x << ',' << s.position.y << ',' << s.intensity << ','
            << s.sum << ',' << s.h << ',' << to_string(s.label) << ',' << (s.alarm ? 1 : 0)
            << '\n';
    out.precision(old_precision);
}

}  // namespace cusumseg
