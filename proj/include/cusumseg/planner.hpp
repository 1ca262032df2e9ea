#pragma once

#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>

#include "cusumseg/imaging.hpp"
#include "cusumseg/region.hpp"

namespace cusumseg {

/// Smallest step (in units of the shorter pixel side) for which the closed
/// octagon of eight pi/4 turns spans a full pixel: sin(pi/8).
inline constexpr double kMinStepFactor = 0.3827;
inline constexpr double kDefaultStepFactor = 0.39;

/// Parameters of the sinusoidal-like trajectory. Lengths are in pixel units
/// where one unit is the shorter physical pixel side.
struct PlannerParams {
    double step_length = kDefaultStepFactor;
    double turn_in_region = std::numbers::pi / 4;
    double turn_at_boundary = std::numbers::pi / 2;
    double loop_shift = std::numbers::pi / 3;
    int loop_lag = 8;
    double loop_tolerance = kDefaultStepFactor / 100.0;
    long max_steps = 50L * (128 + 128);

    /// Defaults for an image: step = factor x shorter pixel side (which is
    /// one pixel unit), tolerance V/100, max steps 50 x (w + h).
    static PlannerParams for_image(const GrayImage& img, double step_factor = kDefaultStepFactor) {
        PlannerParams p;
        p.step_length = step_factor;
        p.loop_tolerance = step_factor / 100.0;
        p.max_steps = 50L * (img.width() + img.height());
        return p;
    }

    void validate() const {
        if (!(step_length > 0.0) || step_length < kMinStepFactor)
            throw std::invalid_argument("PlannerParams: step length below 0.3827 pixel");
        if (max_steps <= 0) throw std::invalid_argument("PlannerParams: max_steps must be > 0");
        if (loop_lag < 2) throw std::invalid_argument("PlannerParams: loop_lag must be >= 2");
        if (!(loop_tolerance >= 0.0))
            throw std::invalid_argument("PlannerParams: negative loop tolerance");
    }
};

/// Wraps an angle into [0, 2pi).
inline double normalize_angle(double theta) {
    constexpr double two_pi = 2 * std::numbers::pi;
    double t = std::fmod(theta, two_pi);
    if (t < 0.0) t += two_pi;
    return t >= two_pi ? 0.0 : t;
}

/// Turn applied after a step. Inside a region the tracker bends towards the
/// other region (+ in Omega1, - in Omega2); on a detected crossing it turns
/// back with the double angle, signed by the region it just left.
inline double heading_step(RegionLabel label, bool at_boundary,
                           const PlannerParams& params = {}) {
    if (at_boundary)
        return label == RegionLabel::Omega1 ? -params.turn_at_boundary : params.turn_at_boundary;
    return label == RegionLabel::Omega2 ? -params.turn_in_region : params.turn_in_region;
}

/// Extra turn that breaks a closed loop inside one region. `history` holds
/// earlier trajectory points, newest last; the current point is compared
/// with the one `loop_lag` steps back.
inline double loop_correction(std::span<const Point2D> history, const Point2D& current,
                              RegionLabel label, const PlannerParams& params = {}) {
    const auto lag = static_cast<std::size_t>(params.loop_lag);
    if (history.size() < lag) return 0.0;
    const Point2D& back = history[history.size() - lag];
    if (distance(current, back) > params.loop_tolerance) return 0.0;
    return label == RegionLabel::Omega1 ? -params.loop_shift : params.loop_shift;
}

inline Point2D advance(const Point2D& p, double theta, double step_length) {
    return {p.x + step_length * std::cos(theta), p.y + step_length * std::sin(theta)};
}

}  // namespace cusumseg
