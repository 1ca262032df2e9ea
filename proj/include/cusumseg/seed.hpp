#pragma once

#include <numbers>
#include <string>
#include <string_view>

#include "cusumseg/error.hpp"
#include "cusumseg/imaging.hpp"

namespace cusumseg {

/// Image corner the diagonal seed scan starts from. Bottom-left is taken as
/// the left posterior part of the head in the usual display orientation.
enum class Corner { BottomLeft, BottomRight, TopLeft, TopRight };

struct SeedConfig {
    Corner corner = Corner::BottomLeft;
};

inline std::string_view to_string(Corner c) {
    switch (c) {
        case Corner::BottomLeft: return "bottom-left";
        case Corner::BottomRight: return "bottom-right";
        case Corner::TopLeft: return "top-left";
        case Corner::TopRight: return "top-right";
    }
    return "?";
}

inline Corner corner_from_string(std::string_view s) {
    if (s == "bottom-left") return Corner::BottomLeft;
    if (s == "bottom-right") return Corner::BottomRight;
    if (s == "top-left") return Corner::TopLeft;
    if (s == "top-right") return Corner::TopRight;
    throw std::invalid_argument("unknown corner '" + std::string(s) + "'");
}

/// Unit pixel step along the scan diagonal (towards the image center).
inline Pixel diagonal_step(Corner c) {
    switch (c) {
        case Corner::BottomLeft: return {+1, -1};
        case Corner::BottomRight: return {-1, -1};
        case Corner::TopLeft: return {+1, +1};
        case Corner::TopRight: return {-1, +1};
    }
    return {0, 0};
}

/// First diagonal pixel whose 3x3 neighborhood lies inside the image.
inline Pixel diagonal_start(Corner c, int width, int height) {
    const Pixel step = diagonal_step(c);
    return {step.x > 0 ? 1 : width - 2, step.y > 0 ? 1 : height - 2};
}

/// Heading perpendicular to the scan diagonal such that the tracker circles
/// the image center counterclockwise on screen (rows grow downwards). With
/// that orientation the bright side of the boundary is on the right of the
/// direction of travel in pixel coordinates.
inline double initial_heading(Corner c) {
    using std::numbers::pi;
    switch (c) {
        case Corner::BottomLeft: return pi / 4;
        case Corner::BottomRight: return 7 * pi / 4;
        case Corner::TopLeft: return 3 * pi / 4;
        case Corner::TopRight: return 5 * pi / 4;
    }
    return 0.0;
}

inline double mean3x3(const GrayImage& img, int x, int y) {
    double s = 0.0;
    for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) s += img.at(x + dx, y + dy);
    return s / 9.0;
}

/// Walks the diagonal from the configured corner towards the image center and
/// returns the first pixel whose 3x3 mean exceeds `threshold`.
inline Point2D find_initial_point(const GrayImage& img, double threshold,
                                  const SeedConfig& config = {}) {
    const Pixel step = diagonal_step(config.corner);
    const double cx = (img.width() - 1) / 2.0;
    const double cy = (img.height() - 1) / 2.0;
    const auto before_center = [&](Pixel p) {
        const bool x_ok = step.x > 0 ? p.x <= cx : p.x >= cx;
        const bool y_ok = step.y > 0 ? p.y <= cy : p.y >= cy;
        return x_ok && y_ok;
    };

    for (Pixel p = diagonal_start(config.corner, img.width(), img.height()); before_center(p);
         p = {p.x + step.x, p.y + step.y}) {
        if (p.x < 1 || p.y < 1 || p.x > img.width() - 2 || p.y > img.height() - 2) break;
        if (mean3x3(img, p.x, p.y) > threshold)
            return {static_cast<double>(p.x), static_cast<double>(p.y)};
    }
    throw SeedNotFound("no pixel on the " + std::string(to_string(config.corner)) +
                       " diagonal exceeds threshold " + std::to_string(threshold));
}

}  // namespace cusumseg
