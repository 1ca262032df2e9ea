#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <deque>
#include <span>
#include <vector>

#include "cusumseg/binary_mask.hpp"
#include "cusumseg/error.hpp"
#include "cusumseg/imaging.hpp"
#include "cusumseg/segmenter.hpp"

namespace cusumseg {

/// Rasterized boundary: contour pixels plus the ordered change-point pixels
/// they were drawn through.
struct Contour {
    BinaryMask pixels;
    std::vector<Pixel> vertices;
    Termination termination = Termination::ClosedAtSeed;
};

/// 8-connected digital line from a to b, both ends included.
inline void draw_line(BinaryMask& mask, Pixel a, Pixel b) {
    const int dx = std::abs(b.x - a.x);
    const int dy = -std::abs(b.y - a.y);
    const int sx = a.x < b.x ? 1 : -1;
    const int sy = a.y < b.y ? 1 : -1;
    int err = dx + dy;
    for (;;) {
        if (mask.contains(a.x, a.y)) mask.set(a.x, a.y);
        if (a == b) break;
        const int e2 = 2 * err;
        if (e2 >= dy) {
            err += dy;
            a.x += sx;
        }
        if (e2 <= dx) {
            err += dx;
            a.y += sy;
        }
    }
}

inline Contour rasterize_contour(std::span<const Point2D> points, int width, int height,
                                 Termination termination) {
    if (points.empty()) throw EmptyTrace("no change points to rasterize");
    Contour c{BinaryMask(width, height), {}, termination};
    c.vertices.reserve(points.size());
    for (const Point2D& p : points) {
        const Pixel q = nearest_pixel(p);
        c.vertices.push_back({std::clamp(q.x, 0, width - 1), std::clamp(q.y, 0, height - 1)});
    }
    c.pixels.set(c.vertices.front().x, c.vertices.front().y);
    for (std::size_t i = 1; i < c.vertices.size(); ++i)
        draw_line(c.pixels, c.vertices[i - 1], c.vertices[i]);
    if (termination == Termination::ClosedAtSeed)
        draw_line(c.pixels, c.vertices.back(), c.vertices.front());
    return c;
}

/// Marks every change-point pixel and joins consecutive ones (and the last
/// to the first for a closed trace) with digital lines.
inline Contour rasterize_contour(const BoundaryTrace& trace, int width, int height) {
    return rasterize_contour(trace.change_points, width, height, trace.termination);
}

struct MaskResult {
    BinaryMask mask;
    /// Set when nothing but the contour itself ended up inside.
    bool degenerate_contour = false;
};

namespace detail {

/// Position along the image perimeter, clockwise on screen from (0, 0).
inline long perimeter_coord(Pixel p, int w, int h) {
    if (p.y == 0) return p.x;
    if (p.x == w - 1) return (w - 1) + p.y;
    if (p.y == h - 1) return 2L * (w - 1) + (h - 1) - p.x;
    return 2L * (w - 1) + 2L * (h - 1) - p.y;
}

inline Pixel perimeter_pixel(long s, int w, int h) {
    const long per = 2L * (w - 1) + 2L * (h - 1);
    s = ((s % per) + per) % per;
    if (s <= w - 1) return {static_cast<int>(s), 0};
    s -= w - 1;
    if (s <= h - 1) return {w - 1, static_cast<int>(s)};
    s -= h - 1;
    if (s <= w - 1) return {static_cast<int>(w - 1 - s), h - 1};
    s -= w - 1;
    return {0, static_cast<int>(h - 1 - s)};
}

inline Pixel nearest_border_pixel(Pixel p, int w, int h) {
    const std::array<std::pair<int, Pixel>, 4> options{{
        {p.x, {0, p.y}},
        {w - 1 - p.x, {w - 1, p.y}},
        {p.y, {p.x, 0}},
        {h - 1 - p.y, {p.x, h - 1}},
    }};
    const auto best = std::min_element(options.begin(), options.end(),
                                       [](const auto& a, const auto& b) { return a.first < b.first; });
    return best->second;
}

/// Twice the signed shoelace area in pixel coordinates.
inline double signed_area2(std::span<const Pixel> poly) {
    double a = 0.0;
    for (std::size_t i = 0; i < poly.size(); ++i) {
        const Pixel& p = poly[i];
        const Pixel& q = poly[(i + 1) % poly.size()];
        a += static_cast<double>(p.x) * q.y - static_cast<double>(q.x) * p.y;
    }
    return a;
}

/// Last in-image pixel reached by walking from `from` along (dx, dy).
inline Pixel cast_to_border(Pixel from, double dx, double dy, int w, int h) {
    const double len = std::hypot(dx, dy);
    if (len == 0.0) return nearest_border_pixel(from, w, h);
    Pixel last = from;
    for (double t = 0.0;; t += 0.5) {
        const Pixel p{static_cast<int>(std::lround(from.x + t * dx / len)),
                      static_cast<int>(std::lround(from.y + t * dy / len))};
        if (p.x < 0 || p.y < 0 || p.x >= w || p.y >= h) return last;
        last = p;
        if (p.x == 0 || p.y == 0 || p.x == w - 1 || p.y == h - 1) return p;
    }
}

/// Closes an open trace that ended on the image edge. The start is extended
/// backwards against its initial direction of travel until it meets the
/// border, the end goes to its nearest border pixel. The trace keeps the
/// tissue side on its right, so of the two ways around the perimeter the one
/// producing a clockwise (negative-area) loop in pixel coordinates is taken;
/// the shorter way is used if the orientation test is inconclusive.
inline void close_along_border(Contour& c) {
    const int w = c.pixels.width();
    const int h = c.pixels.height();
    const Pixel first = c.vertices.front();
    const Pixel last = c.vertices.back();
    const Pixel ahead = c.vertices[std::min<std::size_t>(c.vertices.size() - 1, 10)];
    const Pixel first_b = cast_to_border(first, first.x - ahead.x, first.y - ahead.y, w, h);
    const Pixel last_b = nearest_border_pixel(last, w, h);
    draw_line(c.pixels, first, first_b);
    draw_line(c.pixels, last, last_b);

    const long per = 2L * (w - 1) + 2L * (h - 1);
    const long s_from = perimeter_coord(last_b, w, h);
    const long s_to = perimeter_coord(first_b, w, h);
    const long forward_len = ((s_to - s_from) % per + per) % per;
    const long backward_len = (per - forward_len) % per;

    const auto route = [&](int dir) {
        const long len = dir > 0 ? forward_len : backward_len;
        std::vector<Pixel> path;
        path.reserve(static_cast<std::size_t>(len) + 1);
        for (long i = 0; i <= len; ++i) path.push_back(perimeter_pixel(s_from + dir * i, w, h));
        return path;
    };
    const auto area_with = [&](const std::vector<Pixel>& path) {
        std::vector<Pixel> poly{first_b};
        poly.insert(poly.end(), c.vertices.begin(), c.vertices.end());
        poly.insert(poly.end(), path.begin(), path.end());
        return signed_area2(poly);
    };

    const std::vector<Pixel> fwd = route(+1);
    const std::vector<Pixel> bwd = route(-1);
    const double a_fwd = area_with(fwd);
    const double a_bwd = area_with(bwd);
    const std::vector<Pixel>* chosen = forward_len <= backward_len ? &fwd : &bwd;
    if ((a_fwd < 0.0) != (a_bwd < 0.0)) chosen = a_fwd < 0.0 ? &fwd : &bwd;
    for (const Pixel& p : *chosen) c.pixels.set(p.x, p.y);
}

}  // namespace detail

/// Flood-fills the exterior (4-connected) from every border pixel not on the
/// contour; the mask is everything else, contour included. Open traces that
/// ended on the border are closed along the border first.
inline MaskResult fill_mask(Contour contour) {
    if (contour.termination == Termination::HitBorder && !contour.vertices.empty())
        detail::close_along_border(contour);

    const BinaryMask& wall = contour.pixels;
    const int w = wall.width();
    const int h = wall.height();
    BinaryMask exterior(w, h);
    std::deque<Pixel> queue;
    const auto visit = [&](int x, int y) {
        if (!wall.contains(x, y) || wall.at(x, y) || exterior.at(x, y)) return;
        exterior.set(x, y);
        queue.push_back({x, y});
    };
    for (int x = 0; x < w; ++x) {
        visit(x, 0);
        visit(x, h - 1);
    }
    for (int y = 0; y < h; ++y) {
        visit(0, y);
        visit(w - 1, y);
    }
    while (!queue.empty()) {
        const Pixel p = queue.front();
        queue.pop_front();
        visit(p.x + 1, p.y);
        visit(p.x - 1, p.y);
        visit(p.x, p.y + 1);
        visit(p.x, p.y - 1);
    }

    MaskResult result{BinaryMask(w, h), false};
    std::size_t interior = 0;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const bool inside = !exterior.at(x, y);
            result.mask.set(x, y, inside);
            if (inside && !wall.at(x, y)) ++interior;
        }
    result.degenerate_contour = interior == 0;
    return result;
}

}  // namespace cusumseg
