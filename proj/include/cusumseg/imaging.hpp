#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "cusumseg/error.hpp"

namespace cusumseg {

/// Continuous position in pixel coordinates. Pixel (i, j) has its center
/// at (i, j); x grows along columns, y along rows (downwards).
struct Point2D {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Point2D&, const Point2D&) = default;
};

inline double distance(const Point2D& a, const Point2D& b) {
    return std::hypot(a.x - b.x, a.y - b.y);
}

/// Integer pixel whose center is nearest to a continuous position.
struct Pixel {
    int x = 0;
    int y = 0;

    friend bool operator==(const Pixel&, const Pixel&) = default;
};

inline Pixel nearest_pixel(const Point2D& p) {
    return {static_cast<int>(std::lround(p.x)), static_cast<int>(std::lround(p.y))};
}

/// 2D scalar intensity grid, row-major, with physical pixel spacing in mm.
/// Immutable once built.
class GrayImage {
public:
    GrayImage() = default;

    GrayImage(int width, int height, std::vector<double> data, double spacing_x = 1.0,
              double spacing_y = 1.0)
        : width_(width), height_(height), spacing_x_(spacing_x), spacing_y_(spacing_y),
          data_(std::move(data)) {
        if (width < 3 || height < 3)
            throw std::invalid_argument("GrayImage: width and height must be >= 3");
        if (data_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height))
            throw std::invalid_argument("GrayImage: data length != width * height");
        if (!(spacing_x > 0.0) || !(spacing_y > 0.0) || !std::isfinite(spacing_x) ||
            !std::isfinite(spacing_y))
            throw std::invalid_argument("GrayImage: pixel spacing must be positive");
        for (double v : data_)
            if (!std::isfinite(v) || v < 0.0)
                throw std::invalid_argument("GrayImage: intensities must be finite and >= 0");
    }

    static GrayImage filled(int width, int height, double value, double spacing_x = 1.0,
                            double spacing_y = 1.0) {
        return GrayImage(width, height,
                         std::vector<double>(static_cast<std::size_t>(width) * height, value),
                         spacing_x, spacing_y);
    }

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    double spacing_x() const noexcept { return spacing_x_; }
    double spacing_y() const noexcept { return spacing_y_; }
    std::size_t size() const noexcept { return data_.size(); }
    std::span<const double> data() const noexcept { return data_; }

    double at(int x, int y) const { return data_[static_cast<std::size_t>(y) * width_ + x]; }

    bool contains(int x, int y) const noexcept {
        return x >= 0 && y >= 0 && x < width_ && y < height_;
    }

    std::pair<double, double> range() const {
        auto [lo, hi] = std::minmax_element(data_.begin(), data_.end());
        return {*lo, *hi};
    }

private:
    int width_ = 0;
    int height_ = 0;
    double spacing_x_ = 1.0;
    double spacing_y_ = 1.0;
    std::vector<double> data_;
};

/// 4D (x, y, slice, time) volume stored as one GrayImage per (slice, time).
class PerfusionStack {
public:
    PerfusionStack(int num_slices, int num_timepoints, std::vector<GrayImage> images)
        : num_slices_(num_slices), num_timepoints_(num_timepoints), images_(std::move(images)) {
        if (num_slices < 1 || num_timepoints < 1)
            throw std::invalid_argument("PerfusionStack: need at least one slice and timepoint");
        if (images_.size() != static_cast<std::size_t>(num_slices) * num_timepoints)
            throw std::invalid_argument("PerfusionStack: image count != slices * timepoints");
        const GrayImage& ref = images_.front();
        for (const GrayImage& img : images_)
            if (img.width() != ref.width() || img.height() != ref.height() ||
                img.spacing_x() != ref.spacing_x() || img.spacing_y() != ref.spacing_y())
                throw std::invalid_argument("PerfusionStack: images differ in geometry");
    }

    int num_slices() const noexcept { return num_slices_; }
    int num_timepoints() const noexcept { return num_timepoints_; }

    const GrayImage& image(int slice, int timepoint) const {
        if (slice < 0 || slice >= num_slices_ || timepoint < 0 || timepoint >= num_timepoints_)
            throw IndexOutOfRange("slice " + std::to_string(slice) + ", timepoint " +
                                  std::to_string(timepoint) + " outside stack of " +
                                  std::to_string(num_slices_) + "x" +
                                  std::to_string(num_timepoints_));
        return images_[static_cast<std::size_t>(slice) * num_timepoints_ + timepoint];
    }

private:
    int num_slices_;
    int num_timepoints_;
    std::vector<GrayImage> images_;  // slice-major
};

/// Timepoint used for segmentation. The first few volumes of a T2* series
/// have not reached steady state, so the 4th one is taken by default.
inline constexpr int kDefaultWorkingTimepoint = 3;

inline GrayImage working_image(const PerfusionStack& stack, int slice,
                               int timepoint = kDefaultWorkingTimepoint) {
    return stack.image(slice, timepoint);
}

/// Bilinear interpolation between the four surrounding pixel centers.
/// Coordinates are clamped into [0, w-1] x [0, h-1] first.
inline double sample_bilinear(const GrayImage& img, Point2D p) {
    const double x = std::clamp(p.x, 0.0, static_cast<double>(img.width() - 1));
    const double y = std::clamp(p.y, 0.0, static_cast<double>(img.height() - 1));
    const int x0 = std::min(static_cast<int>(x), img.width() - 2);
    const int y0 = std::min(static_cast<int>(y), img.height() - 2);
    const double fx = x - x0;
    const double fy = y - y0;
    const double top = img.at(x0, y0) * (1.0 - fx) + img.at(x0 + 1, y0) * fx;
    const double bottom = img.at(x0, y0 + 1) * (1.0 - fx) + img.at(x0 + 1, y0 + 1) * fx;
    return top * (1.0 - fy) + bottom * fy;
}

inline constexpr int kOtsuBins = 256;

/// Histogram bin of `v` for 256 equal bins spanning [lo, hi]; hi lands in
/// the last bin.
inline int otsu_bin(double v, double lo, double hi) {
    const double width = (hi - lo) / kOtsuBins;
    return std::min(kOtsuBins - 1, static_cast<int>((v - lo) / width));
}

/// Otsu threshold over a 256-bin histogram of the image's own [min, max]
/// range. Returns the center of the last bin of the lower class for the
/// split maximizing inter-class variance (lowest split on ties).
inline double otsu_threshold(const GrayImage& img) {
    const auto [lo, hi] = img.range();
    if (!(hi > lo)) throw NoContrast("image has a single intensity value");

    std::array<double, kOtsuBins> count{};
    std::array<double, kOtsuBins> sum{};
    for (double v : img.data()) {
        const int b = otsu_bin(v, lo, hi);
        count[b] += 1.0;
        sum[b] += v;
    }

    const double total_n = static_cast<double>(img.size());
    double total_s = 0.0;
    for (double s : sum) total_s += s;

    double best = -1.0;
    int best_bin = 0;
    double n0 = 0.0;
    double s0 = 0.0;
    for (int k = 0; k < kOtsuBins - 1; ++k) {
        n0 += count[k];
        s0 += sum[k];
        const double n1 = total_n - n0;
        if (n0 == 0.0 || n1 == 0.0) continue;
        const double diff = s0 / n0 - (total_s - s0) / n1;
        const double between = n0 * n1 * diff * diff;
        if (between > best) {
            best = between;
            best_bin = k;
        }
    }
    return lo + (best_bin + 0.5) * (hi - lo) / kOtsuBins;
}

struct ClassMeans {
    double below = 0.0;  // pixels <= t
    double above = 0.0;  // pixels > t
};

inline ClassMeans otsu_class_means(const GrayImage& img, double t) {
    double s0 = 0.0, s1 = 0.0;
    std::size_t n0 = 0, n1 = 0;
    for (double v : img.data()) {
        if (v <= t) {
            s0 += v;
            ++n0;
        } else {
            s1 += v;
            ++n1;
        }
    }
    if (n0 == 0 || n1 == 0)
        throw EmptyClass("threshold " + std::to_string(t) + " leaves one class empty");
    return {s0 / static_cast<double>(n0), s1 / static_cast<double>(n1)};
}

}  // namespace cusumseg
