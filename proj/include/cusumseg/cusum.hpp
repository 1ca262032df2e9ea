#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "cusumseg/error.hpp"
#include "cusumseg/imaging.hpp"
#include "cusumseg/region.hpp"

namespace cusumseg {

/// How the cumulative sum restarts after the second and later alarms. The
/// first alarm always restarts from zero.
enum class ResetMode {
    Zero,          // plain restart
    HalfCurrent,   // half of the sum that just crossed h (fast initial response)
    HalfPrevious,  // half of the crossing sum stored at the previous alarm
};

inline std::string_view to_string(ResetMode m) {
    switch (m) {
        case ResetMode::Zero: return "zero";
        case ResetMode::HalfCurrent: return "half-current";
        case ResetMode::HalfPrevious: return "half-previous";
    }
    return "?";
}

inline ResetMode reset_mode_from_string(std::string_view s) {
    if (s == "zero") return ResetMode::Zero;
    if (s == "half-current") return ResetMode::HalfCurrent;
    if (s == "half-previous") return ResetMode::HalfPrevious;
    throw std::invalid_argument("unknown reset mode '" + std::string(s) + "'");
}

inline constexpr int kDefaultWindowSize = 45;

struct CusumConfig {
    int window_size = kDefaultWindowSize;
    ResetMode reset_mode = ResetMode::HalfCurrent;
    /// h used until both region windows are full (global Otsu threshold).
    double fallback_threshold = 0.0;
    /// Region means used while a window is still empty.
    ClassMeans fallback_means{};
    /// Thresholds below this are treated as indistinguishable regions.
    double min_threshold = 0.0;

    static CusumConfig from_image(const GrayImage& img) {
        CusumConfig c;
        c.fallback_threshold = otsu_threshold(img);
        c.fallback_means = otsu_class_means(img, c.fallback_threshold);
        const auto [lo, hi] = img.range();
        c.min_threshold = 1e-6 * (hi - lo);
        return c;
    }
};

/// Fixed-capacity FIFO of the most recent samples of one region.
class SampleWindow {
public:
    explicit SampleWindow(std::size_t capacity) : buf_(capacity) {
        if (capacity == 0) throw std::invalid_argument("SampleWindow: zero capacity");
    }

    void push(double v) {
        buf_[head_] = v;
        head_ = (head_ + 1) % buf_.size();
        size_ = std::min(size_ + 1, buf_.size());
    }

    std::size_t size() const noexcept { return size_; }
    std::size_t capacity() const noexcept { return buf_.size(); }
    bool empty() const noexcept { return size_ == 0; }
    bool full() const noexcept { return size_ == buf_.size(); }

    double mean() const {
        double s = 0.0;
        for (std::size_t i = 0; i < size_; ++i) s += buf_[i];
        return s / static_cast<double>(size_);
    }
    double min() const { return *std::min_element(buf_.begin(), buf_.begin() + size_); }
    double max() const { return *std::max_element(buf_.begin(), buf_.begin() + size_); }

private:
    std::vector<double> buf_;
    std::size_t head_ = 0;
    std::size_t size_ = 0;
};

inline double score(double intensity, double region_mean) { return intensity - region_mean; }

inline double threshold_h(double mu1, double mu2, double min_threshold = 0.0) {
    const double h = std::abs(mu1 - mu2);
    if (!(h >= min_threshold) || h == 0.0)
        throw DegenerateThreshold("region means " + std::to_string(mu1) + " and " +
                                  std::to_string(mu2) + " are indistinguishable");
    return h;
}

/// Restart value after alarm number `alarm_number` (1-based). `crossing_sum`
/// is the sum that exceeded h at this alarm, `previous_crossing_sum` the one
/// at the alarm before. The head start is capped at h/2: a larger restart
/// would sit above h after the next in-region sample and alarm again.
inline double fir_reset(ResetMode mode, int alarm_number, double crossing_sum,
                        double previous_crossing_sum, double h) {
    if (alarm_number <= 1) return 0.0;
    switch (mode) {
        case ResetMode::Zero: return 0.0;
        case ResetMode::HalfCurrent: return 0.5 * std::min(crossing_sum, h);
        case ResetMode::HalfPrevious: return 0.5 * std::min(previous_crossing_sum, h);
    }
    return 0.0;
}

/// Everything one update saw and decided; used for trace diagnostics.
struct CusumStep {
    long index = 0;  // 1-based sample count
    double intensity = 0.0;
    double mu1 = 0.0;
    double mu2 = 0.0;
    double h = 0.0;
    double crossing_sum = 0.0;  // S before any reset
    double sum = 0.0;           // S after this update
    bool alarm = false;
    RegionLabel label_before = RegionLabel::Omega1;
    RegionLabel label_after = RegionLabel::Omega1;
};

/// Streaming change-point detector on the intensities met along the path.
///
/// In Omega1 the sum grows when intensity falls below the Omega1 mean, in
/// Omega2 when it rises above the Omega2 mean; it is clamped at zero. An
/// alarm fires when the sum exceeds h = |mu1 - mu2| (or the fallback
/// threshold while either window is still filling), flips the region label
/// and restarts the sum according to the reset mode. Alarm samples are kept
/// out of both windows.
class CusumDetector {
public:
    CusumDetector(const CusumConfig& config, RegionLabel initial)
        : config_(config),
          label_(initial),
          window1_(static_cast<std::size_t>(config.window_size)),
          window2_(static_cast<std::size_t>(config.window_size)) {
        if (config.window_size < 1) throw std::invalid_argument("CusumConfig: window_size < 1");
    }

    /// Mean of the region's window; Otsu class mean while it is empty
    /// (above-threshold mean for Omega1, below for Omega2).
    double region_mean(RegionLabel r) const {
        const SampleWindow& w = window(r);
        if (w.empty())
            return r == RegionLabel::Omega1 ? config_.fallback_means.above
                                            : config_.fallback_means.below;
        return w.mean();
    }

    double current_threshold() const {
        if (window1_.full() && window2_.full())
            return threshold_h(region_mean(RegionLabel::Omega1),
                               region_mean(RegionLabel::Omega2), config_.min_threshold);
        const double h = config_.fallback_threshold;
        if (!(h >= config_.min_threshold) || h <= 0.0)
            throw DegenerateThreshold("fallback threshold " + std::to_string(h) +
                                      " is not positive");
        return h;
    }

    CusumStep update(double intensity) {
        CusumStep step;
        step.index = ++count_;
        step.intensity = intensity;
        step.mu1 = region_mean(RegionLabel::Omega1);
        step.mu2 = region_mean(RegionLabel::Omega2);
        step.h = current_threshold();
        step.label_before = label_;

        const double increment = label_ == RegionLabel::Omega1 ? -score(intensity, step.mu1)
                                                               : score(intensity, step.mu2);
        step.crossing_sum = std::max(0.0, sum_ + increment);
        step.alarm = step.crossing_sum > step.h;

        if (step.alarm) {
            alarms_.push_back(step.index);
            sum_ = fir_reset(config_.reset_mode, static_cast<int>(alarms_.size()),
                             step.crossing_sum, previous_crossing_, step.h);
            previous_crossing_ = step.crossing_sum;
            label_ = other(label_);
        } else {
            sum_ = step.crossing_sum;
            mutable_window(label_).push(intensity);
        }
        step.sum = sum_;
        step.label_after = label_;
        return step;
    }

    double sum() const noexcept { return sum_; }
    RegionLabel label() const noexcept { return label_; }
    const CusumConfig& config() const noexcept { return config_; }
    /// Sample indices (1-based) at which alarms fired, strictly increasing.
    const std::vector<long>& alarms() const noexcept { return alarms_; }
    const SampleWindow& window(RegionLabel r) const {
        return r == RegionLabel::Omega1 ? window1_ : window2_;
    }

private:
    SampleWindow& mutable_window(RegionLabel r) {
        return r == RegionLabel::Omega1 ? window1_ : window2_;
    }

    CusumConfig config_;
    RegionLabel label_;
    SampleWindow window1_;
    SampleWindow window2_;
    double sum_ = 0.0;
    double previous_crossing_ = 0.0;
    long count_ = 0;
    std::vector<long> alarms_;
};

}  // namespace cusumseg
