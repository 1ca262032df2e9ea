#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "cusumseg/binary_mask.hpp"
#include "cusumseg/error.hpp"
#include "cusumseg/imaging.hpp"

namespace cusumseg {

/// SplitMix64 (Steele, Lea & Flood 2014). Chosen for its tiny, fully
/// specified state transition so phantoms are identical on every platform.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform in (0, 1], 53-bit resolution.
    double uniform() { return static_cast<double>((next() >> 11) + 1) * 0x1.0p-53; }

private:
    std::uint64_t state_;
};

/// Standard normal deviates via the basic Box-Muller transform; both outputs
/// of a pair are used (cosine first).
class BoxMuller {
public:
    explicit BoxMuller(std::uint64_t seed) : rng_(seed) {}

    double operator()() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double r = std::sqrt(-2.0 * std::log(rng_.uniform()));
        const double phi = 2.0 * std::numbers::pi * rng_.uniform();
        spare_ = r * std::sin(phi);
        has_spare_ = true;
        return r * std::cos(phi);
    }

private:
    SplitMix64 rng_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

struct Ellipse {
    double cx = 0.0;
    double cy = 0.0;
    double ax = 1.0;  // semi-axis along x
    double ay = 1.0;  // semi-axis along y

    bool contains(double x, double y) const {
        const double u = (x - cx) / ax;
        const double v = (y - cy) / ay;
        return u * u + v * v <= 1.0;
    }
};

struct Lesion {
    Point2D center;
    double radius = 0.0;
    double delta = 0.0;  // added to the interior mean
};

enum class TruthRegion { OuterEllipse, InnerEllipse };

/// Head-like test image: background, a bright ring (scalp / skull side of
/// the tracked boundary) and an interior with optional lesions.
struct PhantomSpec {
    int width = 128;
    int height = 128;
    double background_mean = 100.0;
    double interior_mean = 450.0;
    double ring_mean = 700.0;
    Ellipse outer{63.5, 63.5, 48.0, 56.0};
    Ellipse inner{63.5, 63.5, 42.0, 50.0};
    std::vector<Lesion> lesions{{{74.0, 54.0}, 9.0, -300.0}};
    double noise_sigma = 20.0;
    int num_timepoints = 10;
    int num_slices = 1;
    /// Interior scaling (1 - dip) from timepoint 5 on, mimicking the bolus.
    double bolus_dip_fraction = 0.3;
    std::uint64_t rng_seed = 20190630;
    TruthRegion truth = TruthRegion::OuterEllipse;

    void validate() const {
        const auto fail = [](const std::string& why) { throw InvalidSpec("phantom: " + why); };
        if (width < 3 || height < 3) fail("image must be at least 3x3");
        if (!(outer.ax > 0.0 && outer.ay > 0.0 && inner.ax > 0.0 && inner.ay > 0.0))
            fail("semi-axes must be positive");
        if (outer.cx - outer.ax <= 0.0 || outer.cx + outer.ax >= width - 1 ||
            outer.cy - outer.ay <= 0.0 || outer.cy + outer.ay >= height - 1)
            fail("outer ellipse must lie strictly inside the image");
        // inner strictly inside outer: every inner boundary point has outer level < 1
        for (int i = 0; i < 720; ++i) {
            const double a = 2.0 * std::numbers::pi * i / 720.0;
            const double x = inner.cx + inner.ax * std::cos(a);
            const double y = inner.cy + inner.ay * std::sin(a);
            const double u = (x - outer.cx) / outer.ax;
            const double v = (y - outer.cy) / outer.ay;
            if (u * u + v * v >= 1.0) fail("inner ellipse must lie strictly inside the outer one");
        }
        if (!(noise_sigma >= 0.0)) fail("noise_sigma must be >= 0");
        if (background_mean < 0.0 || interior_mean < 0.0 || ring_mean < 0.0)
            fail("region means must be >= 0");
        if (!(bolus_dip_fraction >= 0.0 && bolus_dip_fraction < 1.0))
            fail("bolus_dip_fraction must be in [0, 1)");
        if (num_timepoints < 1 || num_slices < 1) fail("need at least one slice and timepoint");
        for (const Lesion& l : lesions)
            if (!(l.radius > 0.0)) fail("lesion radius must be positive");
    }
};

/// Default head phantom: 128 x 128, sigma 20, one dark lesion.
inline PhantomSpec default_head_phantom() { return {}; }

/// Ring barely brighter than the interior and two large dark lesions, so no
/// single global threshold recovers the head.
inline PhantomSpec overlapping_ring_phantom() {
    PhantomSpec s;
    s.ring_mean = 520.0;
    s.interior_mean = 450.0;
    s.noise_sigma = 40.0;
    s.lesions = {{{50.0, 50.0}, 12.0, -330.0}, {{76.0, 80.0}, 11.0, -330.0}};
    return s;
}

struct Phantom {
    PerfusionStack stack;
    BinaryMask ground_truth;
};

inline BinaryMask phantom_ground_truth(const PhantomSpec& spec) {
    const Ellipse& region = spec.truth == TruthRegion::OuterEllipse ? spec.outer : spec.inner;
    BinaryMask m(spec.width, spec.height);
    for (int y = 0; y < spec.height; ++y)
        for (int x = 0; x < spec.width; ++x) m.set(x, y, region.contains(x, y));
    return m;
}

/// Noiseless intensity of a pixel at the given timepoint.
inline double phantom_mean(const PhantomSpec& spec, int x, int y, int timepoint) {
    if (!spec.outer.contains(x, y)) return spec.background_mean;
    if (!spec.inner.contains(x, y)) return spec.ring_mean;
    double v = spec.interior_mean;
    for (const Lesion& l : spec.lesions)
        if (std::hypot(x - l.center.x, y - l.center.y) <= l.radius) v += l.delta;
    v = std::max(v, 0.0);
    if (timepoint >= 5) v *= 1.0 - spec.bolus_dip_fraction;
    return v;
}

/// Builds the stack and its ground truth. Noise is drawn slice by slice,
/// timepoint by timepoint, in row-major pixel order from one generator
/// seeded with `rng_seed`; samples are rounded to 16-bit integers.
inline Phantom generate(const PhantomSpec& spec) {
    spec.validate();
    BoxMuller gauss(spec.rng_seed);
    std::vector<GrayImage> images;
    images.reserve(static_cast<std::size_t>(spec.num_slices) * spec.num_timepoints);
    for (int s = 0; s < spec.num_slices; ++s)
        for (int t = 0; t < spec.num_timepoints; ++t) {
            std::vector<double> data;
            data.reserve(static_cast<std::size_t>(spec.width) * spec.height);
            for (int y = 0; y < spec.height; ++y)
                for (int x = 0; x < spec.width; ++x) {
                    const double noise = spec.noise_sigma > 0.0 ? spec.noise_sigma * gauss() : 0.0;
                    const double v = std::round(phantom_mean(spec, x, y, t) + noise);
                    data.push_back(std::clamp(v, 0.0, 65535.0));
                }
            images.emplace_back(spec.width, spec.height, std::move(data));
        }
    return {PerfusionStack(spec.num_slices, spec.num_timepoints, std::move(images)),
            phantom_ground_truth(spec)};
}

}  // namespace cusumseg
