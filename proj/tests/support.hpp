#pragma once

// Helpers shared by the unit tests and the acceptance runner: independent
// oracles and tiny image builders.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "cusumseg/cusumseg.hpp"

namespace testsupport {

namespace fs = std::filesystem;
using namespace cusumseg;

inline GrayImage make_image(int w, int h, const std::function<double(int, int)>& f) {
    std::vector<double> data;
    data.reserve(static_cast<std::size_t>(w) * h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) data.push_back(f(x, y));
    return GrayImage(w, h, std::move(data));
}

/// Bright disk on a dark background, pixel centers tested against the radius.
inline GrayImage disk_image(int size, double cx, double cy, double r, double inside,
                            double outside) {
    return make_image(size, size, [&](int x, int y) {
        return std::hypot(x - cx, y - cy) <= r ? inside : outside;
    });
}

/// Brute-force Otsu: for every split bin, recompute both classes straight
/// from the pixels and keep the first maximum of w0 w1 (m0 - m1)^2.
inline int otsu_oracle_bin(const GrayImage& img) {
    const auto [lo, hi] = img.range();
    const double width = (hi - lo) / 256.0;
    const auto bin = [&](double v) { return std::min(255, static_cast<int>((v - lo) / width)); };
    const double n = static_cast<double>(img.size());
    double best = -1.0;
    int best_k = 0;
    for (int k = 0; k < 255; ++k) {
        double c0 = 0, c1 = 0, s0 = 0, s1 = 0;
        for (double v : img.data()) {
            if (bin(v) <= k) {
                c0 += 1;
                s0 += v;
            } else {
                c1 += 1;
                s1 += v;
            }
        }
        if (c0 == 0 || c1 == 0) continue;
        const double w0 = c0 / n, w1 = c1 / n;
        const double d = s0 / c0 - s1 / c1;
        const double var = w0 * w1 * d * d;
        if (var > best) {
            best = var;
            best_k = k;
        }
    }
    return best_k;
}

/// Random image drawn from one of a few shapes of histogram.
inline GrayImage random_image(std::mt19937_64& rng, int w, int h) {
    std::uniform_int_distribution<int> kind(0, 2);
    std::uniform_real_distribution<double> u(0.0, 1000.0);
    std::normal_distribution<double> g(0.0, 1.0);
    const int k = kind(rng);
    const double m0 = u(rng), m1 = u(rng), s = 5.0 + u(rng) / 10.0;
    std::bernoulli_distribution coin(0.3 + 0.4 * (u(rng) / 1000.0));
    return make_image(w, h, [&](int, int) {
        switch (k) {
            case 0: return u(rng);
            case 1: return std::max(0.0, (coin(rng) ? m0 : m1) + s * g(rng));
            default: return std::round(u(rng) / 4.0);
        }
    });
}

/// True when the unity pixels form a single 4-connected component.
inline bool four_connected(const BinaryMask& m) {
    std::vector<Pixel> stack;
    BinaryMask seen(m.width(), m.height());
    std::size_t reached = 0;
    for (int y = 0; y < m.height() && stack.empty(); ++y)
        for (int x = 0; x < m.width(); ++x)
            if (m.at(x, y)) {
                stack.push_back({x, y});
                break;
            }
    while (!stack.empty()) {
        const Pixel p = stack.back();
        stack.pop_back();
        if (!m.contains(p.x, p.y) || !m.at(p.x, p.y) || seen.at(p.x, p.y)) continue;
        seen.set(p.x, p.y);
        ++reached;
        stack.insert(stack.end(), {{p.x + 1, p.y}, {p.x - 1, p.y}, {p.x, p.y + 1}, {p.x, p.y - 1}});
    }
    return reached == m.count();
}

/// Scratch directory removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::uint64_t counter = 0;
        std::random_device rd;
        path_ = fs::temp_directory_path() /
                ("cusumseg_" + tag + "_" + std::to_string(rd()) + "_" + std::to_string(counter++));
        fs::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const fs::path& path() const { return path_; }
    fs::path operator/(const std::string& name) const { return path_ / name; }

private:
    fs::path path_;
};

/// Distance from p to the ellipse boundary, by dense sampling of the curve.
inline double distance_to_ellipse(const Point2D& p, const Ellipse& e) {
    double best = 1e300;
    constexpr int n = 4096;
    for (int i = 0; i < n; ++i) {
        const double a = 2.0 * 3.14159265358979323846 * i / n;
        best = std::min(best, std::hypot(p.x - (e.cx + e.ax * std::cos(a)),
                                         p.y - (e.cy + e.ay * std::sin(a))));
    }
    return best;
}

inline double percentile(std::vector<double> v, double q) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const auto idx = static_cast<std::size_t>(std::ceil(q * static_cast<double>(v.size()))) - 1;
    return v[std::min(idx, v.size() - 1)];
}

}  // namespace testsupport
