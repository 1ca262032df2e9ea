#pragma once

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace cusumseg {

/// Row-major boolean image. Unity marks the region of interest.
class BinaryMask {
public:
    BinaryMask() = default;

    BinaryMask(int width, int height, bool value = false)
        : width_(width), height_(height),
          bits_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height),
                value ? 1 : 0) {
        if (width < 1 || height < 1) throw std::invalid_argument("BinaryMask: empty dimensions");
    }

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    std::size_t size() const noexcept { return bits_.size(); }

    bool contains(int x, int y) const noexcept {
        return x >= 0 && y >= 0 && x < width_ && y < height_;
    }

    bool at(int x, int y) const { return bits_[index(x, y)] != 0; }
    void set(int x, int y, bool v = true) { bits_[index(x, y)] = v ? 1 : 0; }

    bool operator[](std::size_t i) const { return bits_[i] != 0; }

    std::size_t count() const {
        return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), 1));
    }

    friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

private:
    std::size_t index(int x, int y) const {
        return static_cast<std::size_t>(y) * width_ + x;
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<unsigned char> bits_;
};

}  // namespace cusumseg
