#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace persense {

// Row-major 2-D grid. x = column, y = row, origin top-left.
template <typename T, typename Tag = void>
class Grid {
public:
    Grid() = default;
    Grid(int width, int height, T fill = T{})
        : width_(width), height_(height),
          values_(static_cast<size_t>(width) * static_cast<size_t>(height), fill) {
        if (width < 1 || height < 1)
            throw std::invalid_argument("grid dimensions must be >= 1");
    }

    int width() const { return width_; }
    int height() const { return height_; }
    size_t size() const { return values_.size(); }

    T& at(int x, int y) { return values_[idx(x, y)]; }
    const T& at(int x, int y) const { return values_[idx(x, y)]; }

    bool in_bounds(int x, int y) const {
        return x >= 0 && x < width_ && y >= 0 && y < height_;
    }

    T* data() { return values_.data(); }
    const T* data() const { return values_.data(); }
    std::vector<T>& values() { return values_; }
    const std::vector<T>& values() const { return values_; }

    bool same_shape_as(const Grid& other) const {
        return width_ == other.width_ && height_ == other.height_;
    }

    friend bool operator==(const Grid& a, const Grid& b) {
        return a.width_ == b.width_ && a.height_ == b.height_ && a.values_ == b.values_;
    }

private:
    size_t idx(int x, int y) const {
        return static_cast<size_t>(y) * static_cast<size_t>(width_) + static_cast<size_t>(x);
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<T> values_;
};

struct GrayTag {};
struct BinaryTag {};

using ScalarGrid = Grid<double>;
using GrayGrid = Grid<std::uint8_t, GrayTag>;   // values in [0,255]
using BinaryGrid = Grid<std::uint8_t, BinaryTag>;  // values in {0,1}

struct PixelPoint {
    int x = 0;
    int y = 0;

    friend bool operator==(const PixelPoint& a, const PixelPoint& b) {
        return a.x == b.x && a.y == b.y;
    }
    friend bool operator<(const PixelPoint& a, const PixelPoint& b) {
        return a.y != b.y ? a.y < b.y : a.x < b.x;  // row-major order
    }
};

// Inclusive pixel bounds.
struct BBox {
    int x0 = 0;
    int y0 = 0;
    int x1 = 0;
    int y1 = 0;

    int width() const { return x1 - x0 + 1; }
    int height() const { return y1 - y0 + 1; }
    long long area() const { return static_cast<long long>(width()) * height(); }
    double aspect() const { return static_cast<double>(width()) / static_cast<double>(height()); }

    bool contains(const PixelPoint& p) const {
        return p.x >= x0 && p.x <= x1 && p.y >= y0 && p.y <= y1;
    }

    friend bool operator==(const BBox& a, const BBox& b) {
        return a.x0 == b.x0 && a.y0 == b.y0 && a.x1 == b.x1 && a.y1 == b.y1;
    }
};

struct Detection {
    BBox box;
    double confidence = 0.0;  // in [0,1]
    std::string label;
};

struct InstanceMask {
    BinaryGrid mask;
    long long area = 0;      // number of 1-pixels, cached
    double quality = 0.0;    // decoder mask score in [0,1]
};

// Builds a mask with the cached area computed from the pixels.
InstanceMask make_instance_mask(BinaryGrid mask, double quality);

}  // namespace persense
