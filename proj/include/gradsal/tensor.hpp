#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace gradsal {

// Dense row-major tensor of doubles.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0);
    Tensor(std::vector<std::size_t> shape, std::vector<double> data);

    const std::vector<std::size_t>& shape() const noexcept { return shape_; }
    std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    std::span<double> data() noexcept { return data_; }
    std::span<const double> data() const noexcept { return data_; }
    std::vector<double>& values() noexcept { return data_; }
    const std::vector<double>& values() const noexcept { return data_; }

    double& operator[](std::size_t i) noexcept { return data_[i]; }
    double operator[](std::size_t i) const noexcept { return data_[i]; }

    // Indexing for rank-3 (channel, row, column) tensors.
    double& at(std::size_t c, std::size_t y, std::size_t x) {
        return data_[(c * shape_[1] + y) * shape_[2] + x];
    }
    double at(std::size_t c, std::size_t y, std::size_t x) const {
        return data_[(c * shape_[1] + y) * shape_[2] + x];
    }

    void reshape(std::vector<std::size_t> shape);
    bool all_finite() const noexcept;

    friend bool operator==(const Tensor&, const Tensor&) = default;

private:
    std::vector<std::size_t> shape_;
    std::vector<double> data_;
};

std::size_t shape_volume(const std::vector<std::size_t>& shape);
std::string shape_string(const std::vector<std::size_t>& shape);

// An RGB image stored channel-major as a {3, height, width} tensor with
// values in [0, 1].
using ImageRGB = Tensor;

ImageRGB make_image(std::size_t height, std::size_t width, double fill = 0.0);
void require_image(const ImageRGB& image, const char* what);

// Single-channel H x W field of doubles. Raw, smoothed and refined saliency
// maps and the low-level map all use this type.
struct Map {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<double> values;

    Map() = default;
    Map(std::size_t h, std::size_t w, double fill = 0.0)
        : height(h), width(w), values(h * w, fill) {}

    std::size_t size() const noexcept { return values.size(); }
    double& operator()(std::size_t y, std::size_t x) { return values[y * width + x]; }
    double operator()(std::size_t y, std::size_t x) const { return values[y * width + x]; }

    friend bool operator==(const Map&, const Map&) = default;
};

using SaliencyMap = Map;

// Binary foreground mask, H x W, nonzero = foreground.
struct Mask {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<unsigned char> values;

    Mask() = default;
    Mask(std::size_t h, std::size_t w) : height(h), width(w), values(h * w, 0) {}

    std::size_t size() const noexcept { return values.size(); }
    std::size_t count() const noexcept;
    bool operator()(std::size_t y, std::size_t x) const { return values[y * width + x] != 0; }

    friend bool operator==(const Mask&, const Mask&) = default;
};

// Max-normalizes in place into [0, 1]. An all-zero (or nonpositive) map is
// left untouched.
void normalize_by_max(Map& map);

// max(v - threshold, 0) elementwise.
void prune(Map& map, double threshold);

double max_value(const Map& map);

}  // namespace gradsal
