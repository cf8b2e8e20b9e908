#include "gradsal/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gradsal/error.hpp"

namespace gradsal {

std::size_t shape_volume(const std::vector<std::size_t>& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const std::vector<std::size_t>& shape) {
    std::string out = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) out += "x";
        out += std::to_string(shape[i]);
    }
    return out + "]";
}

Tensor::Tensor(std::vector<std::size_t> shape, double fill)
    : shape_(std::move(shape)), data_(shape_volume(shape_), fill) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    if (shape_volume(shape_) != data_.size()) {
        throw DataError("tensor data length " + std::to_string(data_.size()) +
                        " does not match shape " + shape_string(shape_));
    }
}

void Tensor::reshape(std::vector<std::size_t> shape) {
    if (shape_volume(shape) != data_.size()) {
        throw DataError("cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
    }
    shape_ = std::move(shape);
}

bool Tensor::all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

ImageRGB make_image(std::size_t height, std::size_t width, double fill) {
    return Tensor({3, height, width}, fill);
}

void require_image(const ImageRGB& image, const char* what) {
    if (image.rank() != 3 || image.dim(0) != 3 || image.dim(1) == 0 || image.dim(2) == 0) {
        throw DataError(std::string(what) + ": expected a {3,H,W} image, got " +
                        shape_string(image.shape()));
    }
}

std::size_t Mask::count() const noexcept {
    return static_cast<std::size_t>(
        std::count_if(values.begin(), values.end(), [](unsigned char v) { return v != 0; }));
}

double max_value(const Map& map) {
    double m = 0.0;
    bool first = true;
    for (double v : map.values) {
        if (first || v > m) m = v;
        first = false;
    }
    return m;
}

void normalize_by_max(Map& map) {
    const double m = max_value(map);
    if (!(m > 0.0)) return;
    for (double& v : map.values) v /= m;
}

void prune(Map& map, double threshold) {
    for (double& v : map.values) v = std::max(v - threshold, 0.0);
}

}  // namespace gradsal
