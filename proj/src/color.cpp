#include "gradsal/color.hpp"

#include <cmath>

#include "gradsal/error.hpp"

namespace gradsal {
namespace {

// IEC 61966-2-1 transfer function.
double srgb_to_linear(double c) {
    return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

double lab_f(double t) {
    constexpr double eps = 216.0 / 24389.0;
    constexpr double kappa = 24389.0 / 27.0;
    return t > eps ? std::cbrt(t) : (kappa * t + 16.0) / 116.0;
}

constexpr double kWhiteX = 0.95047;
constexpr double kWhiteY = 1.0;
constexpr double kWhiteZ = 1.08883;

}  // namespace

std::array<double, 3> srgb_to_lab(double r, double g, double b) {
    const double lr = srgb_to_linear(r), lg = srgb_to_linear(g), lb = srgb_to_linear(b);
    const double x = 0.4124564 * lr + 0.3575761 * lg + 0.1804375 * lb;
    const double y = 0.2126729 * lr + 0.7151522 * lg + 0.0721750 * lb;
    const double z = 0.0193339 * lr + 0.1191920 * lg + 0.9503041 * lb;
    const double fx = lab_f(x / kWhiteX), fy = lab_f(y / kWhiteY), fz = lab_f(z / kWhiteZ);
    return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

LabImage rgb_to_lab(const ImageRGB& image) {
    require_image(image, "rgb_to_lab");
    for (double v : image.values()) {
        if (!(v >= 0.0 && v <= 1.0)) throw DataError("rgb_to_lab: pixel value outside [0, 1]");
    }
    const std::size_t h = image.dim(1), w = image.dim(2);
    LabImage lab({3, h, w});
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            const auto v = srgb_to_lab(image.at(0, y, x), image.at(1, y, x), image.at(2, y, x));
            for (std::size_t c = 0; c < 3; ++c) lab.at(c, y, x) = v[c];
        }
    }
    return lab;
}

}  // namespace gradsal
