#pragma once

#include <array>

#include "gradsal/tensor.hpp"

namespace gradsal {

// CIELAB image stored like ImageRGB: {3, H, W} with channels L, a, b.
using LabImage = Tensor;

// sRGB (D65) in [0,1] to CIELAB.
std::array<double, 3> srgb_to_lab(double r, double g, double b);

// Throws DataError if any value lies outside [0, 1].
LabImage rgb_to_lab(const ImageRGB& image);

}  // namespace gradsal
