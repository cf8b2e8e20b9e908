#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "gradsal/color.hpp"
#include "gradsal/tensor.hpp"

namespace gradsal {

struct SuperpixelMap {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<std::uint32_t> labels;  // raster order, values in [0, count())
    std::vector<std::size_t> counts;    // pixels per label

    std::size_t count() const noexcept { return counts.size(); }
    std::uint32_t operator()(std::size_t y, std::size_t x) const { return labels[y * width + x]; }

    friend bool operator==(const SuperpixelMap&, const SuperpixelMap&) = default;
};

struct SlicParams {
    std::size_t superpixels = 100;
    double compactness = 10.0;
    std::size_t max_iterations = 10;
    bool enforce_connectivity = true;
};

// SLIC over CIELAB + position. Seeds sit at the centers of a regular grid of
// roughly `superpixels` cells; distance is
//   sqrt(d_lab^2 + (compactness / step)^2 * d_xy^2),  step = sqrt(H*W / superpixels).
// Iterates until no label changes or max_iterations is reached, then splits
// disconnected pieces and merges fragments smaller than step^2/4 pixels into
// their largest 4-adjacent neighbour.
SuperpixelMap slic(const ImageRGB& image, const SlicParams& params);
SuperpixelMap slic_lab(const LabImage& lab, const SlicParams& params);

// Checks label range, counts, nonempty labels and (optionally) 4-connectivity
// of every label. Throws DataError describing the first violation.
void validate_superpixels(const SuperpixelMap& sp, bool require_connected = true);

// Replaces every value by the mean of its superpixel.
SaliencyMap smooth(const SaliencyMap& s, const SuperpixelMap& sp);

}  // namespace gradsal
