#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "gradsal/color.hpp"
#include "gradsal/superpixel.hpp"
#include "gradsal/tensor.hpp"

namespace gradsal {

struct SuperpixelColorStats {
    std::array<double, 3> color{};  // mean L, a, b
    double x = 0.0;                 // mean column
    double y = 0.0;                 // mean row
    std::size_t count = 0;
};

struct LowLevelParams {
    double alpha = 0.3;
    double sigma_color = 10.0;          // LAB units
    std::size_t neighbors = 10;         // contrast smoothing neighbourhood, self included
    std::optional<double> sigma_dist;   // pixels; unset = 0.25 * image diagonal
    // Replace the low-level map by the constant 1 + alpha.
    bool enabled = true;

    void validate() const;
};

std::vector<SuperpixelColorStats> color_stats(const LabImage& lab, const SuperpixelMap& sp);

// GC_i = sum_j |C_i - C_j|^2 over every superpixel j.
std::vector<double> global_contrast(std::span<const SuperpixelColorStats> stats);

// Each value becomes the colour-similarity weighted mean over its `neighbors`
// nearest superpixels in LAB (itself included), with weights
// exp(-d^2 / (2 sigma_color^2)). sigma_color == 0 keeps only exact colour
// matches.
std::vector<double> contrast_smooth(std::span<const double> contrast,
                                    std::span<const SuperpixelColorStats> stats,
                                    double sigma_color, std::size_t neighbors);

struct ColorDistribution {
    std::vector<double> variance;  // similarity-weighted spatial variance, pixels^2
    std::vector<double> cue;       // exp(-variance / sigma_dist^2)
};

ColorDistribution color_distribution(std::span<const SuperpixelColorStats> stats,
                                     double sigma_color, double sigma_dist);

// Min-max into [0, 1]; a constant input maps to all ones.
std::vector<double> min_max_normalize(std::span<const double> values);

// Affine map of [0, 1] features onto [alpha, 1 + alpha].
std::vector<double> alpha_range(std::span<const double> unit_values, double alpha);

// Product of the normalized contrast and distribution cues, min-max
// normalized, mapped to [alpha, 1 + alpha] and broadcast to pixels.
Map build_lowlevel(std::span<const double> smoothed_contrast, std::span<const double> cue,
                   double alpha, const SuperpixelMap& sp);

struct LowLevelResult {
    std::vector<SuperpixelColorStats> stats;
    std::vector<double> contrast;
    std::vector<double> smoothed_contrast;
    ColorDistribution distribution;
    Map map;  // in [alpha, 1 + alpha]
};

LowLevelResult lowlevel_features(const LabImage& lab, const SuperpixelMap& sp,
                                 const LowLevelParams& params);

// Elementwise product, pruned by theta, max-normalized into [0, 1].
SaliencyMap refine(const SaliencyMap& smoothed, const Map& lowlevel, double theta);

}  // namespace gradsal
