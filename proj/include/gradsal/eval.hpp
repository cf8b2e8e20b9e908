#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "gradsal/tensor.hpp"

namespace gradsal {

inline constexpr std::size_t kCutoffs = 256;
inline constexpr double kDefaultBetaSq = 0.3;

// Precision/recall at every 8-bit cutoff c: a pixel is predicted foreground
// when round(255 * s) >= c.
struct PRCurve {
    std::array<double, kCutoffs> precision{};
    std::array<double, kCutoffs> recall{};
    std::array<bool, kCutoffs> valid{};  // false when nothing is predicted
    std::array<std::size_t, kCutoffs> true_positives{};
    std::array<std::size_t, kCutoffs> predicted{};
    std::size_t positives = 0;
};

// Throws DataError on a shape mismatch or an empty ground truth.
PRCurve pr_curve(const SaliencyMap& s, const Mask& gt);

// (1 + b2) P R / (b2 P + R), 0 when P = R = 0.
double f_beta(double precision, double recall, double beta_sq = kDefaultBetaSq);

struct BestF {
    double value = 0.0;
    std::size_t cutoff = 0;  // lowest cutoff attaining the maximum
};

// Maximum F over the valid points; throws DataError when none is valid.
BestF best_f(const PRCurve& curve, double beta_sq = kDefaultBetaSq);

struct ImageScore {
    std::string image_id;
    double best_f = 0.0;
    std::size_t best_cutoff = 0;
    std::array<double, kCutoffs> precision{};
    std::array<double, kCutoffs> recall{};
    std::array<bool, kCutoffs> precision_valid{};
};

struct BatchReport {
    std::vector<ImageScore> images;
    // image_id "mean": mean best-F over images, curve averaged pointwise
    // (precision over valid entries only), cutoff = argmax F of that curve.
    ImageScore aggregate;
    std::vector<std::string> unmatched;
};

ImageScore score_image(const std::string& id, const SaliencyMap& s, const Mask& gt,
                       double beta_sq = kDefaultBetaSq);
ImageScore aggregate_scores(const std::vector<ImageScore>& images, double beta_sq = kDefaultBetaSq);

// Pairs maps and masks by file stem. Only maps whose stem ends with
// map_suffix are considered, and the suffix is dropped before matching
// (so "x_refined.png" pairs with "x.png" for suffix "_refined"). Unpaired
// files are listed, not fatal.
BatchReport batch_report(const std::filesystem::path& maps_dir,
                         const std::filesystem::path& gt_dir, double beta_sq = kDefaultBetaSq,
                         const std::string& map_suffix = "");

// image_id,best_f,best_cutoff,p0..p255,r0..r255; per-image rows sorted by id,
// then the aggregate row. Invalid precision cells are left empty.
void write_report_csv(const BatchReport& report, std::ostream& out);

}  // namespace gradsal
