#include "gradsal/lowlevel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gradsal/error.hpp"

namespace gradsal {
namespace {

double color_distance_sq(const SuperpixelColorStats& a, const SuperpixelColorStats& b) {
    double d = 0.0;
    for (std::size_t c = 0; c < 3; ++c) {
        const double t = a.color[c] - b.color[c];
        d += t * t;
    }
    return d;
}

double similarity(double dist_sq, double sigma) {
    if (sigma == 0.0) return dist_sq == 0.0 ? 1.0 : 0.0;
    return std::exp(-dist_sq / (2.0 * sigma * sigma));
}

}  // namespace

void LowLevelParams::validate() const {
    if (!(alpha > 0.0 && alpha < 1.0)) throw UsageError("alpha must lie in (0, 1)");
    if (!(sigma_color >= 0.0) || !std::isfinite(sigma_color)) {
        throw UsageError("sigma_color must be finite and >= 0");
    }
    if (neighbors < 1) throw UsageError("contrast smoothing needs at least one neighbour");
    if (sigma_dist && (!(*sigma_dist > 0.0) || !std::isfinite(*sigma_dist))) {
        throw UsageError("sigma_dist must be finite and > 0");
    }
}

std::vector<SuperpixelColorStats> color_stats(const LabImage& lab, const SuperpixelMap& sp) {
    require_image(lab, "color_stats");
    if (lab.dim(1) != sp.height || lab.dim(2) != sp.width) {
        throw DataError("color_stats: image and superpixel map differ in shape");
    }
    validate_superpixels(sp, false);
    const std::size_t n = sp.height * sp.width;
    std::vector<SuperpixelColorStats> stats(sp.count());
    for (std::size_t p = 0; p < n; ++p) {
        auto& s = stats[sp.labels[p]];
        for (std::size_t c = 0; c < 3; ++c) s.color[c] += lab[c * n + p];
        s.x += static_cast<double>(p % sp.width);
        s.y += static_cast<double>(p / sp.width);
        ++s.count;
    }
    for (auto& s : stats) {
        const double inv = 1.0 / static_cast<double>(s.count);
        for (double& c : s.color) c *= inv;
        s.x *= inv;
        s.y *= inv;
    }
    return stats;
}

std::vector<double> global_contrast(std::span<const SuperpixelColorStats> stats) {
    std::vector<double> gc(stats.size(), 0.0);
    for (std::size_t i = 0; i < stats.size(); ++i) {
        for (std::size_t j = 0; j < stats.size(); ++j) gc[i] += color_distance_sq(stats[i], stats[j]);
    }
    return gc;
}

std::vector<double> contrast_smooth(std::span<const double> contrast,
                                    std::span<const SuperpixelColorStats> stats,
                                    double sigma_color, std::size_t neighbors) {
    if (contrast.size() != stats.size()) throw DataError("contrast_smooth: inputs are not aligned");
    const std::size_t k = stats.size();
    const std::size_t m = std::min(neighbors, k);
    std::vector<double> out(k);
    std::vector<std::pair<double, std::size_t>> order(k);
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < k; ++j) order[j] = {color_distance_sq(stats[i], stats[j]), j};
        // Self takes the first slot; the rest are ranked by (distance, index).
        std::swap(order[0], order[i]);
        std::partial_sort(order.begin() + 1, order.begin() + static_cast<long>(m), order.end());
        double num = 0.0, den = 0.0;
        for (std::size_t r = 0; r < m; ++r) {
            const double wgt = similarity(order[r].first, sigma_color);
            num += wgt * contrast[order[r].second];
            den += wgt;
        }
        out[i] = num / den;
    }
    return out;
}

ColorDistribution color_distribution(std::span<const SuperpixelColorStats> stats,
                                     double sigma_color, double sigma_dist) {
    if (!(sigma_dist > 0.0)) throw UsageError("sigma_dist must be > 0");
    const std::size_t k = stats.size();
    ColorDistribution out{std::vector<double>(k), std::vector<double>(k)};
    std::vector<double> w(k);
    for (std::size_t i = 0; i < k; ++i) {
        double total = 0.0, mx = 0.0, my = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            w[j] = similarity(color_distance_sq(stats[i], stats[j]), sigma_color);
            total += w[j];
            mx += w[j] * stats[j].x;
            my += w[j] * stats[j].y;
        }
        mx /= total;
        my /= total;
        double var = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            const double dx = stats[j].x - mx, dy = stats[j].y - my;
            var += w[j] * (dx * dx + dy * dy);
        }
        var /= total;
        out.variance[i] = var;
        out.cue[i] = std::exp(-var / (sigma_dist * sigma_dist));
    }
    return out;
}

std::vector<double> min_max_normalize(std::span<const double> values) {
    if (values.empty()) return {};
    const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
    const double lo = *lo_it, hi = *hi_it;
    std::vector<double> out(values.size(), 1.0);
    if (!(hi > lo)) return out;
    for (std::size_t i = 0; i < values.size(); ++i) out[i] = (values[i] - lo) / (hi - lo);
    return out;
}

std::vector<double> alpha_range(std::span<const double> unit_values, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw UsageError("alpha must lie in (0, 1)");
    std::vector<double> out(unit_values.begin(), unit_values.end());
    for (double& v : out) v += alpha;
    return out;
}

Map build_lowlevel(std::span<const double> smoothed_contrast, std::span<const double> cue,
                   double alpha, const SuperpixelMap& sp) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw UsageError("alpha must lie in (0, 1)");
    if (smoothed_contrast.size() != sp.count() || cue.size() != sp.count()) {
        throw DataError("build_lowlevel: features are not aligned with the superpixels");
    }
    const auto gc = min_max_normalize(smoothed_contrast);
    const auto dist = min_max_normalize(cue);
    std::vector<double> product(gc.size());
    for (std::size_t j = 0; j < gc.size(); ++j) product[j] = gc[j] * dist[j];
    const auto per_region = alpha_range(min_max_normalize(product), alpha);
    Map out(sp.height, sp.width);
    for (std::size_t p = 0; p < out.size(); ++p) out.values[p] = per_region[sp.labels[p]];
    return out;
}

LowLevelResult lowlevel_features(const LabImage& lab, const SuperpixelMap& sp,
                                 const LowLevelParams& params) {
    params.validate();
    LowLevelResult r;
    if (!params.enabled) {
        r.map = Map(sp.height, sp.width, 1.0 + params.alpha);
        return r;
    }
    r.stats = color_stats(lab, sp);
    r.contrast = global_contrast(r.stats);
    r.smoothed_contrast = contrast_smooth(r.contrast, r.stats, params.sigma_color, params.neighbors);
    const double diagonal = std::hypot(static_cast<double>(sp.height), static_cast<double>(sp.width));
    r.distribution = color_distribution(r.stats, params.sigma_color,
                                        params.sigma_dist.value_or(0.25 * diagonal));
    r.map = build_lowlevel(r.smoothed_contrast, r.distribution.cue, params.alpha, sp);
    return r;
}

SaliencyMap refine(const SaliencyMap& smoothed, const Map& lowlevel, double theta) {
    if (smoothed.height != lowlevel.height || smoothed.width != lowlevel.width) {
        throw DataError("refine: smoothed map and low-level map differ in shape");
    }
    SaliencyMap out(smoothed.height, smoothed.width);
    for (std::size_t p = 0; p < out.size(); ++p) {
        out.values[p] = smoothed.values[p] * lowlevel.values[p];
    }
    prune(out, theta);
    normalize_by_max(out);
    return out;
}

}  // namespace gradsal
