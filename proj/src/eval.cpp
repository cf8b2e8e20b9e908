#include "gradsal/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <map>

#include "gradsal/error.hpp"
#include "gradsal/image_io.hpp"

namespace gradsal {
namespace {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

BestF best_of(const std::array<double, kCutoffs>& precision,
              const std::array<double, kCutoffs>& recall, const std::array<bool, kCutoffs>& valid,
              double beta_sq) {
    BestF best;
    bool any = false;
    for (std::size_t c = 0; c < kCutoffs; ++c) {
        if (!valid[c]) continue;
        const double f = f_beta(precision[c], recall[c], beta_sq);
        if (!any || f > best.value) {
            best = {f, c};
            any = true;
        }
    }
    if (!any) throw DataError("PR curve has no valid points");
    return best;
}

}  // namespace

PRCurve pr_curve(const SaliencyMap& s, const Mask& gt) {
    if (s.height != gt.height || s.width != gt.width) {
        throw DataError("pr_curve: map is " + std::to_string(s.height) + "x" +
                        std::to_string(s.width) + " but ground truth is " +
                        std::to_string(gt.height) + "x" + std::to_string(gt.width));
    }
    std::array<std::size_t, kCutoffs> fg{}, all{};
    for (std::size_t p = 0; p < s.size(); ++p) {
        const std::uint8_t q = quantize8(s.values[p]);
        ++all[q];
        if (gt.values[p]) ++fg[q];
    }
    PRCurve curve;
    for (std::size_t q = 0; q < kCutoffs; ++q) curve.positives += fg[q];
    if (curve.positives == 0) throw DataError("pr_curve: ground truth has no foreground pixels");
    std::size_t tp = 0, predicted = 0;
    for (std::size_t c = kCutoffs; c-- > 0;) {
        tp += fg[c];
        predicted += all[c];
        curve.true_positives[c] = tp;
        curve.predicted[c] = predicted;
        curve.valid[c] = predicted > 0;
        curve.precision[c] = predicted > 0 ? static_cast<double>(tp) / static_cast<double>(predicted) : 0.0;
        curve.recall[c] = static_cast<double>(tp) / static_cast<double>(curve.positives);
    }
    return curve;
}

double f_beta(double precision, double recall, double beta_sq) {
    if (precision == recall) return precision;
    const double den = beta_sq * precision + recall;
    if (den == 0.0) return 0.0;
    return (1.0 + beta_sq) * precision * recall / den;
}

BestF best_f(const PRCurve& curve, double beta_sq) {
    return best_of(curve.precision, curve.recall, curve.valid, beta_sq);
}

ImageScore score_image(const std::string& id, const SaliencyMap& s, const Mask& gt, double beta_sq) {
    const PRCurve curve = pr_curve(s, gt);
    const BestF best = best_f(curve, beta_sq);
    ImageScore score;
    score.image_id = id;
    score.best_f = best.value;
    score.best_cutoff = best.cutoff;
    score.precision = curve.precision;
    score.recall = curve.recall;
    score.precision_valid = curve.valid;
    return score;
}

ImageScore aggregate_scores(const std::vector<ImageScore>& images, double beta_sq) {
    if (images.empty()) throw DataError("no images to aggregate");
    ImageScore mean;
    mean.image_id = "mean";
    double f_sum = 0.0;
    for (const auto& s : images) f_sum += s.best_f;
    mean.best_f = f_sum / static_cast<double>(images.size());
    for (std::size_t c = 0; c < kCutoffs; ++c) {
        double p = 0.0, r = 0.0;
        std::size_t valid = 0;
        for (const auto& s : images) {
            r += s.recall[c];
            if (s.precision_valid[c]) {
                p += s.precision[c];
                ++valid;
            }
        }
        mean.recall[c] = r / static_cast<double>(images.size());
        mean.precision_valid[c] = valid > 0;
        mean.precision[c] = valid > 0 ? p / static_cast<double>(valid) : 0.0;
    }
    mean.best_cutoff = best_of(mean.precision, mean.recall, mean.precision_valid, beta_sq).cutoff;
    return mean;
}

BatchReport batch_report(const std::filesystem::path& maps_dir,
                         const std::filesystem::path& gt_dir, double beta_sq,
                         const std::string& map_suffix) {
    namespace fs = std::filesystem;
    auto index = [](const fs::path& dir, const std::string& suffix) {
        if (!fs::is_directory(dir)) throw DataError("not a directory: " + dir.string());
        std::map<std::string, fs::path> files;
        for (const auto& entry : fs::directory_iterator(dir)) {
            if (!entry.is_regular_file() || !is_image_file(entry.path())) continue;
            std::string stem = entry.path().stem().string();
            if (stem.size() < suffix.size() ||
                stem.compare(stem.size() - suffix.size(), suffix.size(), suffix) != 0) {
                continue;
            }
            stem.resize(stem.size() - suffix.size());
            files.emplace(stem, entry.path());
        }
        return files;
    };
    const auto maps = index(maps_dir, map_suffix);
    const auto masks = index(gt_dir, "");

    BatchReport report;
    for (const auto& [id, path] : maps) {
        const auto it = masks.find(id);
        if (it == masks.end()) {
            report.unmatched.push_back(path.string());
            continue;
        }
        report.images.push_back(score_image(id, read_gray(path), read_mask(it->second), beta_sq));
    }
    for (const auto& [id, path] : masks) {
        if (!maps.count(id)) report.unmatched.push_back(path.string());
    }
    if (report.images.empty()) throw DataError("no map/ground-truth pairs found");
    report.aggregate = aggregate_scores(report.images, beta_sq);
    return report;
}

void write_report_csv(const BatchReport& report, std::ostream& out) {
    out << "image_id,best_f,best_cutoff";
    for (std::size_t c = 0; c < kCutoffs; ++c) out << ",p" << c;
    for (std::size_t c = 0; c < kCutoffs; ++c) out << ",r" << c;
    out << '\n';
    auto row = [&](const ImageScore& s) {
        out << s.image_id << ',' << format_double(s.best_f) << ',' << s.best_cutoff;
        for (std::size_t c = 0; c < kCutoffs; ++c) {
            out << ',';
            if (s.precision_valid[c]) out << format_double(s.precision[c]);
        }
        for (std::size_t c = 0; c < kCutoffs; ++c) out << ',' << format_double(s.recall[c]);
        out << '\n';
    };
    for (const auto& s : report.images) row(s);
    row(report.aggregate);
}

}  // namespace gradsal
