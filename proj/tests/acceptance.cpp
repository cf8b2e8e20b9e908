// Acceptance checks 1-9. One PASS/FAIL line per criterion; exit status is
// the number of failures.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "gradsal/color.hpp"
#include "gradsal/config.hpp"
#include "gradsal/eval.hpp"
#include "gradsal/image_io.hpp"
#include "gradsal/lowlevel.hpp"
#include "gradsal/nn.hpp"
#include "gradsal/pipeline.hpp"
#include "gradsal/saliency.hpp"
#include "gradsal/superpixel.hpp"
#include "gradsal/synthetic.hpp"
#include "gradsal/train.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace gradsal;
namespace fs = std::filesystem;

namespace {

// Tolerances and sizes.
constexpr double kGradRelTol = 1e-4;
constexpr std::size_t kGradInputs = 10;
constexpr std::size_t kGradCoords = 256;
constexpr std::size_t kGradDirections = 4;
constexpr double kGradSeconds = 60.0;

constexpr std::size_t kDescentImages = 20;
constexpr std::size_t kDescentIterations = 10;
constexpr double kNonincreasingFraction = 0.95;
constexpr double kReductionRatio = 0.9;
constexpr double kReducedFraction = 0.80;
constexpr double kDescentSeconds = 120.0;

constexpr std::size_t kClampImages = 20;
constexpr double kClampFraction = 0.80;

constexpr std::size_t kOracleTrials = 50;

constexpr double kFExample = 0.7027;
constexpr double kFExampleTol = 1e-4;

constexpr std::size_t kHeldOut = 60;
constexpr double kSmoothedSlack = 0.02;
constexpr double kPipelineSeconds = 600.0;
constexpr double kQualityFloor = 0.6;
constexpr double kAccuracyFloor = 0.95;

constexpr std::size_t kImageSize = 64;
constexpr std::size_t kClasses = 4;
constexpr std::size_t kTrainCount = 1000;
constexpr std::uint64_t kTrainSeed = 1;
constexpr std::uint64_t kHeldOutSeed = 999;

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

std::map<int, std::pair<bool, std::string>> results;

void report(int id, bool pass, const std::string& detail) {
    results[id] = {pass, detail};
    std::fprintf(stderr, "[%d done]\n", id);
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

// Counts violations of the structural invariants over every run it sees.
struct InvariantLog {
    std::size_t iterates = 0;
    std::size_t maps = 0;
    std::size_t violations = 0;

    IterateObserver observer() {
        auto prev = std::make_shared<ImageRGB>();
        return [this, prev](std::size_t t, const ImageRGB& x) {
            if (t > 0) {
                ++iterates;
                for (std::size_t i = 0; i < x.size(); ++i) {
                    if (!(x[i] <= (*prev)[i])) {
                        ++violations;
                        break;
                    }
                }
            }
            *prev = x;
        };
    }

    void check_map(const SaliencyMap& s) {
        ++maps;
        if (std::any_of(s.values.begin(), s.values.end(), [](double v) { return !(v >= 0.0); })) ++violations;
    }
};

InvariantLog invariants;

// 1. Input gradient of the clamped cost against central differences.
void gradient_check() {
    const auto start = Clock::now();
    const Network net = make_desk_network(32, 32, kClasses, 1234);
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> jitter(-0.05, 0.05);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double h = 1e-6;
    double worst = 0.0;
    for (std::size_t n = 0; n < kGradInputs; ++n) {
        const ImageRGB x0 = testing::random_image(32, 32, rng, 0.1, 0.9);
        const Logits o = forward(net, x0);
        const std::size_t l = argmax(o);
        ImageRGB x = x0;
        for (double& v : x.values()) v += jitter(rng);
        const Tensor g = backward_to_input(net, x, output_error(forward(net, x), o, l, 1.0));
        auto f = [&](const ImageRGB& p) { return cost(forward(net, p), o, l, 1.0); };

        std::vector<double> analytic, numeric;
        std::uniform_int_distribution<std::size_t> pick(0, x.size() - 1);
        for (std::size_t k = 0; k < kGradCoords; ++k) {
            const std::size_t i = pick(rng);
            ImageRGB xp = x, xm = x;
            xp[i] += h;
            xm[i] -= h;
            numeric.push_back((f(xp) - f(xm)) / (2 * h));
            analytic.push_back(g[i]);
        }
        for (std::size_t k = 0; k < kGradDirections; ++k) {
            Tensor d(x.shape());
            double dot = 0.0;
            for (std::size_t i = 0; i < d.size(); ++i) {
                d[i] = normal(rng);
                dot += d[i] * g[i];
            }
            ImageRGB xp = x, xm = x;
            for (std::size_t i = 0; i < d.size(); ++i) {
                xp[i] += h * d[i];
                xm[i] -= h * d[i];
            }
            numeric.push_back((f(xp) - f(xm)) / (2 * h));
            analytic.push_back(dot);
        }
        double diff = 0.0, na = 0.0, nn = 0.0;
        for (std::size_t k = 0; k < analytic.size(); ++k) {
            diff += (analytic[k] - numeric[k]) * (analytic[k] - numeric[k]);
            na += analytic[k] * analytic[k];
            nn += numeric[k] * numeric[k];
        }
        worst = std::max(worst, std::sqrt(diff) / std::max(std::sqrt(std::max(na, nn)), 1e-300));
    }
    const double secs = since(start);
    report(1, worst < kGradRelTol && secs < kGradSeconds,
           fmt("max relative error %.3g over %zu inputs (tol %.0e), %.1fs", worst, kGradInputs, kGradRelTol, secs));
}

// 5. Smoothing, contrast and PR counts against brute force.
void oracle_check() {
    std::mt19937_64 rng(55);
    std::uniform_int_distribution<std::size_t> dim(2, 16), kk(1, 50);
    std::size_t smooth_bad = 0, contrast_bad = 0, pr_bad = 0;
    for (std::size_t t = 0; t < kOracleTrials; ++t) {
        const std::size_t h = dim(rng), w = dim(rng);
        const std::size_t k = std::min(kk(rng), h * w);
        const ImageRGB img = testing::random_image(h, w, rng);
        const LabImage lab = rgb_to_lab(img);
        const SuperpixelMap sp = slic_lab(lab, SlicParams{k, 10.0, 10, true});
        const SaliencyMap s = testing::random_map(h, w, rng);
        if (!(smooth(s, sp) == oracle::smooth(s, sp))) ++smooth_bad;

        const auto stats = color_stats(lab, sp);
        if (global_contrast(stats) != oracle::global_contrast(stats)) ++contrast_bad;

        Mask gt(h, w);
        std::bernoulli_distribution b(0.35);
        for (auto& v : gt.values) v = b(rng);
        gt.values[0] = 1;
        const PRCurve c = pr_curve(s, gt);
        for (std::size_t cut = 0; cut < kCutoffs; ++cut) {
            const auto o = oracle::pr_counts(s, gt, cut);
            if (o.true_positives != c.true_positives[cut] || o.predicted != c.predicted[cut]) {
                ++pr_bad;
                break;
            }
        }
    }
    // Random contrast sets up to the K bound, independent of segmentation.
    std::uniform_real_distribution<double> L(0.0, 100.0), ab(-110.0, 110.0);
    for (std::size_t t = 0; t < kOracleTrials; ++t) {
        std::vector<SuperpixelColorStats> stats(kk(rng));
        for (auto& s : stats) s.color = {L(rng), ab(rng), ab(rng)};
        if (global_contrast(stats) != oracle::global_contrast(stats)) ++contrast_bad;
    }
    report(5, smooth_bad == 0 && contrast_bad == 0 && pr_bad == 0,
           fmt("mismatches: smoothing %zu/%zu, contrast %zu/%zu, PR counts %zu/%zu", smooth_bad, kOracleTrials,
               contrast_bad, 2 * kOracleTrials, pr_bad, kOracleTrials));
}

// 6. F-beta arithmetic.
void fbeta_check() {
    bool fixed = true;
    for (double p = 0.0; p <= 1.0; p += 1.0 / 64.0) fixed = fixed && f_beta(p, p, kDefaultBetaSq) == p;
    for (double p : {0.1, 0.3, 0.77, 0.9999}) fixed = fixed && f_beta(p, p, kDefaultBetaSq) == p;
    const double f = f_beta(0.8, 0.5, 0.3);
    report(6, fixed && std::fabs(f - kFExample) <= kFExampleTol,
           fmt("P=R fixed point %s, F(0.8, 0.5, 0.3) = %.6f", fixed ? "exact" : "broken", f));
}

struct Trained {
    Network net;
    double train_accuracy = 0.0;
    double held_out_accuracy = 0.0;
    double seconds = 0.0;
};

Trained train_reference(const std::vector<SyntheticSample>& held_out) {
    const auto start = Clock::now();
    const auto data = to_training_samples(generate_dataset(kTrainCount, kClasses, kImageSize, kTrainSeed));
    TrainOptions opts;
    opts.epochs = 8;
    opts.learning_rate = 0.01;
    opts.batch_size = 16;
    opts.momentum = 0.9;
    opts.seed = kTrainSeed;
    Trained t;
    t.net = train(make_desk_network(kImageSize, kImageSize, kClasses, kTrainSeed), data, opts).net;
    t.net.class_names = synthetic_class_names();
    t.train_accuracy = accuracy(t.net, data);
    t.held_out_accuracy = accuracy(t.net, to_training_samples(held_out));
    t.seconds = since(start);
    return t;
}

std::vector<const SyntheticSample*> correctly_classified(const Network& net,
                                                         const std::vector<SyntheticSample>& data,
                                                         std::size_t want) {
    std::vector<const SyntheticSample*> out;
    for (const auto& s : data) {
        if (out.size() == want) break;
        if (argmax(forward(net, s.image)) == s.label) out.push_back(&s);
    }
    return out;
}

// 2. Cost descent with the probed step.
void descent_check(const Network& net, const std::vector<SyntheticSample>& held_out) {
    const auto start = Clock::now();
    const auto images = correctly_classified(net, held_out, kDescentImages);
    std::size_t steps = 0, nonincreasing = 0, reduced = 0;
    SaliencyParams p;
    p.iterations = kDescentIterations;
    for (const SyntheticSample* s : images) {
        const SaliencyRun run = run_saliency(net, s->image, p, invariants.observer());
        invariants.check_map(run.raw);
        for (std::size_t t = 0; t + 1 < run.cost_trace.size(); ++t) {
            ++steps;
            if (run.cost_trace[t + 1] <= run.cost_trace[t]) ++nonincreasing;
        }
        if (run.cost_trace.back() <= kReductionRatio * run.cost_trace.front()) ++reduced;
    }
    const double frac_steps = steps ? static_cast<double>(nonincreasing) / static_cast<double>(steps) : 0.0;
    const double frac_reduced = images.empty() ? 0.0 : static_cast<double>(reduced) / static_cast<double>(images.size());
    const double secs = since(start);
    report(2,
           images.size() >= kDescentImages && frac_steps >= kNonincreasingFraction &&
               frac_reduced >= kReducedFraction && secs < kDescentSeconds,
           fmt("%zu images, nonincreasing steps %.3f (need %.2f), final <= %.1f x initial on %.3f (need %.2f), %.1fs",
               images.size(), frac_steps, kNonincreasingFraction, kReductionRatio, frac_reduced, kReducedFraction,
               secs));
}

// 3. Clamping keeps the other outputs closer to their baseline. Both runs of a
// pair use the step probed for gamma = 1.
void clamp_check(const Network& net, const std::vector<SyntheticSample>& held_out) {
    const auto images = correctly_classified(net, held_out, kClampImages);
    std::size_t smaller = 0;
    double mean_on = 0.0, mean_off = 0.0;
    for (const SyntheticSample* s : images) {
        SaliencyParams on;
        on.gamma = 1.0;
        const SaliencyRun a = run_saliency(net, s->image, on, invariants.observer());
        SaliencyParams off = on;
        off.gamma = 0.0;
        off.epsilon = a.epsilon;
        const SaliencyRun b = run_saliency(net, s->image, off, invariants.observer());
        invariants.check_map(a.raw);
        invariants.check_map(b.raw);
        const double pa = clamp_penalty(a.final_logits, a.baseline, a.label);
        const double pb = clamp_penalty(b.final_logits, b.baseline, b.label);
        mean_on += pa;
        mean_off += pb;
        if (pa < pb) ++smaller;
    }
    const double n = static_cast<double>(std::max<std::size_t>(images.size(), 1));
    const double frac = static_cast<double>(smaller) / n;
    report(3, images.size() >= kClampImages && frac >= kClampFraction,
           fmt("penalty smaller with gamma=1 on %.3f of %zu images (need %.2f); mean %.4g vs %.4g", frac,
               images.size(), kClampFraction, mean_on / n, mean_off / n));
}

struct RunFiles {
    std::string maps;  // every PNG in name order, concatenated
    std::string csv_raw, csv_smoothed, csv_refined;
    double mean_raw = 0.0, mean_smoothed = 0.0, mean_refined = 0.0;
    bool ok = true;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

RunFiles batch_run(const Network& net, const fs::path& images, const fs::path& masks,
                   const std::vector<BatchItem>& items, const fs::path& out) {
    PipelineConfig config;
    config.stage = OutputStage::All;
    BatchOptions opts;
    const auto outcomes = run_batch(config, net, items, out, opts);
    RunFiles r;
    for (const auto& o : outcomes) r.ok = r.ok && o.ok;
    std::vector<fs::path> pngs;
    for (const auto& e : fs::directory_iterator(out)) {
        if (e.path().extension() == ".png") pngs.push_back(e.path());
    }
    std::sort(pngs.begin(), pngs.end());
    for (const auto& p : pngs) r.maps += p.filename().string() + '\n' + slurp(p);
    auto score = [&](const std::string& suffix, std::string& csv, double& mean) {
        const BatchReport rep = batch_report(out, masks, kDefaultBetaSq, suffix);
        for (const auto& s : rep.images) {
            invariants.check_map(read_gray(out / (s.image_id + suffix + ".png")));
        }
        std::ostringstream os;
        write_report_csv(rep, os);
        csv = os.str();
        mean = rep.aggregate.best_f;
    };
    score("_raw", r.csv_raw, r.mean_raw);
    score("_smoothed", r.csv_smoothed, r.mean_smoothed);
    score("_refined", r.csv_refined, r.mean_refined);
    (void)images;
    return r;
}

// 7, 8 and 9 share two batch runs over the held-out set.
void pipeline_checks(const Trained& trained, const std::vector<SyntheticSample>& held_out) {
    testing::TempDir work("acceptance");
    const fs::path images = work.path() / "data" / "images", masks = work.path() / "data" / "masks";
    write_dataset(held_out, work.path() / "data");
    std::vector<BatchItem> items;
    for (const auto& e : fs::directory_iterator(images)) items.push_back({e.path().stem().string(), e.path()});
    std::sort(items.begin(), items.end(), [](const BatchItem& a, const BatchItem& b) { return a.image_id < b.image_id; });

    const auto start = Clock::now();
    const RunFiles first = batch_run(trained.net, images, masks, items, work.path() / "run1");
    const double secs = since(start);
    report(7,
           first.ok && first.mean_smoothed >= first.mean_raw &&
               first.mean_refined >= first.mean_smoothed - kSmoothedSlack && secs < kPipelineSeconds,
           fmt("mean best-F raw %.4f, smoothed %.4f, refined %.4f over %zu images, %.1fs", first.mean_raw,
               first.mean_smoothed, first.mean_refined, items.size(), secs));
    report(8, first.ok && first.mean_refined >= kQualityFloor && trained.held_out_accuracy >= kAccuracyFloor,
           fmt("refined %.4f (floor %.2f); accuracy held-out %.4f, train %.4f (need %.2f); training %.1fs",
               first.mean_refined, kQualityFloor, trained.held_out_accuracy, trained.train_accuracy, kAccuracyFloor,
               trained.seconds));

    const RunFiles second = batch_run(trained.net, images, masks, items, work.path() / "run2");
    const bool same = first.maps == second.maps && first.csv_raw == second.csv_raw &&
                      first.csv_smoothed == second.csv_smoothed && first.csv_refined == second.csv_refined;
    report(9, same && second.ok,
           fmt("maps (%zu bytes) and evaluation CSVs %s", first.maps.size(), same ? "bit-identical" : "differ"));
}

}  // namespace

int main() {
    gradient_check();

    const auto held_out = generate_dataset(kHeldOut, kClasses, kImageSize, kHeldOutSeed);
    const Trained trained = train_reference(held_out);
    descent_check(trained.net, held_out);
    clamp_check(trained.net, held_out);
    oracle_check();
    fbeta_check();
    pipeline_checks(trained, held_out);
    report(4, invariants.violations == 0 && invariants.iterates > 0,
           fmt("%zu violations over %zu iterates and %zu maps", invariants.violations, invariants.iterates,
               invariants.maps));
    int failures = 0;
    for (const auto& [id, r] : results) {
        std::printf("criterion %d: %s  %s\n", id, r.first ? "PASS" : "FAIL", r.second.c_str());
        if (!r.first) ++failures;
    }
    std::printf("%d of %zu criteria failed\n", failures, results.size());
    return failures;
}
