#include "gradsal/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <thread>

#include <json.hpp>

#include "gradsal/color.hpp"
#include "gradsal/error.hpp"
#include "gradsal/image_io.hpp"

namespace gradsal {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

template <class F>
auto staged(const char* stage, F&& f) {
    try {
        return f();
    } catch (const UsageError& e) {
        throw UsageError(std::string(stage) + " stage: " + e.what());
    } catch (const NumericalError& e) {
        throw NumericalError(std::string(stage) + " stage: " + e.what());
    } catch (const DataError& e) {
        throw DataError(std::string(stage) + " stage: " + e.what());
    }
}

std::string format_seconds(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

nlohmann::json timings_json(const StageTimings& t) {
    return {{"saliency_s", t.saliency}, {"superpixel_s", t.superpixel}, {"smoothing_s", t.smoothing},
            {"lowlevel_s", t.lowlevel}, {"refine_s", t.refine},         {"total_s", t.total}};
}

}  // namespace

PipelineResult run_pipeline(const PipelineConfig& config, const Network& net, const ImageRGB& image) {
    config.validate();
    PipelineResult r;
    const auto start = Clock::now();

    auto t = Clock::now();
    r.run = staged("saliency", [&] { return run_saliency(net, image, config.saliency); });
    r.raw = r.run.raw;
    r.timings.saliency = seconds_since(t);
    r.stage_order.push_back("raw");

    t = Clock::now();
    const LabImage lab = staged("superpixel", [&] { return rgb_to_lab(image); });
    r.superpixels = staged("superpixel", [&] { return slic_lab(lab, config.slic); });
    r.timings.superpixel = seconds_since(t);

    t = Clock::now();
    r.smoothed = staged("smoothing", [&] { return smooth(r.raw, r.superpixels); });
    r.timings.smoothing = seconds_since(t);
    r.stage_order.push_back("smoothed");

    t = Clock::now();
    r.lowlevel = staged("lowlevel", [&] { return lowlevel_features(lab, r.superpixels, config.lowlevel); });
    r.timings.lowlevel = seconds_since(t);

    t = Clock::now();
    r.refined = staged("refine", [&] {
        SaliencyMap product(r.smoothed.height, r.smoothed.width);
        for (std::size_t p = 0; p < product.size(); ++p) {
            product.values[p] = r.smoothed.values[p] * r.lowlevel.map.values[p];
        }
        r.refine_theta = config.refine_theta ? *config.refine_theta
                                             : config.refine_relative_theta * max_value(product);
        return refine(r.smoothed, r.lowlevel.map, r.refine_theta);
    });
    r.timings.refine = seconds_since(t);
    r.stage_order.push_back("refined");

    r.timings.total = seconds_since(start);
    return r;
}

StageTimings mean_timings(const std::vector<TimingRow>& rows) {
    StageTimings m;
    if (rows.empty()) return m;
    for (const auto& row : rows) {
        m.saliency += row.timings.saliency;
        m.superpixel += row.timings.superpixel;
        m.smoothing += row.timings.smoothing;
        m.lowlevel += row.timings.lowlevel;
        m.refine += row.timings.refine;
        m.total += row.timings.total;
    }
    const double n = static_cast<double>(rows.size());
    m.saliency /= n;
    m.superpixel /= n;
    m.smoothing /= n;
    m.lowlevel /= n;
    m.refine /= n;
    m.total /= n;
    return m;
}

void write_timing_csv(const std::vector<TimingRow>& rows, std::ostream& out) {
    if (rows.empty()) throw DataError("timing report needs at least one processed image");
    out << "image_id,saliency_s,superpixel_s,smoothing_s,lowlevel_s,refine_s,total_s\n";
    auto line = [&](const std::string& id, const StageTimings& t) {
        out << id << ',' << format_seconds(t.saliency) << ',' << format_seconds(t.superpixel) << ','
            << format_seconds(t.smoothing) << ',' << format_seconds(t.lowlevel) << ','
            << format_seconds(t.refine) << ',' << format_seconds(t.total) << '\n';
    };
    for (const auto& row : rows) line(row.image_id, row.timings);
    line("mean", mean_timings(rows));
}

std::vector<BatchOutcome> run_batch(const PipelineConfig& config, const Network& net,
                                    const std::vector<BatchItem>& items,
                                    const std::filesystem::path& out_dir,
                                    const BatchOptions& options) {
    config.validate();
    std::filesystem::create_directories(out_dir);
    std::vector<BatchOutcome> outcomes(items.size());
    std::atomic<std::size_t> next{0};

    auto work = [&] {
        for (std::size_t i = next++; i < items.size(); i = next++) {
            const BatchItem& item = items[i];
            BatchOutcome& outcome = outcomes[i];
            outcome.image_id = item.image_id;
            try {
                const ImageRGB image = read_rgb(item.path);
                const PipelineResult r = run_pipeline(config, net, image);
                const auto base = out_dir / item.image_id;
                const bool all = config.stage == OutputStage::All;
                if (all || config.stage == OutputStage::Raw) write_gray8(r.raw, base.string() + "_raw.png");
                if (all || config.stage == OutputStage::Smoothed) {
                    write_gray8(r.smoothed, base.string() + "_smoothed.png");
                }
                if (all || config.stage == OutputStage::Refined) {
                    write_gray8(r.refined, base.string() + "_refined.png");
                }
                if (options.emit_intermediate && config.lowlevel.enabled) {
                    const auto& sp = r.superpixels;
                    auto broadcast = [&](const std::vector<double>& v) {
                        Map m(sp.height, sp.width);
                        const auto unit = min_max_normalize(v);
                        for (std::size_t p = 0; p < m.size(); ++p) m.values[p] = unit[sp.labels[p]];
                        return m;
                    };
                    write_gray8(broadcast(r.lowlevel.smoothed_contrast), base.string() + "_contrast.png");
                    write_gray8(broadcast(r.lowlevel.distribution.cue), base.string() + "_distribution.png");
                    Map sl = r.lowlevel.map;
                    for (double& v : sl.values) v -= config.lowlevel.alpha;
                    write_gray8(sl, base.string() + "_lowlevel.png");
                }
                if (options.emit_labels) write_labels16(r.superpixels, base.string() + "_labels.png");

                const std::string class_name =
                    r.run.label < net.class_names.size() ? net.class_names[r.run.label] : "";
                nlohmann::json sidecar = {
                    {"image", item.image_id},
                    {"label", r.run.label},
                    {"class_name", class_name},
                    {"cost_trace", r.run.cost_trace},
                    {"epsilon", r.run.epsilon},
                    {"theta", r.run.theta},
                    {"refine_theta", r.refine_theta},
                    {"superpixels", r.superpixels.count()},
                    {"stage_order", r.stage_order},
                    {"timings", timings_json(r.timings)},
                    {"wall_clock_s", r.timings.total},
                };
                std::ofstream json_out(base.string() + ".json", std::ios::trunc);
                json_out << sidecar.dump(2) << '\n';
                if (!json_out) throw DataError("failed writing sidecar for " + item.image_id);
                outcome.ok = true;
                outcome.timings = r.timings;
            } catch (const Error& e) {
                outcome.error = e.what();
                outcome.exit_code = static_cast<int>(e.code());
            } catch (const std::exception& e) {
                outcome.error = e.what();
                outcome.exit_code = static_cast<int>(ExitCode::Data);
            }
        }
    };

    const std::size_t jobs = std::max<std::size_t>(1, std::min(options.jobs, items.size()));
    std::vector<std::thread> pool;
    for (std::size_t j = 1; j < jobs; ++j) pool.emplace_back(work);
    work();
    for (auto& th : pool) th.join();
    return outcomes;
}

std::vector<TimingRow> read_timing_sidecars(const std::filesystem::path& run_dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(run_dir)) throw DataError("not a directory: " + run_dir.string());
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(run_dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    std::vector<TimingRow> rows;
    for (const auto& f : files) {
        std::ifstream in(f);
        nlohmann::json j;
        try {
            in >> j;
            const auto& t = j.at("timings");
            TimingRow row;
            row.image_id = j.at("image").get<std::string>();
            row.timings.saliency = t.at("saliency_s").get<double>();
            row.timings.superpixel = t.at("superpixel_s").get<double>();
            row.timings.smoothing = t.at("smoothing_s").get<double>();
            row.timings.lowlevel = t.at("lowlevel_s").get<double>();
            row.timings.refine = t.at("refine_s").get<double>();
            row.timings.total = t.at("total_s").get<double>();
            rows.push_back(std::move(row));
        } catch (const nlohmann::json::exception& e) {
            throw DataError("malformed sidecar " + f.string() + ": " + e.what());
        }
    }
    if (rows.empty()) throw DataError("no sidecars found in " + run_dir.string());
    return rows;
}

}  // namespace gradsal
