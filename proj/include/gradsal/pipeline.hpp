#pragma once

#include <cstddef>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "gradsal/config.hpp"
#include "gradsal/lowlevel.hpp"
#include "gradsal/nn.hpp"
#include "gradsal/saliency.hpp"
#include "gradsal/superpixel.hpp"

namespace gradsal {

// Wall-clock seconds per stage.
struct StageTimings {
    double saliency = 0.0;    // gradient descent on the input, raw map
    double superpixel = 0.0;  // LAB conversion + SLIC
    double smoothing = 0.0;   // superpixel mean
    double lowlevel = 0.0;    // contrast, distribution, S_L
    double refine = 0.0;      // product, prune, normalize
    double total = 0.0;

    double stage_sum() const { return saliency + superpixel + smoothing + lowlevel + refine; }
};

struct PipelineResult {
    SaliencyRun run;
    SuperpixelMap superpixels;
    LowLevelResult lowlevel;
    SaliencyMap raw;
    SaliencyMap smoothed;
    SaliencyMap refined;
    double refine_theta = 0.0;
    StageTimings timings;
    std::vector<std::string> stage_order;  // stages in the order they ran
};

// raw -> smoothed -> refined. Module errors are rethrown with the failing
// stage named in the message; the exception type is kept.
PipelineResult run_pipeline(const PipelineConfig& config, const Network& net, const ImageRGB& image);

struct TimingRow {
    std::string image_id;
    StageTimings timings;
};

// image_id,saliency_s,superpixel_s,smoothing_s,lowlevel_s,refine_s,total_s
// with one row per image and a final "mean" row.
void write_timing_csv(const std::vector<TimingRow>& rows, std::ostream& out);
StageTimings mean_timings(const std::vector<TimingRow>& rows);

struct BatchItem {
    std::string image_id;
    std::filesystem::path path;
};

struct BatchOutcome {
    std::string image_id;
    bool ok = false;
    std::string error;
    int exit_code = 0;
    StageTimings timings;
};

// Runs the pipeline over every item with `jobs` worker threads sharing the
// network, writing <id>_<stage>.png and <id>.json into out_dir. Optional
// extras: intermediate low-level maps and the 16-bit label image. Results
// come back in input order regardless of scheduling.
struct BatchOptions {
    std::size_t jobs = 1;
    bool emit_intermediate = false;
    bool emit_labels = false;
};

std::vector<BatchOutcome> run_batch(const PipelineConfig& config, const Network& net,
                                    const std::vector<BatchItem>& items,
                                    const std::filesystem::path& out_dir,
                                    const BatchOptions& options);

// Reads the <id>.json sidecars of an output directory back into timing rows,
// sorted by image id.
std::vector<TimingRow> read_timing_sidecars(const std::filesystem::path& run_dir);

}  // namespace gradsal
