#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "gradsal/lowlevel.hpp"
#include "gradsal/saliency.hpp"
#include "gradsal/superpixel.hpp"

namespace gradsal {

enum class OutputStage { Raw, Smoothed, Refined, All };

std::string to_string(OutputStage stage);
OutputStage parse_stage(const std::string& text);

struct PipelineConfig {
    std::string model;
    SaliencyParams saliency;
    SlicParams slic;
    LowLevelParams lowlevel;
    std::optional<double> refine_theta;   // unset = refine_relative_theta * max
    double refine_relative_theta = 0.1;
    OutputStage stage = OutputStage::Refined;
    std::uint64_t seed = 0;

    void validate() const;
    friend bool operator==(const PipelineConfig&, const PipelineConfig&);
};

// Flat "key = value" text. '#' starts a comment. Optional numbers accept
// "auto". Unknown keys and unparsable values throw UsageError.
PipelineConfig parse_config(const std::string& text);
PipelineConfig load_config(const std::filesystem::path& path);
std::string serialize_config(const PipelineConfig& config);

// Applies one key/value pair using the same keys as the file format.
void set_config_value(PipelineConfig& config, const std::string& key, const std::string& value);

const std::vector<std::string>& config_keys();

}  // namespace gradsal
