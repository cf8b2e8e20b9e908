#include "gradsal/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "gradsal/error.hpp"

namespace gradsal {
namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& v) {
    double out = 0.0;
    const auto* end = v.data() + v.size();
    const auto [ptr, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc() || ptr != end || !std::isfinite(out)) {
        throw UsageError("config key '" + key + "': '" + v + "' is not a finite number");
    }
    return out;
}

std::uint64_t parse_uint(const std::string& key, const std::string& v) {
    std::uint64_t out = 0;
    const auto* end = v.data() + v.size();
    const auto [ptr, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc() || ptr != end) {
        throw UsageError("config key '" + key + "': '" + v + "' is not a nonnegative integer");
    }
    return out;
}

std::optional<double> parse_optional(const std::string& key, const std::string& v) {
    if (v == "auto") return std::nullopt;
    return parse_double(key, v);
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "on") return true;
    if (v == "false" || v == "0" || v == "off") return false;
    throw UsageError("config key '" + key + "': '" + v + "' is not a boolean");
}

// Shortest text that parses back to the same double.
std::string exact(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

std::string exact(const std::optional<double>& v) { return v ? exact(*v) : "auto"; }

}  // namespace

std::string to_string(OutputStage stage) {
    switch (stage) {
        case OutputStage::Raw: return "raw";
        case OutputStage::Smoothed: return "smoothed";
        case OutputStage::Refined: return "refined";
        case OutputStage::All: return "all";
    }
    return "refined";
}

OutputStage parse_stage(const std::string& text) {
    if (text == "raw") return OutputStage::Raw;
    if (text == "smoothed") return OutputStage::Smoothed;
    if (text == "refined") return OutputStage::Refined;
    if (text == "all") return OutputStage::All;
    throw UsageError("stage must be one of raw, smoothed, refined, all (got '" + text + "')");
}

void PipelineConfig::validate() const {
    saliency.validate();
    lowlevel.validate();
    if (slic.superpixels < 1) throw UsageError("superpixels must be >= 1");
    if (!(slic.compactness > 0.0)) throw UsageError("compactness must be > 0");
    if (slic.max_iterations < 1) throw UsageError("slic_iterations must be >= 1");
    if (refine_theta && !(*refine_theta >= 0.0)) throw UsageError("refine_theta must be >= 0");
    if (!(refine_relative_theta >= 0.0 && refine_relative_theta <= 1.0)) {
        throw UsageError("refine_relative_theta must lie in [0, 1]");
    }
}

bool operator==(const PipelineConfig& a, const PipelineConfig& b) {
    return serialize_config(a) == serialize_config(b);
}

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys{
        "model",        "gamma",         "epsilon",      "iterations",  "theta",
        "relative_theta", "superpixels", "compactness",  "slic_iterations", "alpha",
        "sigma_color",  "sigma_dist",    "neighbors",    "lowlevel",    "refine_theta",
        "refine_relative_theta", "stage", "seed"};
    return keys;
}

void set_config_value(PipelineConfig& c, const std::string& key, const std::string& raw) {
    const std::string v = trim(raw);
    if (key == "model") c.model = v;
    else if (key == "gamma") c.saliency.gamma = parse_double(key, v);
    else if (key == "epsilon") c.saliency.epsilon = parse_optional(key, v);
    else if (key == "iterations") c.saliency.iterations = parse_uint(key, v);
    else if (key == "theta") c.saliency.theta = parse_optional(key, v);
    else if (key == "relative_theta") c.saliency.relative_theta = parse_double(key, v);
    else if (key == "superpixels") c.slic.superpixels = parse_uint(key, v);
    else if (key == "compactness") c.slic.compactness = parse_double(key, v);
    else if (key == "slic_iterations") c.slic.max_iterations = parse_uint(key, v);
    else if (key == "alpha") c.lowlevel.alpha = parse_double(key, v);
    else if (key == "sigma_color") c.lowlevel.sigma_color = parse_double(key, v);
    else if (key == "sigma_dist") c.lowlevel.sigma_dist = parse_optional(key, v);
    else if (key == "neighbors") c.lowlevel.neighbors = parse_uint(key, v);
    else if (key == "lowlevel") c.lowlevel.enabled = parse_bool(key, v);
    else if (key == "refine_theta") c.refine_theta = parse_optional(key, v);
    else if (key == "refine_relative_theta") c.refine_relative_theta = parse_double(key, v);
    else if (key == "stage") c.stage = parse_stage(v);
    else if (key == "seed") c.seed = parse_uint(key, v);
    else throw UsageError("unknown config key '" + key + "'");
}

PipelineConfig parse_config(const std::string& text) {
    PipelineConfig config;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw UsageError("config line " + std::to_string(line_no) + ": expected key = value");
        }
        set_config_value(config, trim(line.substr(0, eq)), line.substr(eq + 1));
    }
    config.validate();
    return config;
}

PipelineConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot read config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string serialize_config(const PipelineConfig& c) {
    std::ostringstream out;
    out << "model = " << c.model << '\n'
        << "gamma = " << exact(c.saliency.gamma) << '\n'
        << "epsilon = " << exact(c.saliency.epsilon) << '\n'
        << "iterations = " << c.saliency.iterations << '\n'
        << "theta = " << exact(c.saliency.theta) << '\n'
        << "relative_theta = " << exact(c.saliency.relative_theta) << '\n'
        << "superpixels = " << c.slic.superpixels << '\n'
        << "compactness = " << exact(c.slic.compactness) << '\n'
        << "slic_iterations = " << c.slic.max_iterations << '\n'
        << "alpha = " << exact(c.lowlevel.alpha) << '\n'
        << "sigma_color = " << exact(c.lowlevel.sigma_color) << '\n'
        << "sigma_dist = " << exact(c.lowlevel.sigma_dist) << '\n'
        << "neighbors = " << c.lowlevel.neighbors << '\n'
        << "lowlevel = " << (c.lowlevel.enabled ? "true" : "false") << '\n'
        << "refine_theta = " << exact(c.refine_theta) << '\n'
        << "refine_relative_theta = " << exact(c.refine_relative_theta) << '\n'
        << "stage = " << to_string(c.stage) << '\n'
        << "seed = " << c.seed << '\n';
    return out.str();
}

}  // namespace gradsal
