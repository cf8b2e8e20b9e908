// gradsal: train, gen-data, saliency, eval, report.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "gradsal/checkpoint.hpp"
#include "gradsal/config.hpp"
#include "gradsal/error.hpp"
#include "gradsal/eval.hpp"
#include "gradsal/image_io.hpp"
#include "gradsal/nn.hpp"
#include "gradsal/pipeline.hpp"
#include "gradsal/synthetic.hpp"
#include "gradsal/train.hpp"

namespace fs = std::filesystem;
using namespace gradsal;

namespace {

struct TrainArgs {
    fs::path train_dir;
    fs::path out_model;
    std::size_t epochs = 20;
    double lr = 0.01;
    std::uint64_t seed = 1;
    std::size_t batch_size = 16;
    double momentum = 0.9;
};

struct GenArgs {
    fs::path out_dir;
    std::size_t count = 400;
    std::size_t classes = 4;
    std::size_t size = 64;
    std::uint64_t seed = 1;
};

struct SaliencyArgs {
    std::string model;
    fs::path config;
    fs::path image;
    fs::path image_dir;
    fs::path out_dir;
    std::size_t jobs = 0;
    bool emit_intermediate = false;
    bool emit_labels = false;
    // Flag overrides, applied on top of the config file in this order.
    std::map<std::string, std::string> overrides;
};

struct EvalArgs {
    fs::path maps;
    fs::path gt;
    fs::path out_csv;
    double beta_sq = kDefaultBetaSq;
    std::string stage = "refined";
};

struct ReportArgs {
    fs::path run_dir;
    fs::path out_csv;
};

int run_train(const TrainArgs& a) {
    const auto labeled = read_labeled_dir(a.train_dir);
    std::size_t classes = 0;
    for (const auto& item : labeled) classes = std::max(classes, item.label + 1);
    std::vector<std::string> names(classes);
    std::vector<Sample> samples;
    for (const auto& item : labeled) {
        samples.push_back({item.image, item.label});
        if (names[item.label].empty()) names[item.label] = item.class_name;
    }
    for (std::size_t k = 0; k < classes; ++k) {
        if (names[k].empty()) names[k] = std::to_string(k);
    }
    const ImageRGB& first = samples.front().image;
    Network net = make_desk_network(first.dim(1), first.dim(2), classes, a.seed);
    net.class_names = names;

    TrainOptions opts;
    opts.epochs = a.epochs;
    opts.learning_rate = a.lr;
    opts.seed = a.seed;
    opts.batch_size = a.batch_size;
    opts.momentum = a.momentum;
    const TrainResult result = train(std::move(net), samples, opts);
    for (std::size_t e = 0; e < result.epoch_loss.size(); ++e) {
        std::cout << "epoch " << e + 1 << " loss " << result.epoch_loss[e] << " accuracy "
                  << result.epoch_accuracy[e] << '\n';
    }
    std::cout << "final training accuracy " << accuracy(result.net, samples) << '\n';
    save_network(result.net, a.out_model);
    std::cout << "wrote " << a.out_model.string() << '\n';
    return 0;
}

int run_gen(const GenArgs& a) {
    const auto data = generate_dataset(a.count, a.classes, a.size, a.seed);
    write_dataset(data, a.out_dir);
    std::cout << "wrote " << data.size() << " samples to " << a.out_dir.string() << '\n';
    return 0;
}

int run_saliency_cmd(SaliencyArgs a) {
    PipelineConfig config = a.config.empty() ? PipelineConfig{} : load_config(a.config);
    for (const auto& [key, value] : a.overrides) set_config_value(config, key, value);
    if (!a.model.empty()) config.model = a.model;
    if (config.model.empty()) {
        if (const char* env = std::getenv("GRADSAL_MODEL")) config.model = env;
    }
    if (config.model.empty()) throw UsageError("no model given (--model, config 'model' or GRADSAL_MODEL)");
    config.validate();
    if (a.image.empty() == a.image_dir.empty()) throw UsageError("pass exactly one of --image or --image-dir");

    const Network net = load_network(config.model);
    std::vector<BatchItem> items;
    if (!a.image.empty()) {
        items.push_back({a.image.stem().string(), a.image});
    } else {
        if (!fs::is_directory(a.image_dir)) throw DataError("not a directory: " + a.image_dir.string());
        for (const auto& entry : fs::directory_iterator(a.image_dir)) {
            if (entry.is_regular_file() && is_image_file(entry.path())) {
                items.push_back({entry.path().stem().string(), entry.path()});
            }
        }
        std::sort(items.begin(), items.end(),
                  [](const BatchItem& x, const BatchItem& y) { return x.image_id < y.image_id; });
        if (items.empty()) throw DataError("no images in " + a.image_dir.string());
    }

    BatchOptions options;
    options.jobs = a.jobs ? a.jobs : std::max(1u, std::thread::hardware_concurrency());
    options.emit_intermediate = a.emit_intermediate;
    options.emit_labels = a.emit_labels;
    const auto outcomes = run_batch(config, net, items, a.out_dir, options);

    int status = 0;
    std::vector<TimingRow> rows;
    for (const auto& o : outcomes) {
        if (o.ok) {
            rows.push_back({o.image_id, o.timings});
        } else {
            std::cerr << o.image_id << ": " << o.error << '\n';
            status = std::max(status, o.exit_code);
        }
    }
    if (!rows.empty()) {
        std::ofstream csv(a.out_dir / "timing.csv", std::ios::trunc);
        write_timing_csv(rows, csv);
    }
    std::cout << rows.size() << " of " << items.size() << " images processed into "
              << a.out_dir.string() << '\n';
    return status;
}

int run_eval(const EvalArgs& a) {
    const std::string suffix = a.stage == "none" ? "" : "_" + a.stage;
    if (a.stage != "none") parse_stage(a.stage);
    const BatchReport report = batch_report(a.maps, a.gt, a.beta_sq, suffix);
    for (const auto& u : report.unmatched) std::cerr << "unmatched: " << u << '\n';
    if (a.out_csv.empty()) {
        write_report_csv(report, std::cout);
    } else {
        std::ofstream out(a.out_csv, std::ios::trunc);
        if (!out) throw DataError("cannot write " + a.out_csv.string());
        write_report_csv(report, out);
        std::cout << "mean best F " << report.aggregate.best_f << " over " << report.images.size()
                  << " images\n";
    }
    return 0;
}

int run_report(const ReportArgs& a) {
    const auto rows = read_timing_sidecars(a.run_dir);
    if (a.out_csv.empty()) {
        write_timing_csv(rows, std::cout);
    } else {
        std::ofstream out(a.out_csv, std::ios::trunc);
        if (!out) throw DataError("cannot write " + a.out_csv.string());
        write_timing_csv(rows, out);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Gradient-descent saliency maps from a classification network"};
    app.require_subcommand(1);

    TrainArgs train_args;
    auto* train_cmd = app.add_subcommand("train", "Train the classification network");
    train_cmd->add_option("--train-dir", train_args.train_dir, "Directory written by gen-data")->required();
    train_cmd->add_option("--out-model", train_args.out_model, "Checkpoint to write")->required();
    train_cmd->add_option("--epochs", train_args.epochs)->capture_default_str();
    train_cmd->add_option("--lr", train_args.lr, "Learning rate")->capture_default_str();
    train_cmd->add_option("--seed", train_args.seed)->capture_default_str();
    train_cmd->add_option("--batch-size", train_args.batch_size)->capture_default_str();
    train_cmd->add_option("--momentum", train_args.momentum)->capture_default_str();

    GenArgs gen_args;
    auto* gen_cmd = app.add_subcommand("gen-data", "Generate a synthetic labeled dataset with masks");
    gen_cmd->add_option("--out-dir", gen_args.out_dir)->required();
    gen_cmd->add_option("--count", gen_args.count)->capture_default_str();
    gen_cmd->add_option("--classes", gen_args.classes)->capture_default_str();
    gen_cmd->add_option("--size", gen_args.size)->capture_default_str();
    gen_cmd->add_option("--seed", gen_args.seed)->capture_default_str();

    SaliencyArgs sal_args;
    auto* sal_cmd = app.add_subcommand("saliency", "Compute raw, smoothed and refined saliency maps");
    sal_cmd->add_option("--model", sal_args.model, "Checkpoint (default: config or $GRADSAL_MODEL)");
    sal_cmd->add_option("--config", sal_args.config, "key = value configuration file");
    sal_cmd->add_option("--image", sal_args.image);
    sal_cmd->add_option("--image-dir", sal_args.image_dir);
    sal_cmd->add_option("--out-dir", sal_args.out_dir)->required();
    sal_cmd->add_option("--jobs", sal_args.jobs, "Worker threads (0 = hardware)");
    sal_cmd->add_flag("--emit-intermediate", sal_args.emit_intermediate,
                      "Also write contrast, distribution and low-level maps");
    sal_cmd->add_flag("--emit-labels", sal_args.emit_labels, "Also write 16-bit superpixel labels");
    const std::pair<const char*, const char*> overrides[] = {
        {"--gamma", "gamma"},          {"--epsilon", "epsilon"},        {"--iters", "iterations"},
        {"--theta", "theta"},          {"--superpixels", "superpixels"}, {"--compactness", "compactness"},
        {"--alpha", "alpha"},          {"--sigma-color", "sigma_color"}, {"--sigma-dist", "sigma_dist"},
        {"--stage", "stage"},          {"--refine-theta", "refine_theta"}};
    for (const auto& [flag, key] : overrides) {
        sal_cmd->add_option_function<std::string>(
            flag, [&sal_args, k = std::string(key)](const std::string& v) { sal_args.overrides[k] = v; },
            std::string("Overrides config key '") + key + "'");
    }

    EvalArgs eval_args;
    auto* eval_cmd = app.add_subcommand("eval", "PR curves and best F-beta against ground-truth masks");
    eval_cmd->add_option("--maps", eval_args.maps)->required();
    eval_cmd->add_option("--gt", eval_args.gt)->required();
    eval_cmd->add_option("--beta-sq", eval_args.beta_sq)->capture_default_str();
    eval_cmd->add_option("--out-csv", eval_args.out_csv);
    eval_cmd->add_option("--stage", eval_args.stage,
                         "Map file suffix to evaluate: raw, smoothed, refined, or none")
        ->capture_default_str();

    ReportArgs report_args;
    auto* report_cmd = app.add_subcommand("report", "Per-stage timing CSV from a saliency output directory");
    report_cmd->add_option("--run-dir", report_args.run_dir)->required();
    report_cmd->add_option("--out-csv", report_args.out_csv);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : static_cast<int>(ExitCode::Usage);
    }

    try {
        if (*train_cmd) return run_train(train_args);
        if (*gen_cmd) return run_gen(gen_args);
        if (*sal_cmd) return run_saliency_cmd(sal_args);
        if (*eval_cmd) return run_eval(eval_args);
        if (*report_cmd) return run_report(report_args);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return static_cast<int>(e.code());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return static_cast<int>(ExitCode::Data);
    }
    return static_cast<int>(ExitCode::Usage);
}
