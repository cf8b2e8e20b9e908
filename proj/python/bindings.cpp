#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <algorithm>
#include <cstring>

#include "gradsal/checkpoint.hpp"
#include "gradsal/color.hpp"
#include "gradsal/config.hpp"
#include "gradsal/error.hpp"
#include "gradsal/eval.hpp"
#include "gradsal/lowlevel.hpp"
#include "gradsal/nn.hpp"
#include "gradsal/pipeline.hpp"
#include "gradsal/saliency.hpp"
#include "gradsal/superpixel.hpp"
#include "gradsal/synthetic.hpp"
#include "gradsal/train.hpp"

namespace py = pybind11;
using namespace gradsal;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;
using LabelArray = py::array_t<std::uint32_t, py::array::c_style | py::array::forcecast>;
using MaskArray = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

Tensor to_tensor(const Array& a) {
    std::vector<std::size_t> shape(a.shape(), a.shape() + a.ndim());
    return Tensor(shape, std::vector<double>(a.data(), a.data() + a.size()));
}

Array from_tensor(const Tensor& t) {
    Array out(std::vector<py::ssize_t>(t.shape().begin(), t.shape().end()));
    std::copy(t.values().begin(), t.values().end(), out.mutable_data());
    return out;
}

ImageRGB to_image(const Array& a) {
    if (a.ndim() != 3 || a.shape(0) != 3) throw DataError("expected a (3, H, W) image array");
    return to_tensor(a);
}

Map to_map(const Array& a) {
    if (a.ndim() != 2) throw DataError("expected an (H, W) array");
    Map m(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)));
    std::copy(a.data(), a.data() + a.size(), m.values.begin());
    return m;
}

Array from_map(const Map& m) {
    Array out({static_cast<py::ssize_t>(m.height), static_cast<py::ssize_t>(m.width)});
    std::copy(m.values.begin(), m.values.end(), out.mutable_data());
    return out;
}

Mask to_mask(const MaskArray& a) {
    if (a.ndim() != 2) throw DataError("expected an (H, W) mask");
    Mask m(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)));
    for (py::ssize_t i = 0; i < a.size(); ++i) m.values[i] = a.data()[i] ? 1 : 0;
    return m;
}

MaskArray from_mask(const Mask& m) {
    MaskArray out({static_cast<py::ssize_t>(m.height), static_cast<py::ssize_t>(m.width)});
    std::copy(m.values.begin(), m.values.end(), out.mutable_data());
    return out;
}

SuperpixelMap to_superpixels(const LabelArray& a) {
    if (a.ndim() != 2) throw DataError("expected an (H, W) label array");
    SuperpixelMap sp;
    sp.height = static_cast<std::size_t>(a.shape(0));
    sp.width = static_cast<std::size_t>(a.shape(1));
    sp.labels.assign(a.data(), a.data() + a.size());
    std::uint32_t top = 0;
    for (auto l : sp.labels) top = std::max(top, l);
    sp.counts.assign(sp.labels.empty() ? 0 : top + 1, 0);
    for (auto l : sp.labels) ++sp.counts[l];
    return sp;
}

LabelArray from_superpixels(const SuperpixelMap& sp) {
    LabelArray out({static_cast<py::ssize_t>(sp.height), static_cast<py::ssize_t>(sp.width)});
    std::copy(sp.labels.begin(), sp.labels.end(), out.mutable_data());
    return out;
}

SaliencyParams make_params(double gamma, std::optional<double> epsilon, std::size_t iterations,
                           std::optional<double> theta, double relative_theta) {
    SaliencyParams p;
    p.gamma = gamma;
    p.epsilon = epsilon;
    p.iterations = iterations;
    p.theta = theta;
    p.relative_theta = relative_theta;
    return p;
}

py::dict run_to_dict(const SaliencyRun& r) {
    py::dict d;
    d["initial"] = from_tensor(r.initial);
    d["final"] = from_tensor(r.final);
    d["label"] = r.label;
    d["baseline"] = r.baseline;
    d["final_logits"] = r.final_logits;
    d["cost_trace"] = r.cost_trace;
    d["epsilon"] = r.epsilon;
    d["theta"] = r.theta;
    d["raw"] = from_map(r.raw);
    return d;
}

py::dict curve_to_dict(const PRCurve& c) {
    py::dict d;
    d["precision"] = std::vector<double>(c.precision.begin(), c.precision.end());
    d["recall"] = std::vector<double>(c.recall.begin(), c.recall.end());
    d["valid"] = std::vector<bool>(c.valid.begin(), c.valid.end());
    d["true_positives"] = std::vector<std::size_t>(c.true_positives.begin(), c.true_positives.end());
    d["predicted"] = std::vector<std::size_t>(c.predicted.begin(), c.predicted.end());
    d["positives"] = c.positives;
    return d;
}

std::vector<SuperpixelColorStats> to_stats(const Array& colors) {
    if (colors.ndim() != 2 || colors.shape(1) != 3) throw DataError("expected a (K, 3) color array");
    std::vector<SuperpixelColorStats> stats(static_cast<std::size_t>(colors.shape(0)));
    for (std::size_t i = 0; i < stats.size(); ++i) {
        for (std::size_t c = 0; c < 3; ++c) stats[i].color[c] = colors.data()[i * 3 + c];
        stats[i].count = 1;
    }
    return stats;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Gradient-descent saliency maps from a classification network";

    auto base = py::register_exception<Error>(m, "GradsalError", PyExc_RuntimeError);
    py::register_exception<UsageError>(m, "UsageError", base.ptr());
    py::register_exception<DataError>(m, "DataError", base.ptr());
    py::register_exception<NumericalError>(m, "NumericalError", base.ptr());

    py::class_<Network>(m, "Network")
        .def_property_readonly("input_shape", [](const Network& n) { return n.input_shape; })
        .def_property_readonly("num_classes", [](const Network& n) { return n.num_classes; })
        .def_property("class_names", [](const Network& n) { return n.class_names; },
                      [](Network& n, std::vector<std::string> v) { n.class_names = std::move(v); })
        .def_property_readonly("parameter_count", &parameter_count)
        .def("__repr__", [](const Network& n) {
            return "<gradsal.Network input=" + shape_string(n.input_shape) +
                   " classes=" + std::to_string(n.num_classes) + ">";
        });

    m.def("make_desk_network", &make_desk_network, py::arg("height"), py::arg("width"),
          py::arg("num_classes"), py::arg("seed"));
    m.def("load_network", &load_network, py::arg("path"));
    m.def("save_network", &save_network, py::arg("net"), py::arg("path"));
    m.def("forward", [](const Network& n, const Array& x) { return forward(n, to_image(x)); },
          py::arg("net"), py::arg("x"));
    m.def("backward_to_input",
          [](const Network& n, const Array& x, const std::vector<double>& e) {
              return from_tensor(backward_to_input(n, to_image(x), e));
          },
          py::arg("net"), py::arg("x"), py::arg("e"));
    m.def("train",
          [](const Network& n, const std::vector<std::pair<Array, std::size_t>>& data,
             std::size_t epochs, double lr, std::size_t batch_size, double momentum,
             std::uint64_t seed) {
              std::vector<Sample> samples;
              for (const auto& [img, label] : data) samples.push_back({to_image(img), label});
              TrainOptions opts{epochs, lr, batch_size, momentum, seed};
              TrainResult r;
              {
                  py::gil_scoped_release release;
                  r = train(n, samples, opts);
              }
              return py::make_tuple(std::move(r.net), r.epoch_loss, r.epoch_accuracy);
          },
          py::arg("net"), py::arg("data"), py::arg("epochs") = 20, py::arg("lr") = 0.01,
          py::arg("batch_size") = 16, py::arg("momentum") = 0.9, py::arg("seed") = 1);

    m.def("cost", &cost, py::arg("a"), py::arg("o"), py::arg("label"), py::arg("gamma"));
    m.def("clamp_penalty", &clamp_penalty, py::arg("a"), py::arg("o"), py::arg("label"));
    m.def("output_error", &output_error, py::arg("a"), py::arg("o"), py::arg("label"), py::arg("gamma"));
    m.def("gd_step",
          [](const Array& x, const Array& g, double eps) {
              return from_tensor(gd_step(to_tensor(x), to_tensor(g), eps));
          },
          py::arg("x"), py::arg("grad"), py::arg("epsilon"));
    m.def("probe_epsilon",
          [](const Network& n, const Array& x, double gamma, std::size_t iterations) {
              return probe_epsilon(n, to_image(x), gamma, iterations);
          },
          py::arg("net"), py::arg("x"), py::arg("gamma") = 1.0, py::arg("iterations") = 10);
    m.def("run_saliency",
          [](const Network& n, const Array& x, double gamma, std::optional<double> epsilon,
             std::size_t iterations, std::optional<double> theta, double relative_theta) {
              const auto params = make_params(gamma, epsilon, iterations, theta, relative_theta);
              const ImageRGB img = to_image(x);
              SaliencyRun r;
              {
                  py::gil_scoped_release release;
                  r = run_saliency(n, img, params);
              }
              return run_to_dict(r);
          },
          py::arg("net"), py::arg("x"), py::arg("gamma") = 1.0, py::arg("epsilon") = py::none(),
          py::arg("iterations") = 10, py::arg("theta") = py::none(), py::arg("relative_theta") = 0.1);
    m.def("raw_saliency",
          [](const Array& x0, const Array& xt, double theta) {
              return from_map(raw_saliency(to_image(x0), to_image(xt), theta));
          },
          py::arg("x0"), py::arg("xt"), py::arg("theta"));

    m.def("rgb_to_lab", [](const Array& x) { return from_tensor(rgb_to_lab(to_image(x))); }, py::arg("image"));
    m.def("slic",
          [](const Array& x, std::size_t k, double compactness, std::size_t max_iterations) {
              SlicParams p{k, compactness, max_iterations, true};
              return from_superpixels(slic(to_image(x), p));
          },
          py::arg("image"), py::arg("superpixels") = 100, py::arg("compactness") = 10.0,
          py::arg("max_iterations") = 10);
    m.def("smooth",
          [](const Array& s, const LabelArray& labels) {
              return from_map(smooth(to_map(s), to_superpixels(labels)));
          },
          py::arg("s"), py::arg("labels"));
    m.def("global_contrast", [](const Array& colors) { return global_contrast(to_stats(colors)); },
          py::arg("colors"));
    m.def("contrast_smooth",
          [](const std::vector<double>& gc, const Array& colors, double sigma, std::size_t neighbors) {
              return contrast_smooth(gc, to_stats(colors), sigma, neighbors);
          },
          py::arg("contrast"), py::arg("colors"), py::arg("sigma_color") = 10.0, py::arg("neighbors") = 10);
    m.def("lowlevel_map",
          [](const Array& image, const LabelArray& labels, double alpha, double sigma_color) {
              LowLevelParams p;
              p.alpha = alpha;
              p.sigma_color = sigma_color;
              return from_map(lowlevel_features(rgb_to_lab(to_image(image)), to_superpixels(labels), p).map);
          },
          py::arg("image"), py::arg("labels"), py::arg("alpha") = 0.3, py::arg("sigma_color") = 10.0);
    m.def("refine",
          [](const Array& s_bar, const Array& s_l, double theta) {
              return from_map(refine(to_map(s_bar), to_map(s_l), theta));
          },
          py::arg("smoothed"), py::arg("lowlevel"), py::arg("theta") = 0.0);

    m.def("pr_curve", [](const Array& s, const MaskArray& gt) { return curve_to_dict(pr_curve(to_map(s), to_mask(gt))); },
          py::arg("s"), py::arg("gt"));
    m.def("f_beta", &f_beta, py::arg("precision"), py::arg("recall"), py::arg("beta_sq") = kDefaultBetaSq);
    m.def("best_f",
          [](const Array& s, const MaskArray& gt, double beta_sq) {
              const BestF b = best_f(pr_curve(to_map(s), to_mask(gt)), beta_sq);
              return py::make_tuple(b.value, b.cutoff);
          },
          py::arg("s"), py::arg("gt"), py::arg("beta_sq") = kDefaultBetaSq);

    m.def("generate_dataset",
          [](std::size_t n, std::size_t classes, std::size_t size, std::uint64_t seed) {
              py::list out;
              for (const auto& s : generate_dataset(n, classes, size, seed)) {
                  py::dict d;
                  d["image"] = from_tensor(s.image);
                  d["label"] = s.label;
                  d["mask"] = from_mask(s.mask);
                  out.append(d);
              }
              return out;
          },
          py::arg("n"), py::arg("classes") = 4, py::arg("size") = 64, py::arg("seed") = 1);
    m.def("class_names", &synthetic_class_names);

    m.def("default_config", [] { return serialize_config(PipelineConfig{}); });
    m.def("parse_config", [](const std::string& text) { return serialize_config(parse_config(text)); },
          py::arg("text"), "Validates config text and returns its canonical form");
    m.def("run_pipeline",
          [](const std::string& config_text, const Network& n, const Array& image) {
              const PipelineConfig config = parse_config(config_text);
              const ImageRGB img = to_image(image);
              PipelineResult r;
              {
                  py::gil_scoped_release release;
                  r = run_pipeline(config, n, img);
              }
              py::dict d;
              d["raw"] = from_map(r.raw);
              d["smoothed"] = from_map(r.smoothed);
              d["refined"] = from_map(r.refined);
              d["lowlevel"] = from_map(r.lowlevel.map);
              d["labels"] = from_superpixels(r.superpixels);
              d["label"] = r.run.label;
              d["cost_trace"] = r.run.cost_trace;
              d["epsilon"] = r.run.epsilon;
              d["stage_order"] = r.stage_order;
              d["timings"] = py::dict(py::arg("saliency") = r.timings.saliency,
                                      py::arg("superpixel") = r.timings.superpixel,
                                      py::arg("smoothing") = r.timings.smoothing,
                                      py::arg("lowlevel") = r.timings.lowlevel,
                                      py::arg("refine") = r.timings.refine,
                                      py::arg("total") = r.timings.total);
              return d;
          },
          py::arg("config"), py::arg("net"), py::arg("image"));
}
