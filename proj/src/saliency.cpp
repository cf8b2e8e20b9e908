#include "gradsal/saliency.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gradsal/error.hpp"

namespace gradsal {
namespace {

void require_aligned(const Logits& a, const Logits& o, std::size_t label) {
    if (a.size() != o.size()) throw DataError("live and baseline logits differ in length");
    if (label >= a.size()) {
        throw DataError("class index " + std::to_string(label) + " outside [0, " +
                        std::to_string(a.size()) + ")");
    }
}

}  // namespace

void SaliencyParams::validate() const {
    if (!std::isfinite(gamma) || gamma < 0.0) throw UsageError("gamma must be finite and >= 0");
    if (epsilon && (!std::isfinite(*epsilon) || *epsilon < 0.0)) {
        throw UsageError("epsilon must be finite and >= 0");
    }
    if (iterations < 1) throw UsageError("iterations must be >= 1");
    if (theta && (!std::isfinite(*theta) || *theta < 0.0)) {
        throw UsageError("theta must be finite and >= 0");
    }
    if (!std::isfinite(relative_theta) || relative_theta < 0.0 || relative_theta > 1.0) {
        throw UsageError("relative theta must lie in [0, 1]");
    }
}

double clamp_penalty(const Logits& a, const Logits& o, std::size_t label) {
    require_aligned(a, o, label);
    double sum = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        if (k == label) continue;
        const double d = a[k] - o[k];
        sum += d * d;
    }
    return sum;
}

double cost(const Logits& a, const Logits& o, std::size_t label, double gamma) {
    return a[label] + 0.5 * gamma * clamp_penalty(a, o, label);
}

std::vector<double> output_error(const Logits& a, const Logits& o, std::size_t label,
                                 double gamma) {
    require_aligned(a, o, label);
    std::vector<double> e(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) e[i] = i == label ? 1.0 : gamma * (a[i] - o[i]);
    return e;
}

ImageRGB gd_step(const ImageRGB& x, const Tensor& grad, double epsilon) {
    if (x.shape() != grad.shape()) {
        throw DataError("gradient shape " + shape_string(grad.shape()) + " does not match image " +
                        shape_string(x.shape()));
    }
    if (!grad.all_finite()) throw NumericalError("input gradient is not finite");
    ImageRGB out = x;
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double g = grad[i] > 0.0 ? grad[i] : 0.0;
        out[i] = std::max(x[i] - epsilon * g, 0.0);
    }
    return out;
}

double probe_epsilon(const Network& net, const ImageRGB& x, double gamma, std::size_t iterations,
                     std::size_t max_halvings) {
    const ForwardTrace start = forward_trace(net, x);
    const std::size_t label = argmax(start.logits);
    const Logits& o = start.logits;
    const Tensor grad0 = backward_to_input(net, start, output_error(o, o, label, gamma));
    if (std::none_of(grad0.values().begin(), grad0.values().end(), [](double g) { return g > 0.0; })) {
        return 1.0;
    }
    const std::size_t steps = std::max<std::size_t>(iterations, 1);
    auto descends = [&](double eps) {
        double prev = cost(o, o, label, gamma);
        ImageRGB cur = gd_step(x, grad0, eps);
        for (std::size_t t = 0; t < steps; ++t) {
            const ForwardTrace trace = forward_trace(net, cur);
            const double f = cost(trace.logits, o, label, gamma);
            if (!std::isfinite(f) || (t == 0 ? f >= prev : f > prev)) return false;
            prev = f;
            if (t + 1 < steps) {
                cur = gd_step(cur, backward_to_input(net, trace, output_error(trace.logits, o, label, gamma)), eps);
            }
        }
        return true;
    };
    double eps = 1.0;
    for (std::size_t i = 0; i < max_halvings; ++i, eps *= 0.5) {
        if (descends(eps)) return eps;
    }
    return eps;
}

SaliencyRun run_saliency(const Network& net, const ImageRGB& x, const SaliencyParams& params,
                         const IterateObserver& observer) {
    params.validate();
    require_image(x, "run_saliency");
    SaliencyRun run;
    run.initial = x;
    run.epsilon = params.epsilon ? *params.epsilon : probe_epsilon(net, x, params.gamma, params.iterations);

    ImageRGB cur = x;
    ForwardTrace trace = forward_trace(net, cur);
    run.baseline = trace.logits;
    run.label = argmax(run.baseline);
    if (observer) observer(0, cur);

    for (std::size_t t = 0; t < params.iterations; ++t) {
        run.cost_trace.push_back(cost(trace.logits, run.baseline, run.label, params.gamma));
        const auto e = output_error(trace.logits, run.baseline, run.label, params.gamma);
        const Tensor grad = backward_to_input(net, trace, e);
        cur = gd_step(cur, grad, run.epsilon);
        if (observer) observer(t + 1, cur);
        trace = forward_trace(net, cur);
    }
    run.cost_trace.push_back(cost(trace.logits, run.baseline, run.label, params.gamma));
    for (double c : run.cost_trace) {
        if (!std::isfinite(c)) throw NumericalError("saliency cost became non-finite");
    }
    run.final_logits = trace.logits;
    run.final = std::move(cur);

    SaliencyMap diff = channel_mean_difference(run.initial, run.final);
    run.theta = params.theta ? *params.theta : params.relative_theta * max_value(diff);
    prune(diff, run.theta);
    normalize_by_max(diff);
    run.raw = std::move(diff);
    return run;
}

SaliencyMap channel_mean_difference(const ImageRGB& x0, const ImageRGB& xt) {
    require_image(x0, "raw_saliency");
    if (x0.shape() != xt.shape()) throw DataError("raw_saliency: image shapes differ");
    const std::size_t h = x0.dim(1), w = x0.dim(2);
    SaliencyMap s(h, w);
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            double sum = 0.0;
            for (std::size_t c = 0; c < 3; ++c) sum += x0.at(c, y, x) - xt.at(c, y, x);
            s(y, x) = std::max(sum / 3.0, 0.0);
        }
    }
    return s;
}

SaliencyMap raw_saliency(const ImageRGB& x0, const ImageRGB& xt, double theta) {
    SaliencyMap s = channel_mean_difference(x0, xt);
    prune(s, theta);
    normalize_by_max(s);
    return s;
}

}  // namespace gradsal
