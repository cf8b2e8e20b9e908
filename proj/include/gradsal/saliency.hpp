#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

#include "gradsal/nn.hpp"
#include "gradsal/tensor.hpp"

namespace gradsal {

struct SaliencyParams {
    double gamma = 1.0;                 // weight of the clamping penalty
    std::optional<double> epsilon;      // step size; unset = backtracking probe
    std::size_t iterations = 10;
    std::optional<double> theta;        // absolute prune threshold; unset = relative
    double relative_theta = 0.1;        // used when theta is unset: theta = this * max(S)

    void validate() const;
};

struct SaliencyRun {
    ImageRGB initial;
    ImageRGB final;
    std::size_t label = 0;
    Logits baseline;                 // frozen logits of the initial image
    Logits final_logits;             // logits of the final image
    std::vector<double> cost_trace;  // cost of every iterate, iterations + 1 entries
    double epsilon = 0.0;            // step size actually used
    double theta = 0.0;              // prune threshold actually used
    SaliencyMap raw;
};

// Clamped objective: a_l + gamma/2 * sum_{k != l} (a_k - o_k)^2.
double cost(const Logits& a, const Logits& o, std::size_t label, double gamma);

// Terminal drift of the clamped outputs: sum_{k != l} (a_k - o_k)^2.
double clamp_penalty(const Logits& a, const Logits& o, std::size_t label);

// d cost / d a: 1 at the label, gamma (a_i - o_i) elsewhere.
std::vector<double> output_error(const Logits& a, const Logits& o, std::size_t label, double gamma);

// x - epsilon * max(grad, 0), floored at 0. Pixels never increase.
ImageRGB gd_step(const ImageRGB& x, const Tensor& grad, double epsilon);

// Halves epsilon from 1.0 until a trial run of `iterations` floored steps
// from x strictly lowers the cost on the first step and never raises it
// afterwards. Returns 1.0 when no pixel has a positive gradient.
double probe_epsilon(const Network& net, const ImageRGB& x, double gamma, std::size_t iterations,
                     std::size_t max_halvings = 40);

// Called with (t, X^(t)) for every iterate including t = 0.
using IterateObserver = std::function<void(std::size_t, const ImageRGB&)>;

SaliencyRun run_saliency(const Network& net, const ImageRGB& x, const SaliencyParams& params,
                         const IterateObserver& observer = {});

// Channel mean of x0 - xT, pruned by theta and max-normalized into [0, 1].
SaliencyMap raw_saliency(const ImageRGB& x0, const ImageRGB& xt, double theta);

// Channel mean of x0 - xT before any pruning.
SaliencyMap channel_mean_difference(const ImageRGB& x0, const ImageRGB& xt);

}  // namespace gradsal
