#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "gradsal/tensor.hpp"

namespace gradsal {

// Square-kernel convolution over a {C,H,W} input with zero padding.
// weight: {out, in, k, k}, bias: {out}.
struct Conv2D {
    std::size_t in_channels = 0;
    std::size_t out_channels = 0;
    std::size_t kernel = 3;
    std::size_t stride = 1;
    std::size_t pad = 1;
    Tensor weight;
    Tensor bias;
};

struct ReLU {};

// Non-overlapping max pooling (stride == window). Trailing rows/columns that
// do not fill a window are dropped. Ties go to the first index in raster order.
struct MaxPool2D {
    std::size_t window = 2;
};

struct Flatten {};

// weight: {out, in}, bias: {out}.
struct Dense {
    std::size_t in_features = 0;
    std::size_t out_features = 0;
    Tensor weight;
    Tensor bias;
};

using Layer = std::variant<Conv2D, ReLU, MaxPool2D, Flatten, Dense>;

// Pre-softmax network outputs.
using Logits = std::vector<double>;

struct Network {
    std::vector<std::size_t> input_shape;  // {C, H, W}
    std::vector<Layer> layers;
    std::size_t num_classes = 0;
    std::vector<std::string> class_names;
};

// Builds a network with freshly allocated (zero) parameters. Layer shapes are
// derived from input_shape; Conv2D/Dense entries only need their hyper
// parameters filled in. Throws DataError when consecutive shapes disagree or
// the final output is not a num_classes vector.
Network build_network(std::vector<std::size_t> input_shape, std::vector<Layer> layers,
                      std::size_t num_classes);

// Two conv(3x3, pad 1)+ReLU+maxpool(2) blocks with 16 and 32 channels and one
// Dense classifier, He-initialized from `seed`.
Network make_desk_network(std::size_t height, std::size_t width, std::size_t num_classes,
                          std::uint64_t seed);

// He-normal weights, zero biases.
void init_parameters(Network& net, std::uint64_t seed);

// Output shape of every layer, in order. Validates the topology.
std::vector<std::vector<std::size_t>> layer_output_shapes(const Network& net);

// Weight and bias tensors in layer order (weight before bias).
std::vector<Tensor*> parameters(Network& net);
std::vector<const Tensor*> parameters(const Network& net);
std::size_t parameter_count(const Network& net);

// Everything the backward pass needs from a forward pass.
struct ForwardTrace {
    std::vector<Tensor> inputs;  // inputs[i] is the input of layer i
    std::vector<std::vector<std::size_t>> pool_argmax;  // per layer, empty unless MaxPool2D
    Logits logits;
};

Logits forward(const Network& net, const ImageRGB& x);
ForwardTrace forward_trace(const Network& net, const ImageRGB& x);

// Parameter gradients, same order as parameters(net).
struct ParamGradients {
    std::vector<Tensor> tensors;
};

ParamGradients zero_gradients(const Network& net);

// Input gradient of e^T a where a are the logits recorded in the trace.
// Accumulates parameter gradients into `grads` when it is non-null.
Tensor backward(const Network& net, const ForwardTrace& trace, const std::vector<double>& e,
                ParamGradients* grads = nullptr);

Tensor backward_to_input(const Network& net, const ForwardTrace& trace,
                         const std::vector<double>& e);
Tensor backward_to_input(const Network& net, const ImageRGB& x, const std::vector<double>& e);

// Index of the largest logit, lowest index on ties.
std::size_t argmax(const Logits& logits);

}  // namespace gradsal
