#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "gradsal/nn.hpp"

namespace gradsal {

struct Sample {
    ImageRGB image;
    std::size_t label = 0;
};

struct TrainOptions {
    std::size_t epochs = 20;
    double learning_rate = 0.01;
    std::size_t batch_size = 16;
    double momentum = 0.9;
    std::uint64_t seed = 1;
};

struct TrainResult {
    Network net;
    std::vector<double> epoch_loss;      // mean cross-entropy seen during each epoch
    std::vector<double> epoch_accuracy;  // training accuracy seen during each epoch
};

// Softmax cross-entropy of one example. Writes dLoss/dLogits into `grad` when
// given.
double softmax_cross_entropy(const Logits& logits, std::size_t label,
                             std::vector<double>* grad = nullptr);

// Mini-batch SGD with momentum on softmax cross-entropy. Samples are shuffled
// each epoch with a generator seeded from options.seed.
//
// Throws DataError for an empty dataset or out-of-range labels and
// NumericalError if the loss stops being finite.
TrainResult train(Network net, std::span<const Sample> data, const TrainOptions& options);

double accuracy(const Network& net, std::span<const Sample> data);

}  // namespace gradsal
