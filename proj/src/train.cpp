#include "gradsal/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "gradsal/error.hpp"

namespace gradsal {

double softmax_cross_entropy(const Logits& logits, std::size_t label, std::vector<double>* grad) {
    const double top = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    for (double v : logits) z += std::exp(v - top);
    const double log_z = std::log(z) + top;
    if (grad) {
        grad->resize(logits.size());
        for (std::size_t k = 0; k < logits.size(); ++k) {
            (*grad)[k] = std::exp(logits[k] - log_z) - (k == label ? 1.0 : 0.0);
        }
    }
    return log_z - logits[label];
}

TrainResult train(Network net, std::span<const Sample> data, const TrainOptions& options) {
    if (data.empty()) throw DataError("training set is empty");
    if (options.batch_size == 0) throw UsageError("batch size must be positive");
    if (!(options.learning_rate >= 0.0) || !std::isfinite(options.learning_rate)) {
        throw UsageError("learning rate must be a finite nonnegative number");
    }
    for (const Sample& s : data) {
        if (s.label >= net.num_classes) {
            throw DataError("label " + std::to_string(s.label) + " outside [0, " +
                            std::to_string(net.num_classes) + ")");
        }
        if (s.image.shape() != net.input_shape) {
            throw DataError("training image shape " + shape_string(s.image.shape()) +
                            " does not match network input " + shape_string(net.input_shape));
        }
    }

    TrainResult result;
    std::mt19937_64 rng(options.seed);
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    ParamGradients velocity = zero_gradients(net);
    std::vector<double> dlogits;

    for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double loss_sum = 0.0;
        std::size_t correct = 0;
        for (std::size_t start = 0; start < order.size(); start += options.batch_size) {
            const std::size_t stop = std::min(order.size(), start + options.batch_size);
            ParamGradients grads = zero_gradients(net);
            for (std::size_t i = start; i < stop; ++i) {
                const Sample& s = data[order[i]];
                const ForwardTrace trace = forward_trace(net, s.image);
                const double loss = softmax_cross_entropy(trace.logits, s.label, &dlogits);
                if (!std::isfinite(loss)) {
                    throw NumericalError("training diverged: non-finite loss at epoch " +
                                         std::to_string(epoch) + ", sample " +
                                         std::to_string(order[i]) + "; lower the learning rate");
                }
                loss_sum += loss;
                if (argmax(trace.logits) == s.label) ++correct;
                backward(net, trace, dlogits, &grads);
            }
            const double scale = 1.0 / static_cast<double>(stop - start);
            auto params = parameters(net);
            for (std::size_t p = 0; p < params.size(); ++p) {
                auto& v = velocity.tensors[p].values();
                auto& w = params[p]->values();
                const auto& g = grads.tensors[p].values();
                for (std::size_t j = 0; j < w.size(); ++j) {
                    v[j] = options.momentum * v[j] - options.learning_rate * scale * g[j];
                    w[j] += v[j];
                }
                if (!params[p]->all_finite()) {
                    throw NumericalError("training diverged: non-finite parameters at epoch " +
                                         std::to_string(epoch));
                }
            }
        }
        result.epoch_loss.push_back(loss_sum / static_cast<double>(data.size()));
        result.epoch_accuracy.push_back(static_cast<double>(correct) /
                                        static_cast<double>(data.size()));
    }
    result.net = std::move(net);
    return result;
}

double accuracy(const Network& net, std::span<const Sample> data) {
    if (data.empty()) return 0.0;
    std::size_t correct = 0;
    for (const Sample& s : data) {
        if (argmax(forward(net, s.image)) == s.label) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(data.size());
}

}  // namespace gradsal
