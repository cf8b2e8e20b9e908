#include "gradsal/nn.hpp"

#include <Eigen/Core>

#include <cmath>
#include <random>
#include <type_traits>

#include "gradsal/error.hpp"

namespace gradsal {
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using ConstMatMap = Eigen::Map<const RowMat>;

template <class>
inline constexpr bool always_false = false;

std::size_t conv_out(std::size_t in, std::size_t k, std::size_t stride, std::size_t pad) {
    if (in + 2 * pad < k) return 0;
    return (in + 2 * pad - k) / stride + 1;
}

std::vector<std::size_t> infer_shape(Layer& layer, const std::vector<std::size_t>& in,
                                     std::size_t index, bool allocate) {
    const std::string where = "layer " + std::to_string(index);
    return std::visit(
        [&](auto& l) -> std::vector<std::size_t> {
            using T = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<T, Conv2D>) {
                if (in.size() != 3) throw DataError(where + ": Conv2D expects a {C,H,W} input");
                if (l.kernel == 0 || l.stride == 0 || l.out_channels == 0) {
                    throw DataError(where + ": Conv2D needs positive kernel, stride, channels");
                }
                if (allocate) l.in_channels = in[0];
                if (l.in_channels != in[0]) {
                    throw DataError(where + ": Conv2D expects " + std::to_string(l.in_channels) +
                                    " input channels, got " + std::to_string(in[0]));
                }
                const std::vector<std::size_t> wshape{l.out_channels, l.in_channels, l.kernel,
                                                      l.kernel};
                if (allocate && l.weight.shape() != wshape) l.weight = Tensor(wshape);
                if (allocate && l.bias.shape() != std::vector<std::size_t>{l.out_channels}) {
                    l.bias = Tensor({l.out_channels});
                }
                if (l.weight.shape() != wshape || l.bias.size() != l.out_channels) {
                    throw DataError(where + ": Conv2D parameter shape mismatch");
                }
                const auto h = conv_out(in[1], l.kernel, l.stride, l.pad);
                const auto w = conv_out(in[2], l.kernel, l.stride, l.pad);
                if (h == 0 || w == 0) throw DataError(where + ": Conv2D output is empty");
                return {l.out_channels, h, w};
            } else if constexpr (std::is_same_v<T, ReLU>) {
                return in;
            } else if constexpr (std::is_same_v<T, MaxPool2D>) {
                if (in.size() != 3) throw DataError(where + ": MaxPool2D expects a {C,H,W} input");
                if (l.window == 0 || in[1] / l.window == 0 || in[2] / l.window == 0) {
                    throw DataError(where + ": MaxPool2D window does not fit the input");
                }
                return {in[0], in[1] / l.window, in[2] / l.window};
            } else if constexpr (std::is_same_v<T, Flatten>) {
                return {shape_volume(in)};
            } else if constexpr (std::is_same_v<T, Dense>) {
                if (in.size() != 1) throw DataError(where + ": Dense expects a flat input");
                if (l.out_features == 0) throw DataError(where + ": Dense needs outputs");
                if (allocate) l.in_features = in[0];
                if (l.in_features != in[0]) {
                    throw DataError(where + ": Dense expects " + std::to_string(l.in_features) +
                                    " inputs, got " + std::to_string(in[0]));
                }
                const std::vector<std::size_t> wshape{l.out_features, l.in_features};
                if (allocate && l.weight.shape() != wshape) l.weight = Tensor(wshape);
                if (allocate && l.bias.shape() != std::vector<std::size_t>{l.out_features}) {
                    l.bias = Tensor({l.out_features});
                }
                if (l.weight.shape() != wshape || l.bias.size() != l.out_features) {
                    throw DataError(where + ": Dense parameter shape mismatch");
                }
                return {l.out_features};
            } else {
                static_assert(always_false<T>);
            }
        },
        layer);
}

// Fills `cols`, reusing its storage when the size is unchanged.
void im2col(const Tensor& x, const Conv2D& c, std::size_t out_h, std::size_t out_w, RowMat& cols) {
    const std::size_t channels = x.dim(0), h = x.dim(1), w = x.dim(2), k = c.kernel;
    cols.resize(static_cast<Eigen::Index>(channels * k * k), static_cast<Eigen::Index>(out_h * out_w));
    for (std::size_t ch = 0; ch < channels; ++ch) {
        for (std::size_t ky = 0; ky < k; ++ky) {
            for (std::size_t kx = 0; kx < k; ++kx) {
                double* row = cols.row((ch * k + ky) * k + kx).data();
                for (std::size_t oy = 0; oy < out_h; ++oy) {
                    const long iy = static_cast<long>(oy * c.stride + ky) - static_cast<long>(c.pad);
                    for (std::size_t ox = 0; ox < out_w; ++ox) {
                        const long ix =
                            static_cast<long>(ox * c.stride + kx) - static_cast<long>(c.pad);
                        const bool inside = iy >= 0 && ix >= 0 && iy < static_cast<long>(h) &&
                                            ix < static_cast<long>(w);
                        row[oy * out_w + ox] =
                            inside ? x.at(ch, static_cast<std::size_t>(iy), static_cast<std::size_t>(ix))
                                   : 0.0;
                    }
                }
            }
        }
    }
}

void col2im_add(const RowMat& cols, const Conv2D& c, std::size_t out_h, std::size_t out_w,
                Tensor& dx) {
    const std::size_t channels = dx.dim(0), h = dx.dim(1), w = dx.dim(2), k = c.kernel;
    for (std::size_t ch = 0; ch < channels; ++ch) {
        for (std::size_t ky = 0; ky < k; ++ky) {
            for (std::size_t kx = 0; kx < k; ++kx) {
                const double* row = cols.row((ch * k + ky) * k + kx).data();
                for (std::size_t oy = 0; oy < out_h; ++oy) {
                    const long iy = static_cast<long>(oy * c.stride + ky) - static_cast<long>(c.pad);
                    if (iy < 0 || iy >= static_cast<long>(h)) continue;
                    for (std::size_t ox = 0; ox < out_w; ++ox) {
                        const long ix =
                            static_cast<long>(ox * c.stride + kx) - static_cast<long>(c.pad);
                        if (ix < 0 || ix >= static_cast<long>(w)) continue;
                        dx.at(ch, static_cast<std::size_t>(iy), static_cast<std::size_t>(ix)) +=
                            row[oy * out_w + ox];
                    }
                }
            }
        }
    }
}

Tensor conv_forward(const Conv2D& c, const Tensor& x) {
    const auto out_h = conv_out(x.dim(1), c.kernel, c.stride, c.pad);
    const auto out_w = conv_out(x.dim(2), c.kernel, c.stride, c.pad);
    thread_local RowMat cols;
    im2col(x, c, out_h, out_w, cols);
    Tensor y({c.out_channels, out_h, out_w});
    ConstMatMap weight(c.weight.data().data(), static_cast<Eigen::Index>(c.out_channels),
                       static_cast<Eigen::Index>(cols.rows()));
    MatMap out(y.data().data(), static_cast<Eigen::Index>(c.out_channels),
               static_cast<Eigen::Index>(out_h * out_w));
    out.noalias() = weight * cols;
    for (std::size_t o = 0; o < c.out_channels; ++o) {
        out.row(static_cast<Eigen::Index>(o)).array() += c.bias[o];
    }
    return y;
}

Tensor pool_forward(const MaxPool2D& p, const Tensor& x, std::vector<std::size_t>* argmax_out) {
    const std::size_t channels = x.dim(0), h = x.dim(1), w = x.dim(2);
    const std::size_t oh = h / p.window, ow = w / p.window;
    Tensor y({channels, oh, ow});
    if (argmax_out) argmax_out->assign(y.size(), 0);
    std::size_t o = 0;
    for (std::size_t ch = 0; ch < channels; ++ch) {
        for (std::size_t oy = 0; oy < oh; ++oy) {
            for (std::size_t ox = 0; ox < ow; ++ox, ++o) {
                std::size_t best = (ch * h + oy * p.window) * w + ox * p.window;
                double best_v = x[best];
                for (std::size_t dy = 0; dy < p.window; ++dy) {
                    for (std::size_t dx = 0; dx < p.window; ++dx) {
                        const std::size_t i = (ch * h + oy * p.window + dy) * w + ox * p.window + dx;
                        if (x[i] > best_v) {
                            best_v = x[i];
                            best = i;
                        }
                    }
                }
                y[o] = best_v;
                if (argmax_out) (*argmax_out)[o] = best;
            }
        }
    }
    return y;
}

Tensor dense_forward(const Dense& d, const Tensor& x) {
    Tensor y({d.out_features});
    ConstMatMap weight(d.weight.data().data(), static_cast<Eigen::Index>(d.out_features),
                       static_cast<Eigen::Index>(d.in_features));
    Eigen::Map<const Eigen::VectorXd> in(x.data().data(), static_cast<Eigen::Index>(d.in_features));
    Eigen::Map<const Eigen::VectorXd> bias(d.bias.data().data(),
                                           static_cast<Eigen::Index>(d.out_features));
    Eigen::Map<Eigen::VectorXd> out(y.data().data(), static_cast<Eigen::Index>(d.out_features));
    out.noalias() = weight * in;
    out += bias;
    return y;
}

void require_input(const Network& net, const ImageRGB& x) {
    if (x.shape() != net.input_shape) {
        throw DataError("input shape " + shape_string(x.shape()) + " does not match network input " +
                        shape_string(net.input_shape));
    }
}

Logits run_forward(const Network& net, const ImageRGB& x, ForwardTrace* trace) {
    require_input(net, x);
    if (trace) {
        trace->inputs.clear();
        trace->inputs.reserve(net.layers.size());
        trace->pool_argmax.assign(net.layers.size(), {});
    }
    Tensor cur = x;
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        Tensor next = std::visit(
            [&](const auto& l) -> Tensor {
                using T = std::decay_t<decltype(l)>;
                if constexpr (std::is_same_v<T, Conv2D>) {
                    return conv_forward(l, cur);
                } else if constexpr (std::is_same_v<T, ReLU>) {
                    Tensor y = cur;
                    for (double& v : y.values()) v = v > 0.0 ? v : 0.0;
                    return y;
                } else if constexpr (std::is_same_v<T, MaxPool2D>) {
                    return pool_forward(l, cur, trace ? &trace->pool_argmax[i] : nullptr);
                } else if constexpr (std::is_same_v<T, Flatten>) {
                    Tensor y = cur;
                    y.reshape({cur.size()});
                    return y;
                } else {
                    return dense_forward(l, cur);
                }
            },
            net.layers[i]);
        if (trace) trace->inputs.push_back(std::move(cur));
        cur = std::move(next);
    }
    Logits logits(cur.values().begin(), cur.values().end());
    for (double v : logits) {
        if (!std::isfinite(v)) throw NumericalError("forward pass produced a non-finite logit");
    }
    if (trace) trace->logits = logits;
    return logits;
}

}  // namespace

std::vector<std::vector<std::size_t>> layer_output_shapes(const Network& net) {
    Network copy = net;
    std::vector<std::vector<std::size_t>> shapes;
    std::vector<std::size_t> cur = net.input_shape;
    if (cur.size() != 3 || shape_volume(cur) == 0) {
        throw DataError("network input shape must be a nonempty {C,H,W}");
    }
    for (std::size_t i = 0; i < copy.layers.size(); ++i) {
        cur = infer_shape(copy.layers[i], cur, i, false);
        shapes.push_back(cur);
    }
    if (cur != std::vector<std::size_t>{net.num_classes}) {
        throw DataError("network output " + shape_string(cur) + " is not a " +
                        std::to_string(net.num_classes) + "-vector");
    }
    return shapes;
}

Network build_network(std::vector<std::size_t> input_shape, std::vector<Layer> layers,
                      std::size_t num_classes) {
    Network net;
    net.input_shape = std::move(input_shape);
    net.layers = std::move(layers);
    net.num_classes = num_classes;
    if (num_classes == 0) throw DataError("network needs at least one class");
    if (net.input_shape.size() != 3 || shape_volume(net.input_shape) == 0) {
        throw DataError("network input shape must be a nonempty {C,H,W}");
    }
    std::vector<std::size_t> cur = net.input_shape;
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        cur = infer_shape(net.layers[i], cur, i, true);
    }
    layer_output_shapes(net);
    for (std::size_t k = 0; k < num_classes; ++k) net.class_names.push_back(std::to_string(k));
    return net;
}

Network make_desk_network(std::size_t height, std::size_t width, std::size_t num_classes,
                          std::uint64_t seed) {
    Conv2D c1;
    c1.out_channels = 16;
    Conv2D c2;
    c2.out_channels = 32;
    Dense d;
    d.out_features = num_classes;
    Network net = build_network(
        {3, height, width},
        {c1, ReLU{}, MaxPool2D{2}, c2, ReLU{}, MaxPool2D{2}, Flatten{}, d}, num_classes);
    init_parameters(net, seed);
    return net;
}

void init_parameters(Network& net, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    for (auto& layer : net.layers) {
        std::visit(
            [&](auto& l) {
                using T = std::decay_t<decltype(l)>;
                if constexpr (std::is_same_v<T, Conv2D> || std::is_same_v<T, Dense>) {
                    const std::size_t fan_in = l.weight.size() / l.weight.dim(0);
                    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / fan_in));
                    for (double& v : l.weight.values()) v = dist(rng);
                    for (double& v : l.bias.values()) v = 0.0;
                }
            },
            layer);
    }
}

std::vector<Tensor*> parameters(Network& net) {
    std::vector<Tensor*> out;
    for (auto& layer : net.layers) {
        if (auto* c = std::get_if<Conv2D>(&layer)) {
            out.push_back(&c->weight);
            out.push_back(&c->bias);
        } else if (auto* d = std::get_if<Dense>(&layer)) {
            out.push_back(&d->weight);
            out.push_back(&d->bias);
        }
    }
    return out;
}

std::vector<const Tensor*> parameters(const Network& net) {
    std::vector<const Tensor*> out;
    for (const auto& layer : net.layers) {
        if (const auto* c = std::get_if<Conv2D>(&layer)) {
            out.push_back(&c->weight);
            out.push_back(&c->bias);
        } else if (const auto* d = std::get_if<Dense>(&layer)) {
            out.push_back(&d->weight);
            out.push_back(&d->bias);
        }
    }
    return out;
}

std::size_t parameter_count(const Network& net) {
    std::size_t n = 0;
    for (const Tensor* t : parameters(net)) n += t->size();
    return n;
}

Logits forward(const Network& net, const ImageRGB& x) { return run_forward(net, x, nullptr); }

ForwardTrace forward_trace(const Network& net, const ImageRGB& x) {
    ForwardTrace trace;
    run_forward(net, x, &trace);
    return trace;
}

ParamGradients zero_gradients(const Network& net) {
    ParamGradients g;
    for (const Tensor* t : parameters(net)) g.tensors.emplace_back(t->shape());
    return g;
}

Tensor backward(const Network& net, const ForwardTrace& trace, const std::vector<double>& e,
                ParamGradients* grads) {
    if (e.size() != net.num_classes) {
        throw DataError("output error has length " + std::to_string(e.size()) + ", expected " +
                        std::to_string(net.num_classes));
    }
    if (trace.inputs.size() != net.layers.size()) {
        throw DataError("forward trace does not belong to this network");
    }
    // Parameter slots are consumed from the back.
    std::size_t slot = grads ? grads->tensors.size() : 0;
    Tensor delta({e.size()}, std::vector<double>(e.begin(), e.end()));
    for (std::size_t li = net.layers.size(); li-- > 0;) {
        const Tensor& in = trace.inputs[li];
        delta = std::visit(
            [&](const auto& l) -> Tensor {
                using T = std::decay_t<decltype(l)>;
                if constexpr (std::is_same_v<T, Conv2D>) {
                    const auto out_h = delta.dim(1), out_w = delta.dim(2);
                    const auto hw = static_cast<Eigen::Index>(out_h * out_w);
                    thread_local RowMat cols, dcols;
                    im2col(in, l, out_h, out_w, cols);
                    ConstMatMap weight(l.weight.data().data(),
                                       static_cast<Eigen::Index>(l.out_channels), cols.rows());
                    ConstMatMap dout(delta.data().data(), static_cast<Eigen::Index>(l.out_channels),
                                     hw);
                    if (grads) {
                        slot -= 2;
                        MatMap dw(grads->tensors[slot].data().data(),
                                  static_cast<Eigen::Index>(l.out_channels), cols.rows());
                        dw.noalias() += dout * cols.transpose();
                        Eigen::Map<Eigen::VectorXd> db(grads->tensors[slot + 1].data().data(),
                                                       static_cast<Eigen::Index>(l.out_channels));
                        db += dout.rowwise().sum();
                    }
                    dcols.resize(cols.rows(), hw);
                    dcols.noalias() = weight.transpose() * dout;
                    Tensor dx(in.shape());
                    col2im_add(dcols, l, out_h, out_w, dx);
                    return dx;
                } else if constexpr (std::is_same_v<T, ReLU>) {
                    Tensor dx = delta;
                    for (std::size_t i = 0; i < dx.size(); ++i) {
                        if (!(in[i] > 0.0)) dx[i] = 0.0;
                    }
                    return dx;
                } else if constexpr (std::is_same_v<T, MaxPool2D>) {
                    Tensor dx(in.shape());
                    const auto& arg = trace.pool_argmax[li];
                    for (std::size_t o = 0; o < delta.size(); ++o) dx[arg[o]] += delta[o];
                    return dx;
                } else if constexpr (std::is_same_v<T, Flatten>) {
                    Tensor dx = delta;
                    dx.reshape(in.shape());
                    return dx;
                } else {
                    ConstMatMap weight(l.weight.data().data(),
                                       static_cast<Eigen::Index>(l.out_features),
                                       static_cast<Eigen::Index>(l.in_features));
                    Eigen::Map<const Eigen::VectorXd> dout(delta.data().data(),
                                                           static_cast<Eigen::Index>(l.out_features));
                    if (grads) {
                        slot -= 2;
                        Eigen::Map<const Eigen::VectorXd> xin(
                            in.data().data(), static_cast<Eigen::Index>(l.in_features));
                        MatMap dw(grads->tensors[slot].data().data(),
                                  static_cast<Eigen::Index>(l.out_features),
                                  static_cast<Eigen::Index>(l.in_features));
                        dw.noalias() += dout * xin.transpose();
                        Eigen::Map<Eigen::VectorXd> db(grads->tensors[slot + 1].data().data(),
                                                       static_cast<Eigen::Index>(l.out_features));
                        db += dout;
                    }
                    Tensor dx(in.shape());
                    Eigen::Map<Eigen::VectorXd> din(dx.data().data(),
                                                    static_cast<Eigen::Index>(l.in_features));
                    din.noalias() = weight.transpose() * dout;
                    return dx;
                }
            },
            net.layers[li]);
    }
    return delta;
}

Tensor backward_to_input(const Network& net, const ForwardTrace& trace,
                         const std::vector<double>& e) {
    return backward(net, trace, e, nullptr);
}

Tensor backward_to_input(const Network& net, const ImageRGB& x, const std::vector<double>& e) {
    if (e.size() != net.num_classes) {
        throw DataError("output error has length " + std::to_string(e.size()) + ", expected " +
                        std::to_string(net.num_classes));
    }
    return backward(net, forward_trace(net, x), e, nullptr);
}

std::size_t argmax(const Logits& logits) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < logits.size(); ++i) {
        if (logits[i] > logits[best]) best = i;
    }
    return best;
}

}  // namespace gradsal
