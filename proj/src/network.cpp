#include "mixcon/network.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mixcon/error.hpp"
#include "mixcon/rng.hpp"

namespace mixcon {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::string layer_error(std::size_t index, const LayerSpec& layer, const std::string& what) {
    return "layer " + std::to_string(index) + " (" + layer_name(layer) + "): " + what;
}

Shape output_shape(const LayerSpec& layer, const Shape& in, std::size_t index) {
    return std::visit(
        overloaded{
            [&](const Linear& l) -> Shape {
                if (in.size() != 1 || in[0] != l.in_dim) {
                    throw ConfigError(layer_error(index, layer, "expects (" +
                                                                    std::to_string(l.in_dim) +
                                                                    "), got " + shape_string(in)));
                }
                return {l.out_dim};
            },
            [&](const ReLU&) -> Shape { return in; },
            [&](const Conv2d& c) -> Shape {
                if (in.size() != 3 || in[0] != c.in_ch || in[1] < c.kernel_h ||
                    in[2] < c.kernel_w) {
                    throw ConfigError(
                        layer_error(index, layer, "incompatible input " + shape_string(in)));
                }
                return {c.out_ch, in[1] - c.kernel_h + 1, in[2] - c.kernel_w + 1};
            },
            [&](const MaxPool2d& p) -> Shape {
                if (in.size() != 3 || in[1] < p.kernel_h || in[2] < p.kernel_w) {
                    throw ConfigError(
                        layer_error(index, layer, "incompatible input " + shape_string(in)));
                }
                return {in[0], in[1] / p.kernel_h, in[2] / p.kernel_w};
            },
            [&](const Flatten&) -> Shape { return {shape_size(in)}; },
            [&](const Softmax&) -> Shape {
                if (in.size() != 1) {
                    throw ConfigError(layer_error(index, layer, "expects a vector input"));
                }
                return in;
            },
        },
        layer);
}

// ---- layer kernels (batched) ----

void linear_forward(const LayerParams& p, const Tensor& x, Tensor& y) {
    const std::size_t n = x.dim(0), in = p.weight.dim(1), out = p.weight.dim(0);
    const double* w = p.weight.data().data();
    const double* b = p.bias.data().data();
    for (std::size_t s = 0; s < n; ++s) {
        const double* xs = x.data().data() + s * in;
        double* ys = y.data().data() + s * out;
        for (std::size_t o = 0; o < out; ++o) {
            const double* wo = w + o * in;
            double acc = b[o];
            for (std::size_t i = 0; i < in; ++i) acc += wo[i] * xs[i];
            ys[o] = acc;
        }
    }
}

void linear_backward(const LayerParams& p, const Tensor& x, const Tensor& gy, LayerParams* grads,
                     Tensor* gx) {
    const std::size_t n = x.dim(0), in = p.weight.dim(1), out = p.weight.dim(0);
    const double* w = p.weight.data().data();
    for (std::size_t s = 0; s < n; ++s) {
        const double* xs = x.data().data() + s * in;
        const double* gys = gy.data().data() + s * out;
        if (grads) {
            double* gw = grads->weight.data().data();
            double* gb = grads->bias.data().data();
            for (std::size_t o = 0; o < out; ++o) {
                const double g = gys[o];
                gb[o] += g;
                if (g == 0.0) continue;
                double* gwo = gw + o * in;
                for (std::size_t i = 0; i < in; ++i) gwo[i] += g * xs[i];
            }
        }
        if (gx) {
            double* gxs = gx->data().data() + s * in;
            for (std::size_t o = 0; o < out; ++o) {
                const double g = gys[o];
                if (g == 0.0) continue;
                const double* wo = w + o * in;
                for (std::size_t i = 0; i < in; ++i) gxs[i] += g * wo[i];
            }
        }
    }
}

void conv_forward(const Conv2d& c, const LayerParams& p, const Tensor& x, Tensor& y) {
    const std::size_t n = x.dim(0), h = x.dim(2), wd = x.dim(3);
    const std::size_t oh = h - c.kernel_h + 1, ow = wd - c.kernel_w + 1;
    const double* w = p.weight.data().data();
    const double* b = p.bias.data().data();
    for (std::size_t s = 0; s < n; ++s) {
        for (std::size_t o = 0; o < c.out_ch; ++o) {
            double* yo = y.data().data() + ((s * c.out_ch + o) * oh) * ow;
            std::fill(yo, yo + oh * ow, b[o]);
            for (std::size_t ch = 0; ch < c.in_ch; ++ch) {
                const double* xc = x.data().data() + ((s * c.in_ch + ch) * h) * wd;
                const double* wk = w + ((o * c.in_ch + ch) * c.kernel_h) * c.kernel_w;
                for (std::size_t ki = 0; ki < c.kernel_h; ++ki) {
                    for (std::size_t kj = 0; kj < c.kernel_w; ++kj) {
                        const double wv = wk[ki * c.kernel_w + kj];
                        for (std::size_t oi = 0; oi < oh; ++oi) {
                            const double* xr = xc + (oi + ki) * wd + kj;
                            double* yr = yo + oi * ow;
                            for (std::size_t oj = 0; oj < ow; ++oj) yr[oj] += wv * xr[oj];
                        }
                    }
                }
            }
        }
    }
}

void conv_backward(const Conv2d& c, const LayerParams& p, const Tensor& x, const Tensor& gy,
                   LayerParams* grads, Tensor* gx) {
    const std::size_t n = x.dim(0), h = x.dim(2), wd = x.dim(3);
    const std::size_t oh = h - c.kernel_h + 1, ow = wd - c.kernel_w + 1;
    const double* w = p.weight.data().data();
    for (std::size_t s = 0; s < n; ++s) {
        for (std::size_t o = 0; o < c.out_ch; ++o) {
            const double* go = gy.data().data() + ((s * c.out_ch + o) * oh) * ow;
            if (grads) {
                double acc = 0.0;
                for (std::size_t q = 0; q < oh * ow; ++q) acc += go[q];
                grads->bias[o] += acc;
            }
            for (std::size_t ch = 0; ch < c.in_ch; ++ch) {
                const std::size_t plane = (s * c.in_ch + ch) * h * wd;
                const double* xc = x.data().data() + plane;
                const std::size_t kbase = ((o * c.in_ch + ch) * c.kernel_h) * c.kernel_w;
                for (std::size_t ki = 0; ki < c.kernel_h; ++ki) {
                    for (std::size_t kj = 0; kj < c.kernel_w; ++kj) {
                        const std::size_t kidx = kbase + ki * c.kernel_w + kj;
                        if (grads) {
                            double acc = 0.0;
                            for (std::size_t oi = 0; oi < oh; ++oi) {
                                const double* xr = xc + (oi + ki) * wd + kj;
                                const double* gr = go + oi * ow;
                                for (std::size_t oj = 0; oj < ow; ++oj) acc += gr[oj] * xr[oj];
                            }
                            grads->weight[kidx] += acc;
                        }
                        if (gx) {
                            const double wv = w[kidx];
                            double* gxc = gx->data().data() + plane;
                            for (std::size_t oi = 0; oi < oh; ++oi) {
                                double* gxr = gxc + (oi + ki) * wd + kj;
                                const double* gr = go + oi * ow;
                                for (std::size_t oj = 0; oj < ow; ++oj) gxr[oj] += wv * gr[oj];
                            }
                        }
                    }
                }
            }
        }
    }
}

// Flat input index of the first maximum in each pooling window.
template <class Fn>
void for_each_pool_window(const MaxPool2d& pool, const Tensor& x, Fn&& fn) {
    const std::size_t n = x.dim(0), ch = x.dim(1), h = x.dim(2), wd = x.dim(3);
    const std::size_t oh = h / pool.kernel_h, ow = wd / pool.kernel_w;
    for (std::size_t plane = 0; plane < n * ch; ++plane) {
        const double* xc = x.data().data() + plane * h * wd;
        for (std::size_t oi = 0; oi < oh; ++oi) {
            for (std::size_t oj = 0; oj < ow; ++oj) {
                std::size_t best = (oi * pool.kernel_h) * wd + oj * pool.kernel_w;
                for (std::size_t ki = 0; ki < pool.kernel_h; ++ki) {
                    for (std::size_t kj = 0; kj < pool.kernel_w; ++kj) {
                        const std::size_t idx = (oi * pool.kernel_h + ki) * wd + oj * pool.kernel_w + kj;
                        if (xc[idx] > xc[best]) best = idx;
                    }
                }
                fn((plane * oh + oi) * ow + oj, plane * h * wd + best);
            }
        }
    }
}

void softmax_rows(const Tensor& x, Tensor& y) {
    const std::size_t n = x.dim(0), c = x.row_size();
    for (std::size_t s = 0; s < n; ++s) {
        auto xs = x.row(s);
        auto ys = y.row(s);
        const double m = *std::max_element(xs.begin(), xs.end());
        double z = 0.0;
        for (std::size_t k = 0; k < c; ++k) z += (ys[k] = std::exp(xs[k] - m));
        for (std::size_t k = 0; k < c; ++k) ys[k] /= z;
    }
}

Tensor apply_layer(const LayerSpec& layer, const LayerParams& p, const Tensor& x,
                   const Shape& out_shape) {
    Shape batched{x.dim(0)};
    batched.insert(batched.end(), out_shape.begin(), out_shape.end());
    Tensor y(batched);
    std::visit(overloaded{
                   [&](const Linear&) { linear_forward(p, x, y); },
                   [&](const ReLU&) {
                       for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
                   },
                   [&](const Conv2d& c) { conv_forward(c, p, x, y); },
                   [&](const MaxPool2d& pool) {
                       for_each_pool_window(pool, x, [&](std::size_t out, std::size_t in) {
                           y[out] = x[in];
                       });
                   },
                   [&](const Flatten&) { y.storage() = x.storage(); },
                   [&](const Softmax&) { softmax_rows(x, y); },
               },
               layer);
    return y;
}

// Gradient of one layer: accumulates into grads (if any), returns dL/dx when
// want_gx is set.
Tensor backprop_layer(const LayerSpec& layer, const LayerParams& p, const Tensor& x,
                      const Tensor& y, const Tensor& gy, LayerParams* grads, bool want_gx) {
    Tensor gx;
    if (want_gx) gx = Tensor(x.shape());
    std::visit(overloaded{
                   [&](const Linear&) { linear_backward(p, x, gy, grads, want_gx ? &gx : nullptr); },
                   [&](const ReLU&) {
                       if (!want_gx) return;
                       for (std::size_t i = 0; i < x.size(); ++i) gx[i] = x[i] > 0.0 ? gy[i] : 0.0;
                   },
                   [&](const Conv2d& c) {
                       conv_backward(c, p, x, gy, grads, want_gx ? &gx : nullptr);
                   },
                   [&](const MaxPool2d& pool) {
                       if (!want_gx) return;
                       for_each_pool_window(pool, x, [&](std::size_t out, std::size_t in) {
                           gx[in] += gy[out];
                       });
                   },
                   [&](const Flatten&) {
                       if (want_gx) gx.storage() = gy.storage();
                   },
                   [&](const Softmax&) {
                       if (!want_gx) return;
                       const std::size_t n = y.dim(0);
                       for (std::size_t s = 0; s < n; ++s) {
                           auto ys = y.row(s);
                           auto gys = gy.row(s);
                           auto gxs = gx.row(s);
                           const double inner = dot(gys, ys);
                           for (std::size_t k = 0; k < ys.size(); ++k) gxs[k] = ys[k] * (gys[k] - inner);
                       }
                   },
               },
               layer);
    return gx;
}

Shape with_batch(std::size_t n, const Shape& per_sample) {
    Shape s{n};
    s.insert(s.end(), per_sample.begin(), per_sample.end());
    return s;
}

bool matches_batched(const Tensor& x, const Shape& per_sample) {
    return x.rank() == per_sample.size() + 1 &&
           std::equal(per_sample.begin(), per_sample.end(), x.shape().begin() + 1);
}

}  // namespace

std::string layer_name(const LayerSpec& layer) {
    return std::visit(
        overloaded{
            [](const Linear& l) {
                return "Linear(" + std::to_string(l.in_dim) + "," + std::to_string(l.out_dim) + ")";
            },
            [](const ReLU&) { return std::string("ReLU"); },
            [](const Conv2d& c) {
                return "Conv2d(" + std::to_string(c.in_ch) + "," + std::to_string(c.out_ch) + "," +
                       std::to_string(c.kernel_h) + "," + std::to_string(c.kernel_w) + ")";
            },
            [](const MaxPool2d& p) {
                return "MaxPool2d(" + std::to_string(p.kernel_h) + "," +
                       std::to_string(p.kernel_w) + ")";
            },
            [](const Flatten&) { return std::string("Flatten"); },
            [](const Softmax&) { return std::string("Softmax"); },
        },
        layer);
}

bool has_params(const LayerSpec& layer) {
    return std::holds_alternative<Linear>(layer) || std::holds_alternative<Conv2d>(layer);
}

std::pair<Shape, Shape> param_shapes(const LayerSpec& layer) {
    if (const auto* l = std::get_if<Linear>(&layer)) {
        return {{l->out_dim, l->in_dim}, {l->out_dim}};
    }
    if (const auto* c = std::get_if<Conv2d>(&layer)) {
        return {{c->out_ch, c->in_ch, c->kernel_h, c->kernel_w}, {c->out_ch}};
    }
    return {};
}

std::vector<Shape> layer_shapes(const NetworkSpec& spec) {
    if (spec.input_shape.empty() || shape_size(spec.input_shape) == 0) {
        throw ConfigError("network input shape must be non-empty");
    }
    if (spec.cut_index > spec.layers.size()) {
        throw ConfigError("cut index " + std::to_string(spec.cut_index) + " exceeds layer count " +
                          std::to_string(spec.layers.size()));
    }
    std::vector<Shape> shapes{spec.input_shape};
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        const LayerSpec& layer = spec.layers[i];
        if (const auto* l = std::get_if<Linear>(&layer); l && (l->in_dim == 0 || l->out_dim == 0)) {
            throw ConfigError(layer_error(i, layer, "zero dimension"));
        }
        if (const auto* c = std::get_if<Conv2d>(&layer);
            c && (c->in_ch == 0 || c->out_ch == 0 || c->kernel_h == 0 || c->kernel_w == 0)) {
            throw ConfigError(layer_error(i, layer, "zero dimension"));
        }
        if (const auto* p = std::get_if<MaxPool2d>(&layer); p && (p->kernel_h == 0 || p->kernel_w == 0)) {
            throw ConfigError(layer_error(i, layer, "zero kernel"));
        }
        shapes.push_back(output_shape(layer, shapes.back(), i));
    }
    return shapes;
}

void validate(const NetworkSpec& spec) { (void)layer_shapes(spec); }

std::vector<const Tensor*> Network::parameter_tensors() const {
    std::vector<const Tensor*> out;
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (!has_params(spec.layers[i])) continue;
        out.push_back(&params[i].weight);
        out.push_back(&params[i].bias);
    }
    return out;
}

std::vector<Tensor*> Network::parameter_tensors() {
    std::vector<Tensor*> out;
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (!has_params(spec.layers[i])) continue;
        out.push_back(&params[i].weight);
        out.push_back(&params[i].bias);
    }
    return out;
}

Network init_params(const NetworkSpec& spec, const InitOptions& options) {
    validate(spec);
    if (!(options.alpha >= 0.0)) throw ConfigError("init alpha must be non-negative");
    if (!(options.stddev > 0.0)) throw ConfigError("init stddev must be positive");
    Rng rng(options.seed);
    Network net{spec, std::vector<LayerParams>(spec.layers.size())};
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        if (!has_params(spec.layers[i])) continue;
        auto [wshape, bshape] = param_shapes(spec.layers[i]);
        LayerParams& p = net.params[i];
        p.weight = Tensor(wshape);
        p.bias = Tensor(bshape);
        if (options.scheme == InitScheme::ShiftedNormal) {
            const double shift = rng.normal(0.0, std::sqrt(options.alpha));
            for (double& v : p.weight.data()) v = rng.normal(shift, options.stddev);
            for (double& v : p.bias.data()) v = rng.normal(shift, options.stddev);
        } else {
            const double fan_in = static_cast<double>(p.weight.size() / wshape[0]);
            const double bound = 1.0 / std::sqrt(fan_in);
            for (double& v : p.weight.data()) v = rng.uniform(-bound, bound);
            for (double& v : p.bias.data()) v = rng.uniform(-bound, bound);
        }
    }
    return net;
}

Network init_params(const NetworkSpec& spec, double alpha, std::uint64_t seed) {
    InitOptions options;
    options.alpha = alpha;
    options.seed = seed;
    return init_params(spec, options);
}

namespace {

void check_params(const Network& net) {
    if (net.params.size() != net.spec.layers.size()) {
        throw ContractError("network has " + std::to_string(net.params.size()) +
                            " parameter slots for " + std::to_string(net.spec.layers.size()) +
                            " layers");
    }
    for (std::size_t i = 0; i < net.params.size(); ++i) {
        auto [wshape, bshape] = param_shapes(net.spec.layers[i]);
        if (net.params[i].weight.shape() != wshape || net.params[i].bias.shape() != bshape) {
            throw ShapeError("layer " + std::to_string(i) + " parameters do not match " +
                             layer_name(net.spec.layers[i]));
        }
    }
}

ActivationTape run_layers(const Network& net, const Tensor& x, std::size_t first, std::size_t last,
                          const std::vector<Shape>& shapes) {
    if (!matches_batched(x, shapes[first])) {
        throw ShapeError("layer " + std::to_string(first) + " expects per-sample shape " +
                         shape_string(shapes[first]) + ", got " + shape_string(x.shape()));
    }
    ActivationTape tape;
    tape.activations.reserve(last - first + 1);
    tape.activations.push_back(x);
    for (std::size_t i = first; i < last; ++i) {
        tape.activations.push_back(
            apply_layer(net.spec.layers[i], net.params[i], tape.activations.back(), shapes[i + 1]));
    }
    return tape;
}

}  // namespace

ForwardResult forward(const Network& net, const Tensor& x) {
    check_params(net);
    const auto shapes = layer_shapes(net.spec);
    const bool single = x.shape() == net.spec.input_shape;
    const Tensor batched = single ? x.reshaped(with_batch(1, x.shape())) : x;
    ForwardResult result;
    result.tape = run_layers(net, batched, 0, net.spec.layers.size(), shapes);
    result.output = single ? result.tape.output().reshaped(shapes.back()) : result.tape.output();
    return result;
}

Tensor forward_range(const Network& net, const Tensor& x, std::size_t first, std::size_t last) {
    check_params(net);
    if (first > last || last > net.spec.layers.size()) throw ContractError("invalid layer range");
    const auto shapes = layer_shapes(net.spec);
    ActivationTape tape = run_layers(net, x, first, last, shapes);
    return std::move(tape.activations.back());
}

Tensor hidden(const Network& net, const Tensor& x) {
    const bool single = x.shape() == net.spec.input_shape;
    if (single) {
        Tensor out = forward_range(net, x.reshaped(with_batch(1, x.shape())), 0, net.spec.cut_index);
        return out.reshaped(layer_shapes(net.spec)[net.spec.cut_index]);
    }
    return forward_range(net, x, 0, net.spec.cut_index);
}

Tensor head(const Network& net, const Tensor& features) {
    return forward_range(net, features, net.spec.cut_index, net.spec.layers.size());
}

BackwardResult backward(const Network& net, const ActivationTape& tape, const Tensor& grad_y,
                        const Tensor* grad_hidden, BackwardOptions options) {
    check_params(net);
    const std::size_t layers = net.spec.layers.size();
    if (tape.activations.size() != layers + 1) {
        throw ContractError("tape holds " + std::to_string(tape.layer_count()) +
                            " layers, network has " + std::to_string(layers));
    }
    if (grad_y.size() != tape.output().size()) {
        throw ContractError("grad_y shape " + shape_string(grad_y.shape()) +
                            " does not match output " + shape_string(tape.output().shape()));
    }
    const Tensor& cut_act = tape.activations[net.spec.cut_index];
    if (grad_hidden && grad_hidden->size() != cut_act.size()) {
        throw ContractError("grad_hidden shape " + shape_string(grad_hidden->shape()) +
                            " does not match cut activations " + shape_string(cut_act.shape()));
    }

    BackwardResult result;
    if (options.param_grads) {
        result.param_grads.resize(layers);
        for (std::size_t i = 0; i < layers; ++i) {
            auto [wshape, bshape] = param_shapes(net.spec.layers[i]);
            if (wshape.empty()) continue;
            result.param_grads[i].weight = Tensor(wshape);
            result.param_grads[i].bias = Tensor(bshape);
        }
    }

    Tensor grad = grad_y.reshaped(tape.output().shape());
    // Parameterless layers below the first parameterized one need no gradient
    // unless the input gradient was requested.
    std::size_t lowest_needed = 0;
    if (!options.input_grad) {
        lowest_needed = layers;
        for (std::size_t i = 0; i < layers; ++i) {
            if (options.param_grads && has_params(net.spec.layers[i])) {
                lowest_needed = i;
                break;
            }
        }
    }
    for (std::size_t i = layers; i-- > 0;) {
        if (grad_hidden && i + 1 == net.spec.cut_index) {
            grad.axpy(1.0, grad_hidden->reshaped(grad.shape()));
        }
        if (i < lowest_needed) break;
        LayerParams* g = options.param_grads && has_params(net.spec.layers[i])
                             ? &result.param_grads[i]
                             : nullptr;
        const bool want_gx = options.input_grad || i > lowest_needed;
        grad = backprop_layer(net.spec.layers[i], net.params[i], tape.activations[i],
                              tape.activations[i + 1], grad, g, want_gx);
        if (!want_gx) break;
    }
    if (options.input_grad) {
        if (grad_hidden && net.spec.cut_index == 0) {
            grad.axpy(1.0, grad_hidden->reshaped(grad.shape()));
        }
        result.grad_x = std::move(grad);
    }
    return result;
}

std::size_t predict_class(std::span<const double> scores) {
    if (scores.empty()) throw ContractError("predict_class on an empty score vector");
    std::size_t best = 0;
    for (std::size_t i = 1; i < scores.size(); ++i) {
        if (std::abs(scores[i]) > std::abs(scores[best])) best = i;
    }
    return best;
}

std::vector<std::size_t> predict_classes(const Tensor& logits) {
    if (logits.rank() != 2) throw ContractError("predict_classes expects an N x C score matrix");
    Tensor probs(logits.shape());
    softmax_rows(logits, probs);
    std::vector<std::size_t> out(logits.dim(0));
    for (std::size_t s = 0; s < out.size(); ++s) out[s] = predict_class(probs.row(s));
    return out;
}

double spectral_norm(const LinearOperator& op, int iterations, std::uint64_t seed) {
    if (iterations < 1) throw ContractError("spectral_norm needs at least one iteration");
    if (op.rows == 0 || op.cols == 0) return 0.0;

    Rng rng(seed);
    std::vector<double> v(op.cols), wv(op.rows);
    for (double& e : v) e = rng.normal();
    double estimate = 0.0;
    for (int it = 0; it < iterations; ++it) {
        const double vn = norm2(v);
        if (vn == 0.0) break;
        for (double& e : v) e /= vn;
        op.apply(v, wv);
        estimate = std::max(estimate, norm2(wv));
        // v <- W^T W v
        op.apply_transpose(wv, v);
    }
    return estimate;
}

LinearOperator matrix_operator(const Tensor& matrix) {
    if (matrix.rank() != 2) throw ContractError("expected a matrix, got " + shape_string(matrix.shape()));
    const std::size_t rows = matrix.dim(0), cols = matrix.dim(1);
    return {rows, cols,
            [&matrix, rows](std::span<const double> v, std::span<double> out) {
                for (std::size_t r = 0; r < rows; ++r) out[r] = dot(matrix.row(r), v);
            },
            [&matrix, rows, cols](std::span<const double> u, std::span<double> out) {
                std::fill(out.begin(), out.end(), 0.0);
                for (std::size_t r = 0; r < rows; ++r) {
                    auto row = matrix.row(r);
                    for (std::size_t c = 0; c < cols; ++c) out[c] += row[c] * u[r];
                }
            }};
}

double spectral_norm(const Tensor& matrix, int iterations, std::uint64_t seed) {
    if (matrix.rank() != 2) throw ContractError("spectral_norm expects a matrix");
    if (iterations < 1) throw ContractError("spectral_norm needs at least one iteration");
    if (matrix.size() == 0 || max_abs(matrix.data()) == 0.0) return 0.0;
    return spectral_norm(matrix_operator(matrix), iterations, seed);
}

Network feature_extractor(const Network& net) {
    validate(net.spec);
    Network out;
    out.spec.input_shape = net.spec.input_shape;
    out.spec.layers.assign(net.spec.layers.begin(), net.spec.layers.begin() + net.spec.cut_index);
    out.spec.cut_index = net.spec.cut_index;
    out.params.assign(net.params.begin(), net.params.begin() + net.spec.cut_index);
    return out;
}

NetworkSpec synthetic_mlp(std::size_t third_width) {
    NetworkSpec spec;
    spec.input_shape = {10};
    spec.layers = {Linear{10, 500}, ReLU{}, Linear{500, 2}, ReLU{},
                   Linear{2, third_width}, ReLU{}, Linear{third_width, 2}};
    spec.cut_index = 4;
    return spec;
}

NetworkSpec lenet5(std::size_t channels, std::size_t classes) {
    NetworkSpec spec;
    spec.input_shape = {channels, 28, 28};
    spec.layers = {Conv2d{channels, 6, 5, 5}, ReLU{}, MaxPool2d{2, 2},
                   Conv2d{6, 16, 5, 5},       ReLU{}, MaxPool2d{2, 2},
                   Flatten{},                 Linear{256, 120}, ReLU{},
                   Linear{120, 84},           ReLU{}, Linear{84, classes}};
    spec.cut_index = 6;
    return spec;
}

}  // namespace mixcon
