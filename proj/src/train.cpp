#include "mixcon/train.hpp"

#include <algorithm>
#include <cmath>

#include "mixcon/error.hpp"
#include "mixcon/metrics.hpp"
#include "mixcon/rng.hpp"

namespace mixcon {

namespace {

constexpr std::uint64_t kFlipStream = 1;
constexpr std::uint64_t kBatchStream = 1000;
constexpr std::size_t kEvalChunk = 256;

Tensor flatten_rows(const Tensor& t) {
    return t.reshaped({t.dim(0), t.row_size()});
}

}  // namespace

std::string consistency_name(ConsistencyKind kind) {
    switch (kind) {
        case ConsistencyKind::None: return "none";
        case ConsistencyKind::MixCon: return "mixcon";
        case ConsistencyKind::UniCon: return "unicon";
    }
    return "unknown";
}

ConsistencyKind parse_consistency_kind(const std::string& name) {
    if (name == "none") return ConsistencyKind::None;
    if (name == "mixcon") return ConsistencyKind::MixCon;
    if (name == "unicon") return ConsistencyKind::UniCon;
    throw ConfigError("unknown consistency kind '" + name + "'");
}

void validate(const TrainConfig& cfg) {
    if (cfg.epochs < 1) throw ConfigError("epochs must be >= 1");
    if (!(cfg.learning_rate > 0.0)) throw ConfigError("learning rate must be > 0");
    if (cfg.batch_size == 0) throw ConfigError("batch size must be positive");
    if (!(cfg.label_flip_fraction >= 0.0 && cfg.label_flip_fraction <= 1.0)) {
        throw ConfigError("label flip fraction must lie in [0, 1]");
    }
    if (!(cfg.init_alpha >= 0.0)) throw ConfigError("init alpha must be >= 0");
    validate(cfg.mixcon);
}

InitOptions init_options(const TrainConfig& cfg) {
    return {cfg.init_scheme, cfg.init_alpha, cfg.init_stddev, cfg.seed};
}

Tensor hidden_features(const Network& net, const Tensor& inputs) {
    const std::size_t n = inputs.dim(0);
    Tensor out;
    for (std::size_t start = 0; start < n; start += kEvalChunk) {
        const std::size_t count = std::min(kEvalChunk, n - start);
        Tensor h = flatten_rows(hidden(net, inputs.slice_rows(start, count)));
        if (start == 0) out = Tensor({n, h.dim(1)});
        std::copy(h.data().begin(), h.data().end(), out.data().begin() + start * h.dim(1));
    }
    return out;
}

double evaluate_accuracy(const Network& net, const Dataset& ds) {
    if (ds.size() == 0) return 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < ds.size(); start += kEvalChunk) {
        const std::size_t count = std::min(kEvalChunk, ds.size() - start);
        const auto predicted = predict_classes(forward(net, ds.inputs.slice_rows(start, count)).output);
        for (std::size_t i = 0; i < count; ++i) correct += predicted[i] == ds.labels[start + i];
    }
    return double(correct) / double(ds.size());
}

EpochRecord measure_separability(const Network& net, const Dataset& ds, const TrainConfig& cfg) {
    const Dataset sample =
        cfg.separability_samples == 0 || cfg.separability_samples >= ds.size() ? ds : ds.head(cfg.separability_samples);
    const Tensor h = hidden_features(net, sample.inputs);
    EpochRecord rec;
    PairSet pairs;
    if (cfg.consistency == ConsistencyKind::MixCon) {
        const Tensor scored = cfg.normalize_features ? normalize_features(h) : h;
        pairs = mixcon_loss(scored, sample.labels, cfg.mixcon).pairs;
    }
    const Separability sep = separability(h, pairs);
    rec.delta_h = sep.delta_h;
    rec.max_pair_distance = sep.max_pair;
    rec.delta_H = sep.delta_H;
    rec.mean_pair_distance = cfg.cross_class_distance ? mean_cross_class_distance(h, sample.labels) : sep.mean_pair;
    return rec;
}

std::pair<double, double> sgd_step(Network& net, const Tensor& inputs, std::span<const std::size_t> labels,
                                   const TrainConfig& cfg) {
    const ForwardResult fwd = forward(net, inputs);
    const LossValue ce = cross_entropy(flatten_rows(fwd.output), labels, cfg.ce_reduction);

    double con_value = 0.0;
    Tensor grad_hidden;
    if (cfg.consistency != ConsistencyKind::None) {
        const Tensor& cut = fwd.tape.activations[net.spec.cut_index];
        const Tensor h = flatten_rows(cut);
        LossValue con;
        if (cfg.consistency == ConsistencyKind::MixCon) {
            if (cfg.normalize_features) {
                con = mixcon_loss(normalize_features(h), labels, cfg.mixcon).loss;
                con.grad = normalize_features_vjp(h, con.grad);
            } else {
                con = mixcon_loss(h, labels, cfg.mixcon).loss;
            }
        } else {
            con = unicon_loss(h, labels);
        }
        con_value = con.value;
        // lambda = 0 leaves the gradient stream untouched, matching Vanilla bit for bit.
        if (cfg.mixcon.lambda != 0.0) {
            con.grad *= cfg.mixcon.lambda;
            grad_hidden = con.grad.reshaped(cut.shape());
        }
    }

    BackwardOptions options;
    options.input_grad = false;
    const BackwardResult grads =
        backward(net, fwd.tape, ce.grad.reshaped(fwd.output.shape()), grad_hidden.empty() ? nullptr : &grad_hidden,
                 options);
    for (std::size_t i = 0; i < net.params.size(); ++i) {
        if (net.params[i].weight.empty()) continue;
        net.params[i].weight.axpy(-cfg.learning_rate, grads.param_grads[i].weight);
        net.params[i].bias.axpy(-cfg.learning_rate, grads.param_grads[i].bias);
    }
    return {ce.value, con_value};
}

TrainResult train(Network net, const Dataset& train_ds, const Dataset& test_ds, const TrainConfig& cfg,
                  const EpochCallback& on_epoch) {
    validate(cfg);
    validate(train_ds);
    validate(net.spec);
    if (train_ds.sample_shape() != net.spec.input_shape) {
        throw ShapeError("dataset samples " + shape_string(train_ds.sample_shape()) + " do not match network input " +
                         shape_string(net.spec.input_shape));
    }
    const Dataset noisy = flip_labels(train_ds, cfg.label_flip_fraction, Rng::derive(cfg.seed, kFlipStream));

    TrainResult result{std::move(net), {}};
    Network& model = result.net;
    if (on_epoch) on_epoch(0, model);

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const BatchPlan plan{Rng::derive(cfg.seed, kBatchStream + std::uint64_t(epoch)), cfg.batch_size, true};
        const auto plan_batches = batch_indices(noisy.size(), plan);
        double class_sum = 0.0;
        double con_sum = 0.0;
        for (std::size_t b = 0; b < plan_batches.size(); ++b) {
            const Dataset batch = noisy.subset(plan_batches[b]);
            const auto [class_loss, con_loss] = sgd_step(model, batch.inputs, batch.labels, cfg);
            const double total = combined_objective(class_loss, con_loss, cfg.mixcon.lambda);
            if (!std::isfinite(total)) {
                throw TrainingError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                                        std::to_string(b),
                                    epoch, static_cast<int>(b));
            }
            class_sum += class_loss;
            con_sum += con_loss;
        }

        EpochRecord rec;
        if (cfg.track_history || epoch == cfg.epochs) {
            rec = measure_separability(model, test_ds, cfg);
            rec.train_accuracy = evaluate_accuracy(model, noisy);
            rec.test_accuracy = evaluate_accuracy(model, test_ds);
        }
        rec.epoch = epoch;
        rec.class_loss = class_sum / double(plan_batches.size());
        rec.consistency_loss = con_sum / double(plan_batches.size());
        result.history.epochs.push_back(rec);
        if (on_epoch) on_epoch(epoch, model);
    }
    return result;
}

VariantKind parse_variant_kind(const std::string& name) {
    if (name == "deeper") return VariantKind::Deeper;
    if (name == "wider") return VariantKind::Wider;
    throw ConfigError("unknown variant '" + name + "' (expected deeper or wider)");
}

std::string variant_name(VariantKind kind) {
    return kind == VariantKind::Deeper ? "deeper" : "wider";
}

NetworkSpec make_variant(const NetworkSpec& spec, VariantKind kind) {
    if (spec != synthetic_mlp()) {
        throw ConfigError("variants are defined only for the synthetic MLP");
    }
    if (kind == VariantKind::Wider) return synthetic_mlp(2048);
    NetworkSpec out = spec;
    // Index 6 follows the ReLU of the third Linear.
    const std::vector<LayerSpec> extra = {Linear{100, 100}, ReLU{}, Linear{100, 100}, ReLU{}};
    out.layers.insert(out.layers.begin() + 6, extra.begin(), extra.end());
    return out;
}

}  // namespace mixcon
