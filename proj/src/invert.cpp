#include "mixcon/invert.hpp"

#include <algorithm>
#include <cmath>

#include "mixcon/error.hpp"
#include "mixcon/parallel.hpp"
#include "mixcon/rng.hpp"

namespace mixcon {

LossValue tv(const Tensor& image) {
    Shape s = image.shape();
    if (s.size() == 2) s.insert(s.begin(), 1);
    if (s.size() != 3) throw ContractError("tv expects (C, H, W) or (H, W), got " + shape_string(image.shape()));
    const std::size_t channels = s[0], rows = s[1], cols = s[2];
    if (rows < 2 || cols < 2) throw ContractError("tv needs H and W of at least 2");

    LossValue out{0.0, Tensor(image.shape())};
    const auto x = image.data();
    auto g = out.grad.data();
    for (std::size_t c = 0; c < channels; ++c) {
        const std::size_t base = c * rows * cols;
        for (std::size_t i = 0; i + 1 < rows; ++i) {
            for (std::size_t j = 0; j + 1 < cols; ++j) {
                const std::size_t at = base + i * cols + j;
                const double dv = x[at + cols] - x[at];
                const double dh = x[at + 1] - x[at];
                const double r = std::sqrt(dv * dv + dh * dh);
                out.value += r;
                if (r == 0.0) continue;
                g[at + cols] += dv / r;
                g[at + 1] += dh / r;
                g[at] -= (dv + dh) / r;
            }
        }
    }
    return out;
}

std::string inversion_loss_name(InversionLoss kind) { return kind == InversionLoss::L1 ? "l1" : "l2"; }

InversionLoss parse_inversion_loss(const std::string& name) {
    if (name == "l1") return InversionLoss::L1;
    if (name == "l2") return InversionLoss::L2;
    throw ConfigError("unknown inversion loss '" + name + "' (expected l1 or l2)");
}

std::string inversion_init_name(InversionInit kind) {
    switch (kind) {
        case InversionInit::Normal: return "normal";
        case InversionInit::Uniform: return "uniform";
        case InversionInit::Constant: return "constant";
    }
    return "unknown";
}

InversionInit parse_inversion_init(const std::string& name) {
    if (name == "normal") return InversionInit::Normal;
    if (name == "uniform") return InversionInit::Uniform;
    if (name == "constant") return InversionInit::Constant;
    throw ConfigError("unknown inversion init '" + name + "'");
}

void validate(const InversionConfig& cfg) {
    if (cfg.iterations < 1) throw ConfigError("inversion needs at least one iteration");
    if (!(cfg.tv_weight >= 0.0)) throw ConfigError("tv weight must be >= 0");
    if (!(cfg.weight_decay >= 0.0)) throw ConfigError("weight decay must be >= 0");
    if (!(cfg.learning_rate > 0.0)) throw ConfigError("inversion learning rate must be > 0");
    if (cfg.clamp && !(cfg.clamp->first < cfg.clamp->second)) throw ConfigError("clamp range needs lo < hi");
}

InversionConfig synthetic_attack_config() {
    return InversionConfig{};
}

InversionConfig image_attack_config() {
    InversionConfig cfg;
    cfg.loss = InversionLoss::L2;
    cfg.tv_weight = 1e-5;
    cfg.weight_decay = 1e-4;
    cfg.learning_rate = 10.0;
    cfg.iterations = 500;
    cfg.init = InversionInit::Uniform;
    cfg.clamp = std::pair{0.0, 1.0};
    return cfg;
}

LossValue residual_loss(const Tensor& features, const Tensor& z, InversionLoss loss) {
    if (features.size() != z.size()) {
        throw ShapeError("target has " + std::to_string(z.size()) + " entries, features have " +
                         std::to_string(features.size()));
    }
    LossValue out{0.0, Tensor(features.shape())};
    if (loss == InversionLoss::L1) {
        for (std::size_t i = 0; i < features.size(); ++i) {
            const double r = features[i] - z[i];
            out.value += std::abs(r);
            out.grad[i] = r > 0.0 ? 1.0 : (r < 0.0 ? -1.0 : 0.0);
        }
    } else {
        double sq = 0.0;
        for (std::size_t i = 0; i < features.size(); ++i) sq += (features[i] - z[i]) * (features[i] - z[i]);
        out.value = std::sqrt(sq);
        if (out.value > 0.0) {
            for (std::size_t i = 0; i < features.size(); ++i) out.grad[i] = (features[i] - z[i]) / out.value;
        }
    }
    return out;
}

LossValue inversion_objective(const Network& extractor, const Tensor& s, const Tensor& z,
                              const InversionConfig& cfg) {
    const Shape batched = [&] {
        Shape b{1};
        b.insert(b.end(), s.shape().begin(), s.shape().end());
        return b;
    }();
    const ForwardResult fwd = forward(extractor, s.reshaped(batched));
    LossValue out = residual_loss(fwd.output, z, cfg.loss);
    BackwardOptions options;
    options.param_grads = false;
    Tensor grad_s = backward(extractor, fwd.tape, out.grad, nullptr, options).grad_x.reshaped(s.shape());
    if (cfg.tv_weight > 0.0) {
        const LossValue t = tv(s);
        out.value += cfg.tv_weight * t.value;
        grad_s.axpy(cfg.tv_weight, t.grad);
    }
    out.grad = std::move(grad_s);
    return out;
}

namespace {

void apply_clamp(Tensor& s, const InversionConfig& cfg) {
    if (!cfg.clamp) return;
    for (double& v : s.data()) v = std::clamp(v, cfg.clamp->first, cfg.clamp->second);
}

}  // namespace

Tensor inversion_start(const Shape& shape, const InversionConfig& cfg) {
    Tensor s(shape);
    Rng rng(cfg.seed);
    switch (cfg.init) {
        case InversionInit::Normal:
            for (double& v : s.data()) v = rng.normal();
            break;
        case InversionInit::Uniform: {
            const auto [lo, hi] = cfg.clamp.value_or(std::pair{0.0, 1.0});
            for (double& v : s.data()) v = rng.uniform(lo, hi);
            break;
        }
        case InversionInit::Constant:
            s.fill(cfg.init_value);
            break;
    }
    apply_clamp(s, cfg);
    return s;
}

InversionResult descend(const InversionObjective& objective, Tensor start, const InversionConfig& cfg) {
    validate(cfg);
    InversionResult result{std::move(start), 0.0, {}};
    Tensor& s = result.recovered;
    result.trajectory.reserve(cfg.iterations);
    LossValue obj = objective(s);
    for (int it = 0; it < cfg.iterations; ++it) {
        if (!std::isfinite(obj.value)) {
            throw AttackError("non-finite inversion objective at iteration " + std::to_string(it), it);
        }
        obj.grad.axpy(cfg.weight_decay, s);
        s.axpy(-cfg.learning_rate, obj.grad);
        apply_clamp(s, cfg);
        obj = objective(s);
        result.trajectory.push_back(obj.value);
    }
    if (!std::isfinite(obj.value) || !s.all_finite()) {
        throw AttackError("non-finite inversion result at iteration " + std::to_string(cfg.iterations),
                          cfg.iterations);
    }
    result.final_objective = obj.value;
    return result;
}

InversionResult invert_from(const Network& net, const Tensor& z, Tensor start, const InversionConfig& cfg) {
    validate(cfg);
    const Network extractor = feature_extractor(net);
    if (start.shape() != net.spec.input_shape) {
        throw ShapeError("start point " + shape_string(start.shape()) + " does not match input " +
                         shape_string(net.spec.input_shape));
    }
    return descend([&](const Tensor& s) { return inversion_objective(extractor, s, z, cfg); }, std::move(start), cfg);
}

InversionResult invert(const Network& net, const Tensor& z, const InversionConfig& cfg) {
    validate(cfg);
    return invert_from(net, z, inversion_start(net.spec.input_shape, cfg), cfg);
}

std::vector<AttackOutcome> attack_dataset(const Network& net, const Dataset& ds, const InversionConfig& cfg,
                                          std::size_t n, int threads) {
    validate(cfg);
    if (n > ds.size()) {
        throw ContractError("cannot attack " + std::to_string(n) + " of " + std::to_string(ds.size()) + " samples");
    }
    std::vector<AttackOutcome> out(n);
    parallel_for(n, threads, [&](std::size_t i) {
        const Tensor x = ds.inputs.slice_rows(i, 1).reshaped(ds.sample_shape());
        out[i].pair.original = x;
        try {
            const Tensor z = hidden(net, x);
            InversionConfig sample_cfg = cfg;
            sample_cfg.seed = Rng::derive(cfg.seed, i);
            InversionResult r = invert(net, z, sample_cfg);
            out[i].pair.recovered = std::move(r.recovered);
            out[i].final_objective = r.final_objective;
        } catch (const Error& e) {
            out[i].error = e.what();
        }
    });
    return out;
}

std::vector<RecoveryPair> successful_pairs(const std::vector<AttackOutcome>& outcomes) {
    std::vector<RecoveryPair> out;
    for (const auto& o : outcomes) {
        if (o.error.empty()) out.push_back(o.pair);
    }
    return out;
}

}  // namespace mixcon
