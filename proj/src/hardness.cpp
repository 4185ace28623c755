#include "mixcon/hardness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <json.hpp>

#include "mixcon/error.hpp"
#include "mixcon/rng.hpp"

namespace mixcon {

namespace {

constexpr std::size_t kMaxEnumerationVars = 24;

bool literal_true(int lit, const Assignment& a) {
    const bool value = a[static_cast<std::size_t>(std::abs(lit)) - 1];
    return lit > 0 ? value : !value;
}

Assignment assignment_from_bits(std::uint64_t bits, std::size_t n) {
    Assignment a(n);
    for (std::size_t i = 0; i < n; ++i) a[i] = (bits >> i) & 1u;
    return a;
}

void require_enumerable(const CnfFormula& phi) {
    if (phi.n > kMaxEnumerationVars) {
        throw ConfigError("brute force is limited to " + std::to_string(kMaxEnumerationVars) + " variables");
    }
}

double distance(const Tensor& a, const Tensor& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
}

Tensor uniform_input(Rng& rng, std::size_t n) {
    Tensor x({n});
    for (double& v : x.data()) v = rng.uniform(-1.0, 1.0);
    return x;
}

}  // namespace

std::size_t unsat_count(const CnfFormula& phi, const Assignment& assignment) {
    if (assignment.size() != phi.n) throw ContractError("assignment length does not match variable count");
    std::size_t count = 0;
    for (const auto& c : phi.clauses) {
        if (!literal_true(c[0], assignment) && !literal_true(c[1], assignment) && !literal_true(c[2], assignment)) {
            ++count;
        }
    }
    return count;
}

std::optional<Assignment> find_model(const CnfFormula& phi) {
    require_enumerable(phi);
    for (std::uint64_t bits = 0; bits < (std::uint64_t{1} << phi.n); ++bits) {
        Assignment a = assignment_from_bits(bits, phi.n);
        if (unsat_count(phi, a) == 0) return a;
    }
    return std::nullopt;
}

std::size_t min_unsat(const CnfFormula& phi) {
    require_enumerable(phi);
    std::size_t best = phi.m();
    for (std::uint64_t bits = 0; bits < (std::uint64_t{1} << phi.n) && best > 0; ++bits) {
        best = std::min(best, unsat_count(phi, assignment_from_bits(bits, phi.n)));
    }
    return best;
}

Tensor assignment_to_input(const Assignment& assignment) {
    Tensor x({assignment.size()});
    for (std::size_t i = 0; i < assignment.size(); ++i) x[i] = assignment[i] ? -1.0 : 1.0;
    return x;
}

Assignment input_to_assignment(const Tensor& x) {
    Assignment a(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) a[i] = x[i] < 0.0;
    return a;
}

Tensor round_input(const Tensor& x) {
    Tensor out = x;
    for (double& v : out.data()) v = v < 0.0 ? -1.0 : 1.0;
    return out;
}

ReducedNetwork build_reduction(const CnfFormula& phi, std::size_t K) {
    validate(phi);
    if (K < 1) throw ConfigError("the reduction needs K >= 1 copies");
    ReducedNetwork net;
    net.n = phi.n;
    net.m = phi.m();
    net.K = K;
    const std::size_t n = phi.n, m = phi.m();
    net.W1 = Tensor({net.hidden_dim(), n});
    net.b = Tensor({net.hidden_dim()});
    net.z = Tensor({net.output_dim()});
    for (std::size_t j = 0; j < m; ++j) {
        for (int lit : phi.clauses[j]) {
            net.W1.at(j, static_cast<std::size_t>(std::abs(lit)) - 1) = lit > 0 ? 1.0 : -1.0;
        }
        net.b[j] = -2.0;
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < K; ++k) {
            net.W1.at(m + i * K + k, i) = 1.0;
            net.W1.at(m + K * n + i * K + k, i) = -1.0;
            net.z[m + i * K + k] = 1.0;
        }
    }
    return net;
}

std::vector<std::size_t> w2_support(const ReducedNetwork& net, std::size_t row) {
    if (row < net.m) return {row};
    if (row >= net.output_dim()) throw ContractError("W2 row out of range");
    return {row, row + net.K * net.n};
}

LinearOperator w2_operator(const ReducedNetwork& net) {
    const std::size_t m = net.m, copies = net.K * net.n;
    LinearOperator op;
    op.rows = net.output_dim();
    op.cols = net.hidden_dim();
    op.apply = [m, copies](std::span<const double> v, std::span<double> out) {
        for (std::size_t r = 0; r < m; ++r) out[r] = v[r];
        for (std::size_t r = m; r < m + copies; ++r) out[r] = v[r] + v[r + copies];
    };
    op.apply_transpose = [m, copies](std::span<const double> u, std::span<double> out) {
        for (std::size_t r = 0; r < m; ++r) out[r] = u[r];
        for (std::size_t r = m; r < m + copies; ++r) {
            out[r] = u[r];
            out[r + copies] = u[r];
        }
    };
    return op;
}

Tensor w2_matrix(const ReducedNetwork& net, std::size_t max_entries) {
    const std::size_t rows = net.output_dim(), cols = net.hidden_dim();
    if (rows * cols > max_entries) {
        throw ConfigError("dense W2 would have " + std::to_string(rows * cols) + " entries (limit " +
                          std::to_string(max_entries) + "); lower K");
    }
    Tensor w({rows, cols});
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c : w2_support(net, r)) w.at(r, c) = 1.0;
    }
    return w;
}

namespace {

// h(x) for repeated evaluation: W1 is read once into compressed rows (each
// row has at most three non-zeros) and work buffers are reused.
class ReducedEvaluator {
public:
    explicit ReducedEvaluator(const ReducedNetwork& net) : net_(net), h1_(net.hidden_dim()) {
        start_.reserve(net.hidden_dim() + 1);
        start_.push_back(0);
        for (std::size_t r = 0; r < net.hidden_dim(); ++r) {
            auto row = net.W1.row(r);
            for (std::size_t c = 0; c < row.size(); ++c) {
                if (row[c] != 0.0) {
                    col_.push_back(c);
                    val_.push_back(row[c]);
                }
            }
            start_.push_back(col_.size());
        }
        op_ = w2_operator(net);
    }

    void forward(const Tensor& x, Tensor& out) {
        if (x.size() != net_.n) {
            throw ShapeError("input has " + std::to_string(x.size()) + " entries, expected " +
                             std::to_string(net_.n));
        }
        for (std::size_t r = 0; r < h1_.size(); ++r) {
            double s = 0.0;
            for (std::size_t k = start_[r]; k < start_[r + 1]; ++k) s += val_[k] * x[col_[k]];
            h1_[r] = std::max(0.0, s + net_.b[r]);
        }
        if (out.size() != net_.output_dim()) out = Tensor({net_.output_dim()});
        op_.apply(h1_, out.data());
    }

    // Residual loss and its input gradient W1^T (relu'(a) * W2^T dL/dh).
    LossValue objective(const Tensor& x, InversionLoss loss) {
        forward(x, scratch_);
        LossValue out = residual_loss(scratch_, net_.z, loss);
        back_.resize(h1_.size());
        op_.apply_transpose(out.grad.data(), back_);
        Tensor gx({net_.n}, 0.0);
        for (std::size_t r = 0; r < h1_.size(); ++r) {
            if (h1_[r] <= 0.0) continue;
            for (std::size_t k = start_[r]; k < start_[r + 1]; ++k) gx[col_[k]] += val_[k] * back_[r];
        }
        out.grad = std::move(gx);
        return out;
    }

    double squared_error(const Tensor& x) {
        forward(x, scratch_);
        double s = 0.0;
        for (std::size_t i = 0; i < scratch_.size(); ++i) s += (scratch_[i] - net_.z[i]) * (scratch_[i] - net_.z[i]);
        return s;
    }

private:
    const ReducedNetwork& net_;
    std::vector<std::size_t> start_, col_;
    std::vector<double> val_, h1_, back_;
    LinearOperator op_;
    Tensor scratch_;
};

}  // namespace

Tensor reduced_forward(const ReducedNetwork& net, const Tensor& x) {
    Tensor out;
    ReducedEvaluator(net).forward(x, out);
    return out;
}

double squared_error(const ReducedNetwork& net, const Tensor& x) {
    return ReducedEvaluator(net).squared_error(x);
}

LossValue reduced_objective(const ReducedNetwork& net, const Tensor& x, InversionLoss loss) {
    return ReducedEvaluator(net).objective(x, loss);
}

Network to_network(const ReducedNetwork& net) {
    NetworkSpec spec;
    spec.input_shape = {net.n};
    spec.layers = {Linear{net.n, net.hidden_dim()}, ReLU{}, Linear{net.hidden_dim(), net.output_dim()}};
    spec.cut_index = 3;
    Network out{spec, std::vector<LayerParams>(3)};
    out.params[0] = {net.W1, net.b};
    out.params[2] = {w2_matrix(net), Tensor({net.output_dim()})};
    return out;
}

bool verify_completeness(const CnfFormula& phi, std::size_t K, const Assignment& assignment) {
    const ReducedNetwork net = build_reduction(phi, K);
    const Tensor h = reduced_forward(net, assignment_to_input(assignment));
    for (std::size_t i = 0; i < h.size(); ++i) {
        if (std::abs(h[i] - net.z[i]) > 1e-9) return false;
    }
    return true;
}

double soundness_bound(std::size_t n, std::size_t B, std::size_t K) {
    // 2 B d - K d^2 peaks at d = B / K, capped at the interval end d = 1.
    const double d = std::min(1.0, double(B) / double(K));
    return double(n) * (2.0 * double(B) * d - double(K) * d * d);
}

SoundnessReport soundness_scan(const CnfFormula& phi, std::size_t K, std::size_t samples, std::uint64_t seed) {
    if (samples < 1) throw ConfigError("soundness scan needs at least one sample");
    const ReducedNetwork net = build_reduction(phi, K);
    SoundnessReport rep;
    rep.samples = samples;
    rep.bound = soundness_bound(phi.n, phi.B(), K);
    rep.max_D = -std::numeric_limits<double>::infinity();
    ReducedEvaluator eval(net);
    Rng rng(seed);
    for (std::size_t s = 0; s < samples; ++s) {
        const Tensor x = uniform_input(rng, phi.n);
        const double D = eval.squared_error(round_input(x)) - eval.squared_error(x);
        rep.max_D = std::max(rep.max_D, D);
        // Both error sums carry rounding of order 1e-12 relative.
        if (D > rep.bound + 1e-9 * std::max(1.0, rep.bound)) ++rep.violations;
    }
    return rep;
}

LipschitzReport lipschitz_check(const ReducedNetwork& net, std::size_t trials, std::uint64_t seed,
                                int power_iterations) {
    if (trials < 1) throw ConfigError("lipschitz check needs at least one trial");
    LipschitzReport rep;
    rep.trials = trials;
    rep.norm_W1 = spectral_norm(net.W1, power_iterations, Rng::derive(seed, 1));
    rep.norm_W2 = spectral_norm(w2_operator(net), power_iterations, Rng::derive(seed, 2));
    rep.U = rep.norm_W1 * rep.norm_W2;
    ReducedEvaluator eval(net);
    Tensor h1, h2;
    Rng rng(Rng::derive(seed, 3));
    for (std::size_t t = 0; t < trials; ++t) {
        const Tensor x1 = uniform_input(rng, net.n);
        const Tensor x2 = uniform_input(rng, net.n);
        const double dx = distance(x1, x2);
        if (dx == 0.0) continue;
        eval.forward(x1, h1);
        eval.forward(x2, h2);
        const double ratio = distance(h1, h2) / dx;
        rep.max_ratio = std::max(rep.max_ratio, ratio);
        if (ratio > rep.U + 1e-9) ++rep.violations;
    }
    return rep;
}

ReductionAttackReport attack_reduction(const CnfFormula& phi, std::size_t K, InversionConfig cfg,
                                       std::size_t restarts, const std::optional<Tensor>& start) {
    if (restarts < 1) throw ConfigError("attack needs at least one restart");
    if (cfg.tv_weight != 0.0) throw ConfigError("total variation needs an image input");
    const ReducedNetwork reduced = build_reduction(phi, K);
    ReducedEvaluator eval(reduced);
    cfg.clamp = std::pair{-1.0, 1.0};
    const double scale = std::sqrt(double(reduced.output_dim()));
    ReductionAttackReport rep;
    rep.epsilon = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < restarts; ++r) {
        InversionConfig run = cfg;
        run.seed = Rng::derive(cfg.seed, r);
        Tensor s0 = r == 0 && start ? *start : inversion_start({reduced.n}, run);
        if (s0.size() != reduced.n) throw ShapeError("start point does not have " + std::to_string(reduced.n) + " entries");
        const InversionResult res =
            descend([&](const Tensor& s) { return eval.objective(s, run.loss); }, std::move(s0), run);
        const double eps = std::sqrt(eval.squared_error(res.recovered)) / scale;
        rep.per_restart.push_back(eps);
        if (eps < rep.epsilon) {
            rep.epsilon = eps;
            rep.best = res.recovered;
        }
    }
    rep.unsat = unsat_count(phi, input_to_assignment(rep.best));
    return rep;
}

HardnessReport verify_reduction(const CnfFormula& phi, std::size_t K, std::size_t samples, std::size_t trials,
                                std::uint64_t seed) {
    validate(phi);
    HardnessReport rep;
    rep.n = phi.n;
    rep.m = phi.m();
    rep.B = phi.B();
    rep.K = K == 0 ? std::max<std::size_t>(1, 100 * rep.B * rep.B) : K;
    const auto model = find_model(phi);
    rep.satisfiable = model.has_value();
    rep.completeness = model && verify_completeness(phi, rep.K, *model);
    rep.soundness = soundness_scan(phi, rep.K, samples, Rng::derive(seed, 1));
    rep.lipschitz = lipschitz_check(build_reduction(phi, rep.K), trials, Rng::derive(seed, 2), 200);
    return rep;
}

std::string hardness_json(const HardnessReport& r) {
    nlohmann::ordered_json j;
    j["n"] = r.n;
    j["m"] = r.m;
    j["B"] = r.B;
    j["K"] = r.K;
    j["completeness"] = r.completeness;
    j["max_D"] = r.soundness.max_D;
    j["bound"] = r.soundness.bound;
    j["violations"] = r.soundness.violations;
    j["lipschitz_U"] = r.lipschitz.U;
    j["max_ratio"] = r.lipschitz.max_ratio;
    j["satisfiable"] = r.satisfiable;
    return j.dump(2) + "\n";
}

}  // namespace mixcon
