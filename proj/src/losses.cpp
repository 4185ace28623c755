#include "mixcon/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>

#include "mixcon/error.hpp"

namespace mixcon {

namespace {

void require_matrix(const Tensor& t, const char* what) {
    if (t.rank() != 2) {
        throw ShapeError(std::string(what) + " must be a matrix, got " + shape_string(t.shape()));
    }
}

void require_labels(const Tensor& features, std::span<const std::size_t> labels) {
    require_matrix(features, "features");
    if (labels.size() != features.dim(0)) {
        throw ShapeError("label count " + std::to_string(labels.size()) + " does not match " +
                         std::to_string(features.dim(0)) + " feature rows");
    }
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const double d = a[k] - b[k];
        s += d * d;
    }
    return s;
}

// Sample indices per class, classes ordered by first appearance.
std::vector<std::vector<std::size_t>> group_by_class(std::span<const std::size_t> labels) {
    std::vector<std::vector<std::size_t>> groups;
    std::map<std::size_t, std::size_t> slot;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        auto [it, fresh] = slot.emplace(labels[i], groups.size());
        if (fresh) groups.emplace_back();
        groups[it->second].push_back(i);
    }
    return groups;
}

}  // namespace

void validate(const MixConParams& params) {
    if (!(params.lambda >= 0.0)) throw ConfigError("mixcon lambda must be >= 0");
    if (!(params.beta >= 0.0)) throw ConfigError("mixcon beta must be >= 0");
    if (!(params.eps > 0.0 && params.eps < 1.0)) throw ConfigError("mixcon eps must lie in (0, 1)");
}

Tensor one_hot(std::span<const std::size_t> labels, std::size_t num_classes) {
    Tensor out({labels.size(), num_classes});
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] >= num_classes) {
            throw ContractError("label " + std::to_string(labels[i]) + " out of range for " +
                                std::to_string(num_classes) + " classes");
        }
        out.at(i, labels[i]) = 1.0;
    }
    return out;
}

LossValue cross_entropy(const Tensor& scores, const Tensor& one_hot_labels, Reduction reduction) {
    require_matrix(scores, "scores");
    if (scores.shape() != one_hot_labels.shape()) {
        throw ShapeError("scores " + shape_string(scores.shape()) + " vs labels " +
                         shape_string(one_hot_labels.shape()));
    }
    const std::size_t n = scores.dim(0);
    const std::size_t c = scores.dim(1);
    LossValue out{0.0, Tensor(scores.shape())};
    const double scale = reduction == Reduction::Mean && n > 0 ? 1.0 / double(n) : 1.0;
    for (std::size_t i = 0; i < n; ++i) {
        auto y = one_hot_labels.row(i);
        std::size_t ones = 0;
        for (double v : y) {
            if (v == 1.0) ++ones;
            else if (v != 0.0) ones = 2;
        }
        if (ones != 1) throw ContractError("label row " + std::to_string(i) + " is not one-hot");

        auto s = scores.row(i);
        const double top = *std::max_element(s.begin(), s.end());
        double total = 0.0;
        for (double v : s) total += std::exp(v - top);
        const double log_z = top + std::log(total);
        auto g = out.grad.row(i);
        for (std::size_t k = 0; k < c; ++k) {
            const double p = std::exp(s[k] - log_z);
            if (y[k] == 1.0) out.value -= (s[k] - log_z) * scale;
            g[k] = (p - y[k]) * scale;
        }
    }
    return out;
}

LossValue cross_entropy(const Tensor& scores, std::span<const std::size_t> labels, Reduction reduction) {
    require_matrix(scores, "scores");
    return cross_entropy(scores, one_hot(labels, scores.dim(1)), reduction);
}

Tensor normalize_features(const Tensor& features) {
    require_matrix(features, "features");
    Tensor out = features;
    for (std::size_t i = 0; i < out.dim(0); ++i) {
        auto r = out.row(i);
        const double n = norm2(r);
        if (n > 0.0) {
            for (double& v : r) v /= n;
        }
    }
    return out;
}

Tensor normalize_features_vjp(const Tensor& features, const Tensor& grad_normalized) {
    require_matrix(features, "features");
    if (features.shape() != grad_normalized.shape()) {
        throw ShapeError("gradient shape " + shape_string(grad_normalized.shape()) +
                         " does not match features " + shape_string(features.shape()));
    }
    Tensor out(features.shape());
    for (std::size_t i = 0; i < features.dim(0); ++i) {
        auto x = features.row(i);
        auto g = grad_normalized.row(i);
        auto o = out.row(i);
        const double n = norm2(x);
        if (n == 0.0) {
            // Zero rows pass through unchanged, so the map is the identity there.
            std::copy(g.begin(), g.end(), o.begin());
            continue;
        }
        // d(x/|x|) = (I - u u^T) / |x|
        const double proj = dot(x, g) / (n * n);
        for (std::size_t k = 0; k < x.size(); ++k) o[k] = (g[k] - x[k] * proj) / n;
    }
    return out;
}

MixConResult mixcon_loss(const Tensor& features, std::span<const std::size_t> labels,
                         const MixConParams& params) {
    validate(params);
    return mixcon_loss(features, labels, params.eps, InverseBalancePenalty(params.beta));
}

MixConResult mixcon_loss(const Tensor& features, std::span<const std::size_t> labels, double eps,
                         const PairPenalty& penalty) {
    require_labels(features, labels);
    if (!(eps > 0.0 && eps < 1.0)) throw ConfigError("mixcon eps must lie in (0, 1)");
    MixConResult out{{0.0, Tensor(features.shape())}, {}};
    const auto groups = group_by_class(labels);
    if (groups.size() < 2) return out;

    std::size_t p = std::numeric_limits<std::size_t>::max();
    for (const auto& g : groups) p = std::min(p, g.size());
    const double classes = double(groups.size());
    // Each unordered pair stands for two equal ordered terms.
    const double scale = 2.0 / (double(p) * classes * (classes - 1.0));
    const double hi = 1.0 / eps;

    for (std::size_t rank = 0; rank < p; ++rank) {
        for (std::size_t c1 = 0; c1 < groups.size(); ++c1) {
            for (std::size_t c2 = c1 + 1; c2 < groups.size(); ++c2) {
                const std::size_t a = groups[c1][rank];
                const std::size_t b = groups[c2][rank];
                out.pairs.emplace_back(a, b);
                auto ha = features.row(a);
                auto hb = features.row(b);
                const double raw = squared_distance(ha, hb);
                const double dist = std::clamp(raw, eps, hi);
                out.loss.value += scale * penalty.value(dist);
                if (raw < eps || raw > hi) continue;
                const double coef = scale * penalty.derivative(dist) * 2.0;
                auto ga = out.loss.grad.row(a);
                auto gb = out.loss.grad.row(b);
                for (std::size_t k = 0; k < ha.size(); ++k) {
                    const double d = coef * (ha[k] - hb[k]);
                    ga[k] += d;
                    gb[k] -= d;
                }
            }
        }
    }
    return out;
}

LossValue unicon_loss(const Tensor& features, std::span<const std::size_t> labels) {
    require_labels(features, labels);
    LossValue out{0.0, Tensor(features.shape())};
    const auto groups = group_by_class(labels);
    if (groups.empty()) return out;
    const double classes = double(groups.size());
    for (const auto& g : groups) {
        if (g.size() < 2) continue;
        const double n = double(g.size());
        // Sum over ordered pairs = 2 * sum over unordered pairs.
        const double scale = 2.0 / (classes * n * (n - 1.0));
        for (std::size_t i = 0; i < g.size(); ++i) {
            for (std::size_t j = i + 1; j < g.size(); ++j) {
                auto hi = features.row(g[i]);
                auto hj = features.row(g[j]);
                out.value += scale * squared_distance(hi, hj);
                auto gi = out.grad.row(g[i]);
                auto gj = out.grad.row(g[j]);
                for (std::size_t k = 0; k < hi.size(); ++k) {
                    const double d = 2.0 * scale * (hi[k] - hj[k]);
                    gi[k] += d;
                    gj[k] -= d;
                }
            }
        }
    }
    return out;
}

double combined_objective(double class_loss, double consistency_loss, double lambda) {
    return class_loss + lambda * consistency_loss;
}

}  // namespace mixcon
