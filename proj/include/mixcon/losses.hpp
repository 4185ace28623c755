#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <utility>
#include <vector>

#include "mixcon/tensor.hpp"

namespace mixcon {

/// Loss value with the gradient with respect to the loss's direct input.
struct LossValue {
    double value = 0.0;
    Tensor grad;
};

struct MixConParams {
    double lambda = 0.1;
    double beta = 0.01;
    /// Squared distances are clamped to [eps, 1/eps].
    double eps = 1e-6;
};

void validate(const MixConParams& params);

/// Index pairs (within a batch) of the features pulled together by MixCon.
using PairSet = std::vector<std::pair<std::size_t, std::size_t>>;

enum class Reduction { Sum, Mean };

/// Rows of `labels.size()` one-hot vectors over `num_classes`.
Tensor one_hot(std::span<const std::size_t> labels, std::size_t num_classes);

/// Softmax cross-entropy of N x C scores against one-hot rows. The gradient
/// is softmax(scores) - y per row, divided by N under Mean.
LossValue cross_entropy(const Tensor& scores, const Tensor& one_hot_labels,
                        Reduction reduction = Reduction::Sum);
LossValue cross_entropy(const Tensor& scores, std::span<const std::size_t> labels,
                        Reduction reduction = Reduction::Sum);

/// Scales each row of an N x m matrix to unit l2 norm; zero rows stay zero.
Tensor normalize_features(const Tensor& features);
/// Vector-Jacobian product of normalize_features at `features`.
Tensor normalize_features_vjp(const Tensor& features, const Tensor& grad_normalized);

/// Convex penalty on a clamped squared distance between paired features.
class PairPenalty {
public:
    virtual ~PairPenalty() = default;
    virtual double value(double dist) const = 0;
    virtual double derivative(double dist) const = 0;
};

/// dist + beta / dist, minimized at dist = sqrt(beta).
class InverseBalancePenalty final : public PairPenalty {
public:
    explicit InverseBalancePenalty(double beta) : beta_(beta) {}
    double value(double dist) const override { return dist + beta_ / dist; }
    double derivative(double dist) const override { return 1.0 - beta_ / (dist * dist); }

private:
    double beta_;
};

struct MixConResult {
    LossValue loss;
    /// Unordered (a, b) with a from the earlier-appearing class; each pair
    /// stands for both ordered terms of the sum.
    PairSet pairs;
};

/// Consistency loss over same-rank cross-class pairs. Samples are grouped
/// by class in order of appearance; p is the smallest class count in the
/// batch; the sum over ranks and ordered class pairs is scaled by
/// 1 / (p * |C| * (|C| - 1)). Clamped distances get zero gradient.
MixConResult mixcon_loss(const Tensor& features, std::span<const std::size_t> labels,
                         const MixConParams& params);
MixConResult mixcon_loss(const Tensor& features, std::span<const std::size_t> labels,
                         double eps, const PairPenalty& penalty);

/// Mean over present classes of the mean squared distance between distinct
/// ordered pairs inside each class. Classes with one sample add 0.
LossValue unicon_loss(const Tensor& features, std::span<const std::size_t> labels);

/// class_loss + lambda * consistency_loss.
double combined_objective(double class_loss, double consistency_loss, double lambda);

}  // namespace mixcon
