#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mixcon/data.hpp"
#include "mixcon/losses.hpp"
#include "mixcon/metrics.hpp"
#include "mixcon/network.hpp"

namespace mixcon {

/// Isotropic total variation of a (C, H, W) or (H, W) image: the sum
/// over channels and positions with both a lower and a right neighbour of
/// sqrt(dv^2 + dh^2). Gradient is 0 where both differences vanish.
LossValue tv(const Tensor& image);

enum class InversionLoss { L1, L2 };
enum class InversionInit { Normal, Uniform, Constant };

std::string inversion_loss_name(InversionLoss kind);
InversionLoss parse_inversion_loss(const std::string& name);
std::string inversion_init_name(InversionInit kind);
InversionInit parse_inversion_init(const std::string& name);

struct InversionConfig {
    InversionLoss loss = InversionLoss::L1;
    double tv_weight = 0.0;
    double weight_decay = 1e-4;
    double learning_rate = 0.01;
    int iterations = 500;
    /// Normal draws N(0, 1); Uniform draws from the clamp range (or [0, 1]).
    InversionInit init = InversionInit::Normal;
    double init_value = 0.0;
    std::optional<std::pair<double, double>> clamp;
    std::uint64_t seed = 0;
};

void validate(const InversionConfig& cfg);

/// Settings for the dense synthetic attack: l1, no TV, lr 0.01, decay 1e-4.
InversionConfig synthetic_attack_config();
/// Settings for image attacks: l2 + 1e-5 TV, lr 10, decay 1e-4, pixels in [0, 1].
InversionConfig image_attack_config();

struct InversionResult {
    Tensor recovered;
    double final_objective = 0.0;
    /// Objective after each update; size equals cfg.iterations.
    std::vector<double> trajectory;
};

/// l1 or unsquared l2 norm of features - z, with its gradient with respect to
/// the features (0 at a zero residual).
LossValue residual_loss(const Tensor& features, const Tensor& z, InversionLoss loss);

/// Objective value and its gradient with respect to `s` (one sample).
LossValue inversion_objective(const Network& extractor, const Tensor& s, const Tensor& z,
                              const InversionConfig& cfg);

/// Gradient descent on L(h(s), z) + tv_weight * TV(s) with the update
/// s <- s - lr * (grad + weight_decay * s), then clamping. `z` is one
/// sample's cut features. Throws AttackError on a non-finite objective.
InversionResult invert(const Network& net, const Tensor& z, const InversionConfig& cfg);
/// Same, starting from an explicit point.
InversionResult invert_from(const Network& net, const Tensor& z, Tensor start, const InversionConfig& cfg);

/// Value and gradient of the full attack objective at s.
using InversionObjective = std::function<LossValue(const Tensor& s)>;
/// The update loop of invert for any objective.
InversionResult descend(const InversionObjective& objective, Tensor start, const InversionConfig& cfg);
/// Initial point drawn per cfg.init and cfg.seed, then clamped.
Tensor inversion_start(const Shape& shape, const InversionConfig& cfg);

struct AttackOutcome {
    RecoveryPair pair;
    double final_objective = 0.0;
    std::string error;  // empty on success
};

/// Attacks the first `n` samples of `ds`, each with seed derived from
/// (cfg.seed, index), on up to `threads` workers.
std::vector<AttackOutcome> attack_dataset(const Network& net, const Dataset& ds, const InversionConfig& cfg,
                                          std::size_t n, int threads = 1);

/// Pairs of the successful outcomes, in sample order.
std::vector<RecoveryPair> successful_pairs(const std::vector<AttackOutcome>& outcomes);

}  // namespace mixcon
