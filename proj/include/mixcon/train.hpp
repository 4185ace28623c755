#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mixcon/data.hpp"
#include "mixcon/losses.hpp"
#include "mixcon/network.hpp"

namespace mixcon {

enum class ConsistencyKind { None, MixCon, UniCon };

std::string consistency_name(ConsistencyKind kind);
ConsistencyKind parse_consistency_kind(const std::string& name);

struct TrainConfig {
    int epochs = 20;
    double learning_rate = 0.1;
    std::size_t batch_size = 32;
    ConsistencyKind consistency = ConsistencyKind::MixCon;
    /// lambda also weights UniCon; beta and eps apply to MixCon only.
    MixConParams mixcon;
    double label_flip_fraction = 0.05;
    std::uint64_t seed = 0;

    InitScheme init_scheme = InitScheme::ShiftedNormal;
    double init_alpha = 0.1;
    double init_stddev = 1.0;

    Reduction ce_reduction = Reduction::Sum;
    /// Unit-normalize cut features inside the consistency loss only.
    bool normalize_features = true;
    /// History distances over cross-class pairs instead of all pairs.
    bool cross_class_distance = false;
    /// Record train/test accuracy and separability after every epoch.
    bool track_history = true;
    /// Samples of the test split used for separability (0 = all).
    std::size_t separability_samples = 0;

    bool vanilla() const { return consistency == ConsistencyKind::None || mixcon.lambda == 0.0; }
};

void validate(const TrainConfig& cfg);

InitOptions init_options(const TrainConfig& cfg);

struct EpochRecord {
    int epoch = 0;
    double class_loss = 0.0;        // mean over batches
    double consistency_loss = 0.0;  // mean over batches, before lambda
    double train_accuracy = 0.0;
    double test_accuracy = 0.0;
    double mean_pair_distance = 0.0;
    double delta_h = 0.0;
    double max_pair_distance = 0.0;
    std::optional<double> delta_H;
};

struct TrainHistory {
    std::vector<EpochRecord> epochs;
};

struct TrainResult {
    Network net;
    TrainHistory history;
};

/// Called with epoch 0 before the first update and after each epoch.
using EpochCallback = std::function<void(int epoch, const Network& net)>;

/// Plain SGD on sum/mean cross-entropy plus lambda times the consistency loss
/// at the cut. The training split has cfg.label_flip_fraction of its labels
/// flipped first. Throws TrainingError on a non-finite loss.
TrainResult train(Network net, const Dataset& train_ds, const Dataset& test_ds, const TrainConfig& cfg,
                  const EpochCallback& on_epoch = {});

/// One forward/backward/update step on a batch; returns (class, consistency)
/// loss values.
std::pair<double, double> sgd_step(Network& net, const Tensor& inputs, std::span<const std::size_t> labels,
                                   const TrainConfig& cfg);

double evaluate_accuracy(const Network& net, const Dataset& ds);
/// Cut-layer features of a whole dataset, flattened to N x m.
Tensor hidden_features(const Network& net, const Tensor& inputs);

/// Separability of the cut features of `ds` as recorded in history.
EpochRecord measure_separability(const Network& net, const Dataset& ds, const TrainConfig& cfg);

enum class VariantKind { Deeper, Wider };

VariantKind parse_variant_kind(const std::string& name);
std::string variant_name(VariantKind kind);
/// Deeper: two Linear(100,100)+ReLU blocks after the third Linear's ReLU.
/// Wider: third Linear width 100 -> 2048. Only for the synthetic MLP.
NetworkSpec make_variant(const NetworkSpec& spec, VariantKind kind);

}  // namespace mixcon
