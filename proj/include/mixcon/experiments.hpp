#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mixcon/csv.hpp"
#include "mixcon/data.hpp"
#include "mixcon/invert.hpp"
#include "mixcon/metrics.hpp"
#include "mixcon/train.hpp"

namespace mixcon {

/// Training settings of the synthetic experiment: 20 epochs, 5% flip, sum
/// cross-entropy on raw cut features, weights N(0, 0.1^2) without a layer shift.
TrainConfig synthetic_train_config();

/// LeNet5 settings for the MNIST subset: Kaiming-uniform init, mean
/// cross-entropy, no label flip, MixCon(1, 1e-4).
TrainConfig image_train_config();

struct SynthRunPlan {
    std::string name;
    std::optional<VariantKind> variant;
    double lambda = 0.0;
    double beta = 0.0;

    bool vanilla() const { return lambda == 0.0; }
};

/// Vanilla, MixCon(lambda, beta), MixCon(lambda, 0), then the deeper and wider
/// variants at beta and at 0. lambda and beta come from `base.mixcon`.
std::vector<SynthRunPlan> synthetic_plan(const TrainConfig& base);

struct SynthRun {
    SynthRunPlan plan;
    TrainResult result;
    /// Test-split cut features before training and after every epoch.
    std::vector<Tensor> hidden;
};

/// Trains one planned model on `split`, seeded by `base.seed`.
SynthRun run_synthetic(const SynthRunPlan& plan, const SyntheticSplit& split, const TrainConfig& base,
                       bool dump_hidden = false);

struct AttackSummary {
    SimilarityReport mse;
    SimilarityReport mcs;
    SimilarityReport ssim;  // count 0 when the inputs are not images
    std::size_t failures = 0;
    std::vector<AttackOutcome> outcomes;
};

/// Attacks the first `n` samples of `ds` and aggregates the recoveries.
AttackSummary attack_summary(const Network& net, const Dataset& ds, const InversionConfig& cfg, std::size_t n,
                             int threads = 1);

struct Calibration {
    InversionConfig config;
    std::vector<double> learning_rates;
    std::vector<double> scores;  // mean similarity per learning rate
};

/// Picks the learning rate from `learning_rates` whose attacks on `holdout`
/// recover best (highest mean SSIM for images, lowest MSE otherwise); other
/// settings come from `base`. Earlier candidates win ties.
Calibration calibrate_attack(const Network& net, const Dataset& holdout, const InversionConfig& base,
                             const std::vector<double>& learning_rates, int threads = 1);

/// Loads the four standard MNIST-style IDX files from `dir`.
SyntheticSplit load_idx_dir(const std::filesystem::path& dir);

CsvTable history_table(const TrainHistory& history);
/// One row per sample: model,index,label,h0,h1,...
void append_hidden_rows(CsvTable& table, const std::string& model, const Tensor& features,
                        std::span<const std::size_t> labels);
CsvTable hidden_table(std::size_t width);

std::string report_json(const SimilarityReport& report);

}  // namespace mixcon
