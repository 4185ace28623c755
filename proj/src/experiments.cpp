#include "mixcon/experiments.hpp"

#include <json.hpp>

#include "mixcon/error.hpp"

namespace mixcon {

TrainConfig synthetic_train_config() {
    TrainConfig cfg;
    cfg.epochs = 20;
    cfg.learning_rate = 0.003;
    cfg.batch_size = 64;
    cfg.consistency = ConsistencyKind::MixCon;
    cfg.mixcon = MixConParams{0.1, 0.01, 1e-4};
    cfg.label_flip_fraction = 0.05;
    cfg.init_scheme = InitScheme::ShiftedNormal;
    cfg.init_alpha = 0.0;
    cfg.init_stddev = 0.1;
    cfg.ce_reduction = Reduction::Sum;
    cfg.normalize_features = false;
    return cfg;
}

TrainConfig image_train_config() {
    TrainConfig cfg;
    cfg.epochs = 20;
    cfg.learning_rate = 0.1;
    cfg.batch_size = 32;
    cfg.consistency = ConsistencyKind::MixCon;
    cfg.mixcon = MixConParams{1.0, 1e-4, 1e-4};
    cfg.label_flip_fraction = 0.0;
    cfg.init_scheme = InitScheme::KaimingUniform;
    cfg.ce_reduction = Reduction::Mean;
    cfg.normalize_features = true;
    cfg.separability_samples = 200;
    return cfg;
}

std::vector<SynthRunPlan> synthetic_plan(const TrainConfig& base) {
    const double lambda = base.mixcon.lambda;
    const double beta = base.mixcon.beta;
    return {
        {"vanilla", std::nullopt, 0.0, 0.0},
        {"mixcon", std::nullopt, lambda, beta},
        {"mixcon_beta0", std::nullopt, lambda, 0.0},
        {"deeper", VariantKind::Deeper, lambda, beta},
        {"wider", VariantKind::Wider, lambda, beta},
        {"deeper_beta0", VariantKind::Deeper, lambda, 0.0},
        {"wider_beta0", VariantKind::Wider, lambda, 0.0},
    };
}

SynthRun run_synthetic(const SynthRunPlan& plan, const SyntheticSplit& split, const TrainConfig& base,
                       bool dump_hidden) {
    TrainConfig cfg = base;
    cfg.consistency = plan.vanilla() ? ConsistencyKind::None : base.consistency;
    cfg.mixcon.lambda = plan.lambda;
    cfg.mixcon.beta = plan.beta;
    const NetworkSpec spec = plan.variant ? make_variant(synthetic_mlp(), *plan.variant) : synthetic_mlp();

    SynthRun run{plan, {}, {}};
    EpochCallback dump;
    if (dump_hidden) {
        dump = [&](int, const Network& net) { run.hidden.push_back(hidden_features(net, split.test.inputs)); };
    }
    run.result = train(init_params(spec, init_options(cfg)), split.train, split.test, cfg, dump);
    return run;
}

AttackSummary attack_summary(const Network& net, const Dataset& ds, const InversionConfig& cfg, std::size_t n,
                             int threads) {
    AttackSummary out;
    out.outcomes = attack_dataset(net, ds, cfg, n, threads);
    const auto pairs = successful_pairs(out.outcomes);
    out.failures = out.outcomes.size() - pairs.size();
    if (pairs.empty()) throw AttackError("every attack failed", cfg.iterations);
    out.mse = aggregate(pairs, Metric::MSE);
    out.mcs = aggregate(pairs, Metric::MCS);
    const Shape s = ds.sample_shape();
    if (s.size() == 3 && s[1] > 1 && s[2] > 1) {
        out.ssim = aggregate(pairs, Metric::SSIM);
    } else {
        out.ssim.metric = metric_name(Metric::SSIM);
    }
    return out;
}

Calibration calibrate_attack(const Network& net, const Dataset& holdout, const InversionConfig& base,
                             const std::vector<double>& learning_rates, int threads) {
    if (learning_rates.empty()) throw ConfigError("calibration needs at least one learning rate");
    Calibration cal{base, learning_rates, {}};
    double best = 0.0;
    for (std::size_t i = 0; i < learning_rates.size(); ++i) {
        InversionConfig cfg = base;
        cfg.learning_rate = learning_rates[i];
        const AttackSummary s = attack_summary(net, holdout, cfg, holdout.size(), threads);
        const double score = s.ssim.count > 0 ? s.ssim.mean : -s.mse.mean;
        cal.scores.push_back(s.ssim.count > 0 ? s.ssim.mean : s.mse.mean);
        if (i == 0 || score > best) {
            best = score;
            cal.config = cfg;
        }
    }
    return cal;
}

SyntheticSplit load_idx_dir(const std::filesystem::path& dir) {
    SyntheticSplit split;
    split.train = load_idx(dir / "train-images-idx3-ubyte", dir / "train-labels-idx1-ubyte");
    split.test = load_idx(dir / "t10k-images-idx3-ubyte", dir / "t10k-labels-idx1-ubyte");
    const std::size_t classes = std::max(split.train.num_classes, split.test.num_classes);
    split.train.num_classes = classes;
    split.test.num_classes = classes;
    return split;
}

CsvTable history_table(const TrainHistory& history) {
    CsvTable t({"epoch", "class_loss", "consistency_loss", "train_acc", "test_acc", "mean_pair_dist", "delta_h",
                "max_pair_dist"});
    for (const auto& e : history.epochs) {
        t.add_row({std::to_string(e.epoch), format_double(e.class_loss), format_double(e.consistency_loss),
                   format_double(e.train_accuracy), format_double(e.test_accuracy),
                   format_double(e.mean_pair_distance), format_double(e.delta_h),
                   format_double(e.max_pair_distance)});
    }
    return t;
}

CsvTable hidden_table(std::size_t width) {
    std::vector<std::string> header{"model", "index", "label"};
    for (std::size_t k = 0; k < width; ++k) header.push_back("h" + std::to_string(k));
    return CsvTable(std::move(header));
}

void append_hidden_rows(CsvTable& table, const std::string& model, const Tensor& features,
                        std::span<const std::size_t> labels) {
    if (features.rank() != 2 || features.dim(0) != labels.size()) {
        throw ContractError("hidden features and labels disagree");
    }
    for (std::size_t i = 0; i < labels.size(); ++i) {
        std::vector<std::string> row{model, std::to_string(i), std::to_string(labels[i])};
        for (double v : features.row(i)) row.push_back(format_double(v));
        table.add_row(std::move(row));
    }
}

std::string report_json(const SimilarityReport& r) {
    nlohmann::ordered_json j;
    j["metric"] = r.metric;
    j["mean"] = r.mean;
    j["std"] = r.std;
    j["worst"] = r.worst;
    j["count"] = r.count;
    return j.dump();
}

}  // namespace mixcon
