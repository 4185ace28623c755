#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mixcon/checkpoint.hpp"
#include "mixcon/error.hpp"
#include "mixcon/experiments.hpp"
#include "mixcon/hardness.hpp"
#include "mixcon/parallel.hpp"
#include "mixcon/sweep.hpp"

namespace fs = std::filesystem;
using namespace mixcon;

namespace {

struct Globals {
    std::optional<std::uint64_t> seed;
    std::string out = "out";
    int threads = 1;
    bool dry_run = false;
};

InitScheme parse_init_scheme(const std::string& s) {
    if (s == "normal") return InitScheme::ShiftedNormal;
    if (s == "kaiming") return InitScheme::KaimingUniform;
    throw ConfigError("unknown init scheme '" + s + "' (normal, kaiming)");
}

Reduction parse_reduction(const std::string& s) {
    if (s == "sum") return Reduction::Sum;
    if (s == "mean") return Reduction::Mean;
    throw ConfigError("unknown reduction '" + s + "' (sum, mean)");
}

struct DataFlags {
    std::string data = "synthetic";

    void add(CLI::App* cmd) {
        cmd->add_option("--data", data, "'synthetic' or a directory holding MNIST-style IDX files")
            ->capture_default_str();
    }
    bool synthetic() const { return data == "synthetic"; }
    SyntheticSplit load(std::uint64_t seed) const { return synthetic() ? gen_synthetic(seed) : load_idx_dir(data); }
};

struct TrainFlags {
    std::optional<int> epochs;
    std::optional<double> lr, lambda, beta, eps, flip, init_alpha, init_stddev;
    std::optional<std::size_t> batch, train_limit;
    std::optional<std::string> consistency, init, ce;
    std::optional<bool> normalize;

    void add(CLI::App* cmd) {
        cmd->add_option("--epochs", epochs, "Training epochs");
        cmd->add_option("--lr", lr, "SGD learning rate");
        cmd->add_option("--batch", batch, "Batch size");
        cmd->add_option("--consistency", consistency, "none, mixcon or unicon");
        cmd->add_option("--lambda", lambda, "Consistency weight");
        cmd->add_option("--beta", beta, "MixCon balance");
        cmd->add_option("--eps", eps, "MixCon distance clamp");
        cmd->add_option("--flip", flip, "Fraction of training labels flipped");
        cmd->add_option("--init", init, "normal or kaiming");
        cmd->add_option("--init-alpha", init_alpha, "Variance of the per-layer shift (normal init)");
        cmd->add_option("--init-stddev", init_stddev, "Standard deviation of weights (normal init)");
        cmd->add_option("--ce", ce, "Cross-entropy reduction: sum or mean");
        cmd->add_option("--normalize", normalize, "Unit-normalize cut features inside the consistency loss");
        cmd->add_option("--train-limit", train_limit, "Use only the first N training samples");
    }

    void apply(TrainConfig& cfg) const {
        if (epochs) cfg.epochs = *epochs;
        if (lr) cfg.learning_rate = *lr;
        if (batch) cfg.batch_size = *batch;
        if (consistency) cfg.consistency = parse_consistency_kind(*consistency);
        if (lambda) cfg.mixcon.lambda = *lambda;
        if (beta) cfg.mixcon.beta = *beta;
        if (eps) cfg.mixcon.eps = *eps;
        if (flip) cfg.label_flip_fraction = *flip;
        if (init) cfg.init_scheme = parse_init_scheme(*init);
        if (init_alpha) cfg.init_alpha = *init_alpha;
        if (init_stddev) cfg.init_stddev = *init_stddev;
        if (ce) cfg.ce_reduction = parse_reduction(*ce);
        if (normalize) cfg.normalize_features = *normalize;
    }

    TrainConfig resolve(bool synthetic, const Globals& g) const {
        TrainConfig cfg = synthetic ? synthetic_train_config() : image_train_config();
        apply(cfg);
        if (g.seed) cfg.seed = *g.seed;
        validate(cfg);
        return cfg;
    }

    void limit(SyntheticSplit& split) const {
        if (train_limit && *train_limit < split.train.size()) split.train = split.train.head(*train_limit);
    }
};

struct AttackFlags {
    std::optional<std::string> loss, init;
    std::optional<double> tv, lr, decay, clamp_lo, clamp_hi;
    std::optional<int> iterations;
    std::optional<std::size_t> samples;

    void add(CLI::App* cmd, const std::string& prefix) {
        cmd->add_option("--" + prefix + "loss", loss, "l1 or l2");
        cmd->add_option("--" + prefix + "tv", tv, "Total-variation weight");
        cmd->add_option("--" + prefix + "lr", lr, "Attack learning rate");
        cmd->add_option("--" + prefix + "decay", decay, "Weight decay on the reconstruction");
        cmd->add_option("--" + prefix + "iterations", iterations, "Attack iterations");
        cmd->add_option("--" + prefix + "init", init, "normal, uniform or constant");
        cmd->add_option("--" + prefix + "clamp-lo", clamp_lo, "Lower clamp of the reconstruction");
        cmd->add_option("--" + prefix + "clamp-hi", clamp_hi, "Upper clamp of the reconstruction");
        cmd->add_option("--" + prefix + "samples", samples, "Test samples to attack");
    }

    InversionConfig resolve(bool synthetic, const Globals& g) const {
        InversionConfig cfg = synthetic ? synthetic_attack_config() : image_attack_config();
        if (loss) cfg.loss = parse_inversion_loss(*loss);
        if (tv) cfg.tv_weight = *tv;
        if (lr) cfg.learning_rate = *lr;
        if (decay) cfg.weight_decay = *decay;
        if (iterations) cfg.iterations = *iterations;
        if (init) cfg.init = parse_inversion_init(*init);
        if (clamp_lo || clamp_hi) {
            auto range = cfg.clamp.value_or(std::pair{0.0, 1.0});
            if (clamp_lo) range.first = *clamp_lo;
            if (clamp_hi) range.second = *clamp_hi;
            cfg.clamp = range;
        }
        if (g.seed) cfg.seed = *g.seed;
        validate(cfg);
        return cfg;
    }

    std::size_t sample_count(bool synthetic) const { return samples.value_or(synthetic ? 200 : 100); }
};

NetworkSpec arch_spec(const std::string& arch, const Dataset& ds) {
    if (arch == "mlp") return synthetic_mlp();
    if (arch == "mlp-deeper") return make_variant(synthetic_mlp(), VariantKind::Deeper);
    if (arch == "mlp-wider") return make_variant(synthetic_mlp(), VariantKind::Wider);
    if (arch == "lenet5") {
        const Shape s = ds.sample_shape();
        if (s.size() != 3) throw ConfigError("lenet5 needs (C, H, W) image inputs");
        return lenet5(s[0], std::max<std::size_t>(ds.num_classes, 2));
    }
    throw ConfigError("unknown architecture '" + arch + "' (mlp, mlp-deeper, mlp-wider, lenet5)");
}

std::string default_arch(const DataFlags& d) { return d.synthetic() ? "mlp" : "lenet5"; }

fs::path prepare_out(const Globals& g) {
    fs::path out(g.out);
    fs::create_directories(out);
    return out;
}

void write_json(const fs::path& path, const nlohmann::ordered_json& j) { write_text(path, j.dump(2) + "\n"); }

nlohmann::ordered_json config_json(const TrainConfig& c) {
    return {{"epochs", c.epochs},
            {"lr", c.learning_rate},
            {"batch", c.batch_size},
            {"consistency", consistency_name(c.consistency)},
            {"lambda", c.mixcon.lambda},
            {"beta", c.mixcon.beta},
            {"eps", c.mixcon.eps},
            {"flip", c.label_flip_fraction},
            {"seed", c.seed},
            {"init", c.init_scheme == InitScheme::KaimingUniform ? "kaiming" : "normal"},
            {"init_alpha", c.init_alpha},
            {"init_stddev", c.init_stddev},
            {"ce", c.ce_reduction == Reduction::Sum ? "sum" : "mean"},
            {"normalize", c.normalize_features}};
}

nlohmann::ordered_json config_json(const InversionConfig& c) {
    nlohmann::ordered_json j{{"loss", inversion_loss_name(c.loss)},
                             {"tv", c.tv_weight},
                             {"lr", c.learning_rate},
                             {"decay", c.weight_decay},
                             {"iterations", c.iterations},
                             {"init", inversion_init_name(c.init)},
                             {"seed", c.seed}};
    if (c.clamp) j["clamp"] = {c.clamp->first, c.clamp->second};
    return j;
}

// Prints the resolved settings instead of running when --dry-run is given.
bool dry_run(const Globals& g, const nlohmann::ordered_json& j) {
    if (!g.dry_run) return false;
    std::cout << j.dump(2) << "\n";
    return true;
}

nlohmann::ordered_json summary_json(const SimilarityReport& r) {
    return {{"mean", r.mean}, {"std", r.std}, {"worst", r.worst}, {"count", r.count}};
}

void add_attack_rows(CsvTable& t, const std::string& model, const AttackSummary& s) {
    for (const auto* r : {&s.mse, &s.mcs, &s.ssim}) {
        if (r->count == 0) continue;
        t.add_row({model, r->metric, format_double(r->mean), format_double(r->std), format_double(r->worst),
                   std::to_string(r->count)});
    }
}

// ---- synth -------------------------------------------------------------

struct SynthCmd {
    TrainFlags train;
    AttackFlags attack;

    int run(const Globals& g) const {
        const TrainConfig cfg = train.resolve(true, g);
        const InversionConfig acfg = attack.resolve(true, g);
        if (dry_run(g, {{"train", config_json(cfg)}, {"attack", config_json(acfg)}})) return 0;
        const fs::path out = prepare_out(g);
        SyntheticSplit split = gen_synthetic(cfg.seed);
        train.limit(split);
        const auto plan = synthetic_plan(cfg);

        std::vector<SynthRun> runs(plan.size());
        parallel_for(plan.size(), g.threads,
                     [&](std::size_t i) { runs[i] = run_synthetic(plan[i], split, cfg, true); });

        CsvTable table1({"model", "variant", "lambda", "beta", "train_acc", "test_acc", "mean_pair_dist", "delta_h"});
        for (const auto& r : runs) {
            const auto& last = r.result.history.epochs.back();
            table1.add_row({r.plan.name, r.plan.variant ? variant_name(*r.plan.variant) : "default",
                            format_double(r.plan.lambda), format_double(r.plan.beta),
                            format_double(last.train_accuracy), format_double(last.test_accuracy),
                            format_double(last.mean_pair_distance), format_double(last.delta_h)});
            history_table(r.result.history).write(out / ("history_" + r.plan.name + ".csv"));
        }
        table1.write(out / "table1.csv");

        for (std::size_t e = 0; e < runs.front().hidden.size(); ++e) {
            CsvTable h = hidden_table(runs.front().hidden[e].dim(1));
            for (const auto& r : runs) append_hidden_rows(h, r.plan.name, r.hidden[e], split.test.labels);
            h.write(out / ("hidden_epoch_" + std::to_string(e) + ".csv"));
        }

        CsvTable table2({"model", "metric", "mean", "std", "worst", "count"});
        const std::size_t n = std::min(attack.sample_count(true), split.test.size());
        for (std::size_t i = 0; i < 2; ++i) {
            add_attack_rows(table2, runs[i].plan.name, attack_summary(runs[i].result.net, split.test, acfg, n, g.threads));
        }
        table2.write(out / "table2.csv");
        std::cout << table1.str() << "\n" << table2.str();
        return 0;
    }
};

// ---- train -------------------------------------------------------------

struct TrainCmd {
    DataFlags data;
    TrainFlags train;
    std::string arch;

    int run(const Globals& g) const {
        const TrainConfig cfg = train.resolve(data.synthetic(), g);
        if (dry_run(g, {{"data", data.data}, {"arch", arch.empty() ? default_arch(data) : arch}, {"train", config_json(cfg)}})) {
            return 0;
        }
        SyntheticSplit split = data.load(cfg.seed);
        train.limit(split);
        const NetworkSpec spec = arch_spec(arch.empty() ? default_arch(data) : arch, split.train);
        const fs::path out = prepare_out(g);
        const auto r = mixcon::train(init_params(spec, init_options(cfg)), split.train, split.test, cfg);
        save_checkpoint(r.net, out / "model.ckpt");
        history_table(r.history).write(out / "history.csv");
        const auto& last = r.history.epochs.back();
        nlohmann::ordered_json j;
        j["arch"] = arch.empty() ? default_arch(data) : arch;
        j["consistency"] = consistency_name(cfg.consistency);
        j["lambda"] = cfg.mixcon.lambda;
        j["beta"] = cfg.mixcon.beta;
        j["seed"] = cfg.seed;
        j["epochs"] = cfg.epochs;
        j["train_acc"] = last.train_accuracy;
        j["test_acc"] = last.test_accuracy;
        j["mean_pair_dist"] = last.mean_pair_distance;
        j["delta_h"] = last.delta_h;
        write_json(out / "summary.json", j);
        std::cout << j.dump(2) << "\n";
        return 0;
    }
};

// ---- invert ------------------------------------------------------------

struct InvertCmd {
    DataFlags data;
    AttackFlags attack;
    std::string checkpoint;
    std::string arch;

    int run(const Globals& g) const {
        const InversionConfig cfg = attack.resolve(data.synthetic(), g);
        if (dry_run(g, {{"data", data.data}, {"samples", attack.sample_count(data.synthetic())}, {"attack", config_json(cfg)}})) {
            return 0;
        }
        const SyntheticSplit split = data.load(g.seed.value_or(0));
        const NetworkSpec spec = arch_spec(arch.empty() ? default_arch(data) : arch, split.test);
        const Network net = load_checkpoint(checkpoint, spec);
        const fs::path out = prepare_out(g);
        const std::size_t n = attack.sample_count(data.synthetic());
        const AttackSummary s = attack_summary(net, split.test, cfg, n, g.threads);

        const bool images = s.ssim.count > 0;
        CsvTable t({"index", "label", "mse", "mcs", "ssim", "final_objective", "error"});
        for (std::size_t i = 0; i < s.outcomes.size(); ++i) {
            const auto& o = s.outcomes[i];
            if (!o.error.empty()) {
                t.add_row({std::to_string(i), std::to_string(split.test.labels[i]), "", "", "", "", o.error});
                continue;
            }
            const auto& p = o.pair;
            t.add_row({std::to_string(i), std::to_string(split.test.labels[i]),
                       format_double(mse(p.original, p.recovered)), format_double(mcs(p.original, p.recovered)),
                       images ? format_double(ssim(p.original, p.recovered)) : "", format_double(o.final_objective),
                       ""});
        }
        t.write(out / "attack.csv");

        nlohmann::ordered_json j;
        j["samples"] = n;
        j["failures"] = s.failures;
        j["mse"] = summary_json(s.mse);
        j["mcs"] = summary_json(s.mcs);
        if (images) j["ssim"] = summary_json(s.ssim);
        write_json(out / "attack.json", j);
        std::cout << j.dump(2) << "\n";
        return 0;
    }
};

// ---- sweep -------------------------------------------------------------

struct SweepCmd {
    DataFlags data;
    TrainFlags train;
    std::string arch;
    std::vector<double> lambdas{0.01, 0.1, 0.5, 1, 2, 5, 10, 100};
    std::vector<double> betas{1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8};
    std::vector<std::uint64_t> seeds;

    int run(const Globals& g) const {
        SweepGrid grid{lambdas, betas, train.resolve(data.synthetic(), g), seeds};
        grid.base.track_history = false;
        if (dry_run(g, {{"lambdas", lambdas}, {"betas", betas}, {"seeds", seeds}, {"train", config_json(grid.base)}})) {
            return 0;
        }
        SyntheticSplit split = data.load(grid.base.seed);
        train.limit(split);
        const NetworkSpec spec = arch_spec(arch.empty() ? default_arch(data) : arch, split.train);
        const fs::path out = prepare_out(g);
        const auto rows = run_sweep(grid, split.train, split.test, spec, g.threads);
        const CsvTable t = sweep_table(rows);
        t.write(out / "sweep.csv");
        std::cout << t.str();
        std::size_t failed = 0;
        for (const auto& r : rows) failed += r.status != "ok";
        if (failed > 0) std::cerr << failed << " of " << rows.size() << " sweep cells failed\n";
        return 0;
    }
};

// ---- reduce ------------------------------------------------------------

struct ReduceCmd {
    std::string dimacs;
    std::size_t K = 0;
    std::size_t samples = 10000;
    std::size_t trials = 1000;
    std::size_t restarts = 0;
    int attack_iterations = 500;

    int run(const Globals& g) const {
        const CnfFormula phi = load_dimacs(dimacs);
        const std::uint64_t seed = g.seed.value_or(0);
        const HardnessReport report = verify_reduction(phi, K, samples, trials, seed);
        const fs::path out = prepare_out(g);
        auto j = nlohmann::ordered_json::parse(hardness_json(report));
        if (restarts > 0) {
            InversionConfig cfg;
            cfg.loss = InversionLoss::L2;
            cfg.weight_decay = 0.0;
            cfg.init = InversionInit::Uniform;
            cfg.iterations = attack_iterations;
            cfg.seed = seed;
            const auto a = attack_reduction(phi, report.K, cfg, restarts);
            j["attack_epsilon"] = a.epsilon;
            j["attack_unsat"] = a.unsat;
        }
        write_json(out / "reduction.json", j);
        std::cout << j.dump(2) << "\n";
        return 0;
    }
};

// ---- report ------------------------------------------------------------

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields(1);
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                fields.back() += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                fields.back() += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.emplace_back();
        } else {
            fields.back() += c;
        }
    }
    return fields;
}

std::string csv_to_markdown(const fs::path& path) {
    std::ifstream in(path);
    std::ostringstream md;
    std::string line;
    bool header = true;
    while (std::getline(in, line)) {
        const auto fields = split_csv_line(line);
        md << "|";
        for (const auto& f : fields) md << " " << f << " |";
        md << "\n";
        if (header) {
            md << "|";
            for (std::size_t i = 0; i < fields.size(); ++i) md << "---|";
            md << "\n";
            header = false;
        }
    }
    return md.str();
}

struct ReportCmd {
    int run(const Globals& g) const {
        const fs::path out(g.out);
        if (!fs::is_directory(out)) throw ConfigError("output directory " + out.string() + " does not exist");
        std::ostringstream md;
        std::size_t found = 0;
        for (const char* name : {"table1.csv", "table2.csv", "sweep.csv", "history.csv"}) {
            if (!fs::exists(out / name)) continue;
            md << "## " << name << "\n\n" << csv_to_markdown(out / name) << "\n";
            ++found;
        }
        for (const char* name : {"summary.json", "attack.json", "reduction.json"}) {
            if (!fs::exists(out / name)) continue;
            std::ifstream in(out / name);
            md << "## " << name << "\n\n```json\n" << in.rdbuf() << "```\n\n";
            ++found;
        }
        if (found == 0) throw ConfigError("no results found in " + out.string());
        write_text(out / "report.md", md.str());
        std::cout << md.str();
        return 0;
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"MixCon experiments: training, inversion attacks, sweeps and hardness checks", "mixcon"};
    app.set_config("--config", "", "INI/TOML config file; command-line flags take precedence");
    app.allow_config_extras(CLI::config_extras_mode::error);
    app.require_subcommand(1);

    Globals g;
    app.add_option("--seed", g.seed, "Seed for data, initialization and attacks (default 0)");
    app.add_option("--out", g.out, "Output directory")->capture_default_str();
    app.add_flag("--dry-run", g.dry_run, "Print the resolved configuration and exit");
    app.add_option("--threads", g.threads, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();

    SynthCmd synth;
    auto* synth_app = app.add_subcommand("synth", "Synthetic experiment: seven models, hidden dumps, attacks");
    synth.train.add(synth_app);
    synth.attack.add(synth_app, "attack-");

    TrainCmd train;
    auto* train_app = app.add_subcommand("train", "Train one network and save a checkpoint");
    train.data.add(train_app);
    train.train.add(train_app);
    train_app->add_option("--arch", train.arch, "mlp, mlp-deeper, mlp-wider or lenet5");

    InvertCmd invert;
    auto* invert_app = app.add_subcommand("invert", "Attack a checkpoint's cut features");
    invert.data.add(invert_app);
    invert.attack.add(invert_app, "");
    invert_app->add_option("--checkpoint", invert.checkpoint, "Checkpoint written by train")->required();
    invert_app->add_option("--arch", invert.arch, "Architecture of the checkpoint");

    SweepCmd sweep;
    auto* sweep_app = app.add_subcommand("sweep", "Grid over (lambda, beta)");
    sweep.data.add(sweep_app);
    sweep.train.add(sweep_app);
    sweep_app->add_option("--arch", sweep.arch, "Architecture");
    sweep_app->add_option("--lambdas", sweep.lambdas, "Lambda values")->delimiter(',')->capture_default_str();
    sweep_app->add_option("--betas", sweep.betas, "Beta values")->delimiter(',')->capture_default_str();
    sweep_app->add_option("--seeds", sweep.seeds, "Training seeds per cell")->delimiter(',');

    ReduceCmd reduce;
    auto* reduce_app = app.add_subcommand("reduce", "Build and verify the 3SAT reduction network");
    reduce_app->add_option("--dimacs", reduce.dimacs, "DIMACS CNF file")->required();
    reduce_app->add_option("--K", reduce.K, "Copies per variable (0 = 100 B^2)")->capture_default_str();
    reduce_app->add_option("--samples", reduce.samples, "Soundness samples")->capture_default_str();
    reduce_app->add_option("--trials", reduce.trials, "Lipschitz trials")->capture_default_str();
    reduce_app->add_option("--restarts", reduce.restarts, "Inversion restarts (0 skips the attack)")
        ->capture_default_str();
    reduce_app->add_option("--attack-iterations", reduce.attack_iterations, "Iterations per restart")
        ->capture_default_str();

    ReportCmd report;
    app.add_subcommand("report", "Collect results in --out into report.md");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << app.help();
        return 2;
    }

    try {
        if (*synth_app) return synth.run(g);
        if (*train_app) return train.run(g);
        if (*invert_app) return invert.run(g);
        if (*sweep_app) return sweep.run(g);
        if (*reduce_app) return reduce.run(g);
        return report.run(g);
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
