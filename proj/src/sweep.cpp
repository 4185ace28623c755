#include "mixcon/sweep.hpp"

#include "mixcon/error.hpp"
#include "mixcon/parallel.hpp"

namespace mixcon {

std::vector<SweepRow> run_sweep(const SweepGrid& grid, const Dataset& train_ds, const Dataset& test_ds,
                                const NetworkSpec& spec, int threads) {
    if (grid.lambdas.empty() || grid.betas.empty()) throw ConfigError("sweep grid needs lambdas and betas");
    const std::vector<std::uint64_t> seeds = grid.seeds.empty() ? std::vector{grid.base.seed} : grid.seeds;

    std::vector<SweepRow> rows;
    for (double lambda : grid.lambdas) {
        for (double beta : grid.betas) {
            for (std::uint64_t seed : seeds) rows.push_back({lambda, beta, seed});
        }
    }
    parallel_for(rows.size(), threads, [&](std::size_t i) {
        SweepRow& row = rows[i];
        TrainConfig cfg = grid.base;
        cfg.mixcon.lambda = row.lambda;
        cfg.mixcon.beta = row.beta;
        cfg.seed = row.seed;
        cfg.track_history = false;
        try {
            auto result = train(init_params(spec, init_options(cfg)), train_ds, test_ds, cfg);
            const EpochRecord& last = result.history.epochs.back();
            row.train_acc = last.train_accuracy;
            row.test_acc = last.test_accuracy;
            row.mean_pair_dist = last.mean_pair_distance;
            row.delta_h = last.delta_h;
        } catch (const Error& e) {
            row.status = std::string("error: ") + e.what();
        }
    });
    return rows;
}

CsvTable sweep_table(const std::vector<SweepRow>& rows) {
    CsvTable table({"lambda", "beta", "seed", "train_acc", "test_acc", "mean_pair_dist", "delta_h", "status"});
    for (const auto& r : rows) {
        table.add_row({format_double(r.lambda), format_double(r.beta), std::to_string(r.seed),
                       format_double(r.train_acc), format_double(r.test_acc), format_double(r.mean_pair_dist),
                       format_double(r.delta_h), r.status});
    }
    return table;
}

}  // namespace mixcon
