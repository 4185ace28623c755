#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mixcon/csv.hpp"
#include "mixcon/data.hpp"
#include "mixcon/network.hpp"
#include "mixcon/train.hpp"

namespace mixcon {

struct SweepGrid {
    std::vector<double> lambdas;
    std::vector<double> betas;
    TrainConfig base;
    /// One training run per seed per cell; empty means {base.seed}.
    std::vector<std::uint64_t> seeds;
};

struct SweepRow {
    double lambda = 0.0;
    double beta = 0.0;
    std::uint64_t seed = 0;
    double train_acc = 0.0;
    double test_acc = 0.0;
    double mean_pair_dist = 0.0;
    double delta_h = 0.0;
    std::string status = "ok";
};

/// Trains a fresh network per (lambda, beta, seed), cells in parallel on up
/// to `threads` workers. Rows come back in grid order (lambda-major, then
/// beta, then seed) whatever the schedule. A failing cell records its error
/// in `status` and the sweep continues.
std::vector<SweepRow> run_sweep(const SweepGrid& grid, const Dataset& train_ds, const Dataset& test_ds,
                                const NetworkSpec& spec, int threads = 1);

CsvTable sweep_table(const std::vector<SweepRow>& rows);

}  // namespace mixcon
