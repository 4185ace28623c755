#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mixcon/invert.hpp"
#include "mixcon/network.hpp"

namespace mixcon {

/// Exactly-3 CNF. Literals use DIMACS signs: +i is X_i, -i is not X_i, with
/// variables numbered from 1.
struct CnfFormula {
    std::size_t n = 0;
    std::vector<std::array<int, 3>> clauses;

    std::size_t m() const { return clauses.size(); }
    /// Largest number of clauses any variable occurs in.
    std::size_t B() const;
};

/// Throws ContractError on out-of-range literals or a repeated variable.
void validate(const CnfFormula& phi);

/// DIMACS "p cnf n m" header then clauses terminated by 0; lines starting
/// with 'c' are comments. FormatError positions are 1-based line numbers.
CnfFormula parse_dimacs(const std::string& text);
CnfFormula load_dimacs(const std::filesystem::path& path);
std::string to_dimacs(const CnfFormula& phi);

/// m clauses over n >= 3 variables, each on 3 distinct uniformly drawn
/// variables with random signs.
CnfFormula random_3cnf(std::size_t n, std::size_t m, std::uint64_t seed);

using Assignment = std::vector<bool>;

/// Clauses whose three literals are all false.
std::size_t unsat_count(const CnfFormula& phi, const Assignment& assignment);
/// Lowest-index satisfying assignment by enumeration (n <= 24), counting
/// assignment bits from variable 1 as the least significant.
std::optional<Assignment> find_model(const CnfFormula& phi);
/// Fewest unsatisfied clauses over all assignments.
std::size_t min_unsat(const CnfFormula& phi);

/// x_i = -1 for true, +1 for false.
Tensor assignment_to_input(const Assignment& assignment);
/// Sign rounding with 0 mapped to +1 (false).
Assignment input_to_assignment(const Tensor& x);
Tensor round_input(const Tensor& x);

/// Two-layer ReLU network h(x) = W2 relu(W1 x + b) with target z.
/// Hidden neurons: m clause neurons, then K copies of relu(x_i) for each i,
/// then K copies of relu(-x_i). Outputs: the m clause neurons, then for
/// variable i and copy k the sum of its two halves, |x_i|.
struct ReducedNetwork {
    std::size_t n = 0;
    std::size_t m = 0;
    std::size_t K = 0;
    Tensor W1;  // (m + 2Kn) x n
    Tensor b;   // m + 2Kn
    Tensor z;   // m + Kn

    std::size_t hidden_dim() const { return m + 2 * K * n; }
    std::size_t output_dim() const { return m + K * n; }
};

ReducedNetwork build_reduction(const CnfFormula& phi, std::size_t K);

/// Row structure of W2: output r reads hidden neurons w2_support(r) with
/// weight 1. Clause outputs read one neuron, copy outputs two.
std::vector<std::size_t> w2_support(const ReducedNetwork& net, std::size_t row);
LinearOperator w2_operator(const ReducedNetwork& net);
/// Dense W2; throws ConfigError above `max_entries`.
Tensor w2_matrix(const ReducedNetwork& net, std::size_t max_entries = 50'000'000);

/// h(x) for one input of length n.
Tensor reduced_forward(const ReducedNetwork& net, const Tensor& x);
double squared_error(const ReducedNetwork& net, const Tensor& x);
/// Residual loss of h(x) against z and its gradient with respect to x, using
/// the sparse structure of both layers.
LossValue reduced_objective(const ReducedNetwork& net, const Tensor& x, InversionLoss loss);

/// The same map as an nn-core network (Linear, ReLU, Linear) whose cut is
/// its output. Materializes W2 densely.
Network to_network(const ReducedNetwork& net);

bool verify_completeness(const CnfFormula& phi, std::size_t K, const Assignment& assignment);

/// max over delta in [0, 1] of n * (2 B delta - K delta^2).
double soundness_bound(std::size_t n, std::size_t B, std::size_t K);

struct SoundnessReport {
    std::size_t samples = 0;
    double max_D = 0.0;
    double bound = 0.0;
    std::size_t violations = 0;
};

/// D(x) = |h(round(x)) - z|^2 - |h(x) - z|^2 over x uniform in [-1, 1]^n.
SoundnessReport soundness_scan(const CnfFormula& phi, std::size_t K, std::size_t samples, std::uint64_t seed);

struct LipschitzReport {
    double norm_W1 = 0.0;
    double norm_W2 = 0.0;
    double U = 0.0;
    double max_ratio = 0.0;
    std::size_t trials = 0;
    std::size_t violations = 0;  // ratio above U + 1e-9
};

LipschitzReport lipschitz_check(const ReducedNetwork& net, std::size_t trials, std::uint64_t seed,
                                int power_iterations = 2000);

struct ReductionAttackReport {
    /// Best |h(s) - z|_2 / sqrt(m + Kn) over restarts.
    double epsilon = 0.0;
    std::size_t unsat = 0;  // of the rounded best s
    Tensor best;
    std::vector<double> per_restart;
};

/// Inverts h toward z with clamp [-1, 1], `restarts` seeds derived from
/// cfg.seed; `start` (when given) replaces the first restart's initial point.
ReductionAttackReport attack_reduction(const CnfFormula& phi, std::size_t K, InversionConfig cfg,
                                       std::size_t restarts = 1, const std::optional<Tensor>& start = {});

struct HardnessReport {
    std::size_t n = 0, m = 0, B = 0, K = 0;
    bool satisfiable = false;
    bool completeness = false;
    SoundnessReport soundness;
    LipschitzReport lipschitz;
};

/// Completeness (with a brute-force model), soundness scan and Lipschitz
/// check for one formula. K = 0 selects 100 B^2.
HardnessReport verify_reduction(const CnfFormula& phi, std::size_t K, std::size_t samples, std::size_t trials,
                                std::uint64_t seed);

/// {n, m, B, K, completeness, max_D, bound, violations, lipschitz_U, max_ratio}
std::string hardness_json(const HardnessReport& report);

}  // namespace mixcon
