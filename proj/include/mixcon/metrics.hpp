#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mixcon/losses.hpp"
#include "mixcon/tensor.hpp"

namespace mixcon {

/// Mean over coordinates of the squared difference.
double mse(const Tensor& x, const Tensor& recovered);
/// Cosine similarity of the flattened tensors; 0 if either is the zero vector.
double mcs(const Tensor& x, const Tensor& recovered);

struct SsimOptions {
    std::size_t window = 11;
    double sigma = 1.5;
    double k1 = 0.01;
    double k2 = 0.03;
    double dynamic_range = 1.0;
};

/// SSIM of two (C, H, W) or (H, W) images averaged over valid Gaussian
/// windows and channels, mapped to [0, 1] by (s + 1) / 2. Images smaller than
/// the window use a single window of uniform weight over the whole image.
double ssim(const Tensor& a, const Tensor& b, const SsimOptions& options = {});
/// Same, without the final (s + 1) / 2 mapping.
double ssim_raw(const Tensor& a, const Tensor& b, const SsimOptions& options = {});

struct Separability {
    double delta_h = 0.0;                // min distance over distinct pairs
    std::optional<double> delta_H;       // max distance over the pair set
    double mean_pair = 0.0;              // mean distance over distinct unordered pairs
    double max_pair = 0.0;
};

/// Distances are l2 between rows of an N x m matrix. N must be at least 2.
Separability separability(const Tensor& features, const PairSet& pairs = {});

/// Mean l2 distance over unordered pairs with different labels.
double mean_cross_class_distance(const Tensor& features, std::span<const std::size_t> labels);

struct SimilarityReport {
    std::string metric;
    double mean = 0.0;
    double std = 0.0;  // population
    /// The best-recovered sample: the maximum of a similarity, the minimum of
    /// an error such as MSE.
    double worst = 0.0;
    std::size_t count = 0;
};

SimilarityReport aggregate(std::span<const double> values, const std::string& metric,
                           bool higher_is_better = true);

enum class Metric { MSE, MCS, SSIM };

std::string metric_name(Metric metric);
bool higher_is_better(Metric metric);
double evaluate(Metric metric, const Tensor& x, const Tensor& recovered);

struct RecoveryPair {
    Tensor original;
    Tensor recovered;
};

std::vector<double> per_sample(std::span<const RecoveryPair> pairs, Metric metric);
SimilarityReport aggregate(std::span<const RecoveryPair> pairs, Metric metric);

}  // namespace mixcon
