#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "mixcon/tensor.hpp"

namespace mixcon {

/// Inputs with a leading sample axis and integer class labels.
struct Dataset {
    Tensor inputs;
    std::vector<std::size_t> labels;
    std::size_t num_classes = 0;

    std::size_t size() const { return labels.size(); }
    /// Per-sample input shape.
    Shape sample_shape() const;
    /// Samples picked by index, in the given order.
    Dataset subset(std::span<const std::size_t> indices) const;
    /// The first `count` samples.
    Dataset head(std::size_t count) const;
};

/// Throws ContractError unless labels and inputs agree and labels are in range.
void validate(const Dataset& ds);

struct SyntheticSplit {
    Dataset train;
    Dataset test;
};

/// Two 10-d Gaussians with identity covariance: class 1 centred at 0 and
/// class 0 centred at -1. Classes alternate (1, 0, 1, 0, ...) in each split.
/// Counts must be even.
SyntheticSplit gen_synthetic(std::uint64_t seed, std::size_t n_train = 800, std::size_t n_test = 200);

// IDX files, big-endian. Images: 0x00000803 with (count, rows, cols) for one
// channel, or 0x00000804 with (count, channels, rows, cols). Labels:
// 0x00000801 with (count). Payload bytes are row-major u8.

/// Images scaled to [0, 1] as (N, C, rows, cols) with labels; num_classes is
/// max(label) + 1 unless given.
Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels,
                 std::size_t num_classes = 0);
Tensor load_idx_images(const std::filesystem::path& images);
std::vector<std::size_t> load_idx_labels(const std::filesystem::path& labels);

/// Inverse of load_idx: pixels are written as round(255 * p) after clamping
/// to [0, 1], so load(save(load(f))) reproduces the pixel bytes exactly.
void save_idx(const Dataset& ds, const std::filesystem::path& images, const std::filesystem::path& labels);
void save_idx_images(const Tensor& images, const std::filesystem::path& path);
void save_idx_labels(std::span<const std::size_t> labels, const std::filesystem::path& path);

std::vector<unsigned char> encode_idx_images(const Tensor& images);
std::vector<unsigned char> encode_idx_labels(std::span<const std::size_t> labels);
Tensor decode_idx_images(const std::vector<unsigned char>& bytes);
std::vector<std::size_t> decode_idx_labels(const std::vector<unsigned char>& bytes);

/// Reassigns exactly round(fraction * N) distinct labels, chosen uniformly,
/// to a uniformly drawn different class.
Dataset flip_labels(const Dataset& ds, double fraction, std::uint64_t seed);

struct BatchPlan {
    std::uint64_t seed = 0;
    std::size_t batch_size = 32;
    bool shuffle = true;
};

/// Index lists partitioning [0, N); the last batch may be short.
std::vector<std::vector<std::size_t>> batch_indices(std::size_t n, const BatchPlan& plan);

struct Batch {
    Tensor inputs;
    std::vector<std::size_t> labels;
};

std::vector<Batch> batches(const Dataset& ds, const BatchPlan& plan);

}  // namespace mixcon
