#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "mixcon/tensor.hpp"

namespace mixcon {

// Layer kinds. Shapes below are per sample; every tensor passed through a
// network carries a leading batch axis.

/// (in) -> (out), y = W x + b with W stored out x in.
struct Linear {
    std::size_t in_dim = 0;
    std::size_t out_dim = 0;
    friend bool operator==(const Linear&, const Linear&) = default;
};

struct ReLU {
    friend bool operator==(const ReLU&, const ReLU&) = default;
};

/// (C, H, W) -> (out_ch, H - kh + 1, W - kw + 1). Valid padding, stride 1.
struct Conv2d {
    std::size_t in_ch = 0;
    std::size_t out_ch = 0;
    std::size_t kernel_h = 0;
    std::size_t kernel_w = 0;
    friend bool operator==(const Conv2d&, const Conv2d&) = default;
};

/// (C, H, W) -> (C, H / kh, W / kw). Stride equals the kernel size; trailing
/// rows/columns that do not fill a window are dropped.
struct MaxPool2d {
    std::size_t kernel_h = 0;
    std::size_t kernel_w = 0;
    friend bool operator==(const MaxPool2d&, const MaxPool2d&) = default;
};

struct Flatten {
    friend bool operator==(const Flatten&, const Flatten&) = default;
};

/// Row-wise softmax over a rank-1 per-sample vector.
struct Softmax {
    friend bool operator==(const Softmax&, const Softmax&) = default;
};

using LayerSpec = std::variant<Linear, ReLU, Conv2d, MaxPool2d, Flatten, Softmax>;

std::string layer_name(const LayerSpec& layer);
bool has_params(const LayerSpec& layer);

/// Layer sequence split at `cut_index` into the feature extractor h
/// (layers [0, cut_index)) and the head g (layers [cut_index, end)).
struct NetworkSpec {
    Shape input_shape;
    std::vector<LayerSpec> layers;
    std::size_t cut_index = 0;

    friend bool operator==(const NetworkSpec&, const NetworkSpec&) = default;
};

/// Per-sample output shape of each layer; entry 0 is the input shape. Throws
/// ConfigError naming the first incompatible layer.
std::vector<Shape> layer_shapes(const NetworkSpec& spec);
void validate(const NetworkSpec& spec);

/// Parameters of one layer. Both tensors are empty for parameterless layers.
struct LayerParams {
    Tensor weight;
    Tensor bias;
    friend bool operator==(const LayerParams&, const LayerParams&) = default;
};

struct Network {
    NetworkSpec spec;
    std::vector<LayerParams> params;  // one entry per layer

    /// Weight and bias tensors of parameterized layers, in layer order.
    std::vector<const Tensor*> parameter_tensors() const;
    std::vector<Tensor*> parameter_tensors();
};

/// Expected weight and bias shapes for a layer (empty for parameterless ones).
std::pair<Shape, Shape> param_shapes(const LayerSpec& layer);

enum class InitScheme {
    /// Per layer k: u_k ~ N(0, alpha), then every weight and bias entry
    /// ~ N(u_k, stddev^2). alpha is a variance.
    ShiftedNormal,
    /// Entries ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases.
    KaimingUniform,
};

struct InitOptions {
    InitScheme scheme = InitScheme::ShiftedNormal;
    double alpha = 0.1;
    double stddev = 1.0;
    std::uint64_t seed = 0;
};

/// Fresh parameters for `spec`. Layers draw in order from one generator
/// seeded with `options.seed`; for ShiftedNormal each parameterized layer
/// draws its shift first, then the weights, then the biases.
Network init_params(const NetworkSpec& spec, const InitOptions& options);
Network init_params(const NetworkSpec& spec, double alpha, std::uint64_t seed);

/// Layer inputs and outputs from one forward pass: activations[k] is the
/// input of layer k and activations[k + 1] its output.
struct ActivationTape {
    std::vector<Tensor> activations;

    std::size_t layer_count() const { return activations.empty() ? 0 : activations.size() - 1; }
    const Tensor& input() const { return activations.front(); }
    const Tensor& output() const { return activations.back(); }
};

struct ForwardResult {
    Tensor output;
    ActivationTape tape;
};

/// Full forward pass. `x` is either batched ([N] + input_shape) or a single
/// sample (input_shape); the output follows the same convention.
ForwardResult forward(const Network& net, const Tensor& x);

/// Applies layers [first, last) to a batched tensor.
Tensor forward_range(const Network& net, const Tensor& x, std::size_t first, std::size_t last);

/// Output of h, i.e. the activations entering layer cut_index.
Tensor hidden(const Network& net, const Tensor& x);
/// Output of g applied to cut-layer activations.
Tensor head(const Network& net, const Tensor& features);

struct BackwardOptions {
    bool param_grads = true;
    bool input_grad = true;
};

struct BackwardResult {
    std::vector<LayerParams> param_grads;  // zero-filled layout mirroring Network::params
    Tensor grad_x;
};

/// Reverse pass for the scalar <grad_y, f(x)> + <grad_hidden, h(x)>.
/// grad_hidden, when given, is added to the incoming gradient at the cut.
/// Batch contributions to parameter gradients are summed in ascending sample
/// order.
BackwardResult backward(const Network& net, const ActivationTape& tape, const Tensor& grad_y,
                        const Tensor* grad_hidden = nullptr, BackwardOptions options = {});

/// Absolute-value argmax with the lowest index winning ties.
std::size_t predict_class(std::span<const double> scores);
/// predict_class of the softmax of each row of an N x C logit matrix.
std::vector<std::size_t> predict_classes(const Tensor& logits);

/// Matrix-free linear map of shape rows x cols.
struct LinearOperator {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::function<void(std::span<const double> v, std::span<double> out)> apply;
    std::function<void(std::span<const double> u, std::span<double> out)> apply_transpose;
};

/// View of a dense matrix; the matrix must outlive the operator.
LinearOperator matrix_operator(const Tensor& matrix);

/// Largest singular value by power iteration on W^T W, starting from a
/// seeded Gaussian vector. Returns the running maximum of |W v| over unit
/// iterates, so the estimate never decreases with more iterations.
double spectral_norm(const Tensor& matrix, int iterations, std::uint64_t seed);
double spectral_norm(const LinearOperator& op, int iterations, std::uint64_t seed);

/// The layers of h as a standalone network whose output is the cut features.
Network feature_extractor(const Network& net);

// Architectures used by the experiments.

/// 10 -> 500 -> 2 -> width -> 2 MLP with the cut after the second ReLU.
NetworkSpec synthetic_mlp(std::size_t third_width = 100);
/// LeNet5 variant for (channels, 28, 28) images, cut after the second pool.
NetworkSpec lenet5(std::size_t channels = 1, std::size_t classes = 10);

}  // namespace mixcon
