#include "mixcon/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mixcon/error.hpp"

namespace mixcon {

namespace {

void require_same_shape(const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) {
        throw ContractError("shape mismatch: " + shape_string(a.shape()) + " vs " + shape_string(b.shape()));
    }
}

double row_distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const double d = a[k] - b[k];
        s += d * d;
    }
    return std::sqrt(s);
}

struct Window {
    std::size_t h = 0;
    std::size_t w = 0;
    std::vector<double> weights;  // h * w, sums to 1
};

Window gaussian_window(std::size_t size, double sigma) {
    Window win{size, size, std::vector<double>(size * size)};
    std::vector<double> g(size);
    const double centre = (double(size) - 1.0) / 2.0;
    double total = 0.0;
    for (std::size_t i = 0; i < size; ++i) {
        const double d = double(i) - centre;
        g[i] = std::exp(-d * d / (2.0 * sigma * sigma));
        total += g[i];
    }
    for (double& v : g) v /= total;
    for (std::size_t i = 0; i < size; ++i) {
        for (std::size_t j = 0; j < size; ++j) win.weights[i * size + j] = g[i] * g[j];
    }
    return win;
}

Window uniform_window(std::size_t h, std::size_t w) {
    return {h, w, std::vector<double>(h * w, 1.0 / double(h * w))};
}

// Mean SSIM over all valid placements of `win` on one channel.
double channel_ssim(const double* a, const double* b, std::size_t rows, std::size_t cols,
                    const Window& win, double c1, double c2) {
    const std::size_t out_h = rows - win.h + 1;
    const std::size_t out_w = cols - win.w + 1;
    double total = 0.0;
    for (std::size_t r = 0; r < out_h; ++r) {
        for (std::size_t c = 0; c < out_w; ++c) {
            double ma = 0.0, mb = 0.0, saa = 0.0, sbb = 0.0, sab = 0.0;
            for (std::size_t i = 0; i < win.h; ++i) {
                const double* pa = a + (r + i) * cols + c;
                const double* pb = b + (r + i) * cols + c;
                const double* w = win.weights.data() + i * win.w;
                for (std::size_t j = 0; j < win.w; ++j) {
                    ma += w[j] * pa[j];
                    mb += w[j] * pb[j];
                    saa += w[j] * pa[j] * pa[j];
                    sbb += w[j] * pb[j] * pb[j];
                    sab += w[j] * pa[j] * pb[j];
                }
            }
            const double va = saa - ma * ma;
            const double vb = sbb - mb * mb;
            const double cov = sab - ma * mb;
            total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) /
                     ((ma * ma + mb * mb + c1) * (va + vb + c2));
        }
    }
    return total / double(out_h * out_w);
}

}  // namespace

double mse(const Tensor& x, const Tensor& recovered) {
    require_same_shape(x, recovered);
    if (x.size() == 0) throw ContractError("mse of empty tensors");
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - recovered[i];
        s += d * d;
    }
    return s / double(x.size());
}

double mcs(const Tensor& x, const Tensor& recovered) {
    require_same_shape(x, recovered);
    const double nx = norm2(x.data());
    const double nr = norm2(recovered.data());
    if (nx == 0.0 || nr == 0.0) return 0.0;
    return std::clamp(dot(x.data(), recovered.data()) / (nx * nr), -1.0, 1.0);
}

double ssim_raw(const Tensor& a, const Tensor& b, const SsimOptions& options) {
    require_same_shape(a, b);
    Shape s = a.shape();
    if (s.size() == 2) s.insert(s.begin(), 1);
    if (s.size() != 3 || s[1] == 0 || s[2] == 0) {
        throw ContractError("ssim expects (C, H, W) or (H, W) images, got " + shape_string(a.shape()));
    }
    const std::size_t channels = s[0], rows = s[1], cols = s[2];
    const double c1 = std::pow(options.k1 * options.dynamic_range, 2);
    const double c2 = std::pow(options.k2 * options.dynamic_range, 2);
    const Window win = rows >= options.window && cols >= options.window
                           ? gaussian_window(options.window, options.sigma)
                           : uniform_window(rows, cols);
    double total = 0.0;
    for (std::size_t ch = 0; ch < channels; ++ch) {
        const std::size_t off = ch * rows * cols;
        total += channel_ssim(a.data().data() + off, b.data().data() + off, rows, cols, win, c1, c2);
    }
    return total / double(channels);
}

double ssim(const Tensor& a, const Tensor& b, const SsimOptions& options) {
    return (ssim_raw(a, b, options) + 1.0) / 2.0;
}

Separability separability(const Tensor& features, const PairSet& pairs) {
    if (features.rank() != 2) throw ContractError("separability expects an N x m matrix");
    const std::size_t n = features.dim(0);
    if (n < 2) throw ContractError("separability needs at least two rows");
    Separability out;
    out.delta_h = std::numeric_limits<double>::infinity();
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double d = row_distance(features.row(i), features.row(j));
            out.delta_h = std::min(out.delta_h, d);
            out.max_pair = std::max(out.max_pair, d);
            sum += d;
        }
    }
    out.mean_pair = sum / (double(n) * double(n - 1) / 2.0);
    if (!pairs.empty()) {
        double worst = 0.0;
        for (auto [i, j] : pairs) {
            if (i >= n || j >= n || i == j) throw ContractError("pair set index out of range");
            worst = std::max(worst, row_distance(features.row(i), features.row(j)));
        }
        out.delta_H = worst;
    }
    return out;
}

double mean_cross_class_distance(const Tensor& features, std::span<const std::size_t> labels) {
    if (features.rank() != 2 || features.dim(0) != labels.size()) {
        throw ContractError("features and labels disagree");
    }
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        for (std::size_t j = i + 1; j < labels.size(); ++j) {
            if (labels[i] == labels[j]) continue;
            sum += row_distance(features.row(i), features.row(j));
            ++count;
        }
    }
    return count == 0 ? 0.0 : sum / double(count);
}

SimilarityReport aggregate(std::span<const double> values, const std::string& metric, bool higher_is_better) {
    if (values.empty()) throw ContractError("aggregate of no values");
    SimilarityReport out{metric, 0.0, 0.0, values.front(), values.size()};
    for (double v : values) {
        out.mean += v;
        out.worst = higher_is_better ? std::max(out.worst, v) : std::min(out.worst, v);
    }
    out.mean /= double(values.size());
    double var = 0.0;
    for (double v : values) var += (v - out.mean) * (v - out.mean);
    out.std = std::sqrt(var / double(values.size()));
    return out;
}

std::string metric_name(Metric metric) {
    switch (metric) {
        case Metric::MSE: return "mse";
        case Metric::MCS: return "mcs";
        case Metric::SSIM: return "ssim";
    }
    return "unknown";
}

bool higher_is_better(Metric metric) { return metric != Metric::MSE; }

double evaluate(Metric metric, const Tensor& x, const Tensor& recovered) {
    switch (metric) {
        case Metric::MSE: return mse(x, recovered);
        case Metric::MCS: return mcs(x, recovered);
        case Metric::SSIM: return ssim(x, recovered);
    }
    throw ContractError("unknown metric");
}

std::vector<double> per_sample(std::span<const RecoveryPair> pairs, Metric metric) {
    std::vector<double> out;
    out.reserve(pairs.size());
    for (const auto& p : pairs) out.push_back(evaluate(metric, p.original, p.recovered));
    return out;
}

SimilarityReport aggregate(std::span<const RecoveryPair> pairs, Metric metric) {
    const auto values = per_sample(pairs, metric);
    return aggregate(values, metric_name(metric), higher_is_better(metric));
}

}  // namespace mixcon
