#include "mixcon/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <string>

#include "mixcon/error.hpp"
#include "mixcon/rng.hpp"

namespace mixcon {

namespace {

constexpr std::uint32_t kImagesMagic = 0x00000803;
constexpr std::uint32_t kImagesMagic4d = 0x00000804;
constexpr std::uint32_t kLabelsMagic = 0x00000801;

std::vector<unsigned char> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, const std::vector<unsigned char>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("write failed for " + path.string());
}

void put_be32(std::vector<unsigned char>& out, std::uint32_t v) {
    for (int i = 3; i >= 0; --i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

std::uint32_t get_be32(const std::vector<unsigned char>& bytes, std::size_t at, const char* what) {
    if (bytes.size() < at + 4) {
        throw FormatError("IDX truncated while reading " + std::string(what) + " at byte " +
                              std::to_string(at),
                          at);
    }
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v = (v << 8) | bytes[at + i];
    return v;
}

std::uint32_t checked_u32(std::size_t v, const char* what) {
    if (v > 0xffffffffu) throw ContractError(std::string(what) + " too large for IDX");
    return static_cast<std::uint32_t>(v);
}

}  // namespace

Shape Dataset::sample_shape() const {
    const Shape& s = inputs.shape();
    return s.empty() ? Shape{} : Shape(s.begin() + 1, s.end());
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
    Dataset out{inputs.gather_rows(indices), {}, num_classes};
    out.labels.reserve(indices.size());
    for (std::size_t i : indices) out.labels.push_back(labels.at(i));
    return out;
}

Dataset Dataset::head(std::size_t count) const {
    if (count > size()) {
        throw ContractError("requested " + std::to_string(count) + " samples from a dataset of " +
                            std::to_string(size()));
    }
    Dataset out{inputs.slice_rows(0, count), {labels.begin(), labels.begin() + count}, num_classes};
    return out;
}

void validate(const Dataset& ds) {
    if (ds.inputs.rank() < 2 || ds.inputs.dim(0) != ds.labels.size()) {
        throw ContractError("dataset inputs " + shape_string(ds.inputs.shape()) + " do not match " +
                            std::to_string(ds.labels.size()) + " labels");
    }
    for (std::size_t i = 0; i < ds.labels.size(); ++i) {
        if (ds.labels[i] >= ds.num_classes) {
            throw ContractError("label " + std::to_string(ds.labels[i]) + " at index " +
                                std::to_string(i) + " out of range");
        }
    }
}

SyntheticSplit gen_synthetic(std::uint64_t seed, std::size_t n_train, std::size_t n_test) {
    if (n_train % 2 != 0 || n_test % 2 != 0 || n_train == 0 || n_test == 0) {
        throw ConfigError("synthetic split sizes must be positive and even");
    }
    constexpr std::size_t dim = 10;
    auto make = [&](std::size_t n, std::uint64_t stream) {
        Rng rng(Rng::derive(seed, stream));
        Dataset ds{Tensor({n, dim}), std::vector<std::size_t>(n), 2};
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t label = i % 2 == 0 ? 1 : 0;
            const double mean = label == 1 ? 0.0 : -1.0;
            ds.labels[i] = label;
            for (double& v : ds.inputs.row(i)) v = rng.normal(mean, 1.0);
        }
        return ds;
    };
    return {make(n_train, 1), make(n_test, 2)};
}

std::vector<unsigned char> encode_idx_images(const Tensor& images) {
    Shape s = images.shape();
    if (s.size() == 3) s.insert(s.begin() + 1, 1);
    if (s.size() != 4) throw ShapeError("IDX images need rank 3 or 4, got " + shape_string(images.shape()));
    std::vector<unsigned char> out;
    out.reserve(24 + images.size());
    if (s[1] == 1) {
        put_be32(out, kImagesMagic);
        put_be32(out, checked_u32(s[0], "count"));
        put_be32(out, checked_u32(s[2], "rows"));
        put_be32(out, checked_u32(s[3], "cols"));
    } else {
        put_be32(out, kImagesMagic4d);
        for (std::size_t d : s) put_be32(out, checked_u32(d, "dimension"));
    }
    for (double p : images.data()) {
        out.push_back(static_cast<unsigned char>(std::lround(std::clamp(p, 0.0, 1.0) * 255.0)));
    }
    return out;
}

std::vector<unsigned char> encode_idx_labels(std::span<const std::size_t> labels) {
    std::vector<unsigned char> out;
    put_be32(out, kLabelsMagic);
    put_be32(out, checked_u32(labels.size(), "count"));
    for (std::size_t l : labels) {
        if (l > 255) throw ContractError("label " + std::to_string(l) + " does not fit IDX u8");
        out.push_back(static_cast<unsigned char>(l));
    }
    return out;
}

Tensor decode_idx_images(const std::vector<unsigned char>& bytes) {
    const std::uint32_t magic = get_be32(bytes, 0, "magic");
    Shape shape;
    std::size_t at = 4;
    if (magic == kImagesMagic) {
        const std::size_t n = get_be32(bytes, 4, "count");
        const std::size_t rows = get_be32(bytes, 8, "rows");
        const std::size_t cols = get_be32(bytes, 12, "cols");
        shape = {n, 1, rows, cols};
        at = 16;
    } else if (magic == kImagesMagic4d) {
        for (int d = 0; d < 4; ++d, at += 4) shape.push_back(get_be32(bytes, at, "dimension"));
    } else {
        throw FormatError("bad IDX image magic at byte 0", 0);
    }
    const std::size_t n = shape_size(shape);
    if (bytes.size() - at < n) {
        throw FormatError("IDX image payload truncated at byte " + std::to_string(bytes.size()) +
                              ", expected " + std::to_string(at + n) + " bytes",
                          bytes.size());
    }
    if (bytes.size() - at > n) {
        throw FormatError("trailing bytes after IDX image payload at byte " + std::to_string(at + n),
                          at + n);
    }
    std::vector<double> data(n);
    for (std::size_t i = 0; i < n; ++i) data[i] = bytes[at + i] / 255.0;
    return Tensor(std::move(shape), std::move(data));
}

std::vector<std::size_t> decode_idx_labels(const std::vector<unsigned char>& bytes) {
    if (get_be32(bytes, 0, "magic") != kLabelsMagic) throw FormatError("bad IDX label magic at byte 0", 0);
    const std::size_t n = get_be32(bytes, 4, "count");
    if (bytes.size() - 8 < n) {
        throw FormatError("IDX label payload truncated at byte " + std::to_string(bytes.size()) +
                              ", expected " + std::to_string(8 + n) + " bytes",
                          bytes.size());
    }
    if (bytes.size() - 8 > n) {
        throw FormatError("trailing bytes after IDX labels at byte " + std::to_string(8 + n), 8 + n);
    }
    return {bytes.begin() + 8, bytes.end()};
}

Tensor load_idx_images(const std::filesystem::path& images) {
    return decode_idx_images(read_file(images));
}

std::vector<std::size_t> load_idx_labels(const std::filesystem::path& labels) {
    return decode_idx_labels(read_file(labels));
}

Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels,
                 std::size_t num_classes) {
    Dataset ds{load_idx_images(images), load_idx_labels(labels), num_classes};
    if (ds.inputs.dim(0) != ds.labels.size()) {
        // The count field sits at byte 4 in both files.
        throw FormatError("label count " + std::to_string(ds.labels.size()) + " does not match image count " +
                              std::to_string(ds.inputs.dim(0)) + " (count field at byte 4)",
                          4);
    }
    if (ds.num_classes == 0) {
        for (std::size_t l : ds.labels) ds.num_classes = std::max(ds.num_classes, l + 1);
    }
    validate(ds);
    return ds;
}

void save_idx_images(const Tensor& images, const std::filesystem::path& path) {
    write_file(path, encode_idx_images(images));
}

void save_idx_labels(std::span<const std::size_t> labels, const std::filesystem::path& path) {
    write_file(path, encode_idx_labels(labels));
}

void save_idx(const Dataset& ds, const std::filesystem::path& images, const std::filesystem::path& labels) {
    validate(ds);
    save_idx_images(ds.inputs, images);
    save_idx_labels(ds.labels, labels);
}

Dataset flip_labels(const Dataset& ds, double fraction, std::uint64_t seed) {
    if (!(fraction >= 0.0 && fraction <= 1.0)) throw ConfigError("flip fraction must lie in [0, 1]");
    Dataset out = ds;
    const auto count = static_cast<std::size_t>(std::llround(fraction * double(ds.size())));
    if (count == 0) return out;
    if (ds.num_classes < 2) throw ConfigError("label flipping needs at least two classes");
    Rng rng(seed);
    const auto order = rng.permutation(ds.size());
    for (std::size_t k = 0; k < count; ++k) {
        const std::size_t i = order[k];
        const std::size_t r = rng.below(ds.num_classes - 1);
        out.labels[i] = r < ds.labels[i] ? r : r + 1;
    }
    return out;
}

std::vector<std::vector<std::size_t>> batch_indices(std::size_t n, const BatchPlan& plan) {
    if (plan.batch_size == 0) throw ConfigError("batch size must be positive");
    std::vector<std::size_t> order;
    if (plan.shuffle) {
        Rng rng(plan.seed);
        order = rng.permutation(n);
    } else {
        order.resize(n);
        for (std::size_t i = 0; i < n; ++i) order[i] = i;
    }
    std::vector<std::vector<std::size_t>> out;
    for (std::size_t start = 0; start < n; start += plan.batch_size) {
        const std::size_t end = std::min(n, start + plan.batch_size);
        out.emplace_back(order.begin() + start, order.begin() + end);
    }
    return out;
}

std::vector<Batch> batches(const Dataset& ds, const BatchPlan& plan) {
    std::vector<Batch> out;
    for (const auto& idx : batch_indices(ds.size(), plan)) {
        Dataset part = ds.subset(idx);
        out.push_back({std::move(part.inputs), std::move(part.labels)});
    }
    return out;
}

}  // namespace mixcon
