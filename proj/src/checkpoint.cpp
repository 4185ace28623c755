#include "mixcon/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>

#include "mixcon/error.hpp"

namespace mixcon {

namespace {

constexpr unsigned char kMagic[4] = {'M', 'X', 'C', 'N'};

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

void put_f64(std::vector<unsigned char>& out, double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<unsigned char>(bits >> (8 * i)));
}

class Reader {
public:
    explicit Reader(const std::vector<unsigned char>& bytes) : bytes_(bytes) {}

    std::size_t offset() const { return pos_; }

    std::uint32_t u32(const char* what) {
        need(4, what);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= std::uint32_t(bytes_[pos_ + i]) << (8 * i);
        pos_ += 4;
        return v;
    }

    double f64(const char* what) {
        need(8, what);
        std::uint64_t bits = 0;
        for (int i = 0; i < 8; ++i) bits |= std::uint64_t(bytes_[pos_ + i]) << (8 * i);
        pos_ += 8;
        return std::bit_cast<double>(bits);
    }

    void need(std::size_t n, const char* what) {
        if (bytes_.size() - pos_ < n) {
            throw FormatError("checkpoint truncated while reading " + std::string(what) +
                                  " at byte " + std::to_string(pos_),
                              pos_);
        }
    }

    bool done() const { return pos_ == bytes_.size(); }

private:
    const std::vector<unsigned char>& bytes_;
    std::size_t pos_ = 0;
};

std::vector<unsigned char> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<Tensor> decode_with_offsets(const std::vector<unsigned char>& bytes,
                                        std::vector<std::size_t>* offsets) {
    Reader r(bytes);
    r.need(4, "magic");
    if (std::memcmp(bytes.data(), kMagic, 4) != 0) {
        throw FormatError("bad checkpoint magic at byte 0", 0);
    }
    (void)r.u32("magic");
    const std::size_t version_at = r.offset();
    const std::uint32_t version = r.u32("version");
    if (version != kCheckpointVersion) {
        throw FormatError("unsupported checkpoint version " + std::to_string(version) +
                              " at byte " + std::to_string(version_at),
                          version_at);
    }
    const std::uint32_t count = r.u32("tensor count");
    std::vector<Tensor> tensors;
    for (std::uint32_t t = 0; t < count; ++t) {
        if (offsets) offsets->push_back(r.offset());
        const std::uint32_t rank = r.u32("rank");
        Shape shape;
        for (std::uint32_t d = 0; d < rank; ++d) shape.push_back(r.u32("dimension"));
        const std::size_t n = shape_size(shape);
        r.need(n * 8, "payload");
        std::vector<double> data(n);
        for (double& v : data) v = r.f64("payload");
        tensors.emplace_back(std::move(shape), std::move(data));
    }
    if (!r.done()) {
        throw FormatError("trailing bytes after checkpoint at byte " + std::to_string(r.offset()),
                          r.offset());
    }
    return tensors;
}

}  // namespace

std::vector<unsigned char> encode_checkpoint(const Network& net) {
    std::vector<unsigned char> out(std::begin(kMagic), std::end(kMagic));
    put_u32(out, kCheckpointVersion);
    const auto tensors = net.parameter_tensors();
    put_u32(out, static_cast<std::uint32_t>(tensors.size()));
    for (const Tensor* t : tensors) {
        put_u32(out, static_cast<std::uint32_t>(t->rank()));
        for (std::size_t d : t->shape()) put_u32(out, static_cast<std::uint32_t>(d));
        for (double v : t->data()) put_f64(out, v);
    }
    return out;
}

std::vector<Tensor> decode_checkpoint(const std::vector<unsigned char>& bytes) {
    return decode_with_offsets(bytes, nullptr);
}

void save_checkpoint(const Network& net, const std::filesystem::path& path) {
    const auto bytes = encode_checkpoint(net);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("write failed for " + path.string());
}

std::vector<Tensor> load_checkpoint_tensors(const std::filesystem::path& path) {
    return decode_checkpoint(read_file(path));
}

Network load_checkpoint(const std::filesystem::path& path, const NetworkSpec& spec) {
    validate(spec);
    const auto bytes = read_file(path);
    std::vector<std::size_t> offsets;
    auto tensors = decode_with_offsets(bytes, &offsets);

    Network net{spec, std::vector<LayerParams>(spec.layers.size())};
    std::size_t next = 0;
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        if (!has_params(spec.layers[i])) continue;
        auto [wshape, bshape] = param_shapes(spec.layers[i]);
        for (int part = 0; part < 2; ++part) {
            const Shape& want = part == 0 ? wshape : bshape;
            if (next >= tensors.size()) {
                throw FormatError("checkpoint has " + std::to_string(tensors.size()) +
                                      " tensors, network needs more",
                                  bytes.size());
            }
            if (tensors[next].shape() != want) {
                throw FormatError("tensor " + std::to_string(next) + " at byte " +
                                      std::to_string(offsets[next]) + " has shape " +
                                      shape_string(tensors[next].shape()) + ", layer " +
                                      std::to_string(i) + " needs " + shape_string(want),
                                  offsets[next]);
            }
            (part == 0 ? net.params[i].weight : net.params[i].bias) = std::move(tensors[next]);
            ++next;
        }
    }
    if (next != tensors.size()) {
        throw FormatError("checkpoint has " + std::to_string(tensors.size() - next) +
                              " unused tensors starting at byte " + std::to_string(offsets[next]),
                          offsets[next]);
    }
    return net;
}

}  // namespace mixcon
