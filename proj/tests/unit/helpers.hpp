#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>

#include "mixcon/rng.hpp"
#include "mixcon/tensor.hpp"

namespace testing {

// Independent MT19937-64 written from the reference algorithm (Matsumoto &
// Nishimura 2004), used to check that Rng draws from the documented stream.
class ReferenceMt64 {
public:
    explicit ReferenceMt64(std::uint64_t seed) {
        mt_[0] = seed;
        for (index_ = 1; index_ < kN; ++index_) {
            mt_[index_] = 6364136223846793005ULL * (mt_[index_ - 1] ^ (mt_[index_ - 1] >> 62)) + index_;
        }
    }

    std::uint64_t next() {
        if (index_ >= kN) twist();
        std::uint64_t x = mt_[index_++];
        x ^= (x >> 29) & 0x5555555555555555ULL;
        x ^= (x << 17) & 0x71D67FFFEDA60000ULL;
        x ^= (x << 37) & 0xFFF7EEE000000000ULL;
        x ^= x >> 43;
        return x;
    }

private:
    static constexpr std::size_t kN = 312, kM = 156;
    static constexpr std::uint64_t kUpper = 0xFFFFFFFF80000000ULL, kLower = 0x7FFFFFFFULL;

    void twist() {
        for (std::size_t i = 0; i < kN; ++i) {
            const std::uint64_t x = (mt_[i] & kUpper) | (mt_[(i + 1) % kN] & kLower);
            std::uint64_t xa = x >> 1;
            if (x & 1) xa ^= 0xB5026F5AA96619E9ULL;
            mt_[i] = mt_[(i + kM) % kN] ^ xa;
        }
        index_ = 0;
    }

    std::array<std::uint64_t, kN> mt_{};
    std::size_t index_ = 0;
};

/// Box-Muller on the reference stream, mirroring Rng::normal.
class ReferenceNormal {
public:
    explicit ReferenceNormal(std::uint64_t seed) : mt_(seed) {}

    double uniform01() { return double(mt_.next() >> 11) * 0x1.0p-53; }

    double next(double mean, double stddev) {
        if (has_spare_) {
            has_spare_ = false;
            return mean + stddev * spare_;
        }
        const double u1 = 1.0 - uniform01();
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
        has_spare_ = true;
        return mean + stddev * r * std::cos(2.0 * std::numbers::pi * u2);
    }

private:
    ReferenceMt64 mt_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

inline mixcon::Tensor random_tensor(mixcon::Shape shape, std::uint64_t seed, double scale = 1.0) {
    mixcon::Tensor t(std::move(shape));
    mixcon::Rng rng(seed);
    for (double& v : t.data()) v = rng.normal(0.0, scale);
    return t;
}

/// Central differences of f at x with step h.
inline mixcon::Tensor numeric_grad(const std::function<double(const mixcon::Tensor&)>& f, const mixcon::Tensor& x,
                                   double h = 1e-5) {
    mixcon::Tensor g(x.shape());
    mixcon::Tensor probe = x;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double saved = probe[i];
        probe[i] = saved + h;
        const double up = f(probe);
        probe[i] = saved - h;
        const double down = f(probe);
        probe[i] = saved;
        g[i] = (up - down) / (2.0 * h);
    }
    return g;
}

/// |a - b| / max(|a|, |b|) over the whole vector; 0 when both vanish.
inline double relative_error(const mixcon::Tensor& a, const mixcon::Tensor& b) {
    double diff = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        diff += (a[i] - b[i]) * (a[i] - b[i]);
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    const double scale = std::sqrt(std::max(na, nb));
    return scale == 0.0 ? 0.0 : std::sqrt(diff) / scale;
}

/// <a, b> as a scalar probe for vector-valued maps.
inline double inner(const mixcon::Tensor& a, const mixcon::Tensor& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& name)
        : path_(std::filesystem::temp_directory_path() / ("mixcon_test_" + name)) {
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& leaf) const { return path_ / leaf; }

private:
    std::filesystem::path path_;
};

}  // namespace testing
