#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "helpers.hpp"
#include "mixcon/error.hpp"
#include "mixcon/metrics.hpp"

using namespace mixcon;
using testing::random_tensor;

namespace {

// SSIM with one window covering the whole image and uniform weights.
double global_ssim(const Tensor& a, const Tensor& b) {
    const double n = double(a.size());
    double ma = 0, mb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i] / n;
        mb += b[i] / n;
    }
    double va = 0, vb = 0, cov = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        va += (a[i] - ma) * (a[i] - ma) / n;
        vb += (b[i] - mb) * (b[i] - mb) / n;
        cov += (a[i] - ma) * (b[i] - mb) / n;
    }
    const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
    return ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
}

Tensor random_image(Shape shape, std::uint64_t seed) {
    Tensor t(std::move(shape));
    Rng rng(seed);
    for (double& v : t.data()) v = rng.uniform01();
    return t;
}

}  // namespace

TEST_CASE("mse and mcs") {
    const Tensor x = Tensor::vector({0, 0});
    CHECK(mse(x, x) == 0.0);
    CHECK(mse(x, Tensor::vector({2, 0})) == 2.0);
    CHECK_THROWS_AS(mse(x, Tensor::vector({1, 2, 3})), ContractError);
    CHECK(mse(random_tensor({5}, 1), random_tensor({5}, 2)) > 0.0);

    const Tensor v = Tensor::vector({1, 2, 3});
    CHECK(mcs(v, v) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(mcs(Tensor::vector({1, 0}), Tensor::vector({0, 3})) == 0.0);
    CHECK(mcs(Tensor::vector({1, 0}), Tensor::vector({-2, 0})) == doctest::Approx(-1.0));
    CHECK(mcs(Tensor::vector({0, 0}), v.reshaped({3}).slice_rows(0, 2)) == 0.0);
}

TEST_CASE("ssim") {
    const Tensor img = random_image({1, 28, 28}, 3);
    CHECK(ssim(img, img) == 1.0);
    const Tensor other = random_image({1, 28, 28}, 4);
    CHECK(std::abs(ssim(img, other) - ssim(other, img)) < 1e-12);
    CHECK(ssim(img, other) < 0.6);

    // Binary image against its complement, smaller than the window.
    Tensor bin({1, 6, 6});
    for (std::size_t i = 0; i < bin.size(); ++i) bin[i] = (i * 7 % 3 == 0) ? 1.0 : 0.0;
    Tensor inv = bin;
    for (double& v : inv.data()) v = 1.0 - v;
    const double raw = ssim_raw(bin, inv);
    CHECK(raw == doctest::Approx(global_ssim(bin, inv)).epsilon(1e-12));
    CHECK(raw < 0.0);
    CHECK(ssim(bin, inv) < 0.5);
    CHECK(ssim(bin, inv) == doctest::Approx((raw + 1.0) / 2.0));

    // A constant shift lowers similarity but stays well above the complement.
    Tensor dim = img;
    for (double& v : dim.data()) v *= 0.9;
    CHECK(ssim(img, dim) < 1.0);
    CHECK(ssim(img, dim) > 0.9);

    // Multi-channel averages the channels.
    const Tensor c3 = random_image({3, 12, 12}, 5);
    CHECK(ssim(c3, c3) == 1.0);
    CHECK_THROWS_AS(ssim(c3, img), ContractError);
}

TEST_CASE("separability") {
    const Tensor H = Tensor::matrix({{0, 0}, {3, 4}, {0, 1}});
    const auto s = separability(H);
    CHECK(s.delta_h == 1.0);
    CHECK_FALSE(s.delta_H.has_value());
    CHECK(s.max_pair == 5.0);
    CHECK(s.mean_pair == doctest::Approx((5.0 + 1.0 + std::sqrt(18.0)) / 3.0));
    CHECK(separability(Tensor::matrix({{1, 2}, {1, 2}, {0, 0}})).delta_h == 0.0);
    CHECK_THROWS_AS(separability(Tensor::matrix({{1, 2}})), ContractError);

    const PairSet pairs{{0, 1}, {1, 2}};
    CHECK(*separability(H, pairs).delta_H == 5.0);

    // Brute force on a random batch, plus permutation and scale behaviour.
    const Tensor R = random_tensor({20, 3}, 9);
    double mn = 1e300, mx = 0, sum = 0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < 20; ++i) {
        for (std::size_t j = i + 1; j < 20; ++j) {
            double d = 0;
            for (std::size_t k = 0; k < 3; ++k) d += (R.at(i, k) - R.at(j, k)) * (R.at(i, k) - R.at(j, k));
            d = std::sqrt(d);
            mn = std::min(mn, d);
            mx = std::max(mx, d);
            sum += d;
            ++count;
        }
    }
    const auto rs = separability(R);
    CHECK(rs.delta_h == mn);
    CHECK(rs.max_pair == mx);
    CHECK(rs.mean_pair == doctest::Approx(sum / double(count)).epsilon(1e-14));
    CHECK(rs.delta_h <= rs.mean_pair);
    CHECK(rs.mean_pair <= rs.max_pair);

    std::vector<std::size_t> rev(20);
    for (std::size_t i = 0; i < 20; ++i) rev[i] = 19 - i;
    CHECK(separability(R.gather_rows(rev)).delta_h == rs.delta_h);
    Tensor scaled = R;
    scaled *= 3.0;
    CHECK(separability(scaled).delta_h == doctest::Approx(3.0 * rs.delta_h).epsilon(1e-14));

    const std::vector<std::size_t> labels{0, 1, 0};
    CHECK(mean_cross_class_distance(H, labels) == doctest::Approx((5.0 + std::sqrt(18.0)) / 2.0));
}

TEST_CASE("aggregate") {
    const std::vector<double> one{0.3};
    const auto r1 = aggregate(one, "ssim");
    CHECK(r1.std == 0.0);
    CHECK(r1.worst == r1.mean);
    const std::vector<double> two{0.0, 1.0};
    const auto r2 = aggregate(two, "ssim");
    CHECK(r2.mean == 0.5);
    CHECK(r2.worst == 1.0);
    CHECK(r2.std == 0.5);
    CHECK(r2.count == 2);
    CHECK(aggregate(two, "mse", false).worst == 0.0);
    CHECK_THROWS_AS(aggregate(std::vector<double>{}, "ssim"), ContractError);

    Rng rng(1);
    std::vector<double> many(500);
    for (double& v : many) v = rng.normal(0.4, 0.2);
    const auto rep = aggregate(many, "mcs");
    double mean = 0;
    for (double v : many) mean += v;
    mean /= 500.0;
    double var = 0;
    for (double v : many) var += (v - mean) * (v - mean);
    CHECK(std::abs(rep.mean - mean) < 1e-12);
    CHECK(std::abs(rep.std - std::sqrt(var / 500.0)) < 1e-12);
    CHECK(rep.worst >= rep.mean - 5 * rep.std);

    const std::vector<RecoveryPair> pairs{{Tensor::vector({1, 0}), Tensor::vector({1, 0})},
                                          {Tensor::vector({1, 0}), Tensor::vector({0, 1})}};
    const auto mcsr = aggregate(pairs, Metric::MCS);
    CHECK(mcsr.metric == "mcs");
    CHECK(mcsr.mean == 0.5);
    CHECK(mcsr.worst == 1.0);
    CHECK(per_sample(pairs, Metric::MSE) == std::vector<double>{0.0, 1.0});
    CHECK(aggregate(pairs, Metric::MSE).worst == 0.0);
}
