#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "helpers.hpp"
#include "mixcon/error.hpp"
#include "mixcon/losses.hpp"

using namespace mixcon;
using testing::numeric_grad;
using testing::random_tensor;
using testing::relative_error;

namespace {

// Direct transcription of the consistency sum: ranks i < p, ordered class
// pairs (c1 != c2), clamped squared distance.
double brute_mixcon(const Tensor& H, const std::vector<std::size_t>& labels, double beta, double eps) {
    std::vector<std::size_t> order;
    std::map<std::size_t, std::vector<std::size_t>> members;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (members[labels[i]].empty()) order.push_back(labels[i]);
        members[labels[i]].push_back(i);
    }
    if (order.size() < 2) return 0.0;
    std::size_t p = labels.size();
    for (auto c : order) p = std::min(p, members[c].size());
    double total = 0.0;
    for (std::size_t i = 0; i < p; ++i) {
        for (auto c1 : order) {
            for (auto c2 : order) {
                if (c1 == c2) continue;
                double d = 0.0;
                for (std::size_t k = 0; k < H.row_size(); ++k) {
                    const double diff = H.at(members[c1][i], k) - H.at(members[c2][i], k);
                    d += diff * diff;
                }
                d = std::clamp(d, eps, 1.0 / eps);
                total += d + beta / d;
            }
        }
    }
    const double C = double(order.size());
    return total / (double(p) * C * (C - 1.0));
}

std::vector<std::size_t> random_labels(std::size_t n, std::size_t classes, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<std::size_t> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = i < classes ? i : rng.below(classes);
    std::vector<std::size_t> shuffled(n);
    const auto perm = rng.permutation(n);
    for (std::size_t i = 0; i < n; ++i) shuffled[i] = out[perm[i]];
    return shuffled;
}

}  // namespace

TEST_CASE("cross entropy examples") {
    const Tensor y = Tensor::matrix({{1, 0}});
    CHECK(cross_entropy(Tensor::matrix({{0, 0}}), y).value == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(cross_entropy(Tensor::matrix({{60, -60}}), y).value < 1e-40);
    CHECK(cross_entropy(Tensor::matrix({{1000, -1000}}), y).value == 0.0);
    CHECK(std::isfinite(cross_entropy(Tensor::matrix({{-1000, 1000}}), y).value));
    CHECK_THROWS_AS(cross_entropy(Tensor::matrix({{0, 0}}), Tensor::matrix({{0.5, 0.5}})), ContractError);
    CHECK_THROWS_AS(cross_entropy(Tensor::matrix({{0, 0}}), Tensor::matrix({{1, 1}})), ContractError);
    CHECK_THROWS_AS(cross_entropy(Tensor::matrix({{0, 0, 0}}), y), ShapeError);

    // Sum versus mean.
    const Tensor s = random_tensor({4, 3}, 1);
    const std::vector<std::size_t> labels{0, 2, 1, 1};
    const auto sum = cross_entropy(s, labels, Reduction::Sum);
    const auto mean = cross_entropy(s, labels, Reduction::Mean);
    CHECK(mean.value == doctest::Approx(sum.value / 4.0).epsilon(1e-14));
    CHECK(cross_entropy(s, one_hot(labels, 3)).value == sum.value);
}

TEST_CASE("cross entropy gradient on 20 instances") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const Tensor s = random_tensor({4, 3}, seed, 2.0);
        const auto labels = random_labels(4, 3, seed);
        for (auto red : {Reduction::Sum, Reduction::Mean}) {
            const auto lv = cross_entropy(s, labels, red);
            const Tensor num = numeric_grad([&](const Tensor& t) { return cross_entropy(t, labels, red).value; }, s);
            CHECK(relative_error(lv.grad, num) < 1e-4);
        }
    }
}

TEST_CASE("normalize features") {
    const Tensor h = Tensor::matrix({{3, 4}, {0, 0}, {0.6, 0.8}});
    const Tensor n = normalize_features(h);
    CHECK(n.at(0, 0) == doctest::Approx(0.6).epsilon(1e-15));
    CHECK(n.at(0, 1) == doctest::Approx(0.8).epsilon(1e-15));
    CHECK(n.at(1, 0) == 0.0);
    CHECK(n.at(1, 1) == 0.0);
    CHECK(n.at(2, 0) == doctest::Approx(0.6).epsilon(1e-15));

    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const Tensor x = random_tensor({5, 3}, seed);
        const Tensor g = random_tensor({5, 3}, seed + 100);
        const Tensor vjp = normalize_features_vjp(x, g);
        const Tensor num = numeric_grad([&](const Tensor& t) { return testing::inner(g, normalize_features(t)); }, x);
        CHECK(relative_error(vjp, num) < 1e-4);
    }
}

TEST_CASE("mixcon examples") {
    const std::vector<std::size_t> two{0, 1};
    const auto r = mixcon_loss(Tensor::matrix({{1, 0}, {0, 1}}), two, MixConParams{0.1, 0.01, 1e-6});
    CHECK(r.loss.value == doctest::Approx(2.005).epsilon(1e-14));
    CHECK(r.pairs.size() == 1);
    CHECK(r.loss.value == doctest::Approx(brute_mixcon(Tensor::matrix({{1, 0}, {0, 1}}), two, 0.01, 1e-6)));

    const auto same = mixcon_loss(Tensor::matrix({{0.3, 0.4}, {0.3, 0.4}}), two, MixConParams{0.1, 0.0, 1e-6});
    CHECK(same.loss.value == doctest::Approx(1e-6).epsilon(1e-12));
    CHECK(same.loss.grad == Tensor({2, 2}, 0.0));

    const std::vector<std::size_t> one{1, 1, 1};
    const auto single = mixcon_loss(random_tensor({3, 2}, 1), one, MixConParams{});
    CHECK(single.loss.value == 0.0);
    CHECK(single.pairs.empty());

    CHECK(combined_objective(0.5, 2.005, 0.1) == doctest::Approx(0.7005).epsilon(1e-15));
    CHECK(combined_objective(1.0, 1.0, 1.0) == 2.0);
    CHECK(combined_objective(0.37, 123.0, 0.0) == 0.37);

    CHECK_THROWS_AS(validate(MixConParams{0.1, 0.01, 1.0}), ConfigError);
    CHECK_THROWS_AS(validate(MixConParams{-0.1, 0.01, 1e-6}), ConfigError);
    CHECK_THROWS_AS(validate(MixConParams{0.1, -0.01, 1e-6}), ConfigError);
}

TEST_CASE("mixcon pairs follow rank within class order of appearance") {
    const std::vector<std::size_t> labels{2, 0, 0, 2, 1, 0, 1};
    const auto r = mixcon_loss(random_tensor({7, 2}, 3), labels, MixConParams{});
    // Classes in appearance order: 2 -> {0, 3}, 0 -> {1, 2, 5}, 1 -> {4, 6}; p = 2.
    const PairSet want{{0, 1}, {0, 4}, {1, 4}, {3, 2}, {3, 6}, {2, 6}};
    PairSet got = r.pairs;
    PairSet w = want;
    std::sort(got.begin(), got.end());
    std::sort(w.begin(), w.end());
    CHECK(got == w);
}

TEST_CASE("mixcon matches brute force and finite differences on 20 instances") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        CAPTURE(seed);
        const std::size_t classes = 2 + seed % 3;
        const auto labels = random_labels(9, classes, seed);
        const Tensor H = random_tensor({9, 3}, 50 + seed);
        const MixConParams mp{0.1, 0.01 * double(seed % 4), 1e-6};
        const auto r = mixcon_loss(H, labels, mp);
        CHECK(r.loss.value == doctest::Approx(brute_mixcon(H, labels, mp.beta, mp.eps)).epsilon(1e-12));
        const Tensor num =
            numeric_grad([&](const Tensor& t) { return mixcon_loss(t, labels, mp).loss.value; }, H);
        CHECK(relative_error(r.loss.grad, num) < 1e-4);
    }
}

TEST_CASE("mixcon clamp gives zero gradient outside the range") {
    const std::vector<std::size_t> labels{0, 1};
    // Squared distance 1e-8 < eps and 4e6 > 1/eps.
    const auto lo = mixcon_loss(Tensor::matrix({{0, 0}, {1e-4, 0}}), labels, MixConParams{0.1, 0.01, 1e-6});
    CHECK(lo.loss.grad == Tensor({2, 2}, 0.0));
    CHECK(lo.loss.value == doctest::Approx(1e-6 + 0.01 / 1e-6));
    const auto hi = mixcon_loss(Tensor::matrix({{0, 0}, {2000, 0}}), labels, MixConParams{0.1, 0.01, 1e-6});
    CHECK(hi.loss.grad == Tensor({2, 2}, 0.0));
    CHECK(hi.loss.value == doctest::Approx(1e6 + 0.01 / 1e6));
}

TEST_CASE("mixcon AM-GM floor, argmin and symmetry") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const double beta = 0.001 * double(seed + 1);
        const auto labels = random_labels(10, 3, seed);
        const auto r = mixcon_loss(random_tensor({10, 4}, seed), labels, MixConParams{0.1, beta, 1e-6});
        CHECK(r.loss.value >= 2.0 * std::sqrt(beta) - 1e-12);
    }

    // Two classes whose paired features sit at squared distance sqrt(beta).
    const double beta = 0.04;
    const double d = std::sqrt(std::sqrt(beta));
    const Tensor H = Tensor::matrix({{0, 0}, {d, 0}, {5, 1}, {5 + d, 1}});
    const std::vector<std::size_t> labels{0, 1, 0, 1};
    CHECK(std::abs(mixcon_loss(H, labels, MixConParams{0.1, beta, 1e-6}).loss.value - 2.0 * std::sqrt(beta)) <
          1e-9);

    // Swapping ranks 0 and 1 in both classes leaves the value unchanged.
    const Tensor A = random_tensor({6, 3}, 4);
    const std::vector<std::size_t> la{0, 1, 0, 1, 0, 1};
    const std::vector<std::size_t> perm{2, 3, 0, 1, 4, 5};
    const Tensor B = A.gather_rows(perm);
    CHECK(mixcon_loss(A, la, MixConParams{}).loss.value ==
          doctest::Approx(mixcon_loss(B, la, MixConParams{}).loss.value).epsilon(1e-15));
}

TEST_CASE("mixcon pluggable penalty") {
    struct Quadratic final : PairPenalty {
        double value(double d) const override { return d * d; }
        double derivative(double d) const override { return 2.0 * d; }
    };
    const Tensor H = random_tensor({4, 2}, 2);
    const std::vector<std::size_t> labels{0, 1, 1, 0};
    const auto r = mixcon_loss(H, labels, 1e-6, Quadratic{});
    const Tensor num = numeric_grad([&](const Tensor& t) { return mixcon_loss(t, labels, 1e-6, Quadratic{}).loss.value; }, H);
    CHECK(relative_error(r.loss.grad, num) < 1e-4);
    CHECK(mixcon_loss(H, labels, 1e-6, InverseBalancePenalty(0.01)).loss.value ==
          mixcon_loss(H, labels, MixConParams{0.1, 0.01, 1e-6}).loss.value);
}

TEST_CASE("unicon") {
    const std::vector<std::size_t> one{0, 0};
    CHECK(unicon_loss(Tensor::matrix({{1, 2}, {1, 2}}), one).value == 0.0);
    CHECK(unicon_loss(Tensor::matrix({{1, 0}, {0, 1}}), one).value == doctest::Approx(2.0).epsilon(1e-15));
    const std::vector<std::size_t> singles{0, 1, 2};
    CHECK(unicon_loss(random_tensor({3, 2}, 1), singles).value == 0.0);

    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto labels = random_labels(6, 2, seed);
        const Tensor H = random_tensor({6, 3}, seed);
        const auto r = unicon_loss(H, labels);
        const Tensor num = numeric_grad([&](const Tensor& t) { return unicon_loss(t, labels).value; }, H);
        CHECK(relative_error(r.grad, num) < 1e-4);
    }
}
