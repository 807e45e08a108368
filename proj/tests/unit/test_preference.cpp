#include <cmath>
#include <random>

#include <doctest.h>

#include "prefgrid/devices.hpp"
#include "prefgrid/preference.hpp"

using namespace prefgrid;

namespace {

PreferenceMatrix case0_matrix(std::vector<double> kappa) {
    PreferenceMatrix m;
    m.lambda_prime = Eigen::MatrixXd::Constant(8, 8, 0.14);
    m.lambda_prime.diagonal().setConstant(0.02);
    m.lambda_dso_prime.assign(8, 1.0);
    m.kappa = std::move(kappa);
    return m;
}

}  // namespace

TEST_CASE("normalize_row examples") {
    std::vector<double> row(8, 0.14);
    row[0] = 0.02;
    const auto same = normalize_row(row);
    double sum = 0.0;
    for (std::size_t i = 0; i < row.size(); ++i) {
        CHECK(same[i] == doctest::Approx(row[i]).epsilon(1e-12));
        sum += same[i];
    }
    CHECK(std::abs(sum - 1.0) <= 1e-12);

    const auto half = normalize_row({2.0, 2.0});
    CHECK(half[0] == 0.5);
    CHECK(half[1] == 0.5);

    CHECK_THROWS_AS(normalize_row({0.0, 0.0, 0.0}), NormalizationError);
}

TEST_CASE("scale examples") {
    const auto m = case0_matrix({20.0, 100.0});
    const auto h0 = scale(m, 0);
    CHECK(h0.lambda(0, 1) == doctest::Approx(2.8).epsilon(1e-15));
    const auto h1 = scale(m, 1);
    CHECK(h1.lambda_dso[3] == 100.0);
    CHECK_THROWS_AS(scale(m, 2), DomainError);
    CHECK_THROWS_AS(scale(m, -1), DomainError);
}

TEST_CASE("scaled weights follow a time-varying kappa") {
    const std::vector<double> kappa = {20.0, 35.5, 71.25, 100.0};
    const auto m = case0_matrix(kappa);
    const double ratio = scale(m, 0).lambda(2, 5) / kappa[0];
    for (int t = 0; t < 4; ++t) {
        const auto s = scale(m, t);
        CHECK(s.lambda(2, 5) / kappa[static_cast<std::size_t>(t)] == doctest::Approx(ratio).epsilon(1e-14));
        CHECK(s.lambda_dso[2] == kappa[static_cast<std::size_t>(t)]);
    }
}

TEST_CASE("preference_cost examples") {
    const auto lambda = scale(case0_matrix({20.0}), 0);
    CHECK(preference_cost(0, {}, {}, lambda) == 0.0);
    CHECK(preference_cost(0, {{1, 0.0, 0.0}, {-1, 0.0, 0.0}}, {{0.0, 0.0}}, lambda) == 0.0);
    CHECK(preference_cost(0, {{1, 0.1, 0.0}}, {}, lambda) == doctest::Approx(0.28).epsilon(1e-14));
    CHECK_THROWS_AS(preference_cost(0, {{1, -0.1, 0.0}}, {}, lambda), DomainError);
    CHECK_THROWS_AS(preference_cost(0, {}, {{-0.1, 0.0}}, lambda), DomainError);
}

TEST_CASE("split form equals the absolute-value form under complementarity") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> kappa = {20 + 80 * u(rng)};
        PreferenceMatrix m = case0_matrix(kappa);
        for (int r = 0; r < 8; ++r) {
            std::vector<double> raw(8);
            for (auto& w : raw) w = u(rng);
            const auto row = normalize_row(raw);
            for (int c = 0; c < 8; ++c) m.lambda_prime(r, c) = row[static_cast<std::size_t>(c)];
        }
        const auto lambda = scale(m, 0);
        const int owner = static_cast<int>(8 * u(rng)) % 8;
        std::vector<TradeSplitValue> trades;
        for (int p = -1; p < 8; ++p) {
            if (p == owner) continue;
            const double v = u(rng) - 0.5;
            trades.push_back({p, std::max(v, 0.0), std::max(-v, 0.0)});
        }
        std::vector<StorageFlowValue> storage = {{u(rng) * 0.2, 0.0}, {0.0, u(rng) * 0.2}};
        const double split = preference_cost(owner, trades, storage, lambda);
        const double abs_form = preference_cost_abs(owner, trades, storage, lambda);
        CHECK(std::abs(split - abs_form) <= 1e-12);

        // Scaling equivariance in kappa.
        PreferenceMatrix m2 = m;
        m2.kappa[0] *= 3.0;
        CHECK(preference_cost(owner, trades, storage, scale(m2, 0)) == doctest::Approx(3.0 * split).epsilon(1e-13));
    }
}

TEST_CASE("check_preferences flags bad rows") {
    auto m = case0_matrix({60.0});
    std::vector<std::vector<int>> partners(8);
    for (int n = 0; n < 8; ++n)
        for (int k = 0; k < 8; ++k)
            if (k != n) partners[static_cast<std::size_t>(n)].push_back(k);
    CHECK(check_preferences(m, true, partners).empty());
    m.lambda_prime(3, 4) = 0.2;
    CHECK_FALSE(check_preferences(m, true, partners).empty());
    m.lambda_prime(3, 4) = 0.14;
    m.lambda_dso_prime[2] = 0.9;
    CHECK_FALSE(check_preferences(m, true, partners).empty());
}
