#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <bham/errors.hpp>
#include <bham/simulation.hpp>

#include <cmath>

using namespace bham;

TEST_CASE("generating functions")
{
    double eta = 0.0;
    for (int j = 1; j <= 4; ++j) eta += sim_bai_component(j, 0.0);
    CHECK(eta == doctest::Approx(-5.010332).epsilon(1e-6));
    CHECK(sim_bai_component(3, 1.5) == doctest::Approx(6.0));
    CHECK(sim_bai_component(5, 2.0) == 0.0);
}

TEST_CASE("shape, names and determinism")
{
    auto a = sim_bai(50, 12, Family::binomial, 3);
    CHECK(a.x.rows() == 50);
    CHECK(a.x.cols() == 12);
    CHECK(a.y.size() == 50);
    auto df = a.data();
    auto names = df.names();
    REQUIRE(names.size() == 13);
    CHECK(names.front() == "x1");
    CHECK(names[11] == "x12");
    CHECK(names.back() == "y");
    for (double v : a.y) CHECK((v == 0.0 || v == 1.0));

    auto b = sim_bai(50, 12, Family::binomial, 3);
    CHECK(a.x == b.x);
    CHECK(a.y == b.y);
    CHECK(a.eta == b.eta);
    auto c = sim_bai(50, 12, Family::binomial, 4);
    CHECK(c.x != a.x);

    for (int i = 0; i < 50; ++i) {
        double eta = 0.0;
        for (int j = 0; j < 4; ++j) eta += sim_bai_component(j + 1, a.x(i, j));
        CHECK(a.eta[i] == eta);
    }

    auto pois = sim_bai(200, 4, Family::poisson, 1);
    for (double v : pois.y) CHECK((v >= 0 && v == std::floor(v)));
    auto gau = sim_bai(200, 4, Family::gaussian, 1);
    CHECK(std::isfinite(gau.y[0]));

    CHECK_THROWS_AS(sim_bai(10, 3, Family::gaussian, 1), DomainError);
    CHECK_THROWS_AS(sim_bai(10, 5, Family::cox, 1), DomainError);
}

TEST_CASE("null predictors do not enter eta")
{
    auto a = sim_bai(100, 8, Family::gaussian, 2);
    Eigen::MatrixXd perm = a.x;
    perm.col(4).swap(perm.col(7));
    perm.col(5).reverseInPlace();
    for (int i = 0; i < 100; ++i) {
        double eta = 0.0;
        for (int j = 0; j < 4; ++j) eta += sim_bai_component(j + 1, perm(i, j));
        CHECK(eta == a.eta[i]);
    }
}

TEST_CASE("marginal moments and binomial calibration")
{
    const int n = 100000;
    auto s = sim_bai(n, 5, Family::binomial, 17);
    for (int j = 0; j < 5; ++j) {
        const double m = s.x.col(j).mean();
        const double sd = std::sqrt((s.x.col(j).array() - m).square().sum() / (n - 1));
        CHECK(std::abs(m) < 5.0 / std::sqrt(double(n)));
        CHECK(std::abs(sd - 1.0) < 5.0 * std::sqrt(0.5 / n));
    }
    // bins of width 0.5 on eta in [-4, 2]
    for (double lo = -4.0; lo < 2.0; lo += 0.5) {
        double sum_y = 0, sum_p = 0;
        int count = 0;
        for (int i = 0; i < n; ++i) {
            if (s.eta[i] < lo || s.eta[i] >= lo + 0.5) continue;
            sum_y += s.y[i];
            sum_p += 1.0 / (1.0 + std::exp(-s.eta[i]));
            ++count;
        }
        if (count < 200) continue;
        const double p = sum_p / count;
        const double se = std::sqrt(p * (1 - p) / count);
        CAPTURE(lo);
        CHECK(std::abs(sum_y / count - p) < 5 * se);
    }
}
