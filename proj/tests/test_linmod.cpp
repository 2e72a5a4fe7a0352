#include <doctest.h>

#include "metamob/linmod.hpp"
#include "metamob/simgen.hpp"

#include <algorithm>
#include <numeric>
#include <random>

using namespace metamob;

TEST_CASE("zero response gives a zero fit") {
    VectorXd y = VectorXd::Zero(10);
    VectorXi trt(10);
    for (int i = 0; i < 10; ++i) trt[i] = i % 2;
    const NodeFit fit = fit_node(y, trt);
    CHECK(fit.gamma_hat == 0.0);
    CHECK(fit.theta_hat == 0.0);
    CHECK(fit.rss == 0.0);
    CHECK(objective(fit) == 0.0);
}

TEST_CASE("six-observation hand oracle") {
    VectorXd y(6);
    y << 1, 2, 3, 4, 5, 6;
    VectorXi trt(6);
    trt << 0, 0, 0, 1, 1, 1;
    const NodeFit fit = fit_node(y, trt);
    CHECK(fit.gamma_hat == doctest::Approx(2.0));
    CHECK(fit.theta_hat == doctest::Approx(3.0));
    CHECK(fit.rss == doctest::Approx(4.0)); // residuals (-1,0,1,-1,0,1)
    // score columns sum to zero at the fitted parameters
    CHECK(std::abs(fit.scores.col(0).sum()) < 1e-10);
    CHECK(std::abs(fit.scores.col(1).sum()) < 1e-10);
}

TEST_CASE("single-arm node is degenerate") {
    VectorXd y = VectorXd::Ones(4);
    VectorXi trt = VectorXi::Ones(4);
    CHECK_THROWS_AS(fit_node(y, trt), DegenerateNodeError);
}

TEST_CASE("large sample converges to the generating node effects") {
    // node 4 of the generating tree: gamma 42.5, theta 5, sd-5 noise
    std::mt19937_64 rng(99);
    std::normal_distribution<double> gauss(0.0, kResidualSd);
    std::bernoulli_distribution coin(0.5);
    const int n = 200000;
    VectorXd y(n);
    VectorXi trt(n);
    for (int i = 0; i < n; ++i) {
        trt[i] = coin(rng) ? 1 : 0;
        y[i] = 42.5 + 5.0 * trt[i] + gauss(rng);
    }
    const NodeFit fit = fit_node(y, trt);
    CHECK(fit.gamma_hat == doctest::Approx(42.5).epsilon(0.002));
    CHECK(fit.theta_hat == doctest::Approx(5.0).epsilon(0.02));
}

TEST_CASE("fit is invariant to permutation of observations") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> gauss;
    const int n = 50;
    VectorXd y(n);
    VectorXi trt(n);
    for (int i = 0; i < n; ++i) {
        y[i] = gauss(rng);
        trt[i] = i % 2;
    }
    const NodeFit a = fit_node(y, trt);

    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    VectorXd yp(n);
    VectorXi tp(n);
    for (int i = 0; i < n; ++i) {
        yp[i] = y[perm[static_cast<size_t>(i)]];
        tp[i] = trt[perm[static_cast<size_t>(i)]];
    }
    const NodeFit b = fit_node(yp, tp);
    CHECK(a.gamma_hat == doctest::Approx(b.gamma_hat).epsilon(1e-12));
    CHECK(a.theta_hat == doctest::Approx(b.theta_hat).epsilon(1e-12));
    CHECK(a.rss == doctest::Approx(b.rss).epsilon(1e-12));
}
