#include <doctest.h>

#include <atomic>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "fourns/errors.hpp"
#include "fourns/measure.hpp"
#include "oracles.hpp"

using namespace fourns;

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

}  // namespace

TEST_SUITE("measure") {
  TEST_CASE("sampler moments") {
    const double s = 0.35;
    GaussianSampler sampler(s, 4, 61);
    const int K = 10000;
    std::vector<double> sq(9, 0.0);
    std::vector<cplx> first(9), pseudo(9);
    for (int k = 0; k < K; ++k) {
      const auto u = sampler.sample(static_cast<std::uint64_t>(k));
      for (int n = -4; n <= 4; ++n) {
        const auto i = static_cast<std::size_t>(n + 4);
        sq[i] += std::norm(u[n]);
        first[i] += u[n];
        pseudo[i] += u[n] * u[n];
      }
    }
    for (int n = -4; n <= 4; ++n) {
      const auto i = static_cast<std::size_t>(n + 4);
      const double var = oracle::japanese(n, -2.0 * s);
      // |u_n|^2 is exponential with mean var, so its standard error is var / sqrt(K)
      CHECK(std::abs(sq[i] / K - var) <= 4.0 * var / std::sqrt(K));
      CHECK(std::abs(first[i] / double(K)) <= 4.0 * std::sqrt(var / K));
      CHECK(std::abs(pseudo[i] / double(K)) <= 4.0 * var / std::sqrt(K));
    }
  }

  TEST_CASE("sobolev square expectation") {
    const double s = 0.35, sigma = -0.16;
    GaussianSampler sampler(s, 6, 62);
    const int K = 4000;
    double sum = 0.0, sum2 = 0.0;
    for (int k = 0; k < K; ++k) {
      const double x = std::pow(sobolev_norm(sampler.sample(static_cast<std::uint64_t>(k)), sigma), 2);
      sum += x;
      sum2 += x * x;
    }
    const double mean = sum / K;
    const double se = std::sqrt((sum2 / K - mean * mean) / K);
    CHECK(std::abs(mean - expected_sobolev_square(s, sigma, 6)) <= 4.0 * se);
  }

  TEST_CASE("sampler is reproducible") {
    GaussianSampler a(0.35, 5, 63), b(0.35, 5, 63), c(0.35, 5, 64);
    CHECK(oracle::rel_diff(a.sample(7).modes(), b.sample(7).modes()) == 0.0);
    CHECK(oracle::rel_diff(a.sample(7).modes(), c.sample(7).modes()) > 0.0);
    const auto first = a.next();
    const auto second = sample_mu_s(a);
    CHECK(oracle::rel_diff(first.modes(), b.sample(0).modes()) == 0.0);
    CHECK(oracle::rel_diff(second.modes(), b.sample(1).modes()) == 0.0);
    CHECK_THROWS_AS(GaussianSampler(0.35, -1, 1), ValidationError);
  }

  TEST_CASE("estimates from log-weights") {
    const std::vector<double> zeros{0.0, 0.0, 0.0};
    auto e = estimate_from_logs(zeros);
    CHECK(e.mean == 1.0);
    CHECK(e.std_err == 0.0);
    CHECK_FALSE(e.flagged);

    const std::vector<double> none{kNegInf, kNegInf};
    e = estimate_from_logs(none);
    CHECK(e.flagged);
    CHECK(e.mean == 0.0);
    CHECK(std::isinf(e.std_err));

    const std::vector<double> mixed{std::log(2.0), kNegInf, std::log(4.0), kNegInf};
    e = estimate_from_logs(mixed);
    CHECK(e.mean == doctest::Approx(1.5));
    CHECK(e.std_err == doctest::Approx(std::sqrt((0.25 + 2.25 + 6.25 + 2.25) / 3.0 / 4.0)));

    const std::vector<double> huge{800.0, 801.0};
    e = estimate_from_logs(huge);
    CHECK(e.log_space);
    CHECK(e.mean == doctest::Approx(800.0 + std::log((1.0 + std::exp(1.0)) / 2.0)));

    const std::vector<double> one{0.0};
    CHECK_THROWS_AS(estimate_from_logs(one), ValidationError);
    const std::vector<double> bad{0.0, std::nan("")};
    CHECK_THROWS_AS(estimate_from_logs(bad), NumericalGuardError);
  }

  TEST_CASE("separation in standard errors") {
    McEstimate a{.mean = 1.0, .std_err = 0.3};
    McEstimate b{.mean = 1.5, .std_err = 0.4};
    CHECK(separation_in_sigmas(a, b) == doctest::Approx(1.0));
    CHECK(separation_in_sigmas(a, a) == 0.0);
  }

  TEST_CASE("sobolev ball membership") {
    const auto u = FourierState::single_mode(3, 1, {1.0, 0.0});
    SobolevBall ball{0.0, 1.0, std::nullopt};
    CHECK(ball.contains(u));
    CHECK_FALSE(ball.contains(u.scaled(1.01)));
    ball.center = FourierState::single_mode(2, 1, {1.0, 0.0});
    ball.radius = 0.05;
    CHECK(ball.contains(u.scaled(1.01)));
    CHECK_FALSE(ball.contains(FourierState(3)));
  }

  TEST_CASE("weighted measure edge cases") {
    GaussianSampler sampler(0.35, 3, 65);
    McOptions opt{.J = 0, .s = 0.35, .N = 2, .n_samples = 200};
    auto e = mc_weighted_measure([](const FourierState&) { return true; }, sampler, opt);
    CHECK(e.mean == 1.0);
    CHECK(e.std_err == 0.0);
    e = mc_weighted_measure([](const FourierState&) { return false; }, sampler, opt);
    CHECK(e.flagged);
    CHECK(e.mean == 0.0);
    opt.n_samples = 50;
    CHECK_THROWS_AS(mc_weighted_measure([](const FourierState&) { return true; }, sampler, opt), ValidationError);
  }

  TEST_CASE("worker count does not change the estimate") {
    GaussianSampler sampler(0.35, 3, 66);
    SobolevBall ball{-0.16, 2.0, std::nullopt};
    const SetPredicate A = [&](const FourierState& u) { return ball.contains(u); };
    McOptions opt{.J = 1, .s = 0.35, .N = 2, .n_samples = 300};
    const auto one = mc_weighted_measure(A, sampler, opt);
    opt.workers = 3;
    const auto three = mc_weighted_measure(A, sampler, opt);
    CHECK(one.mean == three.mean);
    CHECK(one.std_err == three.std_err);
  }

  TEST_CASE("change of variable is exact at time zero") {
    GaussianSampler sampler(0.35, 3, 67);
    SobolevBall ball{-0.16, 2.0, std::nullopt};
    const SetPredicate A = [&](const FourierState& u) { return ball.contains(u); };
    McOptions opt{.J = 2, .s = 0.35, .N = 2, .n_samples = 200};
    const auto r = change_of_variable_check(A, sampler, 0.0, opt);
    CHECK(r.lhs.mean == r.rhs.mean);
    CHECK(r.lhs.std_err == r.rhs.std_err);
    CHECK(r.sigmas == 0.0);
    opt.N = 9;
    CHECK_THROWS_AS(change_of_variable_check(A, sampler, 0.0, opt), ValidationError);
  }

  TEST_CASE("change of variable in the linear limit") {
    // With N = 0 the flow only rotates phases: the ball, the weight and the
    // Gaussian density are all invariant, so both sides agree per sample.
    GaussianSampler sampler(0.35, 3, 68);
    SobolevBall ball{-0.16, 2.0, std::nullopt};
    const SetPredicate A = [&](const FourierState& u) { return ball.contains(u); };
    McOptions opt{.J = 1, .s = 0.35, .N = 0, .n_samples = 400};
    const auto r = change_of_variable_check(A, sampler, 0.5, opt);
    CHECK(r.lhs.mean == doctest::Approx(r.rhs.mean).epsilon(1e-12));
    CHECK(r.sigmas <= 1e-6);
  }

  TEST_CASE("Gronwall probe at zero delay") {
    GaussianSampler sampler(0.35, 3, 69);
    SobolevBall ball{-0.16, 2.0, std::nullopt};
    const SetPredicate D = [&](const FourierState& u) { return ball.contains(u); };
    McOptions opt{.J = 1, .s = 0.35, .N = 2, .n_samples = 200};
    const double taus[] = {0.0, 0.05, 0.1};
    const auto probe = gronwall_probe(D, sampler, taus, opt);
    REQUIRE(probe.rows.size() == 3);
    const auto direct = mc_weighted_measure(D, sampler, opt);
    CHECK(probe.rows[0].estimate.mean == direct.mean);
    CHECK(std::isfinite(probe.fitted_rate));
    const std::vector<double> empty;
    CHECK_THROWS_AS(gronwall_probe(D, sampler, empty, opt), ValidationError);
    CHECK_THROWS_AS(gronwall_probe([](const FourierState&) { return false; }, sampler, taus, opt),
                    NumericalGuardError);
  }

  TEST_CASE("weight sweep over cutoffs") {
    GaussianSampler sampler(0.35, 4, 70);
    const int Ns[] = {1, 2, 4};
    const auto rows = weight_convergence_sweep(sampler.sample(0), 1, 0.35, Ns);
    REQUIRE(rows.size() == 3);
    for (std::size_t k = 0; k < 3; ++k) {
      CHECK(rows[k].N == Ns[k]);
      CHECK(rows[k].weight == doctest::Approx(std::exp(rows[k].log_weight)));
    }
  }

  TEST_CASE("parallel loop covers every index once") {
    std::vector<std::atomic<int>> hits(97);
    parallel_for(hits.size(), 4, [&](std::size_t k) { hits[k]++; });
    for (const auto& h : hits) CHECK(h.load() == 1);
    CHECK_THROWS_AS(parallel_for(10, 3,
                                 [](std::size_t k) {
                                   if (k == 5) throw std::runtime_error("boom");
                                 }),
                    std::runtime_error);
  }
}
