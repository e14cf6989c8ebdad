#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "pca/error.hpp"
#include "pca/exact.hpp"

using namespace pca;
using doctest::Approx;

TEST_SUITE("exact") {

TEST_CASE("step examples") {
  const Torus t({5});
  const auto start = ExactDistribution::dirac(t, 0b01101);
  const auto plus = exact_step(start, models::always_plus());
  CHECK(plus.probs[31] == Approx(1.0));

  const auto uni = exact_step(ExactDistribution::uniform(t), models::independent_flip(0, 0.7));
  for (auto p : uni.probs) CHECK(p == Approx(1.0 / 32));

  const double eps = 0.35;
  const Torus four({4});
  const auto st = exact_step(ExactDistribution::dirac(four, 0), models::stavskaya(eps));
  CHECK((st.probs - oracle::product(4, eps)).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("step matches the pair-enumeration oracle") {
  std::mt19937_64 gen(17);
  for (int trial = 0; trial < 10; ++trial) {
    const Torus t({3 + trial % 4});
    const auto rule = oracle::random_rule(gen, {{-1}, {0}, {1}}, 1);
    const auto mu = oracle::random_measure(gen, Eigen::Index{1} << t.size());
    const auto got = exact_step(ExactDistribution{t, mu}, rule);
    const auto want = oracle::exact_step(mu, rule, t);
    CHECK((got.probs - want).cwiseAbs().maxCoeff() < 1e-14);
    CHECK(got.probs.sum() == Approx(1.0));
  }
  // two dimensions
  const Torus sq({3, 3});
  const auto toom = models::toom_nec(0.3);
  const auto mu = oracle::random_measure(gen, Eigen::Index{1} << 9);
  CHECK((exact_step(ExactDistribution{sq, mu}, toom).probs - oracle::exact_step(mu, toom, sq)).cwiseAbs().maxCoeff() <
        1e-14);
}

TEST_CASE("step does not depend on the worker count") {
  const Torus t({10});
  std::mt19937_64 gen(2);
  const ExactDistribution mu{t, oracle::random_measure(gen, 1024)};
  const auto rule = models::noisy_majority3(0.3);
  const auto a = exact_step(mu, rule, 1);
  const auto b = exact_step(mu, rule, 4);
  CHECK(a.probs == b.probs);
}

TEST_CASE("stationary examples") {
  const Torus t({6});
  for (auto [m, rho] : {std::pair{0.1, 0.5}, std::pair{-0.3, 0.6}, std::pair{0.2, -0.4}}) {
    const auto s = exact_stationary(models::independent_flip(m, rho), t);
    const double mean = m / (1 - rho);
    CHECK((s.dist.probs - oracle::product(6, 0.5 * (1 + mean))).cwiseAbs().maxCoeff() < 1e-10);
  }

  const auto plus = exact_stationary(models::always_plus(), t);
  CHECK(plus.dist.probs[63] == Approx(1.0));

  const Torus ring({10});
  const auto maj = exact_stationary(models::noisy_majority3(0.45), ring, 1e-12, 10000);
  CHECK(maj.residual <= 1e-12);
  CHECK(maj.iterations < 10000);
  CHECK((exact_step(maj.dist, models::noisy_majority3(0.45)).probs - maj.dist.probs).lpNorm<1>() <= 1e-11);
}

TEST_CASE("stationary reports non-convergence") {
  try {
    exact_stationary(models::noisy_majority3(0.01), Torus({6}), 1e-15, 3);
    FAIL("expected NotConverged");
  } catch (const NotConverged& e) {
    CHECK(e.residual() > 1e-15);
  }
  CHECK_THROWS_AS(ExactDistribution::uniform(Torus({23})), ResourceError);
}

TEST_CASE("mgf examples") {
  const Torus t({4});
  const auto s0 = LocalFunction::spin_product(1, {{0}});
  const auto fair = ExactDistribution::uniform(t);
  for (double lambda : {-3.0, -0.5, 0.0, 0.7, 2.0}) {
    CHECK(exact_mgf(fair, s0, {0}, lambda) == Approx(std::log(std::cosh(lambda))));
    CHECK(exact_mgf(fair, s0, {0}, lambda) <= 0.25 / 2 * lambda * lambda * 4 + 1e-15);
    CHECK(exact_mgf(ExactDistribution::dirac(t, 0b0110), s0, {1}, lambda) == 0.0);
  }
  std::mt19937_64 gen(4);
  const ExactDistribution mu{t, oracle::random_measure(gen, 16)};
  CHECK(exact_mgf(mu, LocalFunction::spin_sum(1, {{0}, {1}, {2}}), {0}, 0.0) == 0.0);
}

TEST_CASE("tail examples") {
  const Torus t({3});
  const auto fair = ExactDistribution::uniform(t);
  const auto s0 = LocalFunction::spin_product(1, {{0}});
  CHECK(exact_tail(fair, s0, {0}, 0.5) == Approx(0.5));
  CHECK(exact_tail(fair, s0, {0}, 1.5) == 0.0);
  const auto sum = LocalFunction::spin_sum(1, {{-1}, {0}, {1}});
  CHECK(exact_tail(fair, sum, {0}, 2.0) == Approx(0.125));
}

TEST_CASE("transfer consistency: E_mu[Pf] = E_{mu P}[f]") {
  std::mt19937_64 gen(23);
  const Torus t({7});
  for (int trial = 0; trial < 10; ++trial) {
    const auto rule = oracle::random_rule(gen, {{-1}, {0}, {1}}, 1);
    const auto f = oracle::random_function(gen, {{0}, {1}, {3}}, 1);
    const ExactDistribution mu{t, oracle::random_measure(gen, 128)};
    const double lhs = exact_mean(mu, observable_values(apply_transfer(f, rule), t, {2}));
    const double rhs = exact_mean(exact_step(mu, rule), observable_values(f, t, {2}));
    CHECK(std::abs(lhs - rhs) < 1e-11);
  }
}

TEST_CASE("marginals") {
  const Torus t({4});
  const auto prod = ExactDistribution::product(t, 0.3);
  const auto m = exact_marginal(prod, {{2}, {0}});
  CHECK((m - oracle::product(2, 0.3)).cwiseAbs().maxCoeff() < 1e-15);
  const auto d = exact_marginal(ExactDistribution::dirac(t, 0b0100), {{2}, {3}});
  CHECK(d[1] == 1.0);
}

TEST_CASE("relative entropy examples") {
  const Torus t({5});
  const auto p = ExactDistribution::product(t, 0.3);
  const auto q = ExactDistribution::product(t, 0.6);
  const std::vector<Site> vol{{0}, {1}, {2}};
  CHECK(exact_relative_entropy(p, p, vol).ent == 0.0);
  const double one = 0.3 * std::log(0.3 / 0.6) + 0.7 * std::log(0.7 / 0.4);
  CHECK(exact_relative_entropy(p, q, vol).ent == Approx(3 * one));

  const auto plus = ExactDistribution::dirac(t, 31);
  CHECK_FALSE(exact_relative_entropy(p, plus, vol).finite());
  CHECK(exact_relative_entropy(plus, p, vol).ent == Approx(-3 * std::log(0.3)));

  const Torus ring({10});
  const auto mu = exact_stationary(models::noisy_majority3(0.45), ring).dist;
  const auto delta = ExactDistribution::dirac(ring, 1023);
  const std::vector<Site> c1{{-1}, {0}, {1}};
  const auto rep = exact_relative_entropy(delta, mu, c1);
  CHECK(rep.finite());
  CHECK(rep.ent == Approx(-std::log(exact_marginal(mu, c1)[7])));
}

}
