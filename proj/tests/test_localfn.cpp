#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "pca/error.hpp"
#include "pca/localfn.hpp"

using namespace pca;
using doctest::Approx;

namespace {

// Value of g (on its own sites) at an assignment of a larger domain.
double at_domain(const LocalFunction& g, const std::vector<Site>& dom, std::uint64_t eta) {
  std::map<Site, int> spins;
  for (std::size_t j = 0; j < dom.size(); ++j) spins[dom[j]] = oracle::spin_of(eta, j);
  return oracle::value_at(g, spins);
}

}  // namespace

TEST_SUITE("localfn") {

TEST_CASE("oscillation examples") {
  const auto s0 = LocalFunction::spin_product(1, {{0}});
  CHECK(oscillation(s0).at({0}) == 2.0);
  CHECK(delta_norm(s0, 2) * delta_norm(s0, 2) == Approx(4.0));

  const auto ind = LocalFunction::indicator(1, {{0}, {1}});
  CHECK(oscillation(ind).at({0}) == 1.0);
  CHECK(oscillation(ind).at({1}) == 1.0);
  CHECK(delta_norm(ind, 2) * delta_norm(ind, 2) == Approx(2.0));

  const auto s01 = LocalFunction::spin_product(1, {{0}, {1}});
  CHECK(oscillation(s01).at({0}) == 2.0);
  CHECK(oscillation(s01).at({1}) == 2.0);

  for (int k = 1; k <= 5; ++k) {
    std::vector<Site> sites;
    for (int i = 0; i < k; ++i) sites.push_back({i});
    const auto sum = LocalFunction::spin_sum(1, sites);
    CHECK(std::pow(delta_norm(sum, 2), 2) == Approx(4.0 * k));
    CHECK(delta_norm(sum, 1) == Approx(2.0 * k));
    CHECK(delta_norm(sum, std::numeric_limits<double>::infinity()) == Approx(2.0));
  }
}

TEST_CASE("construction re-indexes to canonical order") {
  // f = 1{sigma_1 = +1} given with sites listed as {1, 0}
  Eigen::VectorXd t(4);
  t << 0, 1, 0, 1;
  const LocalFunction f(1, {{1}, {0}}, t);
  CHECK(f.sites() == std::vector<Site>{{0}, {1}});
  CHECK(f(0b10) == 1.0);
  CHECK(f(0b01) == 0.0);
  CHECK_THROWS_AS(LocalFunction(1, {{0}, {0}}, t), InvalidArgument);
  CHECK_THROWS_AS(LocalFunction(1, {{0}}, t), InvalidArgument);
  CHECK_THROWS_AS(LocalFunction(1, {{0}, {1}, {2}}, Eigen::VectorXd::Zero(8), 2), ResourceError);
}

TEST_CASE("combine and translate") {
  const auto a = LocalFunction::spin_product(1, {{0}});
  const auto b = LocalFunction::spin_product(1, {{2}});
  const auto c = combine(1, a, -2, b);
  CHECK(c.sites().size() == 2);
  CHECK(c(0b01) == Approx(1 + 2));
  CHECK(c(0b10) == Approx(-1 - 2));
  const auto moved = a.translated({3});
  CHECK(moved.sites() == std::vector<Site>{{3}});
}

TEST_CASE("transfer examples") {
  const auto s0 = LocalFunction::spin_product(1, {{0}});
  for (double eps : {0.1, 0.3}) {
    const auto rule = models::noisy_majority3(eps);
    const auto pf = apply_transfer(s0, rule);
    REQUIRE(pf.sites().size() == 3);
    for (std::uint64_t i = 0; i < 8; ++i) {
      const int plus = __builtin_popcountll(i);
      CHECK(pf(i) == Approx((1 - 2 * eps) * (plus >= 2 ? 1 : -1)));
    }
  }

  auto f = s0;
  for (int k = 1; k <= 4; ++k) {
    f = apply_transfer(f, models::independent_flip(0, 0.6));
    CHECK(f(1) == Approx(std::pow(0.6, k)));
    CHECK(f(0) == Approx(-std::pow(0.6, k)));
  }

  // Pf = h_0 for any rule
  const auto st = models::stavskaya(0.3);
  const auto pst = apply_transfer(s0, st, kDefaultSiteCap, false);
  for (std::uint64_t i = 0; i < 4; ++i) {
    std::map<Site, int> spins{{{0}, oracle::spin_of(i, 0)}, {{1}, oracle::spin_of(i, 1)}};
    CHECK(pst(i) == Approx(evaluate_h(st, spins)));
  }

  const auto constant = apply_transfer(LocalFunction::spin_sum(1, {{0}, {1}}), FourierRule(1, {{OffsetSet{}, 0.4}}));
  CHECK(constant.sites().empty());
  CHECK(constant(0) == Approx(0.8));
}

TEST_CASE("transfer matches the enumeration oracle") {
  std::mt19937_64 gen(11);
  for (int trial = 0; trial < 60; ++trial) {
    const auto rule = oracle::random_rule(gen, {{-1}, {0}, {1}}, 1);
    std::vector<Site> sites{{0}};
    if (trial % 2) sites.push_back({1});
    if (trial % 3 == 0) sites.push_back({3});
    const auto f = oracle::random_function(gen, sites, 1);
    const auto pf = apply_transfer(f, rule, kDefaultSiteCap, false);
    const auto dom = oracle::transfer_domain(f, rule);
    const auto expected = oracle::transfer(f, rule);
    for (std::uint64_t eta = 0; eta < (std::uint64_t{1} << dom.size()); ++eta)
      CHECK(at_domain(pf, dom, eta) == Approx(expected[static_cast<Eigen::Index>(eta)]).epsilon(1e-12));

    // pruning keeps the function
    const auto pruned = apply_transfer(f, rule);
    for (std::uint64_t eta = 0; eta < (std::uint64_t{1} << dom.size()); ++eta)
      CHECK(at_domain(pruned, dom, eta) == Approx(expected[static_cast<Eigen::Index>(eta)]).epsilon(1e-12));
  }
}

TEST_CASE("transfer is linear, fixes constants and stays within [min f, max f]") {
  std::mt19937_64 gen(12);
  const auto rule = models::noisy_majority3(0.2);
  const auto f = oracle::random_function(gen, {{0}, {1}}, 1);
  const auto g = oracle::random_function(gen, {{-1}, {1}}, 1);
  const auto lhs = apply_transfer(combine(2.0, f, -0.5, g), rule, kDefaultSiteCap, false);
  const auto rhs = combine(2.0, apply_transfer(f, rule, kDefaultSiteCap, false), -0.5,
                           apply_transfer(g, rule, kDefaultSiteCap, false));
  const auto lhs_on = lhs.extended_to(rhs.sites());
  for (Eigen::Index i = 0; i < rhs.table().size(); ++i) CHECK(lhs_on.table()[i] == Approx(rhs.table()[i]));

  CHECK(apply_transfer(LocalFunction::constant(1, 1.0), rule)(0) == Approx(1.0));
  const auto pf = apply_transfer(f, rule);
  CHECK(pf.min() >= f.min() - 1e-12);
  CHECK(pf.max() <= f.max() + 1e-12);
}

TEST_CASE("contraction examples") {
  const auto s0 = LocalFunction::spin_product(1, {{0}});
  const auto flip = check_contraction(s0, models::independent_flip(0, 0.7));
  REQUIRE(flip.lhs.size() == 1);
  CHECK(flip.lhs[0] == Approx(1.4));
  CHECK(flip.rhs[0] == Approx(1.4));

  const auto constant = check_contraction(LocalFunction::spin_sum(1, {{0}, {1}}), FourierRule(1, {{OffsetSet{}, 0.4}}));
  CHECK(constant.max_violation <= 0);
  CHECK(constant.lhs_l2_squared == 0.0);

  const auto maj = check_contraction(s0, models::noisy_majority3(0.2));
  REQUIRE(maj.sites.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(maj.lhs[i] == Approx(1.2));
    CHECK(maj.rhs[i] == Approx(1.2));
  }
}

TEST_CASE("contraction holds on random pairs") {
  std::mt19937_64 gen(13);
  for (int trial = 0; trial < 200; ++trial) {
    const auto rule = oracle::random_rule(gen, {{-1}, {0}, {1}}, 1);
    const auto f = oracle::random_function(gen, {{0}, {1}, {2}}, 1);
    const auto rep = check_contraction(f, rule);
    CHECK(rep.max_violation <= 1e-10);
    CHECK(rep.l2_violation <= 1e-9);
  }
}

TEST_CASE("space-time oscillation examples") {
  // F = sigma_{0,0} sigma_{0,1}
  SpaceTimeFunction prod{1, {{{0}}, {{0}}}, Eigen::VectorXd(4)};
  prod.table << 1, -1, -1, 1;
  const auto po = spacetime_oscillation(prod);
  CHECK(po.layers[0].at({0}) == 2.0);
  CHECK(po.layers[1].at({0}) == 2.0);
  CHECK(po.total_l2_squared == Approx(8.0));

  const auto f = LocalFunction::indicator(1, {{0}, {1}});
  SpaceTimeFunction single{1, {f.sites()}, f.table()};
  const auto so = spacetime_oscillation(single);
  CHECK(so.layers[0].values == oscillation(f).values);

  SpaceTimeFunction ind{1, {{{0}, {1}}, {{0}, {1}}}, Eigen::VectorXd::Zero(16)};
  ind.table[15] = 1;
  CHECK(spacetime_oscillation(ind).total_l2_squared == Approx(4.0));

  CHECK_THROWS_AS(spacetime_oscillation(SpaceTimeFunction{1, {{{0}}}, Eigen::VectorXd::Zero(4)}), InvalidArgument);
}

}
