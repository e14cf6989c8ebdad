#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "pca/error.hpp"
#include "pca/rule.hpp"

using namespace pca;
using doctest::Approx;

namespace {

ProbTable indicator_table(double eps) {
  // eps + (1 - eps) 1{eta_0 = eta_1 = +1}
  ProbTable t{1, {{0}, {1}}, {eps, eps, eps, 1.0}};
  return t;
}

ProbTable majority_table(double eps) {
  ProbTable t{1, {{-1}, {0}, {1}}, {}};
  for (int i = 0; i < 8; ++i) {
    const int plus = __builtin_popcount(i);
    t.probs.push_back(plus >= 2 ? 1 - eps : eps);
  }
  return t;
}

void check_same(const FourierRule& a, const FourierRule& b, double tol) {
  for (const auto& [set, r] : a.coeffs()) CHECK(std::abs(r - b.coeff(set)) <= tol);
  for (const auto& [set, r] : b.coeffs()) CHECK(std::abs(r - a.coeff(set)) <= tol);
}

}  // namespace

TEST_SUITE("rule") {

TEST_CASE("walsh_expand examples") {
  auto plus = walsh_expand(ProbTable{1, {{0}}, {1.0, 1.0}});
  CHECK(plus.coeffs().size() == 1);
  CHECK(plus.coeff(OffsetSet{}) == Approx(1.0));

  auto identity = walsh_expand(ProbTable{1, {{0}}, {0.0, 1.0}});
  CHECK(identity.coeffs().size() == 1);
  CHECK(identity.coeff(OffsetSet{{0}}) == Approx(1.0));

  for (double eps : {0.1, 0.3, 0.45, 0.8}) {
    check_same(walsh_expand(indicator_table(eps)), models::stavskaya(eps), 1e-12);
    check_same(walsh_expand(majority_table(eps)), models::noisy_majority3(eps), 1e-12);
  }
}

TEST_CASE("walsh_expand matches the enumeration oracle and round-trips") {
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + trial % 4;
    ProbTable t{1, {}, {}};
    for (std::size_t j = 0; j < n; ++j) t.neighborhood.push_back({static_cast<int>(j) - 1});
    for (std::size_t i = 0; i < (std::size_t{1} << n); ++i) t.probs.push_back(u(gen));
    const auto rule = walsh_expand(t);
    for (const auto& [set, r] : oracle::walsh(t)) CHECK(rule.coeff(set) == Approx(r).epsilon(1e-12));

    // Parseval: sum r_A^2 = mean of h^2.
    double lhs = 0, rhs = 0;
    for (const auto& [set, r] : rule.coeffs()) lhs += r * r;
    for (double p : t.probs) rhs += (2 * p - 1) * (2 * p - 1);
    CHECK(lhs == Approx(rhs / static_cast<double>(t.probs.size())).epsilon(1e-12));

    const auto back = tabulate(rule);
    // tabulate covers the rule's support, which drops sites whose coefficients all vanish.
    if (back.neighborhood.size() == n)
      for (std::size_t i = 0; i < t.probs.size(); ++i) CHECK(std::abs(back.probs[i] - t.probs[i]) <= 1e-12);
  }
}

TEST_CASE("walsh_expand rejects malformed tables") {
  CHECK_THROWS_AS(walsh_expand(ProbTable{1, {{0}}, {0.5}}), InvalidArgument);
  CHECK_THROWS_AS(walsh_expand(ProbTable{1, {{0}}, {0.5, 1.5}}), InvalidArgument);
  CHECK_THROWS_AS(walsh_expand(ProbTable{1, {{0}, {0}}, {0, 0, 0, 0}}), InvalidArgument);
}

TEST_CASE("evaluate_h examples") {
  const FourierRule constant(1, {{OffsetSet{}, 0.3}});
  CHECK(evaluate_h(constant, {}) == Approx(0.3));
  CHECK(evaluate_h(constant, {{{5}, -1}}) == Approx(0.3));

  const double eps = 0.3;
  const auto st = models::stavskaya(eps);
  CHECK(evaluate_h(st, {{{0}, 1}, {{1}, 1}}) == Approx(1.0));
  CHECK(evaluate_h(st, {{{0}, -1}, {{1}, -1}}) == Approx(2 * eps - 1));
  CHECK_THROWS_AS(evaluate_h(st, {{{0}, 1}}), InvalidArgument);
}

TEST_CASE("validate examples") {
  auto half = validate(FourierRule(1, {{OffsetSet{{0}}, 0.5}}));
  CHECK(half.h_max == Approx(0.5));
  CHECK(half.admissible);
  CHECK(half.exact);

  auto st = validate(models::stavskaya(0.8));
  CHECK(st.h_max == Approx(1.0));
  CHECK(st.p_min == Approx(0.0));
  CHECK(st.admissible);

  auto bad = validate(FourierRule(1, {{OffsetSet{}, 0.9}, {OffsetSet{{0}}, 0.9}}));
  CHECK(bad.h_max == Approx(1.8));
  CHECK_FALSE(bad.admissible);
}

TEST_CASE("validate falls back to the sum bound beyond the threshold") {
  const auto rule = models::noisy_majority3(0.2);
  auto r = validate(rule, 2);
  CHECK_FALSE(r.exact);
  CHECK(r.h_max == Approx(rule.sum_abs()));
  CHECK_THROWS_AS(finite_energy_rho(r), InvalidArgument);
}

TEST_CASE("psi and kappa examples") {
  for (double eps : {0.1, 0.3, 0.45}) {
    const auto k = psi(models::noisy_majority3(eps));
    for (int x : {-1, 0, 1}) CHECK(k.at({x}) == Approx(1 - 2 * eps));
    CHECK(k.l1() == Approx(3 * (1 - 2 * eps)));
    CHECK(kappa(models::noisy_majority3(eps)) == Approx(9 * (1 - 2 * eps) * (1 - 2 * eps)));

    const auto s = psi(models::stavskaya(eps));
    CHECK(s.at({0}) == Approx(1 - eps));
    CHECK(s.at({1}) == Approx(1 - eps));
    CHECK(s.l1() == Approx(2 * (1 - eps)));
    CHECK(kappa(models::stavskaya(eps)) == Approx(4 * (1 - eps) * (1 - eps)));
    CHECK(kappa(models::toom_nec(eps)) == Approx(9 * (1 - eps) * (1 - eps)));
  }
  CHECK(psi(FourierRule(1, {{OffsetSet{}, 0.7}})).support_size() == 0);
  CHECK(kappa(models::independent_flip(0.2, 0.6)) == Approx(0.36));
}

TEST_CASE("kernel powers") {
  Kernel point{1, {{{0}, 0.7}}};
  CHECK(kernel_power(point, 3).at({0}) == Approx(0.343));
  CHECK(kernel_power(point, 0).at({0}) == Approx(1.0));

  Kernel two{1, {{{0}, 1.0}, {{1}, 1.0}}};
  const auto sq = kernel_power(two, 2);
  CHECK(sq.at({0}) == Approx(1));
  CHECK(sq.at({1}) == Approx(2));
  CHECK(sq.at({2}) == Approx(1));

  const auto p2 = psi_power(models::stavskaya(0.5), 2);
  CHECK(p2.l1() == Approx(1.0));
  CHECK(p2.l2() * p2.l2() == Approx(0.375));

  CHECK_THROWS_AS(kernel_power(two, 40, 8), ResourceError);
}

TEST_CASE("propagation speed") {
  CHECK(propagation_speed(FourierRule(1, {{OffsetSet{}, 0.2}})) == 0);
  CHECK(propagation_speed(models::stavskaya(0.3)) == 1);
  CHECK(propagation_speed(models::toom_nec(0.3)) == 1);
  CHECK(propagation_speed(FourierRule(1, {{OffsetSet{{-3}}, 0.2}})) == 3);
}

TEST_CASE("finite energy") {
  CHECK(finite_energy_rho(FourierRule(1, {})) == Approx(std::log(2.0)));
  for (double eps : {0.1, 0.3, 0.45}) CHECK(finite_energy_rho(models::noisy_majority3(eps)) == Approx(-std::log(eps)));
  CHECK(std::isinf(finite_energy_rho(models::stavskaya(0.3))));
}

TEST_CASE("builtins") {
  const auto plus = models::always_plus();
  CHECK(plus.coeffs().size() == 1);
  CHECK(plus.coeff(OffsetSet{}) == 1.0);

  const auto toom = models::toom_nec(0.2);
  CHECK(toom.dimension() == 2);
  CHECK(toom.coeff(OffsetSet{}) == Approx(0.2));
  CHECK(toom.coeff(OffsetSet{{0, 1}, {1, 0}, {0, 0}}) == Approx(-0.4));

  CHECK(validate(models::independent_flip(0.3, 0.7)).admissible);
  CHECK_FALSE(validate(models::independent_flip(0.3, 0.8)).admissible);
  const double params[] = {0.1, 0.5};
  CHECK(builtin("independent_flip", params) == models::independent_flip(0.1, 0.5));
  CHECK_THROWS_AS(builtin("nope", params), InvalidArgument);
  CHECK_THROWS_AS(models::stavskaya(1.5), InvalidArgument);
}

TEST_CASE("masked rule agrees with the coefficient map") {
  std::mt19937_64 gen(5);
  const std::vector<Site> nb{{-1}, {0}, {2}};
  for (int trial = 0; trial < 20; ++trial) {
    const auto rule = oracle::random_rule(gen, nb, 1);
    const MaskedRule masked(rule);
    const auto& sup = masked.neighborhood();
    for (std::uint64_t p = 0; p < (std::uint64_t{1} << sup.size()); ++p) {
      std::map<Site, int> spins;
      for (std::size_t j = 0; j < sup.size(); ++j) spins[sup[j]] = oracle::spin_of(p, j);
      CHECK(masked.h(p) == Approx(oracle::h_at(rule, spins, {0})).epsilon(1e-12));
    }
  }
}

}
