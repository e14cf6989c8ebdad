#include "pca/rule.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pca/error.hpp"

namespace pca {

namespace {

constexpr int kMaxTableSites = 24;

void check_dimension(int dimension, const Site& s) {
  if (static_cast<int>(s.size()) != dimension)
    throw InvalidArgument("site " + to_string(s) + " does not have dimension " + std::to_string(dimension));
}

}  // namespace

FourierRule::FourierRule(int dimension, std::vector<std::pair<OffsetSet, double>> terms)
    : dimension_(dimension) {
  if (dimension < 1) throw InvalidArgument("dimension must be positive");
  for (auto& [set, r] : terms) {
    if (!std::isfinite(r)) throw InvalidArgument("non-finite coefficient");
    for (const auto& s : set.sites()) check_dimension(dimension, s);
    coeffs_[set] += r;
  }
  std::erase_if(coeffs_, [](const auto& kv) { return std::abs(kv.second) < kDropTolerance; });
}

double FourierRule::coeff(const OffsetSet& a) const {
  auto it = coeffs_.find(a);
  return it == coeffs_.end() ? 0.0 : it->second;
}

std::vector<Site> FourierRule::support() const {
  std::vector<Site> all;
  for (const auto& [set, r] : coeffs_) all.insert(all.end(), set.sites().begin(), set.sites().end());
  return canonical_sites(std::move(all));
}

double FourierRule::sum_abs() const {
  double s = 0;
  for (const auto& [set, r] : coeffs_) s += std::abs(r);
  return s;
}

double Kernel::at(const Site& s) const {
  auto it = values.find(s);
  return it == values.end() ? 0.0 : it->second;
}

double Kernel::l1() const {
  double s = 0;
  for (const auto& [x, v] : values) s += v;
  return s;
}

double Kernel::l2() const {
  double s = 0;
  for (const auto& [x, v] : values) s += v * v;
  return std::sqrt(s);
}

MaskedRule::MaskedRule(const FourierRule& rule) : neighborhood_(rule.support()) {
  if (neighborhood_.size() > kMaxSupport)
    throw ResourceError("rule support has " + std::to_string(neighborhood_.size()) +
                        " sites; compiled evaluation handles at most 64");
  for (const auto& [set, r] : rule.coeffs()) {
    std::uint64_t mask = 0;
    for (const auto& s : set.sites()) {
      const auto pos = std::lower_bound(neighborhood_.begin(), neighborhood_.end(), s) - neighborhood_.begin();
      mask |= std::uint64_t{1} << pos;
    }
    terms_.push_back({mask, r});
  }
}

FourierRule walsh_expand(const ProbTable& table) {
  const std::size_t n = table.neighborhood.size();
  if (n > kMaxTableSites) throw ResourceError("probability table neighborhood too large");
  for (const auto& s : table.neighborhood) check_dimension(table.dimension, s);
  if (canonical_sites(table.neighborhood).size() != n)
    throw InvalidArgument("probability table neighborhood repeats a site");
  const std::size_t size = std::size_t{1} << n;
  if (table.probs.size() != size)
    throw InvalidArgument("probability table has " + std::to_string(table.probs.size()) +
                          " entries; expected 2^" + std::to_string(n) + " = " + std::to_string(size));

  // v[j] = h(~j), so the plain Walsh-Hadamard sum carries the sign (-1)^{|S \ assignment|}.
  std::vector<double> v(size);
  for (std::size_t i = 0; i < size; ++i) {
    const double p = table.probs[i];
    if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("probability outside [0,1] at index " + std::to_string(i));
    v[~i & (size - 1)] = 2.0 * p - 1.0;
  }
  for (std::size_t len = 1; len < size; len <<= 1)
    for (std::size_t i = 0; i < size; i += 2 * len)
      for (std::size_t j = i; j < i + len; ++j) {
        const double a = v[j], b = v[j + len];
        v[j] = a + b;
        v[j + len] = a - b;
      }

  std::vector<std::pair<OffsetSet, double>> terms;
  for (std::size_t mask = 0; mask < size; ++mask) {
    const double r = v[mask] / static_cast<double>(size);
    if (std::abs(r) < FourierRule::kDropTolerance) continue;
    std::vector<Site> sites;
    for (std::size_t j = 0; j < n; ++j)
      if (mask >> j & 1) sites.push_back(table.neighborhood[j]);
    terms.emplace_back(OffsetSet(std::move(sites)), r);
  }
  return FourierRule(table.dimension, std::move(terms));
}

ProbTable tabulate(const FourierRule& rule) {
  MaskedRule masked(rule);
  const std::size_t n = masked.neighborhood().size();
  if (n > kMaxTableSites) throw ResourceError("rule support too large to tabulate");
  ProbTable out{rule.dimension(), masked.neighborhood(), {}};
  out.probs.resize(std::size_t{1} << n);
  for (std::size_t i = 0; i < out.probs.size(); ++i) out.probs[i] = 0.5 * (1.0 + masked.h(i));
  return out;
}

double evaluate_h(const FourierRule& rule, const std::map<Site, int>& assignment) {
  double sum = 0;
  for (const auto& [set, r] : rule.coeffs()) {
    double prod = r;
    for (const auto& s : set.sites()) {
      auto it = assignment.find(s);
      if (it == assignment.end()) throw InvalidArgument("assignment misses site " + to_string(s));
      if (it->second != 1 && it->second != -1) throw InvalidArgument("spins must be +1 or -1");
      prod *= it->second;
    }
    sum += prod;
  }
  return sum;
}

ValidationReport validate(const FourierRule& rule, int exact_threshold) {
  ValidationReport rep;
  rep.sum_abs_r = rule.sum_abs();
  const auto support = rule.support();
  if (static_cast<int>(support.size()) <= exact_threshold && support.size() <= MaskedRule::kMaxSupport) {
    MaskedRule masked(rule);
    const std::uint64_t count = std::uint64_t{1} << support.size();
    double hmax = 0;
    for (std::uint64_t p = 0; p < count; ++p) hmax = std::max(hmax, std::abs(masked.h(p)));
    rep.h_max = hmax;
    rep.exact = true;
  } else {
    rep.h_max = rep.sum_abs_r;
    rep.exact = false;
  }
  rep.p_min = std::max(0.0, 0.5 * (1.0 - rep.h_max));
  rep.admissible = rep.h_max <= 1.0 + 1e-12;
  return rep;
}

Kernel psi(const FourierRule& rule) {
  Kernel k{rule.dimension(), {}};
  for (const auto& [set, r] : rule.coeffs())
    for (const auto& s : set.sites()) k.values[s] += std::abs(r);
  return k;
}

double kappa(const FourierRule& rule) {
  double s = 0;
  for (const auto& [set, r] : rule.coeffs()) s += static_cast<double>(set.size()) * std::abs(r);
  return s * s;
}

Kernel convolve(const Kernel& a, const Kernel& b, std::size_t support_cap) {
  if (a.dimension != b.dimension) throw InvalidArgument("kernel dimension mismatch");
  Kernel out{a.dimension, {}};
  for (const auto& [x, u] : a.values)
    for (const auto& [y, v] : b.values) {
      out.values[x + y] += u * v;
      if (out.values.size() > support_cap)
        throw ResourceError("convolution support exceeds cap of " + std::to_string(support_cap) + " sites");
    }
  std::erase_if(out.values, [](const auto& kv) { return kv.second == 0.0; });
  return out;
}

Kernel kernel_power(const Kernel& k, int power, std::size_t support_cap) {
  if (power < 0) throw InvalidArgument("negative convolution power");
  Kernel out{k.dimension, {{origin(k.dimension), 1.0}}};
  for (int i = 0; i < power; ++i) out = convolve(out, k, support_cap);
  return out;
}

Kernel psi_power(const FourierRule& rule, int k, std::size_t support_cap) {
  if (k < 1) throw InvalidArgument("psi_power needs k >= 1");
  return kernel_power(psi(rule), k, support_cap);
}

int propagation_speed(const FourierRule& rule) {
  int a = 0;
  for (const auto& [set, r] : rule.coeffs())
    for (const auto& s : set.sites()) a = std::max(a, sup_norm(s));
  return a;
}

double finite_energy_rho(const ValidationReport& report) {
  if (!report.exact)
    throw InvalidArgument("finite energy needs the exact max of |h|; the report only carries the sum |r_A| bound");
  if (!report.admissible) throw Inadmissible("rule is not admissible");
  if (report.h_max >= 1.0 - 1e-12) return std::numeric_limits<double>::infinity();
  return -std::log(0.5 * (1.0 - report.h_max));
}

double finite_energy_rho(const FourierRule& rule) { return finite_energy_rho(validate(rule)); }

namespace models {

namespace {
void check_unit(double eps, const char* name) {
  if (!(eps >= 0.0 && eps <= 1.0)) throw InvalidArgument(std::string(name) + ": noise parameter must lie in [0,1]");
}
}  // namespace

FourierRule stavskaya(double eps) {
  check_unit(eps, "stavskaya");
  const double half = 0.5 * (1.0 - eps);
  return FourierRule(1, {{OffsetSet{}, 0.5 * (3.0 * eps - 1.0)},
                         {OffsetSet{{0}}, half},
                         {OffsetSet{{1}}, half},
                         {OffsetSet{{0}, {1}}, half}});
}

FourierRule toom_nec(double eps) {
  check_unit(eps, "toom_nec");
  const double half = 0.5 * (1.0 - eps);
  const Site north{0, 1}, east{1, 0}, center{0, 0};
  return FourierRule(2, {{OffsetSet{}, eps},
                         {OffsetSet{north}, half},
                         {OffsetSet{east}, half},
                         {OffsetSet{center}, half},
                         {OffsetSet{north, east, center}, -half}});
}

FourierRule noisy_majority3(double eps) {
  check_unit(eps, "noisy_majority3");
  const double half = 0.5 * (1.0 - 2.0 * eps);
  return FourierRule(1, {{OffsetSet{{-1}}, half},
                         {OffsetSet{{0}}, half},
                         {OffsetSet{{1}}, half},
                         {OffsetSet{{-1}, {0}, {1}}, -half}});
}

FourierRule independent_flip(double m, double rho) {
  if (!std::isfinite(m) || !std::isfinite(rho)) throw InvalidArgument("independent_flip: non-finite parameter");
  return FourierRule(1, {{OffsetSet{}, m}, {OffsetSet{{0}}, rho}});
}

FourierRule always_plus() { return FourierRule(1, {{OffsetSet{}, 1.0}}); }

}  // namespace models

FourierRule builtin(std::string_view name, std::span<const double> params) {
  auto need = [&](std::size_t n) {
    if (params.size() != n)
      throw InvalidArgument(std::string(name) + " takes " + std::to_string(n) + " parameter(s), got " +
                            std::to_string(params.size()));
  };
  if (name == "stavskaya") return need(1), models::stavskaya(params[0]);
  if (name == "toom_nec") return need(1), models::toom_nec(params[0]);
  if (name == "noisy_majority3") return need(1), models::noisy_majority3(params[0]);
  if (name == "independent_flip") return need(2), models::independent_flip(params[0], params[1]);
  if (name == "always_plus") return need(0), models::always_plus();
  throw InvalidArgument("unknown built-in model '" + std::string(name) + "'");
}

}  // namespace pca
