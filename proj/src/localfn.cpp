#include "pca/localfn.hpp"

#include <algorithm>
#include <cmath>

#include "pca/error.hpp"

namespace pca {

namespace {

void check_cap(std::size_t n, std::size_t cap) {
  if (n > cap)
    throw ResourceError("local function on " + std::to_string(n) + " sites exceeds the cap of " +
                        std::to_string(cap));
}

std::size_t position(const std::vector<Site>& sorted, const Site& s) {
  return static_cast<std::size_t>(std::lower_bound(sorted.begin(), sorted.end(), s) - sorted.begin());
}

// Value table of `sub` (a canonical list) re-indexed over the canonical superset `sup`.
Eigen::VectorXd gather_onto(const std::vector<Site>& sub, const Eigen::VectorXd& table,
                            const std::vector<Site>& sup) {
  std::vector<std::size_t> pos(sub.size());
  for (std::size_t j = 0; j < sub.size(); ++j) {
    pos[j] = position(sup, sub[j]);
    if (pos[j] == sup.size() || sup[pos[j]] != sub[j])
      throw InvalidArgument("site " + to_string(sub[j]) + " missing from the target site list");
  }
  const std::uint64_t size = std::uint64_t{1} << sup.size();
  Eigen::VectorXd out(static_cast<Eigen::Index>(size));
  for (std::uint64_t i = 0; i < size; ++i) {
    std::uint64_t k = 0;
    for (std::size_t j = 0; j < sub.size(); ++j) k |= (i >> pos[j] & 1) << j;
    out[static_cast<Eigen::Index>(i)] = table[static_cast<Eigen::Index>(k)];
  }
  return out;
}

// Oscillation of a table along bit `bit`.
double bit_oscillation(const Eigen::VectorXd& table, unsigned bit) {
  const std::uint64_t flip = std::uint64_t{1} << bit;
  double m = 0;
  for (Eigen::Index i = 0; i < table.size(); ++i) {
    if (static_cast<std::uint64_t>(i) & flip) continue;
    m = std::max(m, std::abs(table[static_cast<Eigen::Index>(i | flip)] - table[i]));
  }
  return m;
}

// E f under the product law with P(spin j = +1) = p[j]; destroys `w`.
double product_expectation(Eigen::VectorXd& w, std::span<const double> p) {
  for (std::size_t j = p.size(); j-- > 0;) {
    const Eigen::Index half = Eigen::Index{1} << j;
    w.head(half) = (1.0 - p[j]) * w.head(half) + p[j] * w.segment(half, half);
  }
  return w[0];
}

}  // namespace

LocalFunction::LocalFunction(int dimension, std::vector<Site> sites, Eigen::VectorXd table, std::size_t cap)
    : dimension_(dimension) {
  if (dimension < 1) throw InvalidArgument("dimension must be positive");
  check_cap(sites.size(), cap);
  for (const auto& s : sites)
    if (static_cast<int>(s.size()) != dimension) throw InvalidArgument("site " + to_string(s) + " has wrong dimension");
  const auto expected = Eigen::Index{1} << sites.size();
  if (table.size() != expected)
    throw InvalidArgument("table has " + std::to_string(table.size()) + " entries, expected " +
                          std::to_string(expected));
  sites_ = canonical_sites(sites);
  if (sites_.size() != sites.size()) throw InvalidArgument("local function repeats a site");
  table_ = sites_ == sites ? std::move(table) : gather_onto(sites, table, sites_);
}

LocalFunction LocalFunction::constant(int dimension, double value) {
  return LocalFunction(dimension, {}, Eigen::VectorXd::Constant(1, value));
}

LocalFunction LocalFunction::tabulate(int dimension, std::vector<Site> sites,
                                      const std::function<double(std::span<const int>)>& fn) {
  check_cap(sites.size(), kDefaultSiteCap);
  const std::uint64_t size = std::uint64_t{1} << sites.size();
  Eigen::VectorXd table(static_cast<Eigen::Index>(size));
  std::vector<int> spins(sites.size());
  for (std::uint64_t i = 0; i < size; ++i) {
    for (std::size_t j = 0; j < sites.size(); ++j) spins[j] = (i >> j & 1) ? 1 : -1;
    table[static_cast<Eigen::Index>(i)] = fn(spins);
  }
  return LocalFunction(dimension, std::move(sites), std::move(table));
}

LocalFunction LocalFunction::spin_product(int dimension, std::vector<Site> sites) {
  return tabulate(dimension, std::move(sites), [](std::span<const int> s) {
    int p = 1;
    for (int v : s) p *= v;
    return static_cast<double>(p);
  });
}

LocalFunction LocalFunction::spin_sum(int dimension, std::vector<Site> sites) {
  return tabulate(dimension, std::move(sites), [](std::span<const int> s) {
    int p = 0;
    for (int v : s) p += v;
    return static_cast<double>(p);
  });
}

LocalFunction LocalFunction::indicator(int dimension, std::vector<Site> sites, int spin) {
  return tabulate(dimension, std::move(sites), [spin](std::span<const int> s) {
    return std::all_of(s.begin(), s.end(), [spin](int v) { return v == spin; }) ? 1.0 : 0.0;
  });
}

LocalFunction LocalFunction::extended_to(const std::vector<Site>& sites, std::size_t cap) const {
  auto canon = canonical_sites(sites);
  check_cap(canon.size(), cap);
  return LocalFunction(dimension_, canon, gather_onto(sites_, table_, canon), cap);
}

LocalFunction LocalFunction::translated(const Site& offset) const {
  std::vector<Site> moved;
  moved.reserve(sites_.size());
  for (const auto& s : sites_) moved.push_back(s + offset);
  return LocalFunction(dimension_, std::move(moved), table_, sites_.size());
}

LocalFunction combine(double alpha, const LocalFunction& f, double beta, const LocalFunction& g, std::size_t cap) {
  if (f.dimension() != g.dimension()) throw InvalidArgument("dimension mismatch");
  std::vector<Site> all = f.sites();
  all.insert(all.end(), g.sites().begin(), g.sites().end());
  all = canonical_sites(std::move(all));
  const auto fe = f.extended_to(all, cap), ge = g.extended_to(all, cap);
  return LocalFunction(f.dimension(), all, alpha * fe.table() + beta * ge.table(), cap);
}

double OscillationVector::at(const Site& s) const {
  auto it = values.find(s);
  return it == values.end() ? 0.0 : it->second;
}

double OscillationVector::norm(double p) const {
  if (std::isinf(p)) {
    double m = 0;
    for (const auto& [x, v] : values) m = std::max(m, v);
    return m;
  }
  if (p < 1) throw InvalidArgument("norm exponent must be >= 1");
  double s = 0;
  for (const auto& [x, v] : values) s += std::pow(v, p);
  return std::pow(s, 1.0 / p);
}

OscillationVector oscillation(const LocalFunction& f) {
  OscillationVector out{f.dimension(), {}};
  for (std::size_t j = 0; j < f.sites().size(); ++j)
    out.values[f.sites()[j]] = bit_oscillation(f.table(), static_cast<unsigned>(j));
  return out;
}

double delta_norm(const LocalFunction& f, double p) { return oscillation(f).norm(p); }

LocalFunction apply_transfer(const LocalFunction& f, const FourierRule& rule, std::size_t cap, bool prune) {
  if (f.dimension() != rule.dimension()) throw InvalidArgument("function and rule dimensions differ");
  const auto report = validate(rule);
  if (!report.admissible) throw Inadmissible("rule is not admissible (max |h| = " + std::to_string(report.h_max) + ")");

  const auto& lam = f.sites();
  const auto support = rule.support();
  std::vector<Site> out_sites;
  for (const auto& x : lam)
    for (const auto& u : support) out_sites.push_back(x + u);
  out_sites = canonical_sites(std::move(out_sites));
  check_cap(out_sites.size(), cap);

  // Terms of h_x for each x in lam, as masks over out_sites.
  std::vector<std::vector<MaskedRule::Term>> local_terms(lam.size());
  for (std::size_t j = 0; j < lam.size(); ++j)
    for (const auto& [set, r] : rule.coeffs()) {
      std::uint64_t mask = 0;
      for (const auto& a : set.sites()) mask |= std::uint64_t{1} << position(out_sites, lam[j] + a);
      local_terms[j].push_back({mask, r});
    }

  const std::uint64_t size = std::uint64_t{1} << out_sites.size();
  Eigen::VectorXd out(static_cast<Eigen::Index>(size));
  std::vector<double> p(lam.size());
  Eigen::VectorXd work;
  for (std::uint64_t eta = 0; eta < size; ++eta) {
    for (std::size_t j = 0; j < lam.size(); ++j) {
      double h = 0;
      for (const auto& t : local_terms[j]) h += (__builtin_popcountll(t.mask & ~eta) & 1) ? -t.coeff : t.coeff;
      p[j] = 0.5 * (1.0 + h);
    }
    work = f.table();
    out[static_cast<Eigen::Index>(eta)] = product_expectation(work, p);
  }

  LocalFunction result(f.dimension(), out_sites, std::move(out), cap);
  if (!prune) return result;

  std::vector<Site> kept;
  std::uint64_t kept_bits = 0;
  for (std::size_t j = 0; j < out_sites.size(); ++j)
    if (bit_oscillation(result.table(), static_cast<unsigned>(j)) >= kPruneTolerance) {
      kept.push_back(out_sites[j]);
      kept_bits |= std::uint64_t{1} << j;
    }
  if (kept.size() == out_sites.size()) return result;
  Eigen::VectorXd slim(Eigen::Index{1} << kept.size());
  for (Eigen::Index k = 0; k < slim.size(); ++k) {
    // Scatter the bits of k onto the kept positions; dropped sites read as -1.
    std::uint64_t full = 0, rest = static_cast<std::uint64_t>(k);
    for (std::size_t j = 0; j < out_sites.size(); ++j)
      if (kept_bits >> j & 1) {
        full |= (rest & 1) << j;
        rest >>= 1;
      }
    slim[k] = result(full);
  }
  return LocalFunction(f.dimension(), std::move(kept), std::move(slim), cap);
}

ContractionReport check_contraction(const LocalFunction& f, const FourierRule& rule, std::size_t cap) {
  const auto pf = apply_transfer(f, rule, cap, /*prune=*/false);
  const auto dpf = oscillation(pf);
  const auto df = oscillation(f);
  const auto kernel = psi(rule);

  ContractionReport rep;
  rep.sites = pf.sites();
  rep.max_violation = -std::numeric_limits<double>::infinity();
  for (const auto& x : rep.sites) {
    double rhs = 0;
    for (const auto& [y, d] : df.values) rhs += kernel.at(x - y) * d;
    const double lhs = dpf.at(x);
    rep.lhs.push_back(lhs);
    rep.rhs.push_back(rhs);
    rep.max_violation = std::max(rep.max_violation, lhs - rhs);
  }
  if (rep.sites.empty()) rep.max_violation = 0;
  const double dn = df.norm(2.0);
  rep.lhs_l2_squared = std::pow(dpf.norm(2.0), 2);
  rep.kappa_bound = kappa(rule) * dn * dn;
  rep.l2_violation = rep.lhs_l2_squared - rep.kappa_bound;
  return rep;
}

std::size_t SpaceTimeFunction::site_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.size();
  return n;
}

SpaceTimeOscillation spacetime_oscillation(const SpaceTimeFunction& F, std::size_t cap) {
  const std::size_t total = F.site_count();
  check_cap(total, cap);
  if (F.table.size() != (Eigen::Index{1} << total))
    throw InvalidArgument("space-time table size does not match its layers");
  SpaceTimeOscillation out;
  unsigned bit = 0;
  for (const auto& layer : F.layers) {
    OscillationVector ov{F.dimension, {}};
    for (const auto& s : layer) {
      if (ov.values.count(s)) throw InvalidArgument("layer repeats site " + to_string(s));
      const double d = bit_oscillation(F.table, bit++);
      ov.values[s] = d;
      out.total_l2_squared += d * d;
    }
    out.layers.push_back(std::move(ov));
  }
  return out;
}

}  // namespace pca
