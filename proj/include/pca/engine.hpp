#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "pca/lattice.hpp"
#include "pca/localfn.hpp"
#include "pca/rule.hpp"

namespace pca {

/// Finite periodic box Z^d / (L_1 Z x ... x L_d Z). Site index
/// i = x_1 + L_1 (x_2 + L_2 (...)).
class Torus {
 public:
  Torus() = default;
  explicit Torus(std::vector<int> sides);

  int dimension() const { return static_cast<int>(sides_.size()); }
  const std::vector<int>& sides() const { return sides_; }
  std::size_t size() const { return size_; }

  /// Index of a site after periodic wrapping.
  std::size_t index(const Site& s) const;
  Site coords(std::size_t index) const;

  bool operator==(const Torus&) const = default;

 private:
  std::vector<int> sides_;
  std::size_t size_ = 0;
};

/// Packed spins of a torus: bit i of the word array is site i (1 <=> +1).
class TorusConfig {
 public:
  TorusConfig() = default;
  TorusConfig(Torus torus, int spin);

  static TorusConfig all(const Torus& torus, int spin) { return TorusConfig(torus, spin); }
  /// From a packed integer (tori of at most 64 sites).
  static TorusConfig from_bits(const Torus& torus, std::uint64_t bits);

  const Torus& torus() const { return torus_; }
  std::span<const std::uint64_t> words() const { return words_; }
  std::span<std::uint64_t> words() { return words_; }

  int spin(std::size_t i) const { return (words_[i >> 6] >> (i & 63) & 1) ? 1 : -1; }
  bool bit(std::size_t i) const { return words_[i >> 6] >> (i & 63) & 1; }
  void set(std::size_t i, int spin);
  /// Low 64 bits; the whole configuration when the torus has <= 64 sites.
  std::uint64_t low_bits() const { return words_.empty() ? 0 : words_[0]; }
  double magnetization() const;
  /// Configuration shifted so that the new spin at x is the old one at x - offset.
  TorusConfig shifted(const Site& offset) const;

  bool operator==(const TorusConfig&) const = default;

 private:
  Torus torus_;
  std::vector<std::uint64_t> words_;
};

struct SeedSpec {
  std::uint64_t master = 0;
  /// Random-stream labels are taken at site - label_shift; shifting both the
  /// initial configuration and this label by x shifts the whole trajectory by x.
  Site label_shift;
};

struct InitialLaw {
  enum class Kind { all_plus, all_minus, product, explicit_config };
  Kind kind = Kind::all_plus;
  double p = 0.5;  // P(+1) per site for product
  std::optional<TorusConfig> config;

  static InitialLaw all_plus() { return {Kind::all_plus, 1.0, std::nullopt}; }
  static InitialLaw all_minus() { return {Kind::all_minus, 0.0, std::nullopt}; }
  static InitialLaw product(double p);
  static InitialLaw exactly(TorusConfig c) { return {Kind::explicit_config, 0.5, std::move(c)}; }
};

/// A rule bound to a torus: neighbor index lists plus a probability table
/// over packed neighborhood patterns (neighborhoods of up to 16 sites) or
/// the masked multilinear form otherwise.
class CompiledRule {
 public:
  static constexpr std::size_t kTableLimit = 16;

  /// Throws Inadmissible for |h| > 1 and InvalidArgument when a side is
  /// shorter than 2 * range + 1.
  CompiledRule(const FourierRule& rule, const Torus& torus);

  const Torus& torus() const { return torus_; }
  const FourierRule& rule() const { return rule_; }
  std::size_t neighborhood_size() const { return masked_.neighborhood().size(); }

  std::uint64_t pattern(const TorusConfig& config, std::size_t site) const;
  double prob_plus(std::uint64_t pattern) const {
    return table_.empty() ? 0.5 * (1.0 + masked_.h(pattern)) : table_[pattern];
  }
  double prob_plus(const TorusConfig& config, std::size_t site) const { return prob_plus(pattern(config, site)); }

 private:
  FourierRule rule_;
  Torus torus_;
  MaskedRule masked_;
  std::vector<std::uint32_t> neighbors_;  // size() * neighborhood_size()
  std::vector<double> table_;
};

std::size_t shifted_label(const Torus& torus, std::size_t site, const Site& label_shift);

/// One synchronous update: site x becomes +1 iff its uniform draw from
/// stream (replica, step_index, x) falls below (1 + h_x) / 2, with every
/// h_x read from `config`.
TorusConfig step(const TorusConfig& config, const CompiledRule& rule, const SeedSpec& seed,
                 std::uint32_t replica, std::uint32_t step_index, unsigned threads = 1);

TorusConfig sample_initial(const InitialLaw& law, const Torus& torus, const SeedSpec& seed,
                           std::uint32_t replica);

/// f evaluated on the spins at anchor + (f's sites), wrapped.
double evaluate(const LocalFunction& f, const TorusConfig& config, const Site& anchor);

/// Torus indices of anchor + sites; throws if two of them coincide.
std::vector<std::size_t> placed_sites(const Torus& torus, const std::vector<Site>& sites, const Site& anchor);

struct AnchoredObservable {
  LocalFunction f;
  Site anchor;
};

struct RunOptions {
  long steps = 0;
  std::uint32_t replicas = 1;
  SeedSpec seed;
  unsigned threads = 1;
};

/// values[(replica * (steps + 1) + step) * observables + j]
struct ObservableSeries {
  long steps = 0;
  std::uint32_t replicas = 0;
  std::size_t observables = 0;
  std::vector<double> values;

  double at(std::uint32_t replica, long step, std::size_t j) const {
    return values[(static_cast<std::size_t>(replica) * static_cast<std::size_t>(steps + 1) +
                   static_cast<std::size_t>(step)) * observables + j];
  }
};

/// Lazily evaluated ensemble of independent trajectories. Each replica is
/// a pure function of (initial law, rule, seed, replica index).
class Ensemble {
 public:
  Ensemble(InitialLaw initial, const FourierRule& rule, Torus torus, RunOptions options);

  class Trajectory {
   public:
    const TorusConfig& current() const { return config_; }
    long step_index() const { return step_; }
    /// Advances one step; false once the run length is reached.
    bool advance();

   private:
    friend class Ensemble;
    Trajectory(const Ensemble* owner, std::uint32_t replica, TorusConfig start)
        : owner_(owner), replica_(replica), config_(std::move(start)) {}
    const Ensemble* owner_;
    std::uint32_t replica_;
    long step_ = 0;
    TorusConfig config_;
  };

  Trajectory trajectory(std::uint32_t replica) const;
  /// Configurations of every replica at time `at` (default: the final step).
  std::vector<TorusConfig> states(std::optional<long> at = std::nullopt) const;
  ObservableSeries observe(const std::vector<AnchoredObservable>& observables) const;

  const RunOptions& options() const { return options_; }
  const Torus& torus() const { return torus_; }
  const CompiledRule& compiled() const { return compiled_; }

 private:
  InitialLaw initial_;
  Torus torus_;
  CompiledRule compiled_;
  RunOptions options_;
};

Ensemble run(InitialLaw initial, const FourierRule& rule, Torus torus, RunOptions options);

}  // namespace pca
