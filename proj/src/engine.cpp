#include "pca/engine.hpp"

#include <algorithm>
#include <bit>

#include "pca/error.hpp"
#include "pca/parallel.hpp"
#include "pca/random.hpp"

namespace pca {

Torus::Torus(std::vector<int> sides) : sides_(std::move(sides)) {
  if (sides_.empty()) throw InvalidArgument("torus needs at least one side");
  std::uint64_t m = 1;
  for (int L : sides_) {
    if (L < 1) throw InvalidArgument("torus sides must be positive");
    m *= static_cast<std::uint64_t>(L);
    if (m > (std::uint64_t{1} << 31)) throw ResourceError("torus exceeds 2^31 sites");
  }
  size_ = static_cast<std::size_t>(m);
}

std::size_t Torus::index(const Site& s) const {
  if (s.size() != sides_.size()) throw InvalidArgument("site " + to_string(s) + " has wrong dimension for torus");
  std::size_t idx = 0;
  for (std::size_t k = sides_.size(); k-- > 0;) {
    const int L = sides_[k];
    const int w = ((s[k] % L) + L) % L;
    idx = idx * static_cast<std::size_t>(L) + static_cast<std::size_t>(w);
  }
  return idx;
}

Site Torus::coords(std::size_t index) const {
  Site s(sides_.size());
  for (std::size_t k = 0; k < sides_.size(); ++k) {
    s[k] = static_cast<int>(index % static_cast<std::size_t>(sides_[k]));
    index /= static_cast<std::size_t>(sides_[k]);
  }
  return s;
}

TorusConfig::TorusConfig(Torus torus, int spin) : torus_(std::move(torus)), words_((torus_.size() + 63) / 64, 0) {
  if (spin == 1) {
    std::fill(words_.begin(), words_.end(), ~std::uint64_t{0});
    if (const auto tail = torus_.size() % 64) words_.back() = (std::uint64_t{1} << tail) - 1;
  } else if (spin != -1) {
    throw InvalidArgument("spin must be +1 or -1");
  }
}

TorusConfig TorusConfig::from_bits(const Torus& torus, std::uint64_t bits) {
  if (torus.size() > 64) throw InvalidArgument("from_bits needs a torus of at most 64 sites");
  TorusConfig c(torus, -1);
  c.words_[0] = torus.size() == 64 ? bits : bits & ((std::uint64_t{1} << torus.size()) - 1);
  return c;
}

void TorusConfig::set(std::size_t i, int spin) {
  const std::uint64_t b = std::uint64_t{1} << (i & 63);
  if (spin == 1)
    words_[i >> 6] |= b;
  else
    words_[i >> 6] &= ~b;
}

double TorusConfig::magnetization() const {
  std::size_t plus = 0;
  for (auto w : words_) plus += static_cast<std::size_t>(std::popcount(w));
  return (2.0 * static_cast<double>(plus) - static_cast<double>(torus_.size())) / static_cast<double>(torus_.size());
}

TorusConfig TorusConfig::shifted(const Site& offset) const {
  TorusConfig out(torus_, -1);
  for (std::size_t i = 0; i < torus_.size(); ++i)
    if (bit(i)) out.set(torus_.index(torus_.coords(i) + offset), 1);
  return out;
}

InitialLaw InitialLaw::product(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("product law needs p in [0,1]");
  return {Kind::product, p, std::nullopt};
}

CompiledRule::CompiledRule(const FourierRule& rule, const Torus& torus)
    : rule_(rule), torus_(torus), masked_(rule) {
  if (rule.dimension() != torus.dimension()) throw InvalidArgument("rule and torus dimensions differ");
  const auto report = validate(rule);
  if (!report.admissible)
    throw Inadmissible("rule is not admissible (max |h| = " + std::to_string(report.h_max) + ")");
  const int range = propagation_speed(rule);
  for (int L : torus.sides())
    if (L < 2 * range + 1)
      throw InvalidArgument("torus side " + std::to_string(L) + " is shorter than 2 * range + 1 = " +
                            std::to_string(2 * range + 1));

  const auto& hood = masked_.neighborhood();
  neighbors_.resize(torus.size() * hood.size());
  for (std::size_t i = 0; i < torus.size(); ++i) {
    const Site x = torus.coords(i);
    for (std::size_t j = 0; j < hood.size(); ++j)
      neighbors_[i * hood.size() + j] = static_cast<std::uint32_t>(torus.index(x + hood[j]));
  }
  if (hood.size() <= kTableLimit) {
    table_.resize(std::size_t{1} << hood.size());
    for (std::size_t p = 0; p < table_.size(); ++p)
      table_[p] = std::clamp(0.5 * (1.0 + masked_.h(p)), 0.0, 1.0);
  }
}

std::uint64_t CompiledRule::pattern(const TorusConfig& config, std::size_t site) const {
  const std::size_t k = masked_.neighborhood().size();
  const std::uint32_t* nb = neighbors_.data() + site * k;
  std::uint64_t pat = 0;
  for (std::size_t j = 0; j < k; ++j) pat |= std::uint64_t{config.bit(nb[j])} << j;
  return pat;
}

std::size_t shifted_label(const Torus& torus, std::size_t site, const Site& label_shift) {
  if (label_shift.empty()) return site;
  return torus.index(torus.coords(site) - label_shift);
}

TorusConfig step(const TorusConfig& config, const CompiledRule& rule, const SeedSpec& seed,
                 std::uint32_t replica, std::uint32_t step_index, unsigned threads) {
  if (!(config.torus() == rule.torus())) throw InvalidArgument("configuration and compiled rule use different tori");
  TorusConfig next(config.torus(), -1);
  const std::size_t M = config.torus().size();
  auto out = next.words();
  parallel_chunks(out.size(), 64, threads, [&](std::size_t w0, std::size_t w1) {
    for (std::size_t w = w0; w < w1; ++w) {
      std::uint64_t word = 0;
      const std::size_t end = std::min(M, (w + 1) * 64);
      for (std::size_t i = w * 64; i < end; ++i) {
        const double p = rule.prob_plus(config, i);
        const auto label = static_cast<std::uint32_t>(shifted_label(config.torus(), i, seed.label_shift));
        if (draw_unit(seed.master, Stream::dynamics, replica, step_index, label) < p) word |= std::uint64_t{1} << (i & 63);
      }
      out[w] = word;
    }
  });
  return next;
}

TorusConfig sample_initial(const InitialLaw& law, const Torus& torus, const SeedSpec& seed, std::uint32_t replica) {
  switch (law.kind) {
    case InitialLaw::Kind::all_plus:
      return TorusConfig(torus, 1);
    case InitialLaw::Kind::all_minus:
      return TorusConfig(torus, -1);
    case InitialLaw::Kind::explicit_config:
      if (!law.config || !(law.config->torus() == torus))
        throw InvalidArgument("explicit initial configuration does not match the torus");
      return *law.config;
    case InitialLaw::Kind::product: {
      TorusConfig c(torus, -1);
      for (std::size_t i = 0; i < torus.size(); ++i) {
        const auto label = static_cast<std::uint32_t>(shifted_label(torus, i, seed.label_shift));
        if (draw_unit(seed.master, Stream::initial, replica, 0, label) < law.p) c.set(i, 1);
      }
      return c;
    }
  }
  throw InvalidArgument("unknown initial law");
}

std::vector<std::size_t> placed_sites(const Torus& torus, const std::vector<Site>& sites, const Site& anchor) {
  std::vector<std::size_t> idx;
  idx.reserve(sites.size());
  for (const auto& s : sites) idx.push_back(torus.index(s + anchor));
  auto sorted = idx;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw InvalidArgument("observable does not fit the torus: two of its sites wrap onto one");
  return idx;
}

double evaluate(const LocalFunction& f, const TorusConfig& config, const Site& anchor) {
  const auto idx = placed_sites(config.torus(), f.sites(), anchor);
  std::uint64_t a = 0;
  for (std::size_t j = 0; j < idx.size(); ++j) a |= std::uint64_t{config.bit(idx[j])} << j;
  return f(a);
}

Ensemble::Ensemble(InitialLaw initial, const FourierRule& rule, Torus torus, RunOptions options)
    : initial_(std::move(initial)), torus_(torus), compiled_(rule, torus), options_(std::move(options)) {
  if (options_.steps < 0) throw InvalidArgument("steps must be nonnegative");
  if (options_.replicas < 1) throw InvalidArgument("replicas must be at least 1");
  if (options_.steps > 0xFFFFFFFEL) throw ResourceError("too many steps for the stream labels");
}

bool Ensemble::Trajectory::advance() {
  if (step_ >= owner_->options_.steps) return false;
  const unsigned inner = owner_->options_.replicas == 1 ? owner_->options_.threads : 1;
  config_ = step(config_, owner_->compiled_, owner_->options_.seed, replica_, static_cast<std::uint32_t>(step_ + 1),
                 inner);
  ++step_;
  return true;
}

Ensemble::Trajectory Ensemble::trajectory(std::uint32_t replica) const {
  if (replica >= options_.replicas) throw InvalidArgument("replica index out of range");
  return Trajectory(this, replica, sample_initial(initial_, torus_, options_.seed, replica));
}

std::vector<TorusConfig> Ensemble::states(std::optional<long> at) const {
  const long target = at.value_or(options_.steps);
  if (target < 0 || target > options_.steps) throw InvalidArgument("requested time outside the run");
  std::vector<TorusConfig> out(options_.replicas);
  parallel_chunks(options_.replicas, 16, options_.threads, [&](std::size_t r0, std::size_t r1) {
    for (std::size_t r = r0; r < r1; ++r) {
      auto traj = trajectory(static_cast<std::uint32_t>(r));
      while (traj.step_index() < target) traj.advance();
      out[r] = traj.current();
    }
  });
  return out;
}

ObservableSeries Ensemble::observe(const std::vector<AnchoredObservable>& observables) const {
  ObservableSeries s{options_.steps, options_.replicas, observables.size(), {}};
  s.values.resize(static_cast<std::size_t>(options_.replicas) * static_cast<std::size_t>(options_.steps + 1) *
                  observables.size());
  for (const auto& o : observables) placed_sites(torus_, o.f.sites(), o.anchor);
  parallel_chunks(options_.replicas, 16, options_.threads, [&](std::size_t r0, std::size_t r1) {
    for (std::size_t r = r0; r < r1; ++r) {
      auto traj = trajectory(static_cast<std::uint32_t>(r));
      do {
        const std::size_t base =
            (r * static_cast<std::size_t>(options_.steps + 1) + static_cast<std::size_t>(traj.step_index())) *
            observables.size();
        for (std::size_t j = 0; j < observables.size(); ++j)
          s.values[base + j] = evaluate(observables[j].f, traj.current(), observables[j].anchor);
      } while (traj.advance());
    }
  });
  return s;
}

Ensemble run(InitialLaw initial, const FourierRule& rule, Torus torus, RunOptions options) {
  return Ensemble(std::move(initial), rule, std::move(torus), std::move(options));
}

}  // namespace pca
