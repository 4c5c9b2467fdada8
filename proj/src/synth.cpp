#include "netrecon/synth.hpp"

#include <algorithm>

#include "netrecon/rng.hpp"

namespace netrecon {

std::uint32_t NetworkSample::level(std::uint32_t i, std::uint32_t j) const {
  if (i == j) return 0;
  if (i > j) std::swap(i, j);
  auto it = std::lower_bound(edges.begin(), edges.end(), std::tuple{i, j, 0u},
                             [](const auto& a, const auto& b) {
                               return std::pair{std::get<0>(a), std::get<1>(a)} <
                                      std::pair{std::get<0>(b), std::get<1>(b)};
                             });
  if (it == edges.end() || std::get<0>(*it) != i || std::get<1>(*it) != j) return 0;
  return std::get<2>(*it);
}

std::uint32_t NetworkSample::degree(std::uint32_t node) const {
  std::uint32_t d = 0;
  for (const auto& [u, v, w] : edges)
    if (u == node || v == node) ++d;
  return d;
}

namespace {

void validate_spec(const SynthSpec& spec) {
  if (spec.n < 2) throw ContractError("need at least 2 nodes");
  if (!spec.labels.empty() && spec.labels.size() != spec.n)
    throw ContractError("label list must have one entry per node");
  const auto kind = kind_of(spec.truth);
  const std::size_t modes =
      kind == ModelKind::MultiModal ? std::get<MultiModalParams>(spec.truth).modes() : 1;
  if (spec.trials.size() != modes)
    throw ContractError("trials list must have one value per observation mode");
  std::visit(
      [](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        auto check = [](double v, const char* what) {
          if (!(v >= 0.0 && v <= 1.0))
            throw ContractError(std::string(what) + " must lie in [0, 1]");
        };
        if constexpr (std::is_same_v<T, IidParams>) {
          check(p.alpha, "alpha");
          check(p.beta, "beta");
          check(p.rho, "rho");
        } else if constexpr (std::is_same_v<T, PerNodeParams>) {
          for (double a : p.alpha) check(a, "alpha");
          for (double b : p.beta) check(b, "beta");
          check(p.rho, "rho");
        } else if constexpr (std::is_same_v<T, MultiLevelParams>) {
          if (p.levels() < 2) throw ContractError("multilevel truth needs W >= 2");
          double total = 0;
          for (double a : p.alpha) check(a, "alpha");
          for (double r : p.rho) {
            check(r, "rho");
            total += r;
          }
          if (std::abs(total - 1.0) > 1e-9)
            throw ContractError("multilevel rho must sum to 1");
        } else {
          if (p.modes() == 0 || p.beta.size() != p.alpha.size())
            throw ContractError("multimodal truth needs matching alpha/beta per mode");
          for (double a : p.alpha) check(a, "alpha");
          for (double b : p.beta) check(b, "beta");
          check(p.rho, "rho");
        }
      },
      spec.truth);
  if (kind == ModelKind::PerNode) {
    const auto& p = std::get<PerNodeParams>(spec.truth);
    if (p.alpha.size() != spec.n || p.beta.size() != spec.n)
      throw ContractError("pernode truth needs one alpha/beta per node");
  }
}

NodeUniverse make_universe(const SynthSpec& spec) {
  NodeUniverse universe;
  if (!spec.labels.empty()) {
    for (const auto& label : spec.labels) universe.add(label);
    if (universe.size() != spec.n) throw ContractError("duplicate node labels");
  } else {
    for (std::uint32_t i = 0; i < spec.n; ++i) universe.add("v" + std::to_string(i));
  }
  return universe;
}

std::uint32_t binomial_draw(Rng& rng, std::uint32_t trials, double rate) {
  std::uint32_t events = 0;
  for (std::uint32_t t = 0; t < trials; ++t)
    if (rng.bernoulli(rate)) ++events;
  return events;
}

}  // namespace

NetworkSample generate_ground_truth(const SynthSpec& spec) {
  validate_spec(spec);
  const std::uint64_t seed = derive_seed(spec.seed, 0);
  Rng rng(seed);
  NetworkSample sample;
  sample.n = spec.n;
  sample.seed = seed;
  const auto kind = kind_of(spec.truth);
  if (kind == ModelKind::MultiLevel) {
    const auto& p = std::get<MultiLevelParams>(spec.truth);
    sample.levels = p.levels();
    for (std::uint32_t i = 0; i + 1 < spec.n; ++i)
      for (std::uint32_t j = i + 1; j < spec.n; ++j) {
        const double u = rng.uniform();
        double cum = 0;
        std::uint32_t level = p.levels() - 1;
        for (std::uint32_t w = 0; w < p.levels(); ++w) {
          cum += p.rho[w];
          if (u < cum) {
            level = w;
            break;
          }
        }
        if (level > 0) sample.edges.emplace_back(i, j, level);
      }
    return sample;
  }
  const double rho = std::visit(
      [](const auto& p) -> double {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, MultiLevelParams>) return 0;  // unreachable
        else return p.rho;
      },
      spec.truth);
  sample.levels = 2;
  for (std::uint32_t i = 0; i + 1 < spec.n; ++i)
    for (std::uint32_t j = i + 1; j < spec.n; ++j)
      if (rng.bernoulli(rho)) sample.edges.emplace_back(i, j, 1);
  return sample;
}

ObservationCounts generate_observations(const NetworkSample& truth, const SynthSpec& spec) {
  validate_spec(spec);
  if (truth.n != spec.n) throw ContractError("truth and spec node counts differ");
  Rng rng(derive_seed(spec.seed, 1));
  NodeUniverse universe = make_universe(spec);
  const auto kind = kind_of(spec.truth);
  std::map<EntryKey, Counts> entries;

  if (kind == ModelKind::PerNode) {
    const auto& p = std::get<PerNodeParams>(spec.truth);
    const std::uint32_t trials = spec.trials[0];
    for (std::uint32_t i = 0; i + 1 < spec.n; ++i)
      for (std::uint32_t j = i + 1; j < spec.n; ++j) {
        const bool edge = truth.has_edge(i, j);
        const auto e_fwd = binomial_draw(rng, trials, edge ? p.alpha[i] : p.beta[i]);
        const auto e_rev = binomial_draw(rng, trials, edge ? p.alpha[j] : p.beta[j]);
        if (e_fwd) entries.emplace(EntryKey{i, j, 0}, Counts{e_fwd, trials});
        if (e_rev) entries.emplace(EntryKey{j, i, 0}, Counts{e_rev, trials});
      }
    return ObservationCounts(std::move(universe), true, 1, {trials}, std::move(entries));
  }

  if (kind == ModelKind::MultiModal) {
    const auto& p = std::get<MultiModalParams>(spec.truth);
    for (std::uint32_t i = 0; i + 1 < spec.n; ++i)
      for (std::uint32_t j = i + 1; j < spec.n; ++j) {
        const bool edge = truth.has_edge(i, j);
        for (std::uint32_t m = 0; m < p.modes(); ++m) {
          const auto e =
              binomial_draw(rng, spec.trials[m], edge ? p.alpha[m] : p.beta[m]);
          if (e) entries.emplace(EntryKey{i, j, m}, Counts{e, spec.trials[m]});
        }
      }
    return ObservationCounts(std::move(universe), false, p.modes(),
                             std::vector<std::uint32_t>(spec.trials), std::move(entries));
  }

  const std::uint32_t trials = spec.trials[0];
  for (std::uint32_t i = 0; i + 1 < spec.n; ++i)
    for (std::uint32_t j = i + 1; j < spec.n; ++j) {
      double rate;
      if (kind == ModelKind::MultiLevel) {
        rate = std::get<MultiLevelParams>(spec.truth).alpha[truth.level(i, j)];
      } else {
        const auto& p = std::get<IidParams>(spec.truth);
        rate = truth.has_edge(i, j) ? p.alpha : p.beta;
      }
      const auto e = binomial_draw(rng, trials, rate);
      if (e) entries.emplace(EntryKey{i, j, 0}, Counts{e, trials});
    }
  return ObservationCounts(std::move(universe), false, 1, {trials}, std::move(entries));
}

}  // namespace netrecon
