#include "netrecon/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "netrecon/rng.hpp"

namespace netrecon {

void EmConfig::validate() const {
  if (!(tol_param > 0) || !(tol_loglik > 0))
    throw ContractError("tolerances must be positive");
  if (max_iter == 0) throw ContractError("max_iter must be >= 1");
  if (restarts == 0) throw ContractError("restarts must be >= 1");
}

ModelParams init_params(ModelKind kind, const ObservationCounts& counts, std::uint64_t seed,
                        std::uint32_t levels) {
  Rng rng(seed);
  auto alpha = [&rng] { return rng.uniform(0.5, 0.99); };
  auto beta = [&rng] { return rng.uniform(0.001, 0.5); };
  switch (kind) {
    case ModelKind::Iid: {
      IidParams p;
      p.alpha = alpha();
      p.beta = beta();
      p.rho = rng.uniform(0.01, 0.5);
      return p;
    }
    case ModelKind::PerNode: {
      PerNodeParams p;
      const std::uint32_t n = counts.n();
      p.alpha.reserve(n);
      p.beta.reserve(n);
      for (std::uint32_t i = 0; i < n; ++i) p.alpha.push_back(alpha());
      for (std::uint32_t i = 0; i < n; ++i) p.beta.push_back(beta());
      p.rho = rng.uniform(0.01, 0.5);
      return p;
    }
    case ModelKind::MultiLevel: {
      if (levels < 2) throw ContractError("multilevel model needs W >= 2 levels");
      MultiLevelParams p;
      p.alpha.reserve(levels);
      p.rho.reserve(levels);
      for (std::uint32_t w = 0; w < levels; ++w) p.alpha.push_back(rng.uniform(0.001, 0.99));
      // Symmetric random point on the simplex.
      double total = 0;
      for (std::uint32_t w = 0; w < levels; ++w) {
        p.rho.push_back(rng.exponential());
        total += p.rho.back();
      }
      for (double& r : p.rho) r /= total;
      return p;
    }
    case ModelKind::MultiModal: {
      MultiModalParams p;
      const std::uint32_t modes = counts.modes();
      p.alpha.reserve(modes);
      p.beta.reserve(modes);
      for (std::uint32_t m = 0; m < modes; ++m) p.alpha.push_back(alpha());
      for (std::uint32_t m = 0; m < modes; ++m) p.beta.push_back(beta());
      p.rho = rng.uniform(0.01, 0.5);
      return p;
    }
  }
  throw ContractError("unknown model kind");
}

bool resolve_label_swap(ModelParams& params, PosteriorEdges& posterior) {
  const auto mean = [](const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  };
  bool swap = false;
  std::visit(
      [&](auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, IidParams>) {
          if (p.alpha < p.beta) {
            std::swap(p.alpha, p.beta);
            p.rho = 1.0 - p.rho;
            swap = true;
          }
        } else if constexpr (std::is_same_v<T, PerNodeParams>) {
          if (p.rho > 0.5 && mean(p.alpha) < mean(p.beta)) {
            p.alpha.swap(p.beta);
            p.rho = 1.0 - p.rho;
            swap = true;
          }
        } else if constexpr (std::is_same_v<T, MultiModalParams>) {
          const double sa = std::accumulate(p.alpha.begin(), p.alpha.end(), 0.0);
          const double sb = std::accumulate(p.beta.begin(), p.beta.end(), 0.0);
          if (sa < sb) {
            p.alpha.swap(p.beta);
            p.rho = 1.0 - p.rho;
            swap = true;
          }
        }
        // MultiLevel: nothing to do; level order is handled separately.
      },
      params);
  if (swap) posterior.complement();
  return swap;
}

namespace {

double max_abs_delta(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

struct RestartOutcome {
  ModelParams params;
  EmTrace trace;  // iterations of this restart only
  std::vector<std::string> degenerate;
};

RestartOutcome run_single(ModelKind kind, const ObservationCounts& counts,
                          const EmConfig& config, std::uint32_t levels, std::uint64_t seed) {
  RestartOutcome out;
  out.params = clamp_params(init_params(kind, counts, seed, levels));
  double prev_ll = -std::numeric_limits<double>::infinity();
  for (std::uint32_t iter = 1; iter <= config.max_iter; ++iter) {
    const PosteriorEdges posterior = e_step(counts, out.params);
    MStepResult update = m_step(counts, posterior, out.params);
    const double ll = profile_loglik(counts, update.params);
    if (!std::isfinite(ll))
      throw NumericError("non-finite profile log-likelihood at iteration " +
                         std::to_string(iter));
    const double delta =
        max_abs_delta(flatten_params(out.params), flatten_params(update.params));
    out.trace.iterations.push_back({iter, ll, delta});
    out.params = std::move(update.params);
    out.degenerate = std::move(update.degenerate);
    const bool ll_settled =
        iter > 1 && std::abs(ll - prev_ll) <= config.tol_loglik * std::max(1.0, std::abs(prev_ll));
    prev_ll = ll;
    if (delta <= config.tol_param || ll_settled) {
      out.trace.converged = true;
      break;
    }
  }
  out.trace.iterations_used = static_cast<std::uint32_t>(out.trace.iterations.size());
  return out;
}

}  // namespace

EmResult run_em(ModelKind kind, const ObservationCounts& counts, const EmConfig& config,
                std::uint32_t levels) {
  config.validate();
  std::vector<RestartOutcome> outcomes;
  outcomes.reserve(config.restarts);
  std::vector<double> finals;
  for (std::uint32_t r = 0; r < config.restarts; ++r) {
    outcomes.push_back(run_single(kind, counts, config, levels, config.seed + r));
    finals.push_back(outcomes.back().trace.iterations.back().loglik);
  }
  std::size_t best = 0;
  for (std::size_t r = 1; r < outcomes.size(); ++r)
    if (finals[r] > finals[best]) best = r;

  RestartOutcome& winner = outcomes[best];
  // Posterior consistent with the final parameters.
  PosteriorEdges posterior = e_step(counts, winner.params);
  if (kind == ModelKind::MultiLevel) {
    auto& p = std::get<MultiLevelParams>(winner.params);
    canonicalize_levels(p, posterior);
  } else {
    resolve_label_swap(winner.params, posterior);
  }

  EmResult result{std::move(winner.params), std::move(posterior), std::move(winner.trace),
                  std::move(winner.degenerate)};
  result.trace.restart_index = static_cast<std::uint32_t>(best);
  result.trace.restart_logliks = std::move(finals);
  return result;
}

}  // namespace netrecon
