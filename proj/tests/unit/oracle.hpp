#pragma once

// Brute-force reference implementations the unit tests check the library
// against. Everything here enumerates networks or searches grids directly
// from the model definitions; nothing shares code with the library proper.

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <utility>
#include <variant>
#include <vector>

#include "netrecon/models.hpp"
#include "netrecon/obsdata.hpp"

namespace oracle {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// log[ p^e (1-p)^(n-e) ], 0^0 = 1.
inline double log_factor(std::uint32_t e, std::uint32_t n, double p) {
  double v = 0.0;
  if (e > 0) v += e * std::log(p);
  if (n > e) v += (n - e) * std::log1p(-p);
  return v;
}

inline double logsumexp(const std::vector<double>& xs) {
  double m = kNegInf;
  for (double x : xs) m = std::max(m, x);
  if (m == kNegInf) return kNegInf;
  long double s = 0.0L;
  for (double x : xs) s += std::exp(static_cast<long double>(x - m));
  return m + static_cast<double>(std::log(s));
}

// Unordered pairs in lexicographic order; the enumeration index of (i, j).
inline std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs_of(std::uint32_t n) {
  std::vector<std::pair<std::uint32_t, std::uint32_t>> out;
  for (std::uint32_t i = 0; i < n; ++i)
    for (std::uint32_t j = i + 1; j < n; ++j) out.emplace_back(i, j);
  return out;
}

// log P(observations | binary network) for the models whose truth is a plain
// edge set. `edge[k]` follows the pairs_of order.
inline double data_loglik_given_network(const netrecon::ObservationCounts& counts,
                                        const netrecon::ModelParams& params,
                                        const std::vector<int>& edge) {
  const auto pairs = pairs_of(counts.n());
  double total = 0.0;
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const auto [i, j] = pairs[k];
    if (const auto* p = std::get_if<netrecon::IidParams>(&params)) {
      const auto c = counts.effective(i, j);
      total += log_factor(c.events, c.trials, edge[k] ? p->alpha : p->beta);
    } else if (const auto* pn = std::get_if<netrecon::PerNodeParams>(&params)) {
      const auto fwd = counts.effective(i, j);  // reporter i
      const auto rev = counts.effective(j, i);  // reporter j
      total += log_factor(fwd.events, fwd.trials, edge[k] ? pn->alpha[i] : pn->beta[i]);
      total += log_factor(rev.events, rev.trials, edge[k] ? pn->alpha[j] : pn->beta[j]);
    } else if (const auto* mm = std::get_if<netrecon::MultiModalParams>(&params)) {
      for (std::uint32_t m = 0; m < counts.modes(); ++m) {
        const auto c = counts.effective(i, j, m);
        total += log_factor(c.events, c.trials, edge[k] ? mm->alpha[m] : mm->beta[m]);
      }
    } else {
      throw std::logic_error("binary enumeration needs a binary-truth model");
    }
  }
  return total;
}

inline double binary_prior_rho(const netrecon::ModelParams& params) {
  if (const auto* p = std::get_if<netrecon::IidParams>(&params)) return p->rho;
  if (const auto* p = std::get_if<netrecon::PerNodeParams>(&params)) return p->rho;
  if (const auto* p = std::get_if<netrecon::MultiModalParams>(&params)) return p->rho;
  throw std::logic_error("no scalar edge prior for this model");
}

// Marginal log-likelihood by full enumeration (2^pairs networks, or
// W^pairs level assignments for the multilevel model).
inline double enum_loglik(const netrecon::ObservationCounts& counts,
                          const netrecon::ModelParams& params) {
  const auto pairs = pairs_of(counts.n());
  std::vector<double> addends;
  if (const auto* ml = std::get_if<netrecon::MultiLevelParams>(&params)) {
    const std::uint32_t w = ml->levels();
    std::uint64_t total = 1;
    for (std::size_t k = 0; k < pairs.size(); ++k) total *= w;
    for (std::uint64_t code = 0; code < total; ++code) {
      std::uint64_t rest = code;
      double lp = 0.0;
      for (const auto& [i, j] : pairs) {
        const std::uint32_t level = static_cast<std::uint32_t>(rest % w);
        rest /= w;
        const auto c = counts.effective(i, j);
        lp += std::log(ml->rho[level]) + log_factor(c.events, c.trials, ml->alpha[level]);
      }
      addends.push_back(lp);
    }
    return logsumexp(addends);
  }
  const double rho = binary_prior_rho(params);
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << pairs.size()); ++mask) {
    std::vector<int> edge(pairs.size());
    double lp = 0.0;
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      edge[k] = static_cast<int>((mask >> k) & 1);
      lp += edge[k] ? std::log(rho) : std::log1p(-rho);
    }
    addends.push_back(lp + data_loglik_given_network(counts, params, edge));
  }
  return logsumexp(addends);
}

// P(edge i-j | observations) by full enumeration (binary-truth models).
inline double enum_posterior(const netrecon::ObservationCounts& counts,
                             const netrecon::ModelParams& params, std::uint32_t i,
                             std::uint32_t j) {
  const auto pairs = pairs_of(counts.n());
  std::size_t target = pairs.size();
  for (std::size_t k = 0; k < pairs.size(); ++k)
    if (pairs[k] == std::make_pair(std::min(i, j), std::max(i, j))) target = k;
  const double rho = binary_prior_rho(params);
  std::vector<double> all, with_edge;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << pairs.size()); ++mask) {
    std::vector<int> edge(pairs.size());
    double lp = 0.0;
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      edge[k] = static_cast<int>((mask >> k) & 1);
      lp += edge[k] ? std::log(rho) : std::log1p(-rho);
    }
    lp += data_loglik_given_network(counts, params, edge);
    all.push_back(lp);
    if (edge[target]) with_edge.push_back(lp);
  }
  return std::exp(logsumexp(with_edge) - logsumexp(all));
}

// P(level of pair i-j = w | observations) by full enumeration.
inline std::vector<double> enum_level_posterior(const netrecon::ObservationCounts& counts,
                                                const netrecon::MultiLevelParams& params,
                                                std::uint32_t i, std::uint32_t j) {
  const auto pairs = pairs_of(counts.n());
  std::size_t target = pairs.size();
  for (std::size_t k = 0; k < pairs.size(); ++k)
    if (pairs[k] == std::make_pair(std::min(i, j), std::max(i, j))) target = k;
  const std::uint32_t w = params.levels();
  std::vector<std::vector<double>> by_level(w);
  std::vector<double> all;
  std::uint64_t total = 1;
  for (std::size_t k = 0; k < pairs.size(); ++k) total *= w;
  for (std::uint64_t code = 0; code < total; ++code) {
    std::uint64_t rest = code;
    double lp = 0.0;
    std::uint32_t target_level = 0;
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      const std::uint32_t level = static_cast<std::uint32_t>(rest % w);
      rest /= w;
      const auto c = counts.effective(pairs[k].first, pairs[k].second);
      lp += std::log(params.rho[level]) + log_factor(c.events, c.trials, params.alpha[level]);
      if (k == target) target_level = level;
    }
    all.push_back(lp);
    by_level[target_level].push_back(lp);
  }
  const double denom = logsumexp(all);
  std::vector<double> out(w);
  for (std::uint32_t v = 0; v < w; ++v) out[v] = std::exp(logsumexp(by_level[v]) - denom);
  return out;
}

// Expected complete-data log-likelihood E_Q[log P(observations, network)],
// the objective the closed-form parameter updates must maximize. Binary
// models take one marginal per pair via `q(i, j)`.
template <typename QFn>
double expected_complete_loglik(const netrecon::ObservationCounts& counts,
                                const netrecon::ModelParams& params, QFn q) {
  const auto pairs = pairs_of(counts.n());
  const double rho = binary_prior_rho(params);
  double total = 0.0;
  for (const auto& [i, j] : pairs) {
    const double qij = q(i, j);
    double on = std::log(rho), off = std::log1p(-rho);
    if (const auto* p = std::get_if<netrecon::IidParams>(&params)) {
      const auto c = counts.effective(i, j);
      on += log_factor(c.events, c.trials, p->alpha);
      off += log_factor(c.events, c.trials, p->beta);
    } else if (const auto* pn = std::get_if<netrecon::PerNodeParams>(&params)) {
      const auto fwd = counts.effective(i, j);
      const auto rev = counts.effective(j, i);
      on += log_factor(fwd.events, fwd.trials, pn->alpha[i]) +
            log_factor(rev.events, rev.trials, pn->alpha[j]);
      off += log_factor(fwd.events, fwd.trials, pn->beta[i]) +
             log_factor(rev.events, rev.trials, pn->beta[j]);
    } else if (const auto* mm = std::get_if<netrecon::MultiModalParams>(&params)) {
      for (std::uint32_t m = 0; m < counts.modes(); ++m) {
        const auto c = counts.effective(i, j, m);
        on += log_factor(c.events, c.trials, mm->alpha[m]);
        off += log_factor(c.events, c.trials, mm->beta[m]);
      }
    } else {
      throw std::logic_error("binary objective needs a binary-truth model");
    }
    total += qij * on + (1.0 - qij) * off;
  }
  return total;
}

// Multilevel variant; `qw(i, j)` returns the per-level posterior weights.
template <typename QFn>
double expected_complete_loglik_multilevel(const netrecon::ObservationCounts& counts,
                                           const netrecon::MultiLevelParams& params, QFn qw) {
  double total = 0.0;
  for (const auto& [i, j] : pairs_of(counts.n())) {
    const std::vector<double> weights = qw(i, j);
    const auto c = counts.effective(i, j);
    for (std::uint32_t w = 0; w < params.levels(); ++w)
      total += weights[w] *
               (std::log(params.rho[w]) + log_factor(c.events, c.trials, params.alpha[w]));
  }
  return total;
}

// Three-stage grid refinement of (alpha, beta, rho) for the shared-rate
// model; the closed-form update must land on (or beat) the best grid point.
template <typename QFn>
netrecon::IidParams grid_mstep_iid(const netrecon::ObservationCounts& counts, QFn q) {
  netrecon::IidParams best{0.5, 0.5, 0.5};
  double lo_a = 1e-9, hi_a = 1 - 1e-9, lo_b = lo_a, hi_b = hi_a, lo_r = lo_a, hi_r = hi_a;
  for (int stage = 0; stage < 6; ++stage) {
    double best_obj = kNegInf;
    netrecon::IidParams stage_best = best;
    const int steps = 20;
    for (int ia = 0; ia <= steps; ++ia)
      for (int ib = 0; ib <= steps; ++ib)
        for (int ir = 0; ir <= steps; ++ir) {
          netrecon::IidParams cand;
          cand.alpha = lo_a + (hi_a - lo_a) * ia / steps;
          cand.beta = lo_b + (hi_b - lo_b) * ib / steps;
          cand.rho = lo_r + (hi_r - lo_r) * ir / steps;
          const double obj = expected_complete_loglik(counts, netrecon::ModelParams{cand}, q);
          if (obj > best_obj) {
            best_obj = obj;
            stage_best = cand;
          }
        }
    best = stage_best;
    const double shrink = 2.0 / steps;
    auto narrow = [&](double center, double& lo, double& hi) {
      const double span = (hi - lo) * shrink;
      lo = std::max(1e-12, center - span);
      hi = std::min(1.0 - 1e-12, center + span);
    };
    narrow(best.alpha, lo_a, hi_a);
    narrow(best.beta, lo_b, hi_b);
    narrow(best.rho, lo_r, hi_r);
  }
  return best;
}

}  // namespace oracle
