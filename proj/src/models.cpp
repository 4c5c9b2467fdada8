#include "netrecon/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

namespace netrecon {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double clamp_rate(double p) { return std::clamp(p, kParamClamp, 1.0 - kParamClamp); }

// log[ p^e (1-p)^(n-e) ] with the 0^0 = 1 convention.
double log_binomial_factor(std::uint32_t e, std::uint32_t n, double p) {
  double v = 0.0;
  if (e) v += e * std::log(p);
  if (n - e) v += (n - e) * std::log1p(-p);
  return v;
}

// Posterior edge probability from the two hypotheses' log masses. The log
// odds negate exactly under a label swap, and the complemented side is
// computed as a literal 1 - q so the symmetry survives at double precision.
double posterior_from_log(double log_edge, double log_noedge) {
  const double d = log_noedge - log_edge;
  if (std::isnan(d))
    throw NumericError("posterior mass vanished on both hypotheses");
  if (d >= 0) return 1.0 / (1.0 + std::exp(d));
  return 1.0 - 1.0 / (1.0 + std::exp(-d));
}

double log_sum_exp(double a, double b) {
  const double m = std::max(a, b);
  if (m == -kInf) return -kInf;
  return m + std::log1p(std::exp(std::min(a, b) - m));
}

void require_exchangeable(const ObservationCounts& counts, std::uint32_t modes,
                          const char* model) {
  if (counts.directed())
    throw ContractError(std::string(model) + " model needs undirected counts");
  if (counts.modes() != modes)
    throw ContractError(std::string(model) + " model expects " + std::to_string(modes) +
                        " observation mode(s), counts have " +
                        std::to_string(counts.modes()));
}

// Shared kernel for the exchangeable binary-edge models: iid is the one-mode
// special case of the multimodal computation, so both take the same path.
double binary_mixture_q(std::span<const Counts> sig, std::span<const double> alpha,
                        std::span<const double> beta, double rho) {
  bool any = false;
  for (const Counts& c : sig)
    if (c.events || c.trials) any = true;
  if (!any) return rho;  // no evidence: the prior, exactly
  double log_edge = std::log(rho);
  double log_noedge = std::log(1.0 - rho);
  for (std::size_t m = 0; m < sig.size(); ++m) {
    log_edge += log_binomial_factor(sig[m].events, sig[m].trials, alpha[m]);
    log_noedge += log_binomial_factor(sig[m].events, sig[m].trials, beta[m]);
  }
  return posterior_from_log(log_edge, log_noedge);
}

PosteriorEdges binary_class_posterior(const ObservationCounts& counts,
                                      std::span<const double> alpha,
                                      std::span<const double> beta, double rho) {
  auto classes = pair_classes(counts);
  std::vector<double> q;
  q.reserve(classes->classes().size());
  for (const PairClass& cls : classes->classes())
    q.push_back(binary_mixture_q(cls.signature, alpha, beta, rho));
  return PosteriorEdges::binary(std::move(classes), std::move(q));
}

double binary_class_loglik(const ObservationCounts& counts, std::span<const double> alpha,
                           std::span<const double> beta, double rho) {
  const auto classes = pair_classes(counts);
  long double acc = 0.0L;
  for (const PairClass& cls : classes->classes()) {
    double log_edge = std::log(rho);
    double log_noedge = std::log(1.0 - rho);
    for (std::size_t m = 0; m < cls.signature.size(); ++m) {
      log_edge += log_binomial_factor(cls.signature[m].events, cls.signature[m].trials,
                                      alpha[m]);
      log_noedge += log_binomial_factor(cls.signature[m].events, cls.signature[m].trials,
                                        beta[m]);
    }
    acc += static_cast<long double>(log_sum_exp(log_edge, log_noedge)) *
           static_cast<long double>(cls.member_count);
  }
  return static_cast<double>(acc);
}

void require_binary_posterior(const PosteriorEdges& posterior, const ObservationCounts& counts) {
  if (posterior.kind() != PosteriorEdges::Kind::Binary)
    throw ContractError("expected a binary-edge posterior");
  if (posterior.n() != counts.n())
    throw ContractError("posterior and counts cover different node sets");
}

std::vector<Counts> pair_signature(const ObservationCounts& counts, std::uint32_t i,
                                   std::uint32_t j) {
  std::vector<Counts> sig;
  sig.reserve(counts.modes() * (counts.directed() ? 2 : 1));
  for (std::uint32_t m = 0; m < counts.modes(); ++m) {
    sig.push_back(counts.effective(i, j, m));
    if (counts.directed()) sig.push_back(counts.effective(j, i, m));
  }
  return sig;
}

// Unordered pairs carrying at least one explicit entry, sorted.
std::vector<std::pair<std::uint32_t, std::uint32_t>> entry_pairs(
    const ObservationCounts& counts) {
  std::set<std::pair<std::uint32_t, std::uint32_t>> pairs;
  for (const auto& [key, c] : counts.entries())
    pairs.emplace(std::min(key.u, key.v), std::max(key.u, key.v));
  return {pairs.begin(), pairs.end()};
}

}  // namespace

ModelKind kind_of(const ModelParams& params) {
  return static_cast<ModelKind>(params.index());
}

const char* kind_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::Iid: return "iid";
    case ModelKind::PerNode: return "pernode";
    case ModelKind::MultiLevel: return "multilevel";
    case ModelKind::MultiModal: return "multimodal";
  }
  throw ContractError("unknown model kind");
}

ModelKind kind_from_name(const std::string& name) {
  if (name == "iid") return ModelKind::Iid;
  if (name == "pernode") return ModelKind::PerNode;
  if (name == "multilevel") return ModelKind::MultiLevel;
  if (name == "multimodal") return ModelKind::MultiModal;
  throw ContractError("unknown model kind '" + name + "'");
}

ModelParams clamp_params(ModelParams params) {
  std::visit(
      [](auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, IidParams>) {
          p.alpha = clamp_rate(p.alpha);
          p.beta = clamp_rate(p.beta);
          p.rho = clamp_rate(p.rho);
        } else if constexpr (std::is_same_v<T, PerNodeParams>) {
          for (double& a : p.alpha) a = clamp_rate(a);
          for (double& b : p.beta) b = clamp_rate(b);
          p.rho = clamp_rate(p.rho);
        } else if constexpr (std::is_same_v<T, MultiLevelParams>) {
          for (double& a : p.alpha) a = clamp_rate(a);
          double total = 0;
          for (double& r : p.rho) {
            r = clamp_rate(r);
            total += r;
          }
          for (double& r : p.rho) r /= total;
        } else {
          for (double& a : p.alpha) a = clamp_rate(a);
          for (double& b : p.beta) b = clamp_rate(b);
          p.rho = clamp_rate(p.rho);
        }
      },
      params);
  return params;
}

std::vector<double> flatten_params(const ModelParams& params) {
  std::vector<double> flat;
  std::visit(
      [&flat](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, IidParams>) {
          flat = {p.alpha, p.beta, p.rho};
        } else if constexpr (std::is_same_v<T, MultiLevelParams>) {
          flat.insert(flat.end(), p.alpha.begin(), p.alpha.end());
          flat.insert(flat.end(), p.rho.begin(), p.rho.end());
        } else {
          flat.insert(flat.end(), p.alpha.begin(), p.alpha.end());
          flat.insert(flat.end(), p.beta.begin(), p.beta.end());
          flat.push_back(p.rho);
        }
      },
      params);
  return flat;
}

PosteriorEdges PosteriorEdges::binary(std::shared_ptr<const PairClassSet> classes,
                                      std::vector<double> class_q) {
  if (!classes) throw ContractError("null class set");
  if (class_q.size() != classes->classes().size())
    throw ContractError("one posterior value per class required");
  PosteriorEdges out;
  out.kind_ = Kind::Binary;
  out.levels_ = 1;
  out.classes_ = std::move(classes);
  out.values_ = std::move(class_q);
  return out;
}

PosteriorEdges PosteriorEdges::multilevel(std::shared_ptr<const PairClassSet> classes,
                                          std::uint32_t levels,
                                          std::vector<double> class_q_flat) {
  if (!classes) throw ContractError("null class set");
  if (levels < 2) throw ContractError("multilevel posterior needs >= 2 levels");
  if (class_q_flat.size() != classes->classes().size() * levels)
    throw ContractError("levels * classes posterior values required");
  PosteriorEdges out;
  out.kind_ = Kind::MultiLevel;
  out.levels_ = levels;
  out.classes_ = std::move(classes);
  out.values_ = std::move(class_q_flat);
  return out;
}

double PosteriorEdges::class_q(std::size_t cls) const {
  if (kind_ != Kind::Binary) throw ContractError("not a binary posterior");
  return values_.at(cls);
}

std::span<const double> PosteriorEdges::class_level_q(std::size_t cls) const {
  if (kind_ != Kind::MultiLevel) throw ContractError("not a multilevel posterior");
  if (cls >= classes_->classes().size()) throw ContractError("class index out of range");
  return {values_.data() + cls * levels_, levels_};
}

double PosteriorEdges::q(std::uint32_t i, std::uint32_t j) const {
  if (kind_ != Kind::Binary) throw ContractError("not a binary posterior");
  const auto k = PairClassSet::pair_index(classes_->n(), i, j);
  if (auto it = overrides_.find(k); it != overrides_.end()) return it->second;
  return values_[classes_->class_of(i, j)];
}

std::span<const double> PosteriorEdges::level_q(std::uint32_t i, std::uint32_t j) const {
  return class_level_q(classes_->class_of(i, j));
}

void PosteriorEdges::set_override(std::uint32_t i, std::uint32_t j, double q) {
  if (kind_ != Kind::Binary) throw ContractError("overrides are binary-only");
  overrides_[PairClassSet::pair_index(classes_->n(), i, j)] = q;
}

void PosteriorEdges::complement() {
  if (kind_ != Kind::Binary) throw ContractError("complement is binary-only");
  for (double& v : values_) v = 1.0 - v;
  for (auto& [k, v] : overrides_) v = 1.0 - v;
}

void PosteriorEdges::permute_levels(const std::vector<std::uint32_t>& perm) {
  if (kind_ != Kind::MultiLevel) throw ContractError("not a multilevel posterior");
  if (perm.size() != levels_) throw ContractError("permutation size mismatch");
  std::vector<double> old(levels_);
  for (std::size_t c = 0; c < classes_->classes().size(); ++c) {
    double* row = values_.data() + c * levels_;
    std::copy(row, row + levels_, old.begin());
    for (std::uint32_t w = 0; w < levels_; ++w) row[w] = old[perm[w]];
  }
}

std::vector<double> expand_binary_posterior(const PosteriorEdges& posterior) {
  if (posterior.kind() != PosteriorEdges::Kind::Binary)
    throw ContractError("not a binary posterior");
  const PairClassSet& cs = posterior.classes();
  std::vector<double> dense(cs.pair_count());
  if (cs.default_class() >= 0)
    std::fill(dense.begin(), dense.end(), posterior.class_q(cs.default_class()));
  for (std::size_t c = 0; c < cs.classes().size(); ++c) {
    const PairClass& cls = cs.classes()[c];
    if (cls.implicit_default) continue;
    for (std::uint64_t k : cls.members) dense[k] = posterior.class_q(c);
  }
  for (const auto& [k, q] : posterior.overrides()) dense[k] = q;
  return dense;
}

// ---------------------------------------------------------------------------
// iid

PosteriorEdges e_step_iid(const ObservationCounts& counts, const IidParams& params) {
  require_exchangeable(counts, 1, "iid");
  return binary_class_posterior(counts, {&params.alpha, 1}, {&params.beta, 1}, params.rho);
}

double profile_loglik_iid(const ObservationCounts& counts, const IidParams& params) {
  require_exchangeable(counts, 1, "iid");
  return binary_class_loglik(counts, {&params.alpha, 1}, {&params.beta, 1}, params.rho);
}

namespace {

struct BinarySums {
  // Per mode: event/trial masses under the edge and no-edge hypotheses.
  std::vector<long double> eq, nq, e1q, n1q;
  long double q_total = 0.0L;

  explicit BinarySums(std::uint32_t modes)
      : eq(modes, 0.0L), nq(modes, 0.0L), e1q(modes, 0.0L), n1q(modes, 0.0L) {}

  void add(std::span<const Counts> sig, double q, long double weight) {
    const auto lq = static_cast<long double>(q);
    for (std::size_t m = 0; m < sig.size(); ++m) {
      eq[m] += sig[m].events * lq * weight;
      nq[m] += sig[m].trials * lq * weight;
      e1q[m] += sig[m].events * (1.0L - lq) * weight;
      n1q[m] += sig[m].trials * (1.0L - lq) * weight;
    }
    q_total += lq * weight;
  }
};

// Accumulate per-class sums then fix up pairs whose posterior was overridden.
BinarySums binary_m_sums(const ObservationCounts& counts, const PosteriorEdges& posterior) {
  const PairClassSet& cs = posterior.classes();
  BinarySums sums(counts.modes());
  for (std::size_t c = 0; c < cs.classes().size(); ++c) {
    const PairClass& cls = cs.classes()[c];
    sums.add(cls.signature, posterior.class_q(c), static_cast<long double>(cls.member_count));
  }
  for (const auto& [k, q] : posterior.overrides()) {
    const auto [i, j] = PairClassSet::pair_from_index(cs.n(), k);
    const auto sig = pair_signature(counts, i, j);
    sums.add(sig, posterior.class_q(cs.class_of(i, j)), -1.0L);
    sums.add(sig, q, 1.0L);
  }
  return sums;
}

}  // namespace

IidParams m_step_iid(const ObservationCounts& counts, const PosteriorEdges& posterior) {
  require_exchangeable(counts, 1, "iid");
  require_binary_posterior(posterior, counts);
  const BinarySums sums = binary_m_sums(counts, posterior);
  if (sums.nq[0] == 0.0L)
    throw DegenerateError("alpha update has zero posterior trial mass");
  if (sums.n1q[0] == 0.0L)
    throw DegenerateError("beta update has zero posterior trial mass");
  IidParams out;
  out.alpha = clamp_rate(static_cast<double>(sums.eq[0] / sums.nq[0]));
  out.beta = clamp_rate(static_cast<double>(sums.e1q[0] / sums.n1q[0]));
  out.rho = clamp_rate(
      static_cast<double>(sums.q_total / static_cast<long double>(counts.pair_count())));
  return out;
}

// ---------------------------------------------------------------------------
// multimodal

PosteriorEdges e_step_multimodal(const ObservationCounts& counts,
                                 const MultiModalParams& params) {
  if (params.modes() == 0 || params.beta.size() != params.alpha.size())
    throw ContractError("multimodal params need matching alpha/beta per mode");
  require_exchangeable(counts, params.modes(), "multimodal");
  return binary_class_posterior(counts, params.alpha, params.beta, params.rho);
}

MStepResult m_step_multimodal(const ObservationCounts& counts,
                              const PosteriorEdges& posterior,
                              const MultiModalParams& previous) {
  if (previous.modes() == 0 || previous.beta.size() != previous.alpha.size())
    throw ContractError("multimodal params need matching alpha/beta per mode");
  require_exchangeable(counts, previous.modes(), "multimodal");
  require_binary_posterior(posterior, counts);
  const BinarySums sums = binary_m_sums(counts, posterior);
  MultiModalParams out = previous;
  std::vector<std::string> degenerate;
  for (std::uint32_t m = 0; m < previous.modes(); ++m) {
    if (sums.nq[m] == 0.0L)
      degenerate.push_back("alpha[mode " + std::to_string(m) + "]");
    else
      out.alpha[m] = clamp_rate(static_cast<double>(sums.eq[m] / sums.nq[m]));
    if (sums.n1q[m] == 0.0L)
      degenerate.push_back("beta[mode " + std::to_string(m) + "]");
    else
      out.beta[m] = clamp_rate(static_cast<double>(sums.e1q[m] / sums.n1q[m]));
  }
  out.rho = clamp_rate(
      static_cast<double>(sums.q_total / static_cast<long double>(counts.pair_count())));
  return {std::move(out), std::move(degenerate)};
}

// ---------------------------------------------------------------------------
// per-node

namespace {

void require_pernode(const ObservationCounts& counts, const PerNodeParams& params) {
  if (!counts.directed())
    throw ContractError("pernode model needs directed counts");
  if (counts.modes() != 1)
    throw ContractError("pernode model expects a single observation mode");
  if (params.alpha.size() != counts.n() || params.beta.size() != counts.n())
    throw ContractError("pernode params need one alpha/beta per node");
}

// Log masses for one unordered pair from both directed reports. The two
// reporters' contributions are added smallest-first so the value does not
// depend on which node is called i and which j.
double pernode_pair_q(const ObservationCounts& counts, const PerNodeParams& params,
                      std::uint32_t i, std::uint32_t j) {
  const Counts fwd = counts.effective(i, j);
  const Counts rev = counts.effective(j, i);
  if (!(fwd.events || fwd.trials || rev.events || rev.trials)) return params.rho;
  const auto [ea, eb] = std::minmax(
      {log_binomial_factor(fwd.events, fwd.trials, params.alpha[i]),
       log_binomial_factor(rev.events, rev.trials, params.alpha[j])});
  const auto [na, nb] = std::minmax(
      {log_binomial_factor(fwd.events, fwd.trials, params.beta[i]),
       log_binomial_factor(rev.events, rev.trials, params.beta[j])});
  return posterior_from_log(std::log(params.rho) + (ea + eb),
                            std::log(1.0 - params.rho) + (na + nb));
}

bool pernode_all_pairs(const ObservationCounts& counts) {
  return counts.default_trials(0) > 0;
}

}  // namespace

PosteriorEdges e_step_pernode(const ObservationCounts& counts, const PerNodeParams& params) {
  require_pernode(counts, params);
  auto classes = pair_classes(counts);
  // Class values hold the prior: correct for pairs with no observations in
  // either direction; every observed pair gets its own value below.
  std::vector<double> q(classes->classes().size(), params.rho);
  PosteriorEdges posterior = PosteriorEdges::binary(std::move(classes), std::move(q));
  if (pernode_all_pairs(counts)) {
    const std::uint32_t n = counts.n();
    for (std::uint32_t i = 0; i + 1 < n; ++i)
      for (std::uint32_t j = i + 1; j < n; ++j)
        posterior.set_override(i, j, pernode_pair_q(counts, params, i, j));
  } else {
    for (const auto& [i, j] : entry_pairs(counts))
      posterior.set_override(i, j, pernode_pair_q(counts, params, i, j));
  }
  return posterior;
}

MStepResult m_step_pernode(const ObservationCounts& counts, const PosteriorEdges& posterior,
                           const PerNodeParams& previous) {
  require_pernode(counts, previous);
  require_binary_posterior(posterior, counts);
  const std::uint32_t n = counts.n();
  const std::vector<double> dense = expand_binary_posterior(posterior);
  auto q_of = [&](std::uint32_t a, std::uint32_t b) {
    return dense[PairClassSet::pair_index(n, a, b)];
  };

  std::vector<long double> ea(n, 0.0L), na(n, 0.0L), eb(n, 0.0L), nb(n, 0.0L);
  auto absorb = [&](std::uint32_t reporter, std::uint32_t target, const Counts& c) {
    const auto q = static_cast<long double>(q_of(reporter, target));
    ea[reporter] += c.events * q;
    na[reporter] += c.trials * q;
    eb[reporter] += c.events * (1.0L - q);
    nb[reporter] += c.trials * (1.0L - q);
  };
  if (pernode_all_pairs(counts)) {
    for (std::uint32_t i = 0; i < n; ++i)
      for (std::uint32_t j = 0; j < n; ++j)
        if (i != j) absorb(i, j, counts.effective(i, j));
  } else {
    // Absent pairs contribute nothing when the default trial count is zero;
    // entry order matches the full scan (reporter-major, target-minor).
    for (const auto& [key, c] : counts.entries()) absorb(key.u, key.v, c);
  }

  PerNodeParams out = previous;
  std::vector<std::string> degenerate;
  const auto& labels = counts.universe().labels();
  for (std::uint32_t i = 0; i < n; ++i) {
    if (na[i] == 0.0L)
      degenerate.push_back("alpha[" + labels[i] + "]");
    else
      out.alpha[i] = clamp_rate(static_cast<double>(ea[i] / na[i]));
    if (nb[i] == 0.0L)
      degenerate.push_back("beta[" + labels[i] + "]");
    else
      out.beta[i] = clamp_rate(static_cast<double>(eb[i] / nb[i]));
  }
  long double q_total = 0.0L;
  for (double q : dense) q_total += static_cast<long double>(q);
  out.rho = clamp_rate(
      static_cast<double>(q_total / static_cast<long double>(counts.pair_count())));
  return {std::move(out), std::move(degenerate)};
}

namespace {

double profile_loglik_pernode(const ObservationCounts& counts, const PerNodeParams& params) {
  require_pernode(counts, params);
  auto pair_term = [&](std::uint32_t i, std::uint32_t j) {
    const Counts fwd = counts.effective(i, j);
    const Counts rev = counts.effective(j, i);
    const auto [ea, eb] = std::minmax(
        {log_binomial_factor(fwd.events, fwd.trials, params.alpha[i]),
         log_binomial_factor(rev.events, rev.trials, params.alpha[j])});
    const auto [na, nb] = std::minmax(
        {log_binomial_factor(fwd.events, fwd.trials, params.beta[i]),
         log_binomial_factor(rev.events, rev.trials, params.beta[j])});
    return log_sum_exp(std::log(params.rho) + (ea + eb),
                       std::log(1.0 - params.rho) + (na + nb));
  };
  long double acc = 0.0L;
  if (pernode_all_pairs(counts)) {
    const std::uint32_t n = counts.n();
    for (std::uint32_t i = 0; i + 1 < n; ++i)
      for (std::uint32_t j = i + 1; j < n; ++j) acc += pair_term(i, j);
  } else {
    const auto pairs = entry_pairs(counts);
    for (const auto& [i, j] : pairs) acc += pair_term(i, j);
    const auto absent = static_cast<long double>(counts.pair_count() - pairs.size());
    acc += absent * static_cast<long double>(
                        log_sum_exp(std::log(params.rho), std::log(1.0 - params.rho)));
  }
  return static_cast<double>(acc);
}

}  // namespace

// ---------------------------------------------------------------------------
// multilevel

namespace {

void require_multilevel(const ObservationCounts& counts, const MultiLevelParams& params) {
  require_exchangeable(counts, 1, "multilevel");
  if (params.levels() < 2) throw ContractError("multilevel model needs W >= 2 levels");
  if (params.rho.size() != params.alpha.size())
    throw ContractError("multilevel params need one rho per level");
}

}  // namespace

PosteriorEdges e_step_multilevel(const ObservationCounts& counts,
                                 const MultiLevelParams& params) {
  require_multilevel(counts, params);
  const std::uint32_t w_count = params.levels();
  auto classes = pair_classes(counts);
  std::vector<double> flat;
  flat.reserve(classes->classes().size() * w_count);
  std::vector<double> lw(w_count);
  for (const PairClass& cls : classes->classes()) {
    const Counts c = cls.signature[0];
    if (!c.events && !c.trials) {
      // No evidence: the prior weights, exactly.
      flat.insert(flat.end(), params.rho.begin(), params.rho.end());
      continue;
    }
    double m = -kInf;
    for (std::uint32_t w = 0; w < w_count; ++w) {
      lw[w] = std::log(params.rho[w]) + log_binomial_factor(c.events, c.trials, params.alpha[w]);
      m = std::max(m, lw[w]);
    }
    if (m == -kInf) throw NumericError("posterior mass vanished on all levels");
    double total = 0;
    for (std::uint32_t w = 0; w < w_count; ++w) {
      lw[w] = std::exp(lw[w] - m);
      total += lw[w];
    }
    for (std::uint32_t w = 0; w < w_count; ++w) flat.push_back(lw[w] / total);
  }
  return PosteriorEdges::multilevel(std::move(classes), w_count, std::move(flat));
}

MStepResult m_step_multilevel(const ObservationCounts& counts, const PosteriorEdges& posterior,
                              const MultiLevelParams& previous) {
  require_multilevel(counts, previous);
  if (posterior.kind() != PosteriorEdges::Kind::MultiLevel)
    throw ContractError("expected a multilevel posterior");
  if (posterior.n() != counts.n())
    throw ContractError("posterior and counts cover different node sets");
  if (posterior.levels() != previous.levels())
    throw ContractError("posterior level count mismatch");
  const std::uint32_t w_count = previous.levels();
  const PairClassSet& cs = posterior.classes();

  std::vector<long double> eq(w_count, 0.0L), nq(w_count, 0.0L), qsum(w_count, 0.0L);
  for (std::size_t c = 0; c < cs.classes().size(); ++c) {
    const PairClass& cls = cs.classes()[c];
    const Counts sig = cls.signature[0];
    const auto weight = static_cast<long double>(cls.member_count);
    const auto qw = posterior.class_level_q(c);
    for (std::uint32_t w = 0; w < w_count; ++w) {
      const auto lq = static_cast<long double>(qw[w]);
      eq[w] += sig.events * lq * weight;
      nq[w] += sig.trials * lq * weight;
      qsum[w] += lq * weight;
    }
  }

  MultiLevelParams out = previous;
  std::vector<std::string> degenerate;
  for (std::uint32_t w = 0; w < w_count; ++w) {
    if (nq[w] == 0.0L)
      degenerate.push_back("alpha[level " + std::to_string(w) + "]");
    else
      out.alpha[w] = clamp_rate(static_cast<double>(eq[w] / nq[w]));
  }
  const auto total_pairs = static_cast<long double>(counts.pair_count());
  double rho_total = 0;
  for (std::uint32_t w = 0; w < w_count; ++w) {
    out.rho[w] = clamp_rate(static_cast<double>(qsum[w] / total_pairs));
    rho_total += out.rho[w];
  }
  for (std::uint32_t w = 0; w < w_count; ++w) out.rho[w] /= rho_total;
  return {std::move(out), std::move(degenerate)};
}

std::vector<std::uint32_t> canonicalize_levels(MultiLevelParams& params,
                                               PosteriorEdges& posterior) {
  const std::uint32_t w_count = params.levels();
  if (posterior.kind() != PosteriorEdges::Kind::MultiLevel || posterior.levels() != w_count)
    throw ContractError("posterior does not match the multilevel params");
  std::vector<std::uint32_t> perm(w_count);
  std::iota(perm.begin(), perm.end(), 0u);
  std::sort(perm.begin(), perm.end(), [&params](std::uint32_t a, std::uint32_t b) {
    if (params.alpha[a] != params.alpha[b]) return params.alpha[a] < params.alpha[b];
    if (params.rho[a] != params.rho[b]) return params.rho[a] > params.rho[b];
    return a < b;
  });
  MultiLevelParams sorted;
  sorted.alpha.reserve(w_count);
  sorted.rho.reserve(w_count);
  for (std::uint32_t w : perm) {
    sorted.alpha.push_back(params.alpha[w]);
    sorted.rho.push_back(params.rho[w]);
  }
  params = std::move(sorted);
  posterior.permute_levels(perm);
  return perm;
}

namespace {

double profile_loglik_multilevel(const ObservationCounts& counts,
                                 const MultiLevelParams& params) {
  require_multilevel(counts, params);
  const auto classes = pair_classes(counts);
  const std::uint32_t w_count = params.levels();
  std::vector<double> lw(w_count);
  long double acc = 0.0L;
  for (const PairClass& cls : classes->classes()) {
    const Counts c = cls.signature[0];
    double m = -kInf;
    for (std::uint32_t w = 0; w < w_count; ++w) {
      lw[w] = std::log(params.rho[w]) + log_binomial_factor(c.events, c.trials, params.alpha[w]);
      m = std::max(m, lw[w]);
    }
    double total = 0;
    for (std::uint32_t w = 0; w < w_count; ++w) total += std::exp(lw[w] - m);
    acc += static_cast<long double>(m + std::log(total)) *
           static_cast<long double>(cls.member_count);
  }
  return static_cast<double>(acc);
}

}  // namespace

// ---------------------------------------------------------------------------
// dispatchers

PosteriorEdges e_step(const ObservationCounts& counts, const ModelParams& params) {
  return std::visit(
      [&counts](const auto& p) -> PosteriorEdges {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, IidParams>) return e_step_iid(counts, p);
        else if constexpr (std::is_same_v<T, PerNodeParams>) return e_step_pernode(counts, p);
        else if constexpr (std::is_same_v<T, MultiLevelParams>)
          return e_step_multilevel(counts, p);
        else return e_step_multimodal(counts, p);
      },
      params);
}

MStepResult m_step(const ObservationCounts& counts, const PosteriorEdges& posterior,
                   const ModelParams& previous) {
  return std::visit(
      [&](const auto& p) -> MStepResult {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, IidParams>)
          return {m_step_iid(counts, posterior), {}};
        else if constexpr (std::is_same_v<T, PerNodeParams>)
          return m_step_pernode(counts, posterior, p);
        else if constexpr (std::is_same_v<T, MultiLevelParams>)
          return m_step_multilevel(counts, posterior, p);
        else
          return m_step_multimodal(counts, posterior, p);
      },
      previous);
}

double profile_loglik(const ObservationCounts& counts, const ModelParams& params) {
  return std::visit(
      [&counts](const auto& p) -> double {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, IidParams>) return profile_loglik_iid(counts, p);
        else if constexpr (std::is_same_v<T, PerNodeParams>)
          return profile_loglik_pernode(counts, p);
        else if constexpr (std::is_same_v<T, MultiLevelParams>)
          return profile_loglik_multilevel(counts, p);
        else {
          require_exchangeable(counts, p.modes(), "multimodal");
          return binary_class_loglik(counts, p.alpha, p.beta, p.rho);
        }
      },
      params);
}

}  // namespace netrecon
