#include "netrecon/posterior.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "netrecon/rng.hpp"

namespace netrecon {

namespace {

// fdr_i = (1-rho) b_i / (rho a_i + (1-rho) b_i); precision as its exact
// complement so the two always sum to 1.
void push_rates(DerivedRates& out, double alpha, double beta, double rho) {
  const double den = rho * alpha + (1.0 - rho) * beta;
  if (den == 0.0) throw DegenerateError("edge discovery rate is zero");
  out.fdr.push_back((1.0 - rho) * beta / den);
  out.precision.push_back(1.0 - out.fdr.back());
  out.recall.push_back(alpha);
}

double mean_of(const std::vector<double>& v) {
  long double acc = 0.0L;
  for (double x : v) acc += x;
  return static_cast<double>(acc / static_cast<long double>(v.size()));
}

DerivedRates rates_impl(const ModelParams& params, const ObservationCounts* counts) {
  DerivedRates out;
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, IidParams>) {
          push_rates(out, p.alpha, p.beta, p.rho);
        } else if constexpr (std::is_same_v<T, PerNodeParams>) {
          for (std::size_t i = 0; i < p.alpha.size(); ++i)
            push_rates(out, p.alpha[i], p.beta[i], p.rho);
        } else if constexpr (std::is_same_v<T, MultiModalParams>) {
          for (std::size_t m = 0; m < p.alpha.size(); ++m)
            push_rates(out, p.alpha[m], p.beta[m], p.rho);
        } else {
          throw ContractError("derived rates are defined for binary-edge models only");
        }
      },
      params);
  out.mean_fdr = mean_of(out.fdr);
  out.mean_precision = mean_of(out.precision);
  out.mean_recall = mean_of(out.recall);

  if (counts && kind_of(params) == ModelKind::PerNode) {
    if (counts->n() != out.fdr.size())
      throw ContractError("counts and params cover different node sets");
    // A node "reports" when it has at least one outgoing trial.
    std::vector<bool> reporter(counts->n(), counts->default_trials(0) > 0);
    for (const auto& [key, c] : counts->entries())
      if (c.trials > 0) reporter[key.u] = true;
    std::vector<double> f, pr, rc;
    for (std::size_t i = 0; i < reporter.size(); ++i)
      if (reporter[i]) {
        f.push_back(out.fdr[i]);
        pr.push_back(out.precision[i]);
        rc.push_back(out.recall[i]);
      }
    if (!f.empty()) {
      out.reporting_mean_fdr = mean_of(f);
      out.reporting_mean_precision = mean_of(pr);
      out.reporting_mean_recall = mean_of(rc);
    }
  }
  return out;
}

}  // namespace

DerivedRates derived_rates(const ModelParams& params) { return rates_impl(params, nullptr); }

DerivedRates derived_rates(const ModelParams& params, const ObservationCounts& counts) {
  return rates_impl(params, &counts);
}

double expected_degree(const PosteriorEdges& posterior, std::uint32_t node) {
  if (posterior.kind() != PosteriorEdges::Kind::Binary)
    throw ContractError("expected degree is defined for binary posteriors");
  const std::uint32_t n = posterior.n();
  if (node >= n) throw ContractError("node index out of range");
  long double acc = 0.0L;
  for (std::uint32_t j = 0; j < n; ++j)
    if (j != node) acc += posterior.q(node, j);
  return static_cast<double>(acc);
}

PosteriorSampler::PosteriorSampler(const PosteriorEdges& posterior, std::uint64_t seed)
    : posterior_(posterior), seed_(seed) {
  if (posterior.kind() == PosteriorEdges::Kind::Binary ||
      posterior.kind() == PosteriorEdges::Kind::MultiLevel) {
    const PairClassSet& cs = posterior.classes();
    std::set<std::uint64_t> overridden;
    for (const auto& [k, q] : posterior.overrides()) overridden.insert(k);
    members_.resize(cs.classes().size());
    for (std::size_t c = 0; c < cs.classes().size(); ++c) {
      const PairClass& cls = cs.classes()[c];
      if (cls.implicit_default) continue;
      for (std::uint64_t k : cls.members)
        if (!overridden.count(k)) members_[c].push_back(k);
    }
    if (cs.default_class() >= 0) {
      skipped_ = cs.default_excluded();
      skipped_.insert(skipped_.end(), overridden.begin(), overridden.end());
      std::sort(skipped_.begin(), skipped_.end());
      skipped_.erase(std::unique(skipped_.begin(), skipped_.end()), skipped_.end());
      default_count_ = cs.pair_count() - skipped_.size();
    }
  }
}

namespace {

// rank-th smallest pair index not present in the sorted `excluded` list:
// smallest x with |complement members <= x| = x + 1 - |excluded <= x| >= rank + 1.
std::uint64_t complement_at(const std::vector<std::uint64_t>& excluded, std::uint64_t rank) {
  std::uint64_t lo = rank;                    // no exclusions below
  std::uint64_t hi = rank + excluded.size();  // all exclusions below
  while (lo < hi) {
    const std::uint64_t mid = lo + (hi - lo) / 2;
    const auto below =
        static_cast<std::uint64_t>(std::upper_bound(excluded.begin(), excluded.end(), mid) -
                                   excluded.begin());
    if (mid - below >= rank)
      hi = mid;
    else
      lo = mid + 1;
  }
  return lo;
}

// Visit the members drawn into the sample: geometric jumps between hits so
// classes with small probabilities are skipped in O(hits).
template <typename Emit>
void geometric_walk(Rng& rng, std::uint64_t count, double p, const Emit& emit) {
  if (count == 0 || p <= 0.0) return;
  if (p >= 1.0) {
    for (std::uint64_t r = 0; r < count; ++r) emit(r);
    return;
  }
  const double log1mp = std::log1p(-p);
  double r = -1;
  while (true) {
    const double u = rng.uniform();
    r += 1 + std::floor(std::log1p(-u) / log1mp);
    if (!(r < static_cast<double>(count))) break;
    emit(static_cast<std::uint64_t>(r));
  }
}

}  // namespace

NetworkSample PosteriorSampler::next() {
  const std::uint64_t sample_seed = derive_seed(seed_, index_++);
  Rng rng(sample_seed);
  const PairClassSet& cs = posterior_.classes();
  const std::uint32_t n = posterior_.n();
  NetworkSample sample;
  sample.n = n;
  sample.seed = sample_seed;
  std::vector<std::pair<std::uint64_t, std::uint32_t>> hits;  // (pair index, level)

  const bool multilevel = posterior_.kind() == PosteriorEdges::Kind::MultiLevel;
  sample.levels = multilevel ? posterior_.levels() : 2;

  auto draw_level = [&](std::span<const double> qw) -> std::uint32_t {
    // Conditional on "some tie", pick the level among w >= 1.
    double present = 0;
    for (std::uint32_t w = 1; w < qw.size(); ++w) present += qw[w];
    const double u = rng.uniform() * present;
    double cum = 0;
    for (std::uint32_t w = 1; w < qw.size(); ++w) {
      cum += qw[w];
      if (u < cum) return w;
    }
    return static_cast<std::uint32_t>(qw.size()) - 1;
  };

  for (std::size_t c = 0; c < cs.classes().size(); ++c) {
    const PairClass& cls = cs.classes()[c];
    const bool is_default = cls.implicit_default;
    const std::uint64_t count = is_default ? default_count_ : members_[c].size();
    double present;
    std::span<const double> qw;
    if (multilevel) {
      qw = posterior_.class_level_q(c);
      present = 1.0 - qw[0];
    } else {
      present = posterior_.class_q(c);
    }
    geometric_walk(rng, count, present, [&](std::uint64_t rank) {
      const std::uint64_t k = is_default ? complement_at(skipped_, rank) : members_[c][rank];
      hits.emplace_back(k, multilevel ? draw_level(qw) : 1u);
    });
  }
  for (const auto& [k, q] : posterior_.overrides())
    if (rng.bernoulli(q)) hits.emplace_back(k, 1u);

  std::sort(hits.begin(), hits.end());
  sample.edges.reserve(hits.size());
  for (const auto& [k, level] : hits) {
    const auto [i, j] = PairClassSet::pair_from_index(n, k);
    sample.edges.emplace_back(i, j, level);
  }
  return sample;
}

std::vector<NetworkSample> sample_networks(const PosteriorEdges& posterior, std::uint32_t count,
                                           std::uint64_t seed) {
  PosteriorSampler sampler(posterior, seed);
  std::vector<NetworkSample> out;
  out.reserve(count);
  for (std::uint32_t m = 0; m < count; ++m) out.push_back(sampler.next());
  return out;
}

void MetricAccumulator::add(double value) {
  ++count_;
  const double d = value - mean_;
  mean_ += d / static_cast<double>(count_);
  m2_ += d * (value - mean_);
  ++freq_[value];
}

MetricStats MetricAccumulator::finish() const {
  if (count_ == 0) throw ContractError("metric stats need at least one sample");
  MetricStats out;
  out.count = count_;
  out.mean = mean_;
  out.variance = count_ >= 2 ? m2_ / static_cast<double>(count_ - 1) : 0.0;
  for (const auto& [value, times] : freq_)
    out.distribution[value] = static_cast<double>(times) / static_cast<double>(count_);
  return out;
}

MetricStats metric_stats(const std::vector<NetworkSample>& samples,
                         const std::function<double(const NetworkSample&)>& metric) {
  MetricAccumulator acc;
  for (const NetworkSample& s : samples) acc.add(metric(s));
  return acc.finish();
}

namespace {

NetworkSample materialize(std::uint32_t n, const std::set<std::uint64_t>& edges,
                          std::uint64_t seed) {
  NetworkSample sample;
  sample.n = n;
  sample.levels = 2;
  sample.seed = seed;
  sample.edges.reserve(edges.size());
  for (std::uint64_t k : edges) {
    const auto [i, j] = PairClassSet::pair_from_index(n, k);
    sample.edges.emplace_back(i, j, 1);
  }
  return sample;
}

}  // namespace

std::vector<NetworkSample> mh_sample(const std::function<double(const NetworkSample&)>& logweight,
                                     const NetworkSample& initial, const MhOptions& options) {
  if (initial.n < 2) throw ContractError("need at least 2 nodes");
  if (options.steps == 0) throw ContractError("need at least one step");
  const std::uint32_t n = initial.n;
  const std::uint64_t pairs = std::uint64_t{n} * (n - 1) / 2;
  const std::uint64_t burn_in = options.burn_in.value_or(options.steps / 10);
  const std::uint64_t thin = std::max<std::uint64_t>(1, options.thin.value_or(pairs));

  std::set<std::uint64_t> state;
  for (const auto& [u, v, w] : initial.edges)
    if (w) state.insert(PairClassSet::pair_index(n, u, v));
  double current = logweight(materialize(n, state, initial.seed));
  if (!std::isfinite(current))
    throw ContractError("initial state has non-finite logweight");

  Rng rng(options.seed);
  std::vector<NetworkSample> out;
  for (std::uint64_t step = 1; step <= options.steps; ++step) {
    const std::uint64_t k = rng.below(pairs);
    const bool had = state.count(k) > 0;
    if (had)
      state.erase(k);
    else
      state.insert(k);
    const double proposed = logweight(materialize(n, state, options.seed));
    if (std::isnan(proposed)) throw NumericError("logweight evaluated to NaN");
    const double delta = proposed - current;
    bool accept = delta >= 0;
    if (!accept) accept = rng.uniform() < std::exp(delta);
    if (accept) {
      if (!std::isfinite(proposed))
        throw NumericError("non-finite logweight at a visited state");
      current = proposed;
    } else {
      if (had)
        state.insert(k);
      else
        state.erase(k);
    }
    if (step > burn_in && (step - burn_in) % thin == 0)
      out.push_back(materialize(n, state, derive_seed(options.seed, step)));
  }
  return out;
}

std::function<double(const NetworkSample&)> factorized_logweight(
    const PosteriorEdges& posterior) {
  if (posterior.kind() != PosteriorEdges::Kind::Binary)
    throw ContractError("factorized logweight is defined for binary posteriors");
  const std::uint32_t n = posterior.n();
  auto dense = std::make_shared<std::vector<double>>(expand_binary_posterior(posterior));
  return [dense, n](const NetworkSample& sample) {
    if (sample.n != n) throw ContractError("sample node count mismatch");
    double acc = 0;
    std::size_t at = 0;
    const auto& q = *dense;
    for (std::uint64_t k = 0; k < q.size(); ++k) {
      bool present = false;
      if (at < sample.edges.size()) {
        const auto& [u, v, w] = sample.edges[at];
        if (PairClassSet::pair_index(n, u, v) == k) {
          present = w > 0;
          ++at;
        }
      }
      acc += present ? std::log(q[k]) : std::log1p(-q[k]);
    }
    return acc;
  };
}

}  // namespace netrecon
