#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <vector>

#include "netrecon/models.hpp"
#include "netrecon/obsdata.hpp"
#include "netrecon/synth.hpp"

namespace netrecon {

// Error rates implied by fitted binary-edge parameters. One entry for the iid
// model, one per node (per-node model) or per mode (multimodal model).
// precision = 1 - fdr by construction; recall is the true-positive rate.
struct DerivedRates {
  std::vector<double> fdr;
  std::vector<double> precision;
  std::vector<double> recall;
  double mean_fdr = 0;
  double mean_precision = 0;
  double mean_recall = 0;
  // Per-node model with counts supplied: averages restricted to nodes that
  // made at least one report.
  std::optional<double> reporting_mean_fdr;
  std::optional<double> reporting_mean_precision;
  std::optional<double> reporting_mean_recall;
};

DerivedRates derived_rates(const ModelParams& params);
DerivedRates derived_rates(const ModelParams& params, const ObservationCounts& counts);

// Sum of marginal edge probabilities at one node.
double expected_degree(const PosteriorEdges& posterior, std::uint32_t node);

// Independent per-pair sampler. Class-shared probabilities use geometric
// skipping so the cost scales with the expected number of edges, not with
// the number of pairs.
class PosteriorSampler {
 public:
  PosteriorSampler(const PosteriorEdges& posterior, std::uint64_t seed);
  NetworkSample next();
  std::uint64_t index() const { return index_; }

 private:
  const PosteriorEdges& posterior_;
  std::uint64_t seed_ = 0;
  std::uint64_t index_ = 0;
  // Class member lists with overridden pairs removed; the default class walks
  // the complement of `skipped_`.
  std::vector<std::vector<std::uint64_t>> members_;
  std::vector<std::uint64_t> skipped_;
  std::uint64_t default_count_ = 0;
};

std::vector<NetworkSample> sample_networks(const PosteriorEdges& posterior,
                                           std::uint32_t count, std::uint64_t seed);

// Streaming mean/variance plus an exact-value frequency table.
struct MetricStats {
  std::uint64_t count = 0;
  double mean = 0;
  double variance = 0;  // sample variance (n-1); requires count >= 2
  std::map<double, double> distribution;  // value -> relative frequency
};

class MetricAccumulator {
 public:
  void add(double value);
  MetricStats finish() const;  // throws on count == 0

 private:
  std::uint64_t count_ = 0;
  double mean_ = 0;
  double m2_ = 0;
  std::map<double, std::uint64_t> freq_;
};

MetricStats metric_stats(const std::vector<NetworkSample>& samples,
                         const std::function<double(const NetworkSample&)>& metric);

// Metropolis-Hastings over binary networks: each step toggles one uniformly
// random pair and accepts with min(1, exp(delta logweight)).
struct MhOptions {
  std::uint64_t steps = 0;
  std::uint64_t seed = 0;
  std::optional<std::uint64_t> burn_in;  // default: steps / 10
  std::optional<std::uint64_t> thin;     // default: number of pairs
};

std::vector<NetworkSample> mh_sample(const std::function<double(const NetworkSample&)>& logweight,
                                     const NetworkSample& initial, const MhOptions& options);

// log of the factorized posterior mass of a binary network under independent
// per-pair marginals; suitable logweight for mh_sample.
std::function<double(const NetworkSample&)> factorized_logweight(const PosteriorEdges& posterior);

}  // namespace netrecon
