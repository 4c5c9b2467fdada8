#pragma once

#include <cstdint>
#include <string>
#include <tuple>
#include <vector>

#include "netrecon/models.hpp"
#include "netrecon/obsdata.hpp"

namespace netrecon {

// One network drawn from a posterior or used as synthetic ground truth.
// Sparse: only pairs with level > 0 are listed (binary edges carry level 1).
struct NetworkSample {
  std::uint32_t n = 0;
  std::uint32_t levels = 2;  // W for multilevel; 2 for binary (levels 0/1)
  std::vector<std::tuple<std::uint32_t, std::uint32_t, std::uint32_t>> edges;  // (u, v, level), u < v, sorted
  std::uint64_t seed = 0;  // lineage: the derived seed that produced it

  std::size_t edge_count() const { return edges.size(); }
  std::uint32_t level(std::uint32_t i, std::uint32_t j) const;
  bool has_edge(std::uint32_t i, std::uint32_t j) const { return level(i, j) > 0; }
  std::uint32_t degree(std::uint32_t node) const;
};

struct SynthSpec {
  std::uint32_t n = 0;
  ModelParams truth;                   // generation parameters (unclamped ok)
  std::vector<std::uint32_t> trials;   // one per mode; single value otherwise
  std::uint64_t seed = 0;
  std::vector<std::string> labels;     // optional; default v0..v{n-1}
};

// True network: pairs independent Bernoulli(rho) (or categorical rho_w).
NetworkSample generate_ground_truth(const SynthSpec& spec);

// Noisy observations of `truth` under the spec's data model. Per-node truth
// is observed as directed reports; everything else is undirected.
ObservationCounts generate_observations(const NetworkSample& truth, const SynthSpec& spec);

}  // namespace netrecon
