#pragma once

#include <cstdint>
#include <vector>

#include "netrecon/engine.hpp"
#include "netrecon/models.hpp"
#include "netrecon/obsdata.hpp"

namespace netrecon {

// Expected number of pairs with e positive observations out of N, for
// e = 0..N, under iid or multilevel parameters (equal-N data required).
std::vector<double> predicted_histogram(const ModelParams& params, std::uint32_t n,
                                        std::uint32_t trials);

// Observed pair counts per e = 0..N. Requires a single mode and one common
// trial count across all pairs.
std::vector<double> observed_histogram(const ObservationCounts& counts);

struct PooledBin {
  std::uint32_t e_lo = 0;  // inclusive range of raw e values
  std::uint32_t e_hi = 0;
  double observed = 0;
  double predicted = 0;
};

struct FitReport {
  std::vector<double> observed;   // raw, per e
  std::vector<double> predicted;  // raw, per e
  std::vector<PooledBin> pooled;  // adjacent bins merged until predicted >= 5
  double statistic = 0;
  std::int32_t dof = 0;  // pooled bins - 1 - fitted parameter count
  double p_value = 1;
  double critical_value = 0;
  double significance = 0;
  bool rejected = false;
  bool no_power = false;  // dof < 1: the test cannot reject
};

// Pearson chi-square with tail probabilities from the regularized incomplete
// gamma function (Boost.Math). Bins with predicted < 5 merge with their right
// neighbor; a small leftover tail merges into the last emitted bin.
FitReport chi_squared_gof(const std::vector<double>& observed,
                          const std::vector<double>& predicted,
                          std::uint32_t fitted_param_count, double significance);

struct LevelFit {
  std::uint32_t levels = 0;
  MultiLevelParams params;
  FitReport report;
  bool not_applicable = false;  // gof degenerate (fewer than 2 pooled bins)
};

struct LevelSelection {
  std::uint32_t selected = 0;
  bool all_rejected = false;  // every candidate rejected; selected = w_max
  std::vector<LevelFit> fits;
};

// Fit W = 2..w_max and pick the smallest W whose fit is not rejected at the
// given significance (2W-1 fitted parameters per candidate).
LevelSelection select_num_levels(const ObservationCounts& counts, std::uint32_t w_max,
                                 double significance, const EmConfig& config = {});

}  // namespace netrecon
