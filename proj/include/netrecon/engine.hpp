#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "netrecon/models.hpp"
#include "netrecon/obsdata.hpp"

namespace netrecon {

struct EmConfig {
  double tol_param = 1e-8;     // max absolute parameter change
  double tol_loglik = 1e-10;   // relative profile-loglik change
  std::uint32_t max_iter = 1000;
  std::uint32_t restarts = 5;  // independent inits, seeds seed+0 .. seed+restarts-1
  std::uint64_t seed = 0;
  void validate() const;
};

struct EmIteration {
  std::uint32_t iteration = 0;  // 1-based
  double loglik = 0;            // profile log-likelihood after the M-step
  double max_param_delta = 0;
};

struct EmTrace {
  std::vector<EmIteration> iterations;  // winning restart only
  bool converged = false;
  std::uint32_t iterations_used = 0;
  std::uint32_t restart_index = 0;
  std::vector<double> restart_logliks;  // final value per restart
  double final_loglik() const { return iterations.empty() ? 0 : iterations.back().loglik; }
};

struct EmResult {
  ModelParams params;
  PosteriorEdges posterior;
  EmTrace trace;
  std::vector<std::string> degenerate;  // flags from the final update
};

// Random starting point; ranges keep alpha above beta so the edge hypothesis
// starts on the high-rate side. `levels` is used by the multilevel model only.
ModelParams init_params(ModelKind kind, const ObservationCounts& counts, std::uint64_t seed,
                        std::uint32_t levels = 2);

// Best-of-restarts EM. Deterministic for fixed (counts, config, levels); ties
// in the final log-likelihood go to the lowest restart index.
EmResult run_em(ModelKind kind, const ObservationCounts& counts, const EmConfig& config = {},
                std::uint32_t levels = 2);

// Fold the mirrored labeling (edge/no-edge hypotheses exchanged) back to the
// canonical one. No-op for the multilevel model (see canonicalize_levels).
// Returns true when a swap was applied.
bool resolve_label_swap(ModelParams& params, PosteriorEdges& posterior);

}  // namespace netrecon
