#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "netrecon/obsdata.hpp"

namespace netrecon {

// Rates and priors are clamped into [kParamClamp, 1 - kParamClamp] after
// every closed-form update so posteriors never hit 0/0.
inline constexpr double kParamClamp = 1e-12;

// Every pair shares one true-positive rate alpha, false-positive rate beta,
// and prior edge probability rho.
struct IidParams {
  double alpha = 0;
  double beta = 0;
  double rho = 0;
};

// Directed observations of an undirected truth; reporter i uses (alpha_i,
// beta_i) for all of its reports.
struct PerNodeParams {
  std::vector<double> alpha;
  std::vector<double> beta;
  double rho = 0;
};

// W >= 2 interaction levels; level w has observation rate alpha_w and prior
// weight rho_w (the rho_w sum to 1). Level 0 plays the role of "no tie".
struct MultiLevelParams {
  std::vector<double> alpha;
  std::vector<double> rho;
  std::uint32_t levels() const { return static_cast<std::uint32_t>(alpha.size()); }
};

// One (alpha_m, beta_m) per observation mode, shared prior rho.
struct MultiModalParams {
  std::vector<double> alpha;
  std::vector<double> beta;
  double rho = 0;
  std::uint32_t modes() const { return static_cast<std::uint32_t>(alpha.size()); }
};

using ModelParams = std::variant<IidParams, PerNodeParams, MultiLevelParams, MultiModalParams>;

enum class ModelKind { Iid, PerNode, MultiLevel, MultiModal };

ModelKind kind_of(const ModelParams& params);
const char* kind_name(ModelKind kind);
ModelKind kind_from_name(const std::string& name);

ModelParams clamp_params(ModelParams params);
// Flat view used for convergence deltas; layout is fixed per model kind.
std::vector<double> flatten_params(const ModelParams& params);

// Posterior marginals over node pairs, stored per pair class with optional
// per-pair overrides (the per-node model gives every observed pair its own
// value; externally loaded posteriors arrive as default + overrides).
class PosteriorEdges {
 public:
  enum class Kind { Binary, MultiLevel };

  static PosteriorEdges binary(std::shared_ptr<const PairClassSet> classes,
                               std::vector<double> class_q);
  static PosteriorEdges multilevel(std::shared_ptr<const PairClassSet> classes,
                                   std::uint32_t levels, std::vector<double> class_q_flat);

  Kind kind() const { return kind_; }
  std::uint32_t levels() const { return levels_; }
  std::uint32_t n() const { return classes_->n(); }
  const PairClassSet& classes() const { return *classes_; }
  std::shared_ptr<const PairClassSet> classes_ptr() const { return classes_; }

  double class_q(std::size_t cls) const;
  std::span<const double> class_level_q(std::size_t cls) const;

  double q(std::uint32_t i, std::uint32_t j) const;              // Binary
  std::span<const double> level_q(std::uint32_t i, std::uint32_t j) const;  // MultiLevel

  void set_override(std::uint32_t i, std::uint32_t j, double q);  // Binary
  const std::map<std::uint64_t, double>& overrides() const { return overrides_; }

  void complement();                                  // Binary: q -> 1 - q
  void permute_levels(const std::vector<std::uint32_t>& perm);  // MultiLevel

 private:
  Kind kind_ = Kind::Binary;
  std::uint32_t levels_ = 1;
  std::shared_ptr<const PairClassSet> classes_;
  std::vector<double> values_;  // classes x levels (levels == 1 for Binary)
  std::map<std::uint64_t, double> overrides_;
};

// Closed-form update results carry which unit (node/level/mode) had a
// zero-mass denominator and kept its previous value.
struct MStepResult {
  ModelParams params;
  std::vector<std::string> degenerate;
};

PosteriorEdges e_step_iid(const ObservationCounts& counts, const IidParams& params);
IidParams m_step_iid(const ObservationCounts& counts, const PosteriorEdges& posterior);
double profile_loglik_iid(const ObservationCounts& counts, const IidParams& params);

PosteriorEdges e_step_pernode(const ObservationCounts& counts, const PerNodeParams& params);
MStepResult m_step_pernode(const ObservationCounts& counts, const PosteriorEdges& posterior,
                           const PerNodeParams& previous);

PosteriorEdges e_step_multilevel(const ObservationCounts& counts,
                                 const MultiLevelParams& params);
MStepResult m_step_multilevel(const ObservationCounts& counts, const PosteriorEdges& posterior,
                              const MultiLevelParams& previous);
// Sort levels by ascending alpha_w (ties: descending rho_w, then original
// index); returns the permutation applied.
std::vector<std::uint32_t> canonicalize_levels(MultiLevelParams& params,
                                               PosteriorEdges& posterior);

PosteriorEdges e_step_multimodal(const ObservationCounts& counts,
                                 const MultiModalParams& params);
MStepResult m_step_multimodal(const ObservationCounts& counts, const PosteriorEdges& posterior,
                              const MultiModalParams& previous);

// Dense per-pair marginals in linear pair-index order (binary posteriors).
std::vector<double> expand_binary_posterior(const PosteriorEdges& posterior);

// Kind dispatchers used by the EM driver.
PosteriorEdges e_step(const ObservationCounts& counts, const ModelParams& params);
MStepResult m_step(const ObservationCounts& counts, const PosteriorEdges& posterior,
                   const ModelParams& previous);
// Marginal log-likelihood with the network summed out.
double profile_loglik(const ObservationCounts& counts, const ModelParams& params);

}  // namespace netrecon
