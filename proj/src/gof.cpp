#include "netrecon/gof.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/distributions/chi_squared.hpp>

namespace netrecon {

namespace {

constexpr double kPoolThreshold = 5.0;

std::uint32_t require_common_trials(const ObservationCounts& counts) {
  if (counts.directed() || counts.modes() != 1)
    throw ContractError("histograms need undirected single-mode counts");
  const auto common = counts.common_trials();
  if (!common)
    throw ContractError("histograms need one common trial count across pairs");
  return *common;
}

}  // namespace

std::vector<double> predicted_histogram(const ModelParams& params, std::uint32_t n,
                                        std::uint32_t trials) {
  if (n < 2) throw ContractError("need at least 2 nodes");
  const double pairs = static_cast<double>(std::uint64_t{n} * (n - 1) / 2);
  std::vector<double> hist(trials + 1, 0.0);
  auto add_component = [&](double weight, double rate) {
    // weight * C(N, e) rate^e (1-rate)^(N-e), binomial coefficient built up
    // multiplicatively.
    double coeff = 1.0;
    for (std::uint32_t e = 0; e <= trials; ++e) {
      if (e > 0) coeff *= static_cast<double>(trials - e + 1) / static_cast<double>(e);
      hist[e] += pairs * weight * coeff * std::pow(rate, e) *
                 std::pow(1.0 - rate, trials - e);
    }
  };
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, IidParams>) {
          add_component(p.rho, p.alpha);
          add_component(1.0 - p.rho, p.beta);
        } else if constexpr (std::is_same_v<T, MultiLevelParams>) {
          for (std::uint32_t w = 0; w < p.levels(); ++w)
            add_component(p.rho[w], p.alpha[w]);
        } else {
          throw ContractError(
              "predicted histogram is defined for iid and multilevel parameters");
        }
      },
      params);
  return hist;
}

std::vector<double> observed_histogram(const ObservationCounts& counts) {
  const std::uint32_t trials = require_common_trials(counts);
  std::vector<double> hist(trials + 1, 0.0);
  std::uint64_t listed = 0;
  for (const auto& [key, c] : counts.entries()) {
    hist[c.events] += 1.0;
    ++listed;
  }
  hist[0] += static_cast<double>(counts.pair_count() - listed);
  return hist;
}

FitReport chi_squared_gof(const std::vector<double>& observed,
                          const std::vector<double>& predicted,
                          std::uint32_t fitted_param_count, double significance) {
  if (observed.size() != predicted.size() || observed.empty())
    throw ContractError("observed and predicted histograms must have equal length");
  if (!(significance > 0.0 && significance < 1.0))
    throw ContractError("significance must lie in (0, 1)");

  FitReport report;
  report.observed = observed;
  report.predicted = predicted;
  report.significance = significance;

  // Merge rightward until each pooled bin carries predicted mass >= 5; a
  // leftover tail joins the last emitted bin.
  PooledBin acc;
  bool open = false;
  for (std::uint32_t e = 0; e < observed.size(); ++e) {
    if (!open) {
      acc = PooledBin{e, e, observed[e], predicted[e]};
      open = true;
    } else {
      acc.e_hi = e;
      acc.observed += observed[e];
      acc.predicted += predicted[e];
    }
    if (acc.predicted >= kPoolThreshold) {
      report.pooled.push_back(acc);
      open = false;
    }
  }
  if (open) {
    if (report.pooled.empty()) {
      report.pooled.push_back(acc);
    } else {
      PooledBin& last = report.pooled.back();
      last.e_hi = acc.e_hi;
      last.observed += acc.observed;
      last.predicted += acc.predicted;
    }
  }
  if (report.pooled.size() < 2)
    throw ContractError("fewer than 2 pooled bins: chi-square test not applicable");

  long double stat = 0.0L;
  for (const PooledBin& bin : report.pooled) {
    const double d = bin.observed - bin.predicted;
    stat += static_cast<long double>(d * d / bin.predicted);
  }
  report.statistic = static_cast<double>(stat);
  report.dof = static_cast<std::int32_t>(report.pooled.size()) - 1 -
               static_cast<std::int32_t>(fitted_param_count);
  if (report.dof < 1) {
    // More fitted parameters than informative bins: no power to reject.
    report.no_power = true;
    report.p_value = 1.0;
    report.critical_value = 0.0;
    report.rejected = false;
    return report;
  }
  const boost::math::chi_squared dist(static_cast<double>(report.dof));
  report.p_value = boost::math::cdf(boost::math::complement(dist, report.statistic));
  report.critical_value = boost::math::quantile(boost::math::complement(dist, significance));
  report.rejected = report.statistic > report.critical_value;
  return report;
}

LevelSelection select_num_levels(const ObservationCounts& counts, std::uint32_t w_max,
                                 double significance, const EmConfig& config) {
  if (w_max < 2) throw ContractError("w_max must be >= 2");
  const std::uint32_t trials = require_common_trials(counts);
  const std::vector<double> observed = observed_histogram(counts);

  LevelSelection selection;
  selection.selected = w_max;
  selection.all_rejected = true;
  for (std::uint32_t w = 2; w <= w_max; ++w) {
    EmResult fit = run_em(ModelKind::MultiLevel, counts, config, w);
    LevelFit lf;
    lf.levels = w;
    lf.params = std::get<MultiLevelParams>(fit.params);
    const auto predicted = predicted_histogram(fit.params, counts.n(), trials);
    bool accepted;
    try {
      lf.report = chi_squared_gof(observed, predicted, 2 * w - 1, significance);
      accepted = !lf.report.rejected;
    } catch (const ContractError&) {
      // Degenerate pooling (e.g. all mass in one bin): nothing to reject.
      lf.not_applicable = true;
      accepted = true;
    }
    selection.fits.push_back(std::move(lf));
    if (accepted) {
      selection.selected = w;
      selection.all_rejected = false;
      break;
    }
  }
  return selection;
}

}  // namespace netrecon
