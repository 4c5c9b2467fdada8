#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

#include "doctest.h"
#include "netrecon/engine.hpp"
#include "netrecon/errors.hpp"
#include "netrecon/gof.hpp"
#include "netrecon/models.hpp"
#include "netrecon/synth.hpp"
#include "util.hpp"

using namespace netrecon;
using testutil::dense_counts;
using testutil::universe_of;

namespace {

double binom_pmf(std::uint32_t e, std::uint32_t n, double p) {
  double coeff = 1;
  for (std::uint32_t k = 1; k <= e; ++k) coeff *= static_cast<double>(n - e + k) / k;
  return coeff * std::pow(p, e) * std::pow(1 - p, n - e);
}

}  // namespace

TEST_CASE("predicted pair histogram mixes the edge and non-edge binomials") {
  const IidParams params{0.4242, 0.0043, 0.0335};
  const auto predicted = predicted_histogram(ModelParams{params}, 96, 8);
  REQUIRE(predicted.size() == 9);
  const double pairs = 96.0 * 95 / 2;
  double total = 0;
  for (std::uint32_t e = 0; e <= 8; ++e) {
    const double expect =
        pairs * (params.rho * binom_pmf(e, 8, params.alpha) +
                 (1 - params.rho) * binom_pmf(e, 8, params.beta));
    CHECK(predicted[e] == doctest::Approx(expect).epsilon(1e-10));
    total += predicted[e];
  }
  CHECK(total == doctest::Approx(pairs).epsilon(1e-12));
  // A sparse, error-prone regime concentrates nearly all pairs at zero.
  CHECK(predicted[0] / pairs == doctest::Approx(0.93415327530382).epsilon(1e-12));
  CHECK(predicted[0] / pairs > 0.85);
}

TEST_CASE("predicted histogram supports level mixtures") {
  MultiLevelParams params;
  params.alpha = {0.02, 0.45, 0.9};
  params.rho = {0.7, 0.2, 0.1};
  const auto predicted = predicted_histogram(ModelParams{params}, 30, 5);
  REQUIRE(predicted.size() == 6);
  const double pairs = 30.0 * 29 / 2;
  for (std::uint32_t e = 0; e <= 5; ++e) {
    double expect = 0;
    for (int w = 0; w < 3; ++w)
      expect += params.rho[w] * binom_pmf(e, 5, params.alpha[w]);
    CHECK(predicted[e] == doctest::Approx(pairs * expect).epsilon(1e-10));
  }

  PerNodeParams pn;
  pn.alpha = {0.5, 0.5};
  pn.beta = {0.1, 0.1};
  pn.rho = 0.2;
  CHECK_THROWS_AS(predicted_histogram(ModelParams{pn}, 2, 3), ContractError);
}

TEST_CASE("observed histogram counts pairs by positive observations") {
  const auto counts = dense_counts(
      5, {{{0, 1}, {3, 4}}, {{0, 2}, {3, 4}}, {{1, 2}, {0, 4}}, {{3, 4}, {1, 4}}}, 4);
  const auto observed = observed_histogram(counts);
  REQUIRE(observed.size() == 5);
  CHECK(observed[0] == 7);  // one explicit zero plus six unobserved pairs
  CHECK(observed[1] == 1);
  CHECK(observed[2] == 0);
  CHECK(observed[3] == 2);
  CHECK(observed[4] == 0);
}

TEST_CASE("observed histogram requires one shared trial count") {
  const auto ragged = dense_counts(4, {{{0, 1}, {2, 3}}, {{0, 2}, {1, 4}}}, 4);
  CHECK_THROWS_AS(observed_histogram(ragged), ContractError);

  ObservationCounts directed(universe_of(3), true, 1, {2}, {});
  CHECK_THROWS_AS(observed_histogram(directed), ContractError);
}

TEST_CASE("chi-square statistic, pooling, and tail probability") {
  const std::vector<double> observed{50, 30, 12, 5, 3};
  const std::vector<double> predicted{48, 33, 11, 4.5, 3.5};
  const auto report = chi_squared_gof(observed, predicted, 1, 0.05);
  // The two right-hand bins pool together (4.5 and 3.5 are each below 5).
  REQUIRE(report.pooled.size() == 4);
  CHECK(report.pooled[3].e_lo == 3);
  CHECK(report.pooled[3].e_hi == 4);
  CHECK(report.pooled[3].observed == 8);
  CHECK(report.pooled[3].predicted == 8);
  CHECK(report.statistic == doctest::Approx(0.4469696969696969).epsilon(1e-12));
  CHECK(report.dof == 2);
  CHECK(report.p_value == doctest::Approx(0.7997270088516921).epsilon(1e-10));
  CHECK(report.critical_value == doctest::Approx(5.991464547107983).epsilon(1e-10));
  CHECK(!report.rejected);
  CHECK(!report.no_power);
}

TEST_CASE("a small leftover tail merges into the last emitted bin") {
  const std::vector<double> observed{9, 7, 2, 1, 1};
  const std::vector<double> predicted{10, 6, 2, 1, 0.5};
  const auto report = chi_squared_gof(observed, predicted, 0, 0.05);
  REQUIRE(report.pooled.size() == 2);
  CHECK(report.pooled[1].e_lo == 1);
  CHECK(report.pooled[1].e_hi == 4);
  CHECK(report.pooled[1].observed == 11);
  CHECK(report.pooled[1].predicted == doctest::Approx(9.5).epsilon(1e-12));
  CHECK(report.dof == 1);
}

TEST_CASE("gross misfit is rejected at the stated significance") {
  const std::vector<double> observed{50, 10, 40};
  const std::vector<double> predicted{30, 28, 42};
  const auto report = chi_squared_gof(observed, predicted, 1, 0.05);
  CHECK(report.statistic == doctest::Approx(25.0).epsilon(1e-12));
  CHECK(report.dof == 1);
  CHECK(report.p_value == doctest::Approx(5.733031437583875e-07).epsilon(1e-8));
  CHECK(report.critical_value == doctest::Approx(3.8414588206941285).epsilon(1e-10));
  CHECK(report.rejected);
}

TEST_CASE("too few informative bins leave the test without power") {
  // Everything pools into two bins; three fitted parameters eat the dof.
  const std::vector<double> observed{90, 6, 4};
  const std::vector<double> predicted{89, 6, 5};
  const auto report = chi_squared_gof(observed, predicted, 3, 0.05);
  CHECK(report.dof < 1);
  CHECK(report.no_power);
  CHECK(report.p_value == 1.0);
  CHECK(!report.rejected);

  // A single pooled bin cannot even form a statistic.
  const std::vector<double> tiny_obs{3, 1};
  const std::vector<double> tiny_pred{3.5, 0.5};
  CHECK_THROWS_AS(chi_squared_gof(tiny_obs, tiny_pred, 0, 0.05), ContractError);

  CHECK_THROWS_AS(chi_squared_gof({1, 2}, {1, 2, 3}, 0, 0.05), ContractError);
  CHECK_THROWS_AS(chi_squared_gof(observed, predicted, 0, 0.0), ContractError);
}

TEST_CASE("well-specified synthetic data passes the fit test most of the time") {
  int pass = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    SynthSpec spec;
    spec.n = 80;
    spec.truth = IidParams{0.5, 0.02, 0.1};
    spec.trials = {6};
    spec.seed = seed;
    const auto counts = generate_observations(generate_ground_truth(spec), spec);
    EmConfig config;
    config.seed = seed;
    config.restarts = 2;
    const auto fit = run_em(ModelKind::Iid, counts, config);
    const auto observed = observed_histogram(counts);
    const auto predicted = predicted_histogram(fit.params, counts.n(), 6);
    const auto report = chi_squared_gof(observed, predicted, 3, 0.05);
    if (!report.rejected) ++pass;
  }
  CHECK(pass >= 8);
}

TEST_CASE("level selection finds the smallest adequate level count") {
  SynthSpec spec;
  spec.n = 100;
  MultiLevelParams truth;
  truth.alpha = {0.01, 0.3, 0.8};
  truth.rho = {0.9, 0.07, 0.03};
  spec.truth = truth;
  spec.trials = {8};
  spec.seed = 3;
  const auto counts = generate_observations(generate_ground_truth(spec), spec);
  EmConfig config;
  config.seed = 11;
  config.restarts = 3;
  const auto selection = select_num_levels(counts, 4, 0.05, config);
  CHECK(selection.selected == 3);
  CHECK(!selection.all_rejected);
  REQUIRE(selection.fits.size() >= 2);
  CHECK(selection.fits.front().levels == 2);
  CHECK(selection.fits.front().report.rejected);
  const auto& chosen = selection.fits.back();
  CHECK(chosen.levels == 3);
  CHECK(!chosen.report.rejected);
  REQUIRE(chosen.params.levels() == 3);
  for (int w = 0; w < 3; ++w)
    CHECK(std::abs(chosen.params.alpha[w] - truth.alpha[w]) < 0.08);
}

TEST_CASE("binary data needs only two levels") {
  SynthSpec spec;
  spec.n = 80;
  spec.truth = IidParams{0.6, 0.01, 0.08};
  spec.trials = {6};
  spec.seed = 9;
  const auto counts = generate_observations(generate_ground_truth(spec), spec);
  EmConfig config;
  config.seed = 4;
  config.restarts = 2;
  const auto selection = select_num_levels(counts, 4, 0.05, config);
  CHECK(selection.selected == 2);
  CHECK(selection.fits.size() == 1);
}
