// Python bindings for the core inference operations.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "netrecon/engine.hpp"
#include "netrecon/errors.hpp"
#include "netrecon/gof.hpp"
#include "netrecon/models.hpp"
#include "netrecon/obsdata.hpp"
#include "netrecon/posterior.hpp"
#include "netrecon/synth.hpp"
#include "netrecon/version.hpp"

namespace py = pybind11;
using namespace netrecon;

namespace {

ObservationCounts counts_from_text(const std::string& text, bool directed, std::uint32_t modes,
                                   const std::vector<std::uint32_t>& default_trials,
                                   const std::vector<std::string>& extra_nodes) {
  CountsParseOptions options;
  options.directed = directed;
  options.modes = modes;
  options.default_trials = default_trials;
  options.extra_nodes = extra_nodes;
  std::istringstream in(text);
  return parse_counts(in, options);
}

ObservationCounts snapshots_from_text(const std::string& text,
                                      const std::vector<std::string>& extra_nodes,
                                      std::optional<std::uint32_t> trials_override) {
  std::istringstream in(text);
  return parse_snapshot_log(in, extra_nodes, trials_override);
}

std::string counts_to_text(const ObservationCounts& counts) {
  std::ostringstream out;
  write_counts(counts, out);
  return out.str();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Posterior network reconstruction from repeated noisy edge observations";
  m.attr("__version__") = kVersion;

  // Library errors surface as ValueError subclasses so callers can catch
  // them without importing anything beyond the module itself.
  static py::exception<Error> base_exc(m, "Error", PyExc_ValueError);
  py::register_exception<ParseError>(m, "ParseError", base_exc);
  py::register_exception<ValidationError>(m, "ValidationError", base_exc);
  py::register_exception<ConflictError>(m, "ConflictError", base_exc);
  py::register_exception<ContractError>(m, "ContractError", base_exc);
  py::register_exception<NumericError>(m, "NumericError", base_exc);
  py::register_exception<DegenerateError>(m, "DegenerateError", base_exc);

  py::class_<ObservationCounts>(m, "ObservationCounts")
      .def_property_readonly("n", &ObservationCounts::n)
      .def_property_readonly("pair_count", &ObservationCounts::pair_count)
      .def_property_readonly("directed", &ObservationCounts::directed)
      .def_property_readonly("modes", &ObservationCounts::modes)
      .def_property_readonly(
          "labels", [](const ObservationCounts& c) { return c.universe().labels(); })
      .def("default_trials", &ObservationCounts::default_trials, py::arg("mode") = 0)
      .def(
          "effective",
          [](const ObservationCounts& c, std::uint32_t u, std::uint32_t v, std::uint32_t mode) {
            Counts e = c.effective(u, v, mode);
            return py::make_tuple(e.events, e.trials);
          },
          py::arg("u"), py::arg("v"), py::arg("mode") = 0,
          "(events, trials) for a node pair; absent pairs use the default trial count")
      .def("common_trials", &ObservationCounts::common_trials)
      .def("__repr__", [](const ObservationCounts& c) {
        std::ostringstream out;
        out << "ObservationCounts(n=" << c.n() << ", directed=" << (c.directed() ? "True" : "False")
            << ", modes=" << c.modes() << ", entries=" << c.entries().size() << ")";
        return out.str();
      });

  m.def("parse_counts", &counts_from_text, py::arg("text"), py::arg("directed") = false,
        py::arg("modes") = 1, py::arg("default_trials") = std::vector<std::uint32_t>{},
        py::arg("extra_nodes") = std::vector<std::string>{},
        "Parse a counts table: lines '[mode] u v events trials'");
  m.def("parse_snapshots", &snapshots_from_text, py::arg("text"),
        py::arg("extra_nodes") = std::vector<std::string>{},
        py::arg("trials_override") = std::nullopt,
        "Parse a snapshot log: lines 'snapshot_id u v'");
  m.def("write_counts", &counts_to_text, py::arg("counts"),
        "Serialize counts in the counts-table format");

  py::class_<IidParams>(m, "IidParams")
      .def(py::init([](double alpha, double beta, double rho) {
             return IidParams{alpha, beta, rho};
           }),
           py::arg("alpha"), py::arg("beta"), py::arg("rho"))
      .def_readwrite("alpha", &IidParams::alpha)
      .def_readwrite("beta", &IidParams::beta)
      .def_readwrite("rho", &IidParams::rho)
      .def("__repr__", [](const IidParams& p) {
        std::ostringstream out;
        out << "IidParams(alpha=" << p.alpha << ", beta=" << p.beta << ", rho=" << p.rho << ")";
        return out.str();
      });

  py::class_<PerNodeParams>(m, "PerNodeParams")
      .def(py::init([](std::vector<double> alpha, std::vector<double> beta, double rho) {
             PerNodeParams p;
             p.alpha = std::move(alpha);
             p.beta = std::move(beta);
             p.rho = rho;
             return p;
           }),
           py::arg("alpha"), py::arg("beta"), py::arg("rho"))
      .def_readwrite("alpha", &PerNodeParams::alpha)
      .def_readwrite("beta", &PerNodeParams::beta)
      .def_readwrite("rho", &PerNodeParams::rho)
      .def("__repr__", [](const PerNodeParams& p) {
        std::ostringstream out;
        out << "PerNodeParams(nodes=" << p.alpha.size() << ", rho=" << p.rho << ")";
        return out.str();
      });

  py::class_<MultiLevelParams>(m, "MultiLevelParams")
      .def(py::init([](std::vector<double> alpha, std::vector<double> rho) {
             MultiLevelParams p;
             p.alpha = std::move(alpha);
             p.rho = std::move(rho);
             return p;
           }),
           py::arg("alpha"), py::arg("rho"))
      .def_readwrite("alpha", &MultiLevelParams::alpha)
      .def_readwrite("rho", &MultiLevelParams::rho)
      .def_property_readonly("levels", &MultiLevelParams::levels)
      .def("__repr__", [](const MultiLevelParams& p) {
        std::ostringstream out;
        out << "MultiLevelParams(levels=" << p.levels() << ")";
        return out.str();
      });

  py::class_<MultiModalParams>(m, "MultiModalParams")
      .def(py::init([](std::vector<double> alpha, std::vector<double> beta, double rho) {
             MultiModalParams p;
             p.alpha = std::move(alpha);
             p.beta = std::move(beta);
             p.rho = rho;
             return p;
           }),
           py::arg("alpha"), py::arg("beta"), py::arg("rho"))
      .def_readwrite("alpha", &MultiModalParams::alpha)
      .def_readwrite("beta", &MultiModalParams::beta)
      .def_readwrite("rho", &MultiModalParams::rho)
      .def_property_readonly("modes", &MultiModalParams::modes)
      .def("__repr__", [](const MultiModalParams& p) {
        std::ostringstream out;
        out << "MultiModalParams(modes=" << p.modes() << ", rho=" << p.rho << ")";
        return out.str();
      });

  py::class_<PosteriorEdges>(m, "PosteriorEdges")
      .def_property_readonly("n", &PosteriorEdges::n)
      .def_property_readonly("levels", &PosteriorEdges::levels)
      .def_property_readonly(
          "is_multilevel",
          [](const PosteriorEdges& p) { return p.kind() == PosteriorEdges::Kind::MultiLevel; })
      .def("q", &PosteriorEdges::q, py::arg("i"), py::arg("j"),
           "Marginal edge probability for a binary posterior")
      .def(
          "level_q",
          [](const PosteriorEdges& p, std::uint32_t i, std::uint32_t j) {
            auto s = p.level_q(i, j);
            return std::vector<double>(s.begin(), s.end());
          },
          py::arg("i"), py::arg("j"), "Per-level posterior weights for a multilevel posterior")
      .def("__repr__", [](const PosteriorEdges& p) {
        std::ostringstream out;
        out << "PosteriorEdges(n=" << p.n()
            << (p.kind() == PosteriorEdges::Kind::MultiLevel
                    ? ", levels=" + std::to_string(p.levels())
                    : std::string())
            << ")";
        return out.str();
      });

  py::class_<EmConfig>(m, "EmConfig")
      .def(py::init<>())
      .def_readwrite("tol_param", &EmConfig::tol_param)
      .def_readwrite("tol_loglik", &EmConfig::tol_loglik)
      .def_readwrite("max_iter", &EmConfig::max_iter)
      .def_readwrite("restarts", &EmConfig::restarts)
      .def_readwrite("seed", &EmConfig::seed);

  py::class_<EmIteration>(m, "EmIteration")
      .def_readonly("iteration", &EmIteration::iteration)
      .def_readonly("loglik", &EmIteration::loglik)
      .def_readonly("max_param_delta", &EmIteration::max_param_delta);

  py::class_<EmTrace>(m, "EmTrace")
      .def_readonly("iterations", &EmTrace::iterations)
      .def_readonly("converged", &EmTrace::converged)
      .def_readonly("iterations_used", &EmTrace::iterations_used)
      .def_readonly("restart_index", &EmTrace::restart_index)
      .def_readonly("restart_logliks", &EmTrace::restart_logliks)
      .def("final_loglik", &EmTrace::final_loglik);

  py::class_<EmResult>(m, "EmResult")
      .def_readonly("params", &EmResult::params)
      .def_readonly("posterior", &EmResult::posterior)
      .def_readonly("trace", &EmResult::trace)
      .def_readonly("degenerate", &EmResult::degenerate);

  m.def(
      "run_em",
      [](const ObservationCounts& counts, const std::string& model, const EmConfig& config,
         std::uint32_t levels) { return run_em(kind_from_name(model), counts, config, levels); },
      py::arg("counts"), py::arg("model"), py::arg("config") = EmConfig{}, py::arg("levels") = 2,
      "Best-of-restarts EM fit; model is one of iid, pernode, multilevel, multimodal");

  m.def("e_step", &e_step, py::arg("counts"), py::arg("params"),
        "Posterior edge marginals given fixed parameters");
  m.def(
      "m_step",
      [](const ObservationCounts& counts, const PosteriorEdges& posterior,
         const ModelParams& previous) { return m_step(counts, posterior, previous).params; },
      py::arg("counts"), py::arg("posterior"), py::arg("previous"),
      "Closed-form parameter update given posterior marginals");
  m.def("profile_loglik", &profile_loglik, py::arg("counts"), py::arg("params"),
        "Marginal log-likelihood with the network summed out");

  py::class_<DerivedRates>(m, "DerivedRates")
      .def_readonly("fdr", &DerivedRates::fdr)
      .def_readonly("precision", &DerivedRates::precision)
      .def_readonly("recall", &DerivedRates::recall)
      .def_readonly("mean_fdr", &DerivedRates::mean_fdr)
      .def_readonly("mean_precision", &DerivedRates::mean_precision)
      .def_readonly("mean_recall", &DerivedRates::mean_recall)
      .def_readonly("reporting_mean_fdr", &DerivedRates::reporting_mean_fdr)
      .def_readonly("reporting_mean_precision", &DerivedRates::reporting_mean_precision)
      .def_readonly("reporting_mean_recall", &DerivedRates::reporting_mean_recall);

  m.def("derived_rates",
        py::overload_cast<const ModelParams&>(&derived_rates), py::arg("params"),
        "False-discovery rate, precision, and recall implied by fitted parameters");
  m.def("derived_rates",
        py::overload_cast<const ModelParams&, const ObservationCounts&>(&derived_rates),
        py::arg("params"), py::arg("counts"));

  py::class_<NetworkSample>(m, "NetworkSample")
      .def_readonly("n", &NetworkSample::n)
      .def_readonly("levels", &NetworkSample::levels)
      .def_readonly("edges", &NetworkSample::edges)
      .def_readonly("seed", &NetworkSample::seed)
      .def_property_readonly("edge_count", &NetworkSample::edge_count)
      .def("level", &NetworkSample::level, py::arg("i"), py::arg("j"))
      .def("has_edge", &NetworkSample::has_edge, py::arg("i"), py::arg("j"))
      .def("degree", &NetworkSample::degree, py::arg("node"))
      .def("__repr__", [](const NetworkSample& s) {
        std::ostringstream out;
        out << "NetworkSample(n=" << s.n << ", edges=" << s.edge_count() << ")";
        return out.str();
      });

  py::class_<SynthSpec>(m, "SynthSpec")
      .def(py::init([](std::uint32_t n, ModelParams truth, std::vector<std::uint32_t> trials,
                       std::uint64_t seed, std::vector<std::string> labels) {
             SynthSpec spec;
             spec.n = n;
             spec.truth = std::move(truth);
             spec.trials = std::move(trials);
             spec.seed = seed;
             spec.labels = std::move(labels);
             return spec;
           }),
           py::arg("n"), py::arg("truth"), py::arg("trials"), py::arg("seed") = 0,
           py::arg("labels") = std::vector<std::string>{})
      .def_readwrite("n", &SynthSpec::n)
      .def_readwrite("truth", &SynthSpec::truth)
      .def_readwrite("trials", &SynthSpec::trials)
      .def_readwrite("seed", &SynthSpec::seed)
      .def_readwrite("labels", &SynthSpec::labels);

  m.def("generate_ground_truth", &generate_ground_truth, py::arg("spec"),
        "Draw a true network from the spec's prior");
  m.def("generate_observations", &generate_observations, py::arg("truth"), py::arg("spec"),
        "Draw noisy observation counts of a known network");

  m.def("sample_networks", &sample_networks, py::arg("posterior"), py::arg("count"),
        py::arg("seed"), "Independent network draws from per-pair posterior marginals");
  m.def("expected_degree", &expected_degree, py::arg("posterior"), py::arg("node"),
        "Sum of marginal edge probabilities at one node");

  py::class_<PooledBin>(m, "PooledBin")
      .def_readonly("e_lo", &PooledBin::e_lo)
      .def_readonly("e_hi", &PooledBin::e_hi)
      .def_readonly("observed", &PooledBin::observed)
      .def_readonly("predicted", &PooledBin::predicted);

  py::class_<FitReport>(m, "FitReport")
      .def_readonly("observed", &FitReport::observed)
      .def_readonly("predicted", &FitReport::predicted)
      .def_readonly("pooled", &FitReport::pooled)
      .def_readonly("statistic", &FitReport::statistic)
      .def_readonly("dof", &FitReport::dof)
      .def_readonly("p_value", &FitReport::p_value)
      .def_readonly("critical_value", &FitReport::critical_value)
      .def_readonly("significance", &FitReport::significance)
      .def_readonly("rejected", &FitReport::rejected)
      .def_readonly("no_power", &FitReport::no_power);

  m.def("predicted_histogram", &predicted_histogram, py::arg("params"), py::arg("n"),
        py::arg("trials"),
        "Expected pair counts per number of positive observations e = 0..trials");
  m.def("observed_histogram", &observed_histogram, py::arg("counts"),
        "Observed pair counts per number of positive observations");
  m.def("chi_squared_gof", &chi_squared_gof, py::arg("observed"), py::arg("predicted"),
        py::arg("fitted_param_count"), py::arg("significance") = 0.05,
        "Pearson chi-square test with bins pooled to predicted >= 5");

  py::class_<LevelFit>(m, "LevelFit")
      .def_readonly("levels", &LevelFit::levels)
      .def_readonly("params", &LevelFit::params)
      .def_readonly("report", &LevelFit::report)
      .def_readonly("not_applicable", &LevelFit::not_applicable);

  py::class_<LevelSelection>(m, "LevelSelection")
      .def_readonly("selected", &LevelSelection::selected)
      .def_readonly("all_rejected", &LevelSelection::all_rejected)
      .def_readonly("fits", &LevelSelection::fits);

  m.def("select_num_levels", &select_num_levels, py::arg("counts"), py::arg("w_max"),
        py::arg("significance") = 0.05, py::arg("config") = EmConfig{},
        "Smallest level count whose fit the chi-square test does not reject");
}
