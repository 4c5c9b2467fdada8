#include "netrecon/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "netrecon/engine.hpp"
#include "netrecon/errors.hpp"
#include "netrecon/gof.hpp"
#include "netrecon/models.hpp"
#include "netrecon/obsdata.hpp"
#include "netrecon/posterior.hpp"
#include "netrecon/synth.hpp"
#include "netrecon/version.hpp"

namespace netrecon {
namespace {

using ordered_json = nlohmann::ordered_json;

// ---------------------------------------------------------------- plumbing

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw Error("cannot read " + path);
  return buf.str();
}

std::string utc_timestamp() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Non-finite doubles would be dumped as JSON null; fail loudly instead so
// every number in an emitted document is guaranteed finite.
void require_finite(const ordered_json& j) {
  if (j.is_number_float()) {
    if (!std::isfinite(j.get<double>()))
      throw NumericError("non-finite number in output document");
  } else if (j.is_object() || j.is_array()) {
    for (const auto& child : j) require_finite(child);
  }
}

// Writes to a file, or to the injected stream when path is "-".
class OutputTarget {
 public:
  OutputTarget(const std::string& path, std::ostream& fallback) : path_(path) {
    if (path == "-") {
      os_ = &fallback;
    } else {
      file_.open(path, std::ios::binary);
      if (!file_) throw Error("cannot write " + path);
      os_ = &file_;
    }
  }
  std::ostream& os() { return *os_; }
  void finish() {
    os_->flush();
    if (!*os_) throw Error("failed writing " + (path_ == "-" ? "output" : path_));
  }

 private:
  std::string path_;
  std::ofstream file_;
  std::ostream* os_ = nullptr;
};

void emit_document(const ordered_json& doc, OutputTarget& target) {
  require_finite(doc);
  target.os() << doc.dump(2) << '\n';
  target.finish();
}

ordered_json parse_json(const std::string& bytes, const std::string& what) {
  try {
    return ordered_json::parse(bytes);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(what + ": " + e.what());
  }
}

// Run manifest embedded in every output document: what ran, on which inputs
// (by content digest), and with which knobs, so a run can be reproduced.
class Manifest {
 public:
  void add_input(const std::string& name, const std::string& path, const std::string& bytes) {
    inputs_[name] = {{"path", path}, {"fnv1a64", hex64(fnv1a64(bytes))}};
  }

  ordered_json finish(const std::string& command, std::uint64_t seed, bool no_timestamp,
                      const ordered_json& extra = ordered_json::object()) const {
    ordered_json m;
    m["command"] = command;
    m["tool"] = "netrecon";
    m["tool_version"] = kVersion;
    for (const auto& [key, value] : extra.items()) m[key] = value;
    m["inputs"] = inputs_;
    m["seed"] = seed;
    if (!no_timestamp) {
      m["timestamp"] = utc_timestamp();
      const auto elapsed = std::chrono::steady_clock::now() - start_;
      m["duration_seconds"] = std::chrono::duration<double>(elapsed).count();
    }
    return m;
  }

 private:
  ordered_json inputs_ = ordered_json::object();
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

ordered_json config_json(const EmConfig& config) {
  ordered_json j;
  j["tol_param"] = config.tol_param;
  j["tol_loglik"] = config.tol_loglik;
  j["max_iter"] = config.max_iter;
  j["restarts"] = config.restarts;
  return j;
}

// ------------------------------------------------------- shared converters

ordered_json params_to_json(const ModelParams& params) {
  ordered_json j;
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, IidParams>) {
          j["alpha"] = p.alpha;
          j["beta"] = p.beta;
          j["rho"] = p.rho;
        } else if constexpr (std::is_same_v<T, PerNodeParams>) {
          j["alpha"] = p.alpha;
          j["beta"] = p.beta;
          j["rho"] = p.rho;
        } else if constexpr (std::is_same_v<T, MultiLevelParams>) {
          j["levels"] = p.levels();
          j["alpha"] = p.alpha;
          j["rho"] = p.rho;
        } else {
          j["modes"] = p.modes();
          j["alpha"] = p.alpha;
          j["beta"] = p.beta;
          j["rho"] = p.rho;
        }
      },
      params);
  return j;
}

ModelParams params_from_json(ModelKind kind, const ordered_json& j) {
  try {
    switch (kind) {
      case ModelKind::Iid:
        return IidParams{j.at("alpha").get<double>(), j.at("beta").get<double>(),
                         j.at("rho").get<double>()};
      case ModelKind::PerNode: {
        PerNodeParams p{j.at("alpha").get<std::vector<double>>(),
                        j.at("beta").get<std::vector<double>>(), j.at("rho").get<double>()};
        if (p.alpha.size() != p.beta.size() || p.alpha.empty())
          throw ValidationError("per-node params need matching alpha/beta lists");
        return p;
      }
      case ModelKind::MultiLevel: {
        MultiLevelParams p{j.at("alpha").get<std::vector<double>>(),
                           j.at("rho").get<std::vector<double>>()};
        if (p.alpha.size() != p.rho.size() || p.levels() < 2)
          throw ValidationError("multilevel params need matching alpha/rho lists, W >= 2");
        return p;
      }
      case ModelKind::MultiModal: {
        MultiModalParams p{j.at("alpha").get<std::vector<double>>(),
                           j.at("beta").get<std::vector<double>>(), j.at("rho").get<double>()};
        if (p.alpha.size() != p.beta.size() || p.alpha.empty())
          throw ValidationError("multimodal params need matching alpha/beta lists");
        return p;
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad params block: ") + e.what());
  }
  throw ContractError("unknown model kind");
}

ordered_json rates_to_json(const DerivedRates& rates, const char* per) {
  ordered_json j;
  if (rates.fdr.size() == 1) {
    j["fdr"] = rates.fdr[0];
    j["precision"] = rates.precision[0];
    j["recall"] = rates.recall[0];
  } else {
    j["per"] = per;
    j["fdr"] = rates.fdr;
    j["precision"] = rates.precision;
    j["recall"] = rates.recall;
    j["mean_fdr"] = rates.mean_fdr;
    j["mean_precision"] = rates.mean_precision;
    j["mean_recall"] = rates.mean_recall;
  }
  if (rates.reporting_mean_fdr) {
    j["reporting_mean_fdr"] = *rates.reporting_mean_fdr;
    j["reporting_mean_precision"] = *rates.reporting_mean_precision;
    j["reporting_mean_recall"] = *rates.reporting_mean_recall;
  }
  return j;
}

ordered_json trace_json(const EmTrace& trace) {
  ordered_json j;
  j["converged"] = trace.converged;
  j["iterations"] = trace.iterations_used;
  j["final_loglik"] = trace.final_loglik();
  j["final_max_param_delta"] =
      trace.iterations.empty() ? 0.0 : trace.iterations.back().max_param_delta;
  j["restart_index"] = trace.restart_index;
  j["restart_logliks"] = trace.restart_logliks;
  return j;
}

ordered_json edges_json(const PosteriorEdges& posterior, const NodeUniverse& universe,
                        double threshold) {
  const bool multilevel = posterior.kind() == PosteriorEdges::Kind::MultiLevel;
  struct Row {
    double q = 0;
    std::uint64_t k = 0;
    std::vector<double> level_q;
  };
  std::vector<Row> rows;
  const std::uint64_t total = posterior.classes().pair_count();
  for (std::uint64_t k = 0; k < total; ++k) {
    const auto [i, j] = PairClassSet::pair_from_index(posterior.n(), k);
    Row row;
    row.k = k;
    if (multilevel) {
      const auto lev = posterior.level_q(i, j);
      row.q = 1.0 - lev[0];
      row.level_q.assign(lev.begin(), lev.end());
    } else {
      row.q = posterior.q(i, j);
    }
    if (row.q >= threshold) rows.push_back(std::move(row));
  }
  std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    if (a.q != b.q) return a.q > b.q;
    return a.k < b.k;
  });
  ordered_json arr = ordered_json::array();
  for (const Row& row : rows) {
    const auto [i, j] = PairClassSet::pair_from_index(posterior.n(), row.k);
    ordered_json e;
    e["u"] = universe.label(i);
    e["v"] = universe.label(j);
    e["q"] = row.q;
    if (multilevel) e["level_q"] = row.level_q;
    arr.push_back(std::move(e));
  }
  return arr;
}

// Posterior marginals as default value + per-pair exceptions, keyed by node
// labels; the compact dual of load_posterior below.
ordered_json posterior_to_json(const PosteriorEdges& posterior, const NodeUniverse& universe) {
  const PairClassSet& cs = posterior.classes();
  const bool multilevel = posterior.kind() == PosteriorEdges::Kind::MultiLevel;

  std::size_t def_cls = 0;
  if (cs.default_class() >= 0) {
    def_cls = static_cast<std::size_t>(cs.default_class());
  } else {
    for (std::size_t c = 1; c < cs.classes().size(); ++c)
      if (cs.classes()[c].member_count > cs.classes()[def_cls].member_count) def_cls = c;
  }

  ordered_json j;
  j["kind"] = multilevel ? "multilevel" : "binary";
  if (multilevel) j["levels"] = posterior.levels();
  j["nodes"] = universe.labels();

  auto pair_entry = [&](std::uint64_t k) {
    const auto [u, v] = PairClassSet::pair_from_index(posterior.n(), k);
    ordered_json e;
    e["u"] = universe.label(u);
    e["v"] = universe.label(v);
    return e;
  };

  ordered_json pairs = ordered_json::array();
  if (multilevel) {
    const auto def = posterior.class_level_q(def_cls);
    j["default_q"] = std::vector<double>(def.begin(), def.end());
    std::map<std::uint64_t, std::vector<double>> entries;
    for (std::size_t c = 0; c < cs.classes().size(); ++c) {
      if (c == def_cls) continue;
      const auto q = posterior.class_level_q(c);
      for (std::uint64_t k : cs.classes()[c].members)
        entries[k] = std::vector<double>(q.begin(), q.end());
    }
    for (const auto& [k, q] : entries) {
      ordered_json e = pair_entry(k);
      e["q"] = q;
      pairs.push_back(std::move(e));
    }
  } else {
    const double def_q = posterior.class_q(def_cls);
    j["default_q"] = def_q;
    std::map<std::uint64_t, double> entries;
    for (std::size_t c = 0; c < cs.classes().size(); ++c) {
      if (c == def_cls) continue;
      for (std::uint64_t k : cs.classes()[c].members) entries[k] = posterior.class_q(c);
    }
    for (const auto& [k, q] : posterior.overrides()) {
      if (q == def_q)
        entries.erase(k);
      else
        entries[k] = q;
    }
    for (const auto& [k, q] : entries) {
      ordered_json e = pair_entry(k);
      e["q"] = q;
      pairs.push_back(std::move(e));
    }
  }
  j["pairs"] = std::move(pairs);
  return j;
}

struct LoadedPosterior {
  NodeUniverse universe;
  PosteriorEdges posterior;
};

double check_probability(double v) {
  if (!(v >= 0.0 && v <= 1.0))
    throw ValidationError("posterior probabilities must lie in [0, 1]");
  return v;
}

LoadedPosterior load_posterior(const ordered_json& doc) {
  if (!doc.contains("posterior"))
    throw ParseError("document has no posterior block");
  try {
    const ordered_json& block = doc.at("posterior");
    NodeUniverse universe;
    for (const auto& label : block.at("nodes")) universe.add(label.get<std::string>());
    if (universe.size() != block.at("nodes").size())
      throw ValidationError("duplicate node label in posterior block");
    const std::uint32_t n = universe.size();
    if (n < 2) throw ValidationError("posterior needs at least 2 nodes");
    const std::string kind = block.at("kind").get<std::string>();

    auto pair_of = [&](const ordered_json& entry) {
      const auto u = universe.require(entry.at("u").get<std::string>());
      const auto v = universe.require(entry.at("v").get<std::string>());
      if (u == v) throw ValidationError("posterior pair is a self-loop");
      return PairClassSet::pair_index(n, u, v);
    };

    if (kind == "binary") {
      const double def_q = check_probability(block.at("default_q").get<double>());
      std::map<double, std::vector<std::uint64_t>> groups;
      std::set<std::uint64_t> seen;
      for (const auto& entry : block.at("pairs")) {
        const std::uint64_t k = pair_of(entry);
        if (!seen.insert(k).second) throw ConflictError("pair listed twice in posterior");
        const double q = check_probability(entry.at("q").get<double>());
        if (q != def_q) groups[q].push_back(k);
      }
      std::vector<std::vector<std::uint64_t>> members;
      std::vector<double> values;
      for (auto& [q, ks] : groups) {
        members.push_back(std::move(ks));
        values.push_back(q);
      }
      auto cs = std::make_shared<const PairClassSet>(PairClassSet::from_members(n, members));
      if (cs->default_class() >= 0) values.push_back(def_q);
      return {std::move(universe), PosteriorEdges::binary(std::move(cs), std::move(values))};
    }
    if (kind == "multilevel") {
      const std::uint32_t levels = block.at("levels").get<std::uint32_t>();
      if (levels < 2) throw ValidationError("multilevel posterior needs levels >= 2");
      auto read_levels = [&](const ordered_json& v) {
        auto x = v.get<std::vector<double>>();
        if (x.size() != levels)
          throw ValidationError("level posterior needs one value per level");
        double sum = 0;
        for (double d : x) sum += check_probability(d);
        if (std::abs(sum - 1.0) > 1e-6)
          throw ValidationError("level posterior must sum to 1");
        return x;
      };
      const std::vector<double> def_q = read_levels(block.at("default_q"));
      std::map<std::vector<double>, std::vector<std::uint64_t>> groups;
      std::set<std::uint64_t> seen;
      for (const auto& entry : block.at("pairs")) {
        const std::uint64_t k = pair_of(entry);
        if (!seen.insert(k).second) throw ConflictError("pair listed twice in posterior");
        auto q = read_levels(entry.at("q"));
        if (q != def_q) groups[std::move(q)].push_back(k);
      }
      std::vector<std::vector<std::uint64_t>> members;
      std::vector<double> values;
      for (auto& [q, ks] : groups) {
        members.push_back(std::move(ks));
        values.insert(values.end(), q.begin(), q.end());
      }
      auto cs = std::make_shared<const PairClassSet>(PairClassSet::from_members(n, members));
      if (cs->default_class() >= 0) values.insert(values.end(), def_q.begin(), def_q.end());
      return {std::move(universe),
              PosteriorEdges::multilevel(std::move(cs), levels, std::move(values))};
    }
    throw ParseError("unknown posterior kind '" + kind + "'");
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad posterior document: ") + e.what());
  }
}

std::vector<std::string> parse_label_lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (const auto pos = line.find('#'); pos != std::string::npos) line.erase(pos);
    std::istringstream tokens(line);
    std::string token;
    while (tokens >> token) out.push_back(token);
  }
  return out;
}

ordered_json report_json(const FitReport& report) {
  ordered_json j;
  j["statistic"] = report.statistic;
  j["dof"] = report.dof;
  j["p_value"] = report.p_value;
  j["critical_value"] = report.critical_value;
  j["significance"] = report.significance;
  j["rejected"] = report.rejected;
  j["no_power"] = report.no_power;
  ordered_json pooled = ordered_json::array();
  for (const PooledBin& bin : report.pooled) {
    ordered_json b;
    b["e_lo"] = bin.e_lo;
    b["e_hi"] = bin.e_hi;
    b["observed"] = bin.observed;
    b["predicted"] = bin.predicted;
    pooled.push_back(std::move(b));
  }
  j["pooled"] = std::move(pooled);
  return j;
}

ordered_json histogram_json(const std::vector<double>& observed,
                            const std::vector<double>& predicted) {
  ordered_json j;
  std::vector<std::uint32_t> e(observed.size());
  for (std::uint32_t i = 0; i < e.size(); ++i) e[i] = i;
  j["e"] = e;
  j["observed"] = observed;
  j["predicted"] = predicted;
  return j;
}

// ----------------------------------------------------------------- infer

struct InferOpts {
  std::string model;
  std::string input;
  std::string format = "counts";
  std::vector<std::uint32_t> default_trials;
  std::uint32_t modes = 1;
  std::uint32_t levels = 2;
  double tol = 1e-8;
  double tol_loglik = 1e-10;
  std::uint32_t max_iter = 1000;
  std::uint32_t restarts = 5;
  std::uint64_t seed = 0;
  double q_threshold = 0.5;
  std::string nodes_path;
  std::string output = "-";
  bool no_timestamp = false;
};

ObservationCounts ingest(const std::string& format, const std::string& bytes,
                         std::uint32_t modes, const std::vector<std::uint32_t>& default_trials,
                         const std::vector<std::string>& extra_nodes) {
  std::istringstream in(bytes);
  if (format == "snapshots") {
    if (modes != 1) throw ContractError("snapshot logs are single-mode");
    std::optional<std::uint32_t> trials_override;
    if (!default_trials.empty()) {
      if (default_trials.size() != 1)
        throw ContractError("snapshot logs take a single --default-trials value");
      trials_override = default_trials[0];
    }
    return parse_snapshot_log(in, extra_nodes, trials_override);
  }
  CountsParseOptions options;
  options.directed = format == "reports";
  if (options.directed && modes != 1) throw ContractError("report tables are single-mode");
  options.modes = modes;
  options.default_trials = default_trials;
  options.extra_nodes = extra_nodes;
  return parse_counts(in, options);
}

int run_infer(const InferOpts& o, std::ostream& out) {
  Manifest manifest;
  const ModelKind kind = kind_from_name(o.model);
  const std::string input_bytes = read_file(o.input);
  manifest.add_input("input", o.input, input_bytes);

  std::vector<std::string> extra_nodes;
  if (!o.nodes_path.empty()) {
    const std::string nodes_bytes = read_file(o.nodes_path);
    manifest.add_input("nodes", o.nodes_path, nodes_bytes);
    extra_nodes = parse_label_lines(nodes_bytes);
  }
  const ObservationCounts counts =
      ingest(o.format, input_bytes, o.modes, o.default_trials, extra_nodes);

  EmConfig config;
  config.tol_param = o.tol;
  config.tol_loglik = o.tol_loglik;
  config.max_iter = o.max_iter;
  config.restarts = o.restarts;
  config.seed = o.seed;
  config.validate();

  const EmResult result = run_em(kind, counts, config, o.levels);

  ordered_json doc;
  doc["document"] = "netrecon.infer";
  doc["model"] = kind_name(kind);
  doc["node_count"] = counts.n();
  doc["pair_count"] = counts.pair_count();
  doc["params"] = params_to_json(result.params);
  doc["degenerate"] = result.degenerate;
  if (kind != ModelKind::MultiLevel)
    doc["derived_rates"] = rates_to_json(derived_rates(result.params, counts),
                                         kind == ModelKind::PerNode ? "node" : "mode");
  doc["q_threshold"] = o.q_threshold;
  doc["edges"] = edges_json(result.posterior, counts.universe(), o.q_threshold);
  doc["posterior"] = posterior_to_json(result.posterior, counts.universe());
  doc["trace"] = trace_json(result.trace);

  ordered_json extra;
  extra["model"] = kind_name(kind);
  if (kind == ModelKind::MultiLevel) extra["levels"] = o.levels;
  extra["format"] = o.format;
  extra["config"] = config_json(config);
  doc["manifest"] = manifest.finish("infer", o.seed, o.no_timestamp, extra);

  OutputTarget target(o.output, out);
  emit_document(doc, target);
  return result.trace.converged ? 0 : 2;
}

// ----------------------------------------------------------------- synth

struct SynthOpts {
  std::string model;
  std::uint32_t n = 0;
  std::vector<std::uint32_t> trials;
  std::vector<double> alpha;
  std::vector<double> beta;
  std::vector<double> rho;
  std::uint64_t seed = 0;
  std::string output;
  std::string truth_path;
  bool no_timestamp = false;
};

ModelParams build_truth(ModelKind kind, const SynthOpts& o) {
  auto scalar = [](const std::vector<double>& v, const char* flag) {
    if (v.size() != 1)
      throw ContractError(std::string(flag) + " takes exactly one value for this model");
    return v[0];
  };
  auto per_unit = [&](std::vector<double> v, std::size_t units, const char* flag) {
    if (v.size() == 1) return std::vector<double>(units, v[0]);
    if (v.size() != units)
      throw ContractError(std::string(flag) + " needs 1 or " + std::to_string(units) +
                          " values");
    return v;
  };
  switch (kind) {
    case ModelKind::Iid:
      return IidParams{scalar(o.alpha, "--alpha"), scalar(o.beta, "--beta"),
                       scalar(o.rho, "--rho")};
    case ModelKind::PerNode:
      return PerNodeParams{per_unit(o.alpha, o.n, "--alpha"), per_unit(o.beta, o.n, "--beta"),
                           scalar(o.rho, "--rho")};
    case ModelKind::MultiLevel: {
      if (o.alpha.size() < 2 || o.alpha.size() != o.rho.size())
        throw ContractError("multilevel needs matching --alpha/--rho lists (one per level)");
      if (!o.beta.empty()) throw ContractError("multilevel does not take --beta");
      return MultiLevelParams{o.alpha, o.rho};
    }
    case ModelKind::MultiModal: {
      if (o.alpha.empty() || o.alpha.size() != o.beta.size())
        throw ContractError("multimodal needs matching --alpha/--beta lists (one per mode)");
      return MultiModalParams{o.alpha, o.beta, scalar(o.rho, "--rho")};
    }
  }
  throw ContractError("unknown model kind");
}

int run_synth(const SynthOpts& o, std::ostream& out) {
  Manifest manifest;
  const ModelKind kind = kind_from_name(o.model);

  SynthSpec spec;
  spec.n = o.n;
  spec.truth = build_truth(kind, o);
  spec.seed = o.seed;
  const std::size_t modes =
      kind == ModelKind::MultiModal ? std::get<MultiModalParams>(spec.truth).modes() : 1;
  if (o.trials.size() == 1)
    spec.trials.assign(modes, o.trials[0]);
  else
    spec.trials = o.trials;

  const NetworkSample truth = generate_ground_truth(spec);
  const ObservationCounts counts = generate_observations(truth, spec);

  std::ostringstream counts_text;
  write_counts(counts, counts_text);

  OutputTarget target(o.output, out);
  target.os() << counts_text.str();
  target.finish();

  std::string truth_path = o.truth_path;
  if (truth_path.empty() && o.output != "-") truth_path = o.output + ".truth.json";
  if (!truth_path.empty()) {
    const NodeUniverse& universe = counts.universe();
    ordered_json t;
    t["document"] = "netrecon.truth";
    t["model"] = kind_name(kind);
    t["node_count"] = o.n;
    t["params"] = params_to_json(spec.truth);
    t["trials"] = spec.trials;
    t["edge_count"] = truth.edge_count();
    ordered_json edges = ordered_json::array();
    for (const auto& [u, v, level] : truth.edges)
      edges.push_back({universe.label(u), universe.label(v), level});
    t["edges"] = std::move(edges);
    ordered_json extra;
    extra["model"] = kind_name(kind);
    extra["counts_output"] = o.output;
    extra["counts_fnv1a64"] = hex64(fnv1a64(counts_text.str()));
    t["manifest"] = manifest.finish("synth", o.seed, o.no_timestamp, extra);
    OutputTarget truth_target(truth_path, out);
    emit_document(t, truth_target);
  }
  return 0;
}

// ----------------------------------------------------------------- sample

struct SampleOpts {
  std::string posterior_path;
  std::uint32_t count = 0;
  std::uint64_t seed = 0;
  std::string metric;
  std::string output = "-";
  bool no_timestamp = false;
};

int run_sample(const SampleOpts& o, std::ostream& out) {
  Manifest manifest;
  const std::string bytes = read_file(o.posterior_path);
  manifest.add_input("posterior", o.posterior_path, bytes);
  const ordered_json doc = parse_json(bytes, o.posterior_path);
  LoadedPosterior loaded = load_posterior(doc);
  const NodeUniverse& universe = loaded.universe;
  const bool multilevel = loaded.posterior.kind() == PosteriorEdges::Kind::MultiLevel;

  std::function<double(const NetworkSample&)> metric;
  if (!o.metric.empty()) {
    if (o.metric == "edges") {
      metric = [](const NetworkSample& s) { return static_cast<double>(s.edge_count()); };
    } else if (o.metric.rfind("degree:", 0) == 0) {
      const std::uint32_t node = universe.require(o.metric.substr(7));
      metric = [node](const NetworkSample& s) { return static_cast<double>(s.degree(node)); };
    } else {
      throw ContractError("unknown metric '" + o.metric + "' (use edges or degree:NODE)");
    }
  }

  ordered_json extra;
  extra["count"] = o.count;
  extra["kind"] = multilevel ? "multilevel" : "binary";
  const ordered_json m = manifest.finish("sample", o.seed, o.no_timestamp, extra);
  require_finite(m);

  OutputTarget target(o.output, out);
  target.os() << "# netrecon.samples " << m.dump() << '\n';

  PosteriorSampler sampler(loaded.posterior, o.seed);
  MetricAccumulator acc;
  for (std::uint32_t s = 0; s < o.count; ++s) {
    const NetworkSample sample = sampler.next();
    for (const auto& [u, v, level] : sample.edges) {
      target.os() << s << ' ' << universe.label(u) << ' ' << universe.label(v);
      if (multilevel) target.os() << ' ' << level;
      target.os() << '\n';
    }
    if (metric) acc.add(metric(sample));
  }
  if (metric) {
    const MetricStats stats = acc.finish();
    ordered_json mj;
    mj["name"] = o.metric;
    mj["count"] = stats.count;
    mj["mean"] = stats.mean;
    mj["variance"] = stats.variance;
    ordered_json dist = ordered_json::array();
    for (const auto& [value, freq] : stats.distribution) dist.push_back({value, freq});
    mj["distribution"] = std::move(dist);
    require_finite(mj);
    target.os() << "# metric " << mj.dump() << '\n';
  }
  target.finish();
  return 0;
}

// ------------------------------------------------------------------- gof

struct GofOpts {
  std::string input;
  std::string format = "counts";
  std::vector<std::uint32_t> default_trials;
  std::string params_path;
  std::uint32_t select_levels = 0;
  double significance = 0.05;
  std::string histogram_out;
  double tol = 1e-8;
  std::uint32_t max_iter = 1000;
  std::uint32_t restarts = 5;
  std::uint64_t seed = 0;
  std::string output = "-";
  bool no_timestamp = false;
};

void write_histogram_tsv(const std::string& path, const std::vector<double>& observed,
                         const std::vector<double>& predicted, std::ostream& out) {
  OutputTarget target(path, out);
  target.os() << "# e\tobserved\tpredicted\n";
  for (std::size_t e = 0; e < observed.size(); ++e)
    target.os() << e << '\t' << observed[e] << '\t' << predicted[e] << '\n';
  target.finish();
}

int run_gof(const GofOpts& o, std::ostream& out) {
  Manifest manifest;
  const std::string input_bytes = read_file(o.input);
  manifest.add_input("input", o.input, input_bytes);
  if (o.params_path.empty() && o.select_levels == 0)
    throw ContractError("gof needs --params or --select-levels");
  const ObservationCounts counts = ingest(o.format, input_bytes, 1, o.default_trials, {});

  ordered_json doc;
  ordered_json extra;
  extra["significance"] = o.significance;

  if (!o.params_path.empty()) {
    const std::string params_bytes = read_file(o.params_path);
    manifest.add_input("params", o.params_path, params_bytes);
    const ordered_json params_doc = parse_json(params_bytes, o.params_path);
    ModelKind kind;
    ModelParams params;
    try {
      kind = kind_from_name(params_doc.at("model").get<std::string>());
      params = params_from_json(kind, params_doc.at("params"));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("bad params document: ") + e.what());
    }
    const std::vector<double> observed = observed_histogram(counts);
    const std::uint32_t trials = counts.common_trials().value();
    const std::vector<double> predicted = predicted_histogram(params, counts.n(), trials);
    const std::uint32_t fitted =
        kind == ModelKind::Iid ? 3 : 2 * std::get<MultiLevelParams>(params).levels() - 1;
    const FitReport report = chi_squared_gof(observed, predicted, fitted, o.significance);

    doc["document"] = "netrecon.gof";
    doc["model"] = kind_name(kind);
    doc["params"] = params_to_json(params);
    doc["histogram"] = histogram_json(observed, predicted);
    doc["report"] = report_json(report);
    if (!o.histogram_out.empty())
      write_histogram_tsv(o.histogram_out, observed, predicted, out);
  } else {
    EmConfig config;
    config.tol_param = o.tol;
    config.max_iter = o.max_iter;
    config.restarts = o.restarts;
    config.seed = o.seed;
    config.validate();
    const LevelSelection selection =
        select_num_levels(counts, o.select_levels, o.significance, config);
    doc["document"] = "netrecon.gof-select";
    doc["selected_levels"] = selection.selected;
    doc["all_rejected"] = selection.all_rejected;
    ordered_json fits = ordered_json::array();
    for (const LevelFit& fit : selection.fits) {
      ordered_json f;
      f["levels"] = fit.levels;
      f["params"] = params_to_json(fit.params);
      f["not_applicable"] = fit.not_applicable;
      if (!fit.not_applicable) {
        f["report"] = report_json(fit.report);
        f["histogram"] = histogram_json(fit.report.observed, fit.report.predicted);
      }
      fits.push_back(std::move(f));
    }
    doc["fits"] = std::move(fits);
    extra["select_levels_max"] = o.select_levels;
    extra["config"] = config_json(config);
  }

  doc["manifest"] = manifest.finish("gof", o.seed, o.no_timestamp, extra);
  OutputTarget target(o.output, out);
  emit_document(doc, target);
  return 0;
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"network reconstruction from repeated noisy edge observations"};
  app.name("netrecon");
  app.require_subcommand(1);
  int exit_code = 0;

  InferOpts io;
  CLI::App* infer = app.add_subcommand(
      "infer", "fit a data model and posterior edge probabilities by EM");
  infer->add_option("--model", io.model, "data model")
      ->required()
      ->check(CLI::IsMember({"iid", "pernode", "multilevel", "multimodal"}));
  infer->add_option("--input", io.input, "observation file")->required();
  infer->add_option("--format", io.format, "input format")
      ->check(CLI::IsMember({"counts", "snapshots", "reports"}))
      ->capture_default_str();
  infer->add_option("--default-trials", io.default_trials,
                    "trial count for pairs missing from the input (one per mode)")
      ->delimiter(',');
  infer->add_option("--modes", io.modes, "observation modes in a counts file")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  infer->add_option("--levels", io.levels, "interaction levels (multilevel model)")
      ->check(CLI::Range(2u, 64u))
      ->capture_default_str();
  infer->add_option("--tol", io.tol, "parameter convergence tolerance")
      ->capture_default_str();
  infer->add_option("--tol-loglik", io.tol_loglik, "relative log-likelihood tolerance")
      ->capture_default_str();
  infer->add_option("--max-iter", io.max_iter, "EM iteration limit")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  infer->add_option("--restarts", io.restarts, "independent EM restarts")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  infer->add_option("--seed", io.seed, "RNG seed")->envname("NETRECON_SEED");
  infer->add_option("--q-threshold", io.q_threshold,
                    "minimum posterior probability for the edge list")
      ->capture_default_str();
  infer->add_option("--nodes", io.nodes_path, "extra node labels, one per line");
  infer->add_option("--output", io.output, "output path (- for stdout)")
      ->capture_default_str();
  infer->add_flag("--no-timestamp", io.no_timestamp,
                  "omit timestamp and duration from the manifest");
  infer->callback([&] { exit_code = run_infer(io, out); });

  SynthOpts so;
  CLI::App* synth = app.add_subcommand(
      "synth", "generate a ground-truth network and noisy observations of it");
  synth->add_option("--model", so.model, "data model")
      ->required()
      ->check(CLI::IsMember({"iid", "pernode", "multilevel", "multimodal"}));
  synth->add_option("--n", so.n, "number of nodes")->required()->check(CLI::Range(2u, 1000000u));
  synth->add_option("--trials", so.trials, "observations per pair (one per mode)")
      ->required()
      ->delimiter(',');
  synth->add_option("--alpha", so.alpha, "true-positive rate(s)")->required()->delimiter(',');
  synth->add_option("--beta", so.beta, "false-positive rate(s)")->delimiter(',');
  synth->add_option("--rho", so.rho, "prior edge probability / level weights")
      ->required()
      ->delimiter(',');
  synth->add_option("--seed", so.seed, "RNG seed")->envname("NETRECON_SEED");
  synth->add_option("--output", so.output, "counts output path (- for stdout)")->required();
  synth->add_option("--truth", so.truth_path,
                    "truth sidecar path (default: OUTPUT.truth.json)");
  synth->add_flag("--no-timestamp", so.no_timestamp,
                  "omit timestamp and duration from the manifest");
  synth->callback([&] { exit_code = run_synth(so, out); });

  SampleOpts mo;
  CLI::App* sample = app.add_subcommand(
      "sample", "draw networks from a fitted posterior document");
  sample->add_option("--posterior", mo.posterior_path, "an infer output document")->required();
  sample->add_option("--count", mo.count, "number of samples")
      ->required()
      ->check(CLI::PositiveNumber);
  sample->add_option("--seed", mo.seed, "RNG seed")->envname("NETRECON_SEED");
  sample->add_option("--metric", mo.metric, "per-sample statistic: edges or degree:NODE");
  sample->add_option("--output", mo.output, "output path (- for stdout)")
      ->capture_default_str();
  sample->add_flag("--no-timestamp", mo.no_timestamp,
                   "omit timestamp and duration from the manifest");
  sample->callback([&] { exit_code = run_sample(mo, out); });

  GofOpts go;
  CLI::App* gof = app.add_subcommand(
      "gof", "chi-square goodness of fit against the observation histogram");
  gof->add_option("--input", go.input, "observation file")->required();
  gof->add_option("--format", go.format, "input format")
      ->check(CLI::IsMember({"counts", "snapshots"}))
      ->capture_default_str();
  gof->add_option("--default-trials", go.default_trials,
                  "trial count for pairs missing from the input")
      ->delimiter(',');
  auto* params_opt =
      gof->add_option("--params", go.params_path, "fitted-parameter document (an infer output)");
  auto* select_opt = gof->add_option("--select-levels", go.select_levels,
                                     "fit 2..W levels and pick the smallest accepted W")
                         ->check(CLI::Range(2u, 16u));
  params_opt->excludes(select_opt);
  select_opt->excludes(params_opt);
  gof->add_option("--significance", go.significance, "rejection significance level")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  gof->add_option("--histogram-out", go.histogram_out, "tab-separated histogram dump path")
      ->needs(params_opt);
  gof->add_option("--tol", go.tol, "parameter convergence tolerance (level selection)")
      ->capture_default_str();
  gof->add_option("--max-iter", go.max_iter, "EM iteration limit (level selection)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  gof->add_option("--restarts", go.restarts, "independent EM restarts (level selection)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  gof->add_option("--seed", go.seed, "RNG seed (level selection)")->envname("NETRECON_SEED");
  gof->add_option("--output", go.output, "output path (- for stdout)")->capture_default_str();
  gof->add_flag("--no-timestamp", go.no_timestamp,
                "omit timestamp and duration from the manifest");
  gof->callback([&] { exit_code = run_gof(go, out); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return exit_code;
}

}  // namespace netrecon
