#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "netrecon/cli.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CliResult {
  int code = 0;
  std::string out;
  std::string err;
};

CliResult run_cli(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  argv.push_back("netrecon");
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  CliResult result;
  result.code = netrecon::cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
  result.out = out.str();
  result.err = err.str();
  return result;
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("netrecon_cli_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static int& counter() {
    static int c = 0;
    return c;
  }
  fs::path file(const std::string& name) const { return path / name; }
};

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream out(p);
  out << content;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// A small two-community data set with clean signal.
std::string demo_counts() {
  std::ostringstream out;
  out << "#default_N 6\n";
  const std::vector<std::string> names{"a", "b", "c", "d", "e", "f", "g", "h"};
  for (std::size_t i = 0; i < names.size(); ++i)
    for (std::size_t j = i + 1; j < names.size(); ++j) {
      const bool same = (i < 4) == (j < 4);
      out << names[i] << ' ' << names[j] << ' ' << (same ? 5 : 0) << " 6\n";
    }
  return out.str();
}

}  // namespace

TEST_CASE("help and junk invocations") {
  CHECK(run_cli({"--help"}).code == 0);
  const auto help = run_cli({"--help"});
  CHECK(help.out.find("infer") != std::string::npos);
  CHECK(help.out.find("synth") != std::string::npos);
  CHECK(run_cli({}).code != 0);                     // a subcommand is required
  CHECK(run_cli({"bogus"}).code != 0);
  CHECK(run_cli({"infer"}).code != 0);              // missing required flags
  const auto bad = run_cli({"infer", "--model", "nope", "--input", "x"});
  CHECK(bad.code != 0);
}

TEST_CASE("infer produces a structured document") {
  TempDir dir;
  write_file(dir.file("counts.txt"), demo_counts());
  const auto result = run_cli({"infer", "--model", "iid", "--input",
                               dir.file("counts.txt").string(), "--seed", "7", "--restarts", "2",
                               "--no-timestamp"});
  REQUIRE(result.code == 0);
  const json doc = json::parse(result.out);
  CHECK(doc.at("document") == "netrecon.infer");
  CHECK(doc.at("model") == "iid");
  CHECK(doc.at("node_count") == 8);
  CHECK(doc.at("pair_count") == 28);

  const auto& params = doc.at("params");
  const double alpha = params.at("alpha").get<double>();
  const double beta = params.at("beta").get<double>();
  CHECK(alpha > 0.7);  // within-community pairs report 5/6
  CHECK(beta < 0.05);
  CHECK(params.at("rho").get<double>() > 0.2);

  CHECK(doc.at("trace").at("converged").get<bool>());
  CHECK(doc.at("derived_rates").contains("fdr"));

  // Edges are the 12 within-community pairs, sorted by posterior.
  const auto& edges = doc.at("edges");
  CHECK(edges.size() == 12);
  double last_q = 1.0;
  for (const auto& e : edges) {
    const double q = e.at("q").get<double>();
    CHECK(q <= last_q + 1e-15);
    CHECK(q >= 0.5);
    last_q = q;
  }

  const auto& manifest = doc.at("manifest");
  CHECK(manifest.at("command") == "infer");
  CHECK(manifest.at("inputs").at("input").contains("fnv1a64"));
  CHECK(!manifest.contains("timestamp"));
}

TEST_CASE("repeated runs with a fixed seed are byte-identical") {
  TempDir dir;
  write_file(dir.file("counts.txt"), demo_counts());
  const std::vector<std::string> args{"infer",      "--model", "iid",
                                      "--input",    dir.file("counts.txt").string(),
                                      "--seed",     "3",
                                      "--restarts", "2",
                                      "--no-timestamp"};
  const auto a = run_cli(args);
  const auto b = run_cli(args);
  REQUIRE(a.code == 0);
  CHECK(a.out == b.out);

  auto shifted = args;
  shifted[6] = "4";  // different seed may change restart selection
  CHECK(run_cli(shifted).code == 0);
}

TEST_CASE("infer writes to a file and reports iteration exhaustion") {
  TempDir dir;
  write_file(dir.file("counts.txt"), demo_counts());
  const auto result = run_cli({"infer", "--model", "iid", "--input",
                               dir.file("counts.txt").string(), "--output",
                               dir.file("fit.json").string(), "--max-iter", "1", "--restarts",
                               "1", "--no-timestamp"});
  CHECK(result.code == 2);  // ran out of iterations before converging
  const json doc = json::parse(read_file(dir.file("fit.json")));
  CHECK(!doc.at("trace").at("converged").get<bool>());
  CHECK(doc.at("trace").at("iterations").get<int>() == 1);
}

TEST_CASE("infer reads snapshot logs") {
  TempDir dir;
  std::ostringstream log;
  for (int s = 0; s < 4; ++s) {
    log << "day" << s << " a b\n";
    if (s < 2) log << "day" << s << " b c\n";
  }
  write_file(dir.file("log.txt"), log.str());
  const auto result = run_cli({"infer", "--model", "iid", "--input",
                               dir.file("log.txt").string(), "--format", "snapshots", "--seed",
                               "1", "--restarts", "2", "--no-timestamp"});
  REQUIRE(result.code == 0);
  const json doc = json::parse(result.out);
  CHECK(doc.at("node_count") == 3);
  CHECK(doc.at("manifest").at("format") == "snapshots");
}

TEST_CASE("per-node inference needs directed reports") {
  TempDir dir;
  write_file(dir.file("counts.txt"), demo_counts());
  const auto result = run_cli({"infer", "--model", "pernode", "--input",
                               dir.file("counts.txt").string(), "--no-timestamp"});
  CHECK(result.code == 1);
  CHECK(result.err.find("error:") != std::string::npos);
  CHECK(result.err.find("directed") != std::string::npos);
}

TEST_CASE("missing input files fail cleanly") {
  const auto result = run_cli({"infer", "--model", "iid", "--input", "/nonexistent/file.txt"});
  CHECK(result.code == 1);
  CHECK(result.err.find("error:") != std::string::npos);
}

TEST_CASE("synth writes counts plus a truth sidecar that infer can consume") {
  TempDir dir;
  const auto counts_path = dir.file("synth.txt").string();
  const auto synth = run_cli({"synth", "--model", "iid", "--n", "60", "--trials", "8",
                              "--alpha", "0.6", "--beta", "0.01", "--rho", "0.1", "--seed",
                              "21", "--output", counts_path, "--no-timestamp"});
  REQUIRE(synth.code == 0);

  const json truth = json::parse(read_file(dir.file("synth.txt.truth.json")));
  CHECK(truth.at("document") == "netrecon.truth");
  CHECK(truth.at("params").at("alpha").get<double>() == 0.6);
  CHECK(truth.at("edge_count").get<int>() > 0);
  for (const auto& e : truth.at("edges")) {
    REQUIRE(e.size() == 3);
    CHECK(e[2].get<int>() == 1);
  }

  const auto infer = run_cli({"infer", "--model", "iid", "--input", counts_path, "--seed", "2",
                              "--restarts", "3", "--no-timestamp"});
  REQUIRE(infer.code == 0);
  const json doc = json::parse(infer.out);
  CHECK(std::abs(doc.at("params").at("alpha").get<double>() - 0.6) < 0.08);
  CHECK(std::abs(doc.at("params").at("rho").get<double>() - 0.1) < 0.03);
}

TEST_CASE("sampling from an inferred posterior emits indexed edge lists") {
  TempDir dir;
  write_file(dir.file("counts.txt"), demo_counts());
  const auto infer = run_cli({"infer", "--model", "iid", "--input",
                              dir.file("counts.txt").string(), "--seed", "5", "--restarts", "2",
                              "--output", dir.file("fit.json").string(), "--no-timestamp"});
  REQUIRE(infer.code == 0);

  const auto sample = run_cli({"sample", "--posterior", dir.file("fit.json").string(),
                               "--count", "20", "--seed", "9", "--metric", "edges",
                               "--no-timestamp"});
  REQUIRE(sample.code == 0);
  std::istringstream lines(sample.out);
  std::string line;
  int sample_lines = 0;
  bool saw_header = false, saw_metric = false;
  while (std::getline(lines, line)) {
    if (line.rfind("# netrecon.samples", 0) == 0) {
      saw_header = true;
    } else if (line.rfind("# metric", 0) == 0) {
      saw_metric = true;
      const json stats = json::parse(line.substr(std::string("# metric ").size()));
      CHECK(stats.at("name") == "edges");
      CHECK(stats.at("count") == 20);
      CHECK(stats.at("mean").get<double>() > 0);
    } else if (!line.empty() && line[0] != '#') {
      ++sample_lines;
    }
  }
  CHECK(saw_header);
  CHECK(saw_metric);
  CHECK(sample_lines > 0);

  // Byte-for-byte reproducible with the same seed.
  const auto again = run_cli({"sample", "--posterior", dir.file("fit.json").string(), "--count",
                              "20", "--seed", "9", "--metric", "edges", "--no-timestamp"});
  CHECK(again.out == sample.out);
}

TEST_CASE("fit quality report against held counts") {
  TempDir dir;
  const auto counts_path = dir.file("synth.txt").string();
  REQUIRE(run_cli({"synth", "--model", "iid", "--n", "80", "--trials", "6", "--alpha", "0.5",
                   "--beta", "0.02", "--rho", "0.1", "--seed", "31", "--output", counts_path,
                   "--no-timestamp"})
              .code == 0);
  REQUIRE(run_cli({"infer", "--model", "iid", "--input", counts_path, "--seed", "4",
                   "--restarts", "2", "--output", dir.file("fit.json").string(),
                   "--no-timestamp"})
              .code == 0);

  const auto gof = run_cli({"gof", "--input", counts_path, "--params",
                            dir.file("fit.json").string(), "--histogram-out",
                            dir.file("hist.tsv").string(), "--no-timestamp"});
  REQUIRE(gof.code == 0);
  const json doc = json::parse(gof.out);
  CHECK(doc.at("document") == "netrecon.gof");
  CHECK(doc.at("report").contains("p_value"));
  CHECK(doc.at("report").at("rejected").is_boolean());
  CHECK(doc.at("histogram").at("observed").size() == 7);

  const auto hist = read_file(dir.file("hist.tsv"));
  CHECK(hist.find("observed\tpredicted") != std::string::npos);

  const auto select = run_cli({"gof", "--input", counts_path, "--select-levels", "3", "--seed",
                               "6", "--restarts", "2", "--no-timestamp"});
  REQUIRE(select.code == 0);
  const json sel = json::parse(select.out);
  CHECK(sel.at("document") == "netrecon.gof-select");
  CHECK(sel.at("selected_levels") == 2);

  const auto both = run_cli({"gof", "--input", counts_path, "--params",
                             dir.file("fit.json").string(), "--select-levels", "3"});
  CHECK(both.code != 0);
}

TEST_CASE("multilevel inference documents per-level structure") {
  TempDir dir;
  const auto counts_path = dir.file("ml.txt").string();
  REQUIRE(run_cli({"synth", "--model", "multilevel", "--n", "70", "--trials", "8", "--alpha",
                   "0.02,0.4,0.85", "--rho", "0.8,0.13,0.07", "--seed", "11", "--output",
                   counts_path, "--no-timestamp"})
              .code == 0);
  const auto infer = run_cli({"infer", "--model", "multilevel", "--levels", "3", "--input",
                              counts_path, "--seed", "8", "--restarts", "3", "--no-timestamp"});
  REQUIRE(infer.code == 0);
  const json doc = json::parse(infer.out);
  CHECK(doc.at("model") == "multilevel");
  CHECK(doc.at("params").at("levels") == 3);
  const auto& alphas = doc.at("params").at("alpha");
  REQUIRE(alphas.size() == 3);
  double prev = 0.0;
  for (const auto& a : alphas) {
    CHECK(a.get<double>() >= prev);  // canonical ascending order
    prev = a.get<double>();
  }
  CHECK(!doc.contains("derived_rates"));  // binary-edge summary does not apply
  for (const auto& e : doc.at("edges")) CHECK(e.contains("level_q"));
}
