#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "../support/rules_eval.hpp"
#include "doctest.h"
#include "json.hpp"
#include "shiftsel/config.hpp"
#include "shiftsel/selectors.hpp"

namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code = -1;
  std::string out;
};

// Runs the CLI with stderr discarded; `env` is prepended verbatim.
Outcome cli(const std::string& args, const std::string& env = {}) {
  const std::string command = env + (env.empty() ? "" : " ") + "'" SHIFTSEL_CLI "' " + args + " 2>/dev/null";
  Outcome o;
  FILE* pipe = popen(command.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  std::size_t got = 0;
  while ((got = std::fread(buf, 1, sizeof buf, pipe)) > 0) o.out.append(buf, got);
  const int status = pclose(pipe);
  o.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return o;
}

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("shiftsel_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

fs::path write_tiny_config(const fs::path& dir) {
  const nlohmann::json j = {
      {"seed", 5},
      {"grid",
       {{"sizes", {100}}, {"dims", {2, 3}}, {"availabilities", {1, 100}}, {"triple_samples", 4},
        {"single_shift_grid", {0.1, 0.9}}}},
      {"train", {{"epochs", 60}, {"lr", 0.01}}},
      {"split", {{"eval_fraction", 0.3}}},
      {"selectors",
       {{{"name", "oracle"}, {"kind", "oracle"}},
        {{"name", "global_best"}, {"kind", "global_best"}},
        {{"name", "mlp"}, {"kind", "mlp_multilabel"}, {"hidden_layers", 1}, {"width", 8}, {"epochs", 50}, {"lr", 0.01}},
        {{"name", "tree"}, {"kind", "tree"}}}},
      {"selector_seeds", {0}},
      {"analysis",
       {{"subject", "mlp"}, {"scaling_sizes", {5}}, {"epsilon_grid", {0.0}}, {"pairwise", nlohmann::json::array()}}}};
  const auto path = dir / "tiny.json";
  std::ofstream(path) << j.dump(2);
  return path;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("usage errors") {
  CHECK(cli("--help").code == 0);
  CHECK(cli("").code == 2);
  CHECK(cli("frobnicate").code == 2);
  CHECK(cli("gen-tasks").code == 2);  // no config
  CHECK(cli("--config /nonexistent/x.json gen-tasks").code == 2);
  const auto dir = scratch("usage");
  std::ofstream(dir / "bad.json") << R"({"seed": 1, "gird": {}})";
  CHECK(cli("--config '" + (dir / "bad.json").string() + "' gen-tasks --dry-run").code == 2);
  std::ofstream(dir / "torn.json") << R"({"seed": )";
  CHECK(cli("--config '" + (dir / "torn.json").string() + "' gen-tasks").code == 2);
  const auto cfg = write_tiny_config(dir);
  CHECK(cli("--config '" + cfg.string() + "' --workers -1 gen-tasks").code == 2);
  CHECK(cli("--config '" + cfg.string() + "' --dry-run gen-tasks", "SHIFTSEL_WORKERS=lots").code == 2);
  CHECK(cli("--config '" + cfg.string() + "' --dry-run gen-tasks", "SHIFTSEL_WORKERS=2").code == 0);
  // Later stages without earlier outputs are io errors.
  CHECK(cli("--config '" + cfg.string() + "' --out '" + (dir / "out").string() + "' evaluate").code == 3);
  fs::remove_all(dir);
}

TEST_CASE("dry run leaves no trace") {
  const auto dir = scratch("dry");
  const auto cfg = write_tiny_config(dir);
  const auto out = dir / "out";
  CHECK(cli("--config '" + cfg.string() + "' --out '" + out.string() + "' --dry-run run").code == 0);
  CHECK(!fs::exists(out));
  fs::remove_all(dir);
}

TEST_CASE("full run and tree export") {
  const auto dir = scratch("run");
  const auto cfg = write_tiny_config(dir);
  const auto out = dir / "out";
  const std::string base = "--config '" + cfg.string() + "' --out '" + out.string() + "' ";
  REQUIRE(cli(base + "gen-tasks").code == 0);
  REQUIRE(cli(base + "build-meta", "SHIFTSEL_WORKERS=2").code == 0);
  REQUIRE(cli(base + "--workers 1 train-selector").code == 0);
  const auto eval = cli(base + "evaluate");
  REQUIRE(eval.code == 0);
  CHECK(eval.out.find("oracle") != std::string::npos);
  CHECK(eval.out.find("100.0") != std::string::npos);
  REQUIRE(cli(base + "analyze").code == 0);

  const auto config = shiftsel::ExperimentConfig::load(cfg);
  const auto run_dir = out / config.hash();
  CHECK(fs::exists(run_dir / "summary.txt"));
  CHECK(fs::exists(run_dir / "analysis" / "scaling.csv"));

  // A different seed lands in a different directory.
  CHECK(cli(base + "--seed 6 gen-tasks").code == 0);
  std::size_t dirs = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(out)) ++dirs;
  CHECK(dirs == 2);

  const auto tree_artifact = run_dir / "selectors" / "tree_s0.json";
  const auto trees = dir / "trees";
  const auto exported = cli("--out '" + trees.string() + "' export-tree '" + tree_artifact.string() + "'");
  REQUIRE(exported.code == 0);
  CHECK(exported.out == slurp(trees / "tree_s0.rules.txt"));
  CHECK(slurp(trees / "tree_s0.dot").rfind("digraph", 0) == 0);

  // The printed rules reproduce the artifact's scores.
  const auto tree = shiftsel::Selector::load(tree_artifact);
  const rules_eval::Program program(exported.out);
  const auto names = tree.transform.input_names();
  for (double sc : {0.02, 0.3, 0.5, 0.8, 0.97}) {
    for (double r : {1.0, 30.0}) {
      shiftsel::DatasetDescriptor d{{sc, 0.5, 0.4}, r, 100, 2};
      const auto inputs = tree.transform.apply(d.values());
      std::map<std::string, double> env;
      for (std::size_t k = 0; k < names.size(); ++k) env[names[k]] = inputs[k];
      CHECK(program.evaluate(env) == tree.predict_scores(d));
    }
  }

  const auto mlp_artifact = run_dir / "selectors" / "mlp_s0.json";
  CHECK(cli("--out '" + trees.string() + "' export-tree '" + mlp_artifact.string() + "'").code == 5);
  CHECK(cli("--out '" + trees.string() + "' export-tree '" + (run_dir / "selectors" / "mimic_mlp_s0.json").string() +
            "'")
            .code == 0);
  fs::remove_all(dir);
}
