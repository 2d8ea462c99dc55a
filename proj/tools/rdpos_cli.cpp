#include "rdpos/experiment.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;

namespace {

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::string tables;
};

rdpos::ExperimentSpec load(const fs::path& path, const Overrides& o) {
  auto spec = rdpos::load_spec(path);
  if (o.seed) {
    spec.seed = *o.seed;
    spec.scenario.seed = *o.seed;
  }
  if (!o.tables.empty()) {
    spec.outputs.clear();
    std::stringstream in(o.tables);
    for (std::string name; std::getline(in, name, ',');)
      if (!name.empty()) spec.outputs.push_back(name);
  }
  if (const char* dir = std::getenv("RDPOS_TRACE_DIR"); dir && *dir) spec.scenario.trace_dir = dir;
  return spec;
}

int run_one(const fs::path& path, const fs::path& out_dir, const Overrides& o) {
  const auto spec = load(path, o);
  const auto tables = rdpos::run_experiment(spec);
  for (const auto& p : rdpos::write_outputs(spec, tables, out_dir)) std::cout << p.string() << "\n";
  return 0;
}

int guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const rdpos::SpecError& e) {
    std::cerr << "config error: " << e.what() << "\n";
  } catch (const rdpos::ContractInfeasible& e) {
    std::cerr << "infeasible contract: " << e.what() << "\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reputation-based DPoS simulator and verification contract solver"};
  app.set_version_flag("--version", rdpos::kVersion);
  app.require_subcommand(1);

  Overrides o;
  std::uint64_t seed = 0;
  fs::path out_dir = "out";
  std::string spec_path;
  std::string spec_dir;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--seed", seed, "Override the spec seed");
    cmd->add_option("--tables", o.tables, "Comma-separated tables to emit");
  };

  auto* run = app.add_subcommand("run", "Run one experiment spec");
  run->add_option("spec", spec_path, "Experiment spec (JSON)")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out_dir, "Output directory");
  add_common(run);

  auto* validate = app.add_subcommand("validate", "Check a spec and print its effective parameters");
  validate->add_option("spec", spec_path, "Experiment spec (JSON)")->required();
  add_common(validate);

  auto* sweep = app.add_subcommand("sweep", "Run every spec in a directory");
  sweep->add_option("dir", spec_dir, "Directory of specs")->required()->check(CLI::ExistingDirectory);
  sweep->add_option("--out", out_dir, "Output root; each spec writes to <out>/<spec name>");
  add_common(sweep);

  CLI11_PARSE(app, argc, argv);
  const bool seed_given = (run->count("--seed") + validate->count("--seed") + sweep->count("--seed")) > 0;
  if (seed_given) o.seed = seed;

  if (*run) return guarded([&] { return run_one(spec_path, out_dir, o); });

  if (*validate) {
    return guarded([&] {
      const auto spec = load(spec_path, o);
      std::cout << rdpos::describe(spec);
      spec.validate();
      std::cout << "config_hash = " << rdpos::config_hash(spec) << "\nvalid\n";
      return 0;
    });
  }

  std::vector<fs::path> specs;
  for (const auto& entry : fs::directory_iterator(spec_dir))
    if (entry.is_regular_file() && entry.path().extension() == ".json") specs.push_back(entry.path());
  std::sort(specs.begin(), specs.end());
  int status = 0;
  for (const auto& path : specs) {
    std::cout << "== " << path.filename().string() << "\n";
    if (guarded([&] { return run_one(path, out_dir / path.stem(), o); }) != 0) status = 1;
  }
  return status;
}
