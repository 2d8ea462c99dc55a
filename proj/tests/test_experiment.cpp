#include "rdpos/experiment.hpp"

#include <doctest.h>

#include <fstream>
#include <sstream>

using namespace rdpos;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("rdpos_test_" + name);
  fs::remove_all(dir);
  return dir;
}

const char* kSmall = R"({
  "name": "small",
  "seed": 4,
  "outputs": ["profit_vs_types", "contract_menu", "verifier_utilities", "detection_rate", "event_dump"],
  "scenario": {"vehicles": 20, "candidates": 16, "rounds": 8, "k": 5, "y": 7,
               "attack": {"malicious_count": 3, "onset_s": 120, "partners_per_candidate": 2}},
  "sweep": {"types": 4, "type_counts": [1, 2, 3], "thresholds": [0.5]}
})";

}  // namespace

TEST_CASE("registry lists the eight tables") {
  const auto& r = table_registry();
  CHECK(r.size() == 8);
  CHECK(std::find(r.begin(), r.end(), "reputation_timeseries") != r.end());
  CHECK(std::find(r.begin(), r.end(), "event_dump") != r.end());
}

TEST_CASE("defaults parse and describe echoes contract parameters") {
  const auto spec = parse_spec("{}");
  CHECK_NOTHROW(spec.validate());
  const auto text = describe(spec);
  for (const char* line : {"contract.gain = 1.2", "contract.scale_coeff = 15", "contract.latency_coeff = 10",
                           "contract.scale_exp = 2", "contract.latency_exp = 1", "contract.reward_weight = 5",
                           "contract.unit_cost = 1", "contract.max_latency = 300", "contract.budget = 1000",
                           "task.broadcast_coeff = 0.5"})
    CHECK_MESSAGE(text.find(line) != std::string::npos, line);
}

TEST_CASE("parse errors") {
  CHECK_THROWS_AS(parse_spec("{"), SpecError);
  CHECK_THROWS_AS(parse_spec(R"({"nmae": "x"})"), SpecError);
  CHECK_THROWS_AS(parse_spec(R"({"scenario": {"weights": {"bogus": 1}}})"), SpecError);
  CHECK_THROWS_AS(parse_spec(R"({"seed": "one"})"), SpecError);
  CHECK_THROWS_AS(parse_spec(R"({"seed": -1})"), SpecError);
  CHECK_THROWS_AS(parse_spec(R"({"scenario": {"speed_kmh": [50]}})"), SpecError);
  CHECK_THROWS_AS(parse_spec(R"({"scenario": {"detection_scheme": "XYZ"}})"), SpecError);
}

TEST_CASE("validation rejects invariant violations") {
  CHECK_THROWS_AS(parse_spec(R"({"scenario": {"k": 8}})").validate(), SpecError);
  CHECK_THROWS_AS(parse_spec(R"({"scenario": {"weights": {"recent_weight": 0.4, "past_weight": 0.6}}})").validate(),
                  SpecError);
  CHECK_THROWS_AS(parse_spec(R"({"outputs": ["fig9"]})").validate(), SpecError);
  CHECK_THROWS_AS(parse_spec(R"({"sweep": {"types": 0}})").validate(), SpecError);
}

TEST_CASE("config hash follows the effective parameters") {
  const auto a = parse_spec("{}");
  const auto b = parse_spec(R"({"seed": 1, "contract": {"gain": 1.2}})");
  const auto c = parse_spec(R"({"contract": {"gain": 1.3}})");
  CHECK(config_hash(a) == config_hash(b));
  CHECK(config_hash(a) != config_hash(c));
  CHECK(config_hash(a).size() == 16);
}

TEST_CASE("run writes headed tables and a manifest, byte-identical on rerun") {
  const auto spec = parse_spec(kSmall);
  const auto d1 = scratch("run1");
  const auto d2 = scratch("run2");
  const auto p1 = write_outputs(spec, run_experiment(spec), d1);
  const auto p2 = write_outputs(spec, run_experiment(spec), d2);
  REQUIRE(p1.size() == spec.outputs.size() + 1);
  for (std::size_t i = 0; i < p1.size(); ++i) CHECK(slurp(p1[i]) == slurp(p2[i]));

  const auto profit = slurp(d1 / "profit_vs_types.csv");
  CHECK(profit.rfind("# rdpos table=profit_vs_types experiment=small seed=4 config_hash=" + config_hash(spec), 0) == 0);
  CHECK(profit.find("\nQ,model,profit\n") != std::string::npos);
  CHECK(profit.find(",stackelberg_sym,") != std::string::npos);
  CHECK(profit.find('\r') == std::string::npos);

  std::istringstream util(slurp(d1 / "verifier_utilities.csv"));
  std::size_t lines = 0;
  for (std::string l; std::getline(util, l);) ++lines;
  CHECK(lines == 2 + 16);

  CHECK(slurp(d1 / "manifest.txt").find("config_hash=" + config_hash(spec)) != std::string::npos);
  fs::remove_all(d1);
  fs::remove_all(d2);
}

TEST_CASE("seed changes simulation tables") {
  auto spec = parse_spec(kSmall);
  spec.outputs = {"event_dump"};
  const auto a = run_experiment(spec);
  spec.seed = spec.scenario.seed = 5;
  const auto b = run_experiment(spec);
  CHECK(a[0].rows != b[0].rows);
}

TEST_CASE("infeasible contract raises before anything is written") {
  auto spec = parse_spec(R"({"outputs": ["contract_menu"], "contract": {"budget": 1e-6}})");
  const auto dir = scratch("infeasible");
  CHECK_THROWS_AS(
      {
        const auto tables = run_experiment(spec);
        write_outputs(spec, tables, dir);
      },
      ContractInfeasible);
  CHECK_FALSE(fs::exists(dir));
}
