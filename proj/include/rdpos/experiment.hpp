#pragma once

#include "rdpos/consensus.hpp"
#include "rdpos/contract.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace rdpos {

inline constexpr const char* kVersion = "rdpos 1.0.0";

class SpecError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Names every table the runner can produce.
const std::vector<std::string>& table_registry();

struct ExperimentSpec {
  std::string name{"experiment"};
  std::uint64_t seed{1};
  std::vector<std::string> outputs;
  ScenarioConfig scenario{};
  ContractParams contract{};
  VerificationTask task{};
  /// Thresholds swept by detection_rate and correct_block_probability.
  std::vector<double> thresholds{0.3, 0.35, 0.4, 0.45, 0.5, 0.55, 0.6};
  /// Type counts swept by profit_vs_types.
  std::vector<std::size_t> type_counts{2, 4, 6, 8, 10};
  /// Type count of contract_menu and verifier_utilities.
  std::size_t types{10};
  /// Verifiers per type; the market size is types * verifiers_per_type.
  double verifiers_per_type{1.0};

  /// Throws SpecError naming the first violated invariant.
  void validate() const;
};

/// Parses a JSON spec on top of the defaults. Unknown keys and wrongly typed
/// values are errors.
ExperimentSpec parse_spec(std::string_view json_text);
ExperimentSpec load_spec(const std::filesystem::path& path);

/// Canonical JSON of the effective spec; the config hash is taken over it.
std::string effective_json(const ExperimentSpec& spec);
std::string config_hash(const ExperimentSpec& spec);

/// One "key = value" line per effective parameter.
std::string describe(const ExperimentSpec& spec);

struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
};

std::string format_number(double x);

/// Computes every requested table; nothing is written.
std::vector<Table> run_experiment(const ExperimentSpec& spec);

/// Writes one `<table>.csv` per table and `manifest.txt` into `out_dir`.
/// Returns the written paths.
std::vector<std::filesystem::path> write_outputs(const ExperimentSpec& spec, const std::vector<Table>& tables,
                                                 const std::filesystem::path& out_dir);

}  // namespace rdpos
