#include "rdpos/experiment.hpp"
#include "rdpos/random.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace rdpos {

using nlohmann::json;

namespace {

// Reads fields of one JSON object, refusing keys nobody asked for.
class Fields {
 public:
  Fields(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j.is_object()) throw SpecError(path_ + " must be an object");
  }
  ~Fields() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.contains(it.key())) throw SpecError("unknown key " + path_ + "." + it.key());
  }

  template <class T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    const auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!it->is_boolean()) throw SpecError("");
      } else if constexpr (std::is_integral_v<T>) {
        if (!it->is_number_integer() || (std::is_unsigned_v<T> && it->template get<long long>() < 0))
          throw SpecError("");
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!it->is_number()) throw SpecError("");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!it->is_string()) throw SpecError("");
      }
      out = it->template get<T>();
    } catch (const std::exception&) {
      throw SpecError("wrong type for " + path_ + "." + key);
    }
  }

  void range(const char* key, std::pair<double, double>& out) {
    seen_.insert(key);
    const auto it = j_.find(key);
    if (it == j_.end()) return;
    if (!it->is_array() || it->size() != 2 || !(*it)[0].is_number() || !(*it)[1].is_number())
      throw SpecError(path_ + "." + key + " must be a two-number array");
    out = {(*it)[0].get<double>(), (*it)[1].get<double>()};
  }

  const json* object(const char* key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  std::string path(const char* key) const { return path_ + "." + key; }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

Scheme parse_scheme(const std::string& s) {
  if (s == "MWSL" || s == "mwsl") return Scheme::mwsl;
  if (s == "TSL" || s == "tsl") return Scheme::tsl;
  if (s == "none") return Scheme::none;
  throw SpecError("unknown scheme " + s);
}

void read_contract(const json& j, const std::string& path, ContractParams& c) {
  Fields f(j, path);
  f.get("gain", c.gain);
  f.get("scale_coeff", c.scale_coeff);
  f.get("latency_coeff", c.latency_coeff);
  f.get("scale_exp", c.scale_exp);
  f.get("latency_exp", c.latency_exp);
  f.get("reward_weight", c.reward_weight);
  f.get("unit_cost", c.unit_cost);
  f.get("max_latency", c.max_latency);
  f.get("budget", c.budget);
  f.get("verifier_count", c.verifier_count);
}

void read_scenario(const json& j, ScenarioConfig& s) {
  Fields f(j, "scenario");
  f.get("vehicles", s.vehicles);
  f.get("candidates", s.candidates);
  if (const auto* r = f.object("region")) {
    Fields b(*r, f.path("region"));
    b.get("lat_min", s.region.lat_min);
    b.get("lat_max", s.region.lat_max);
    b.get("lon_min", s.region.lon_min);
    b.get("lon_max", s.region.lon_max);
  }
  f.range("coverage_radius_m", s.coverage_radius_m);
  f.range("speed_kmh", s.speed_kmh);
  f.get("trace_step_s", s.trace_step_s);
  f.get("trace_dir", s.trace_dir);
  f.get("rounds", s.rounds);
  f.get("update_period_s", s.update_period_s);
  if (const auto* i = f.object("interaction")) {
    Fields b(*i, f.path("interaction"));
    b.get("interactions_per_week", s.interaction.interactions_per_week);
    b.get("time_compression", s.interaction.time_compression);
    b.get("link_quality_min", s.interaction.link_quality_min);
    b.get("link_quality_max", s.interaction.link_quality_max);
  }
  if (const auto* w = f.object("weights")) {
    Fields b(*w, f.path("weights"));
    b.get("recent_weight", s.weights.recent_weight);
    b.get("past_weight", s.weights.past_weight);
    b.get("positive_weight", s.weights.positive_weight);
    b.get("negative_weight", s.weights.negative_weight);
    b.get("scale", s.weights.scale);
    b.get("uncertainty_effect", s.weights.uncertainty_effect);
    b.get("recent_horizon_s", s.weights.recent_horizon_s);
    b.get("window_s", s.weights.window_s);
  }
  f.get("tsl_blend", s.tsl.blend);
  f.get("ta_threshold", s.ta_threshold);
  f.get("detection_threshold", s.detection_threshold);
  std::string scheme = to_string(s.detection_scheme);
  f.get("detection_scheme", scheme);
  s.detection_scheme = parse_scheme(scheme);
  f.get("max_age_rounds", s.max_age_rounds);
  f.get("k", s.k);
  f.get("y", s.y);
  f.get("standby_verification", s.standby_verification);
  f.get("contract_enabled", s.contract_enabled);
  f.get("standby_fraction", s.standby_fraction);
  f.get("standby_cap", s.standby_cap);
  f.get("max_types", s.max_types);
  f.get("block_validity_rate", s.block_validity_rate);
  if (const auto* a = f.object("attack")) {
    Fields b(*a, f.path("attack"));
    auto& t = s.attack;
    b.get("malicious_count", t.malicious_count);
    b.get("onset_s", t.onset_s);
    b.get("partners_per_candidate", t.partners_per_candidate);
    b.get("target_count", t.target_count);
    b.get("misbehavior_rate_min", t.misbehavior_rate_min);
    b.get("misbehavior_rate_max", t.misbehavior_rate_max);
    b.get("active_collusion_fraction", t.active_collusion_fraction);
    b.get("manager_corruption", t.manager_corruption);
    b.get("tracked_candidate", t.tracked_candidate);
  }
}

json contract_json(const ContractParams& c) {
  return {{"gain", c.gain},         {"scale_coeff", c.scale_coeff}, {"latency_coeff", c.latency_coeff},
          {"scale_exp", c.scale_exp}, {"latency_exp", c.latency_exp}, {"reward_weight", c.reward_weight},
          {"unit_cost", c.unit_cost}, {"max_latency", c.max_latency}, {"budget", c.budget},
          {"verifier_count", c.verifier_count}};
}

json spec_json(const ExperimentSpec& e) {
  const auto& s = e.scenario;
  const auto& a = s.attack;
  json scenario = {
      {"vehicles", s.vehicles},
      {"candidates", s.candidates},
      {"region", {{"lat_min", s.region.lat_min}, {"lat_max", s.region.lat_max}, {"lon_min", s.region.lon_min}, {"lon_max", s.region.lon_max}}},
      {"coverage_radius_m", {s.coverage_radius_m.first, s.coverage_radius_m.second}},
      {"speed_kmh", {s.speed_kmh.first, s.speed_kmh.second}},
      {"trace_step_s", s.trace_step_s},
      {"trace_dir", s.trace_dir},
      {"rounds", s.rounds},
      {"update_period_s", s.update_period_s},
      {"interaction",
       {{"interactions_per_week", s.interaction.interactions_per_week},
        {"time_compression", s.interaction.time_compression},
        {"link_quality_min", s.interaction.link_quality_min},
        {"link_quality_max", s.interaction.link_quality_max}}},
      {"weights",
       {{"recent_weight", s.weights.recent_weight},
        {"past_weight", s.weights.past_weight},
        {"positive_weight", s.weights.positive_weight},
        {"negative_weight", s.weights.negative_weight},
        {"scale", s.weights.scale},
        {"uncertainty_effect", s.weights.uncertainty_effect},
        {"recent_horizon_s", s.weights.recent_horizon_s},
        {"window_s", s.weights.window_s}}},
      {"tsl_blend", s.tsl.blend},
      {"ta_threshold", s.ta_threshold},
      {"detection_threshold", s.detection_threshold},
      {"detection_scheme", to_string(s.detection_scheme)},
      {"max_age_rounds", s.max_age_rounds},
      {"k", s.k},
      {"y", s.y},
      {"standby_verification", s.standby_verification},
      {"contract_enabled", s.contract_enabled},
      {"standby_fraction", s.standby_fraction},
      {"standby_cap", s.standby_cap},
      {"max_types", s.max_types},
      {"block_validity_rate", s.block_validity_rate},
      {"attack",
       {{"malicious_count", a.malicious_count},
        {"onset_s", a.onset_s},
        {"partners_per_candidate", a.partners_per_candidate},
        {"target_count", a.target_count},
        {"misbehavior_rate_min", a.misbehavior_rate_min},
        {"misbehavior_rate_max", a.misbehavior_rate_max},
        {"active_collusion_fraction", a.active_collusion_fraction},
        {"manager_corruption", a.manager_corruption},
        {"tracked_candidate", a.tracked_candidate}}},
  };
  return {{"name", e.name},
          {"seed", e.seed},
          {"outputs", e.outputs},
          {"scenario", scenario},
          {"contract", contract_json(e.contract)},
          {"task",
           {{"cpu_cycles", e.task.cpu_cycles},
            {"input_size", e.task.input_size},
            {"output_size", e.task.output_size},
            {"broadcast_coeff", e.task.broadcast_coeff}}},
          {"sweep",
           {{"thresholds", e.thresholds},
            {"type_counts", e.type_counts},
            {"types", e.types},
            {"verifiers_per_type", e.verifiers_per_type}}}};
}

void flatten(const json& j, const std::string& prefix, std::ostringstream& out) {
  if (j.is_object()) {
    for (auto it = j.begin(); it != j.end(); ++it) flatten(it.value(), prefix.empty() ? it.key() : prefix + "." + it.key(), out);
    return;
  }
  out << prefix << " = ";
  if (j.is_number_float()) {
    out << format_number(j.get<double>());
  } else if (j.is_string()) {
    out << j.get<std::string>();
  } else if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i) {
      if (i) out << ",";
      out << (j[i].is_number_float() ? format_number(j[i].get<double>()) : j[i].dump());
    }
  } else {
    out << j.dump();
  }
  out << "\n";
}

std::string num(double x) { return format_number(x); }
std::string num(std::size_t x) { return std::to_string(x); }

ContractParams market_params(const ExperimentSpec& spec, std::size_t Q) {
  ContractParams p = spec.contract;
  p.verifier_count = static_cast<double>(Q) * spec.verifiers_per_type;
  return p;
}

class Runner {
 public:
  explicit Runner(const ExperimentSpec& spec) : spec_(spec) {}

  Table make(const std::string& name) {
    if (name == "reputation_timeseries") return reputation_timeseries();
    if (name == "detection_rate") return detection();
    if (name == "correct_block_probability") return block_probability();
    if (name == "verifier_utilities") return verifier_utilities();
    if (name == "profit_vs_types") return profit_vs_types();
    if (name == "contract_menu") return contract_menu();
    if (name == "ledger_dump") return ledger_dump();
    if (name == "event_dump") return event_dump();
    throw SpecError("unknown table " + name);
  }

 private:
  const SimulationReport& base() {
    if (!base_) base_ = run_simulation(spec_.scenario);
    return *base_;
  }

  Table reputation_timeseries() {
    const auto& rep = base();
    if (!rep.observer) throw SpecError("reputation_timeseries needs a malicious candidate and a victim");
    Table t{"reputation_timeseries", {"minute", "scheme", "reputation"}, {}};
    const double minutes = spec_.scenario.update_period_s / 60.0;
    for (const auto scheme : {Scheme::none, Scheme::tsl, Scheme::mwsl}) {
      const auto& series = rep.observer_series.at(scheme);
      for (std::size_t r = 0; r < series.size(); ++r)
        t.rows.push_back({num(static_cast<double>(r + 1) * minutes), to_string(scheme), num(series[r])});
    }
    return t;
  }

  Table detection() {
    const auto& rep = base();
    Table t{"detection_rate", {"threshold", "scheme", "rate"}, {}};
    for (const double th : spec_.thresholds)
      for (const auto scheme : {Scheme::none, Scheme::tsl, Scheme::mwsl})
        t.rows.push_back({num(th), to_string(scheme), num(detection_rate(rep, scheme, th, rep.rounds.size()))});
    return t;
  }

  Table block_probability() {
    Table t{"correct_block_probability", {"threshold", "variant", "probability"}, {}};
    struct Variant {
      const char* name;
      Scheme scheme;
      bool standby;
    };
    const Variant variants[] = {{"MWSL_with_standby", Scheme::mwsl, true},
                                {"MWSL_without_standby", Scheme::mwsl, false},
                                {"TSL_without_standby", Scheme::tsl, false}};
    for (const double th : spec_.thresholds)
      for (const auto& v : variants) {
        ScenarioConfig cfg = spec_.scenario;
        cfg.detection_threshold = th;
        cfg.detection_scheme = v.scheme;
        cfg.standby_verification = v.standby;
        t.rows.push_back({num(th), v.name, num(correct_block_probability(run_simulation(cfg)))});
      }
    return t;
  }

  Table verifier_utilities() {
    const auto profile = VerifierTypeProfile::uniform(spec_.types);
    const auto params = market_params(spec_, spec_.types);
    const auto menu = solve_optimal_contract(profile, params);
    const auto rep = check_menu(menu.items, profile, params.unit_cost);
    Table t{"verifier_utilities", {"chooser_type", "item_type", "utility"}, {}};
    for (std::size_t i = 0; i < spec_.types; ++i)
      for (std::size_t j = 0; j < spec_.types; ++j) t.rows.push_back({num(i + 1), num(j + 1), num(rep.utility[i][j])});
    return t;
  }

  Table profit_vs_types() {
    Table t{"profit_vs_types", {"Q", "model", "profit"}, {}};
    for (const auto Q : spec_.type_counts) {
      const auto profile = VerifierTypeProfile::uniform(Q);
      const auto params = market_params(spec_, Q);
      t.rows.push_back({num(Q), "contract", num(solve_optimal_contract(profile, params).profit)});
      t.rows.push_back({num(Q), "stackelberg_sym", num(stackelberg_symmetric(profile, params).profit)});
    }
    return t;
  }

  Table contract_menu() {
    const auto profile = VerifierTypeProfile::uniform(spec_.types);
    const auto params = market_params(spec_, spec_.types);
    const auto menu = solve_optimal_contract(profile, params);
    Table t{"contract_menu", {"q", "theta", "p", "reward", "inv_latency", "utility", "type_profit"}, {}};
    for (std::size_t q = 0; q < spec_.types; ++q) {
      const auto& item = menu.items[q];
      const double phi = security_latency_metric(profile.types[q], profile.priors[q], params.verifier_count,
                                                 1.0 / item.inv_latency, params);
      const double mp = params.verifier_count * profile.priors[q];
      t.rows.push_back({num(q + 1), num(profile.types[q]), num(profile.priors[q]), num(item.reward),
                        num(item.inv_latency), num(verifier_utility(profile.types[q], item, params.unit_cost)),
                        num(mp * (params.gain * phi - params.reward_weight * item.reward))});
    }
    return t;
  }

  Table ledger_dump() {
    Table t{"ledger_dump", {"rater", "ratee", "belief", "disbelief", "uncertainty", "round"}, {}};
    for (const auto& r : base().ledger.records())
      t.rows.push_back({to_string(r.rater), to_string(r.ratee), num(r.opinion.belief), num(r.opinion.disbelief),
                        num(r.opinion.uncertainty), std::to_string(r.round)});
    return t;
  }

  Table event_dump() {
    Table t{"event_dump", {"vehicle", "rsu", "timestamp", "outcome", "link_quality"}, {}};
    for (const auto& e : base().events)
      t.rows.push_back({to_string(e.vehicle), to_string(e.rsu), num(e.timestamp),
                        e.outcome == Outcome::positive ? "positive" : "negative", num(e.link_quality)});
    return t;
  }

  const ExperimentSpec& spec_;
  std::optional<SimulationReport> base_;
};

}  // namespace

const std::vector<std::string>& table_registry() {
  static const std::vector<std::string> names{"reputation_timeseries", "detection_rate", "correct_block_probability",
                                              "verifier_utilities",    "profit_vs_types", "contract_menu",
                                              "ledger_dump",           "event_dump"};
  return names;
}

std::string format_number(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

void ExperimentSpec::validate() const {
  const auto& reg = table_registry();
  for (const auto& o : outputs)
    if (std::find(reg.begin(), reg.end(), o) == reg.end()) throw SpecError("unknown table " + o);
  try {
    scenario.validate();
    contract.validate();
    task.validate();
  } catch (const std::invalid_argument& e) {
    throw SpecError(e.what());
  }
  for (const double th : thresholds)
    if (!(th >= 0 && th <= 1)) throw SpecError("thresholds must lie in [0, 1]");
  for (const auto q : type_counts)
    if (q < 1) throw SpecError("type_counts must be positive");
  if (types < 1) throw SpecError("types must be positive");
  if (!(verifiers_per_type > 0)) throw SpecError("verifiers_per_type must be positive");
}

ExperimentSpec parse_spec(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw SpecError(std::string("spec is not valid JSON: ") + e.what());
  }
  ExperimentSpec spec;
  {
    Fields f(j, "spec");
    f.get("name", spec.name);
    f.get("seed", spec.seed);
    if (const auto* o = f.object("outputs")) {
      if (!o->is_array()) throw SpecError("outputs must be an array of table names");
      for (const auto& x : *o) {
        if (!x.is_string()) throw SpecError("outputs must be an array of table names");
        spec.outputs.push_back(x.get<std::string>());
      }
    }
    if (const auto* s = f.object("scenario")) read_scenario(*s, spec.scenario);
    if (const auto* c = f.object("contract")) read_contract(*c, "contract", spec.contract);
    if (const auto* t = f.object("task")) {
      Fields b(*t, "task");
      b.get("cpu_cycles", spec.task.cpu_cycles);
      b.get("input_size", spec.task.input_size);
      b.get("output_size", spec.task.output_size);
      b.get("broadcast_coeff", spec.task.broadcast_coeff);
    }
    if (const auto* w = f.object("sweep")) {
      Fields b(*w, "sweep");
      b.get("thresholds", spec.thresholds);
      b.get("type_counts", spec.type_counts);
      b.get("types", spec.types);
      b.get("verifiers_per_type", spec.verifiers_per_type);
    }
  }
  spec.scenario.seed = spec.seed;
  spec.scenario.contract = spec.contract;
  return spec;
}

ExperimentSpec load_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SpecError("cannot open spec " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_spec(text.str());
}

std::string effective_json(const ExperimentSpec& spec) { return spec_json(spec).dump(); }

std::string config_hash(const ExperimentSpec& spec) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(effective_json(spec))));
  return buf;
}

std::string describe(const ExperimentSpec& spec) {
  std::ostringstream out;
  flatten(spec_json(spec), "", out);
  return out.str();
}

std::vector<Table> run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  Runner runner(spec);
  std::vector<Table> tables;
  for (const auto& name : spec.outputs) tables.push_back(runner.make(name));
  return tables;
}

std::vector<std::filesystem::path> write_outputs(const ExperimentSpec& spec, const std::vector<Table>& tables,
                                                 const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  const auto hash = config_hash(spec);
  std::vector<std::filesystem::path> written;
  for (const auto& t : tables) {
    const auto path = out_dir / (t.name + ".csv");
    std::ofstream out(path, std::ios::binary);
    out << "# rdpos table=" << t.name << " experiment=" << spec.name << " seed=" << spec.seed
        << " config_hash=" << hash << "\n";
    for (std::size_t i = 0; i < t.columns.size(); ++i) out << (i ? "," : "") << t.columns[i];
    out << "\n";
    for (const auto& row : t.rows) {
      for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
      out << "\n";
    }
    if (!out) throw std::runtime_error("failed writing " + path.string());
    written.push_back(path);
  }
  const auto manifest = out_dir / "manifest.txt";
  std::ofstream m(manifest, std::ios::binary);
  m << "experiment=" << spec.name << "\nseed=" << spec.seed << "\nconfig_hash=" << hash << "\nversion=" << kVersion
    << "\n";
  for (const auto& t : tables) m << "table=" << t.name << " file=" << t.name << ".csv rows=" << t.rows.size() << "\n";
  if (!m) throw std::runtime_error("failed writing " + manifest.string());
  written.push_back(manifest);
  return written;
}

}  // namespace rdpos
