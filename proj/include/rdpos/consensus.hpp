#pragma once

#include "rdpos/contract.hpp"
#include "rdpos/ids.hpp"
#include "rdpos/ledger.hpp"
#include "rdpos/mobility.hpp"
#include "rdpos/opinion.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace rdpos {

enum class Scheme { none, tsl, mwsl };
const char* to_string(Scheme s);

struct MinerGroup {
  std::vector<CandidateId> active;
  std::vector<CandidateId> standby;

  std::size_t size() const { return active.size() + standby.size(); }
};

struct Ballot {
  VehicleId voter;
  std::vector<CandidateId> ranked_choices;
};

struct BlockOutcome {
  std::uint64_t round{0};
  std::size_t slot{0};
  CandidateId manager;
  std::vector<CandidateId> verifiers;
  std::size_t standby_verifiers{0};
  std::size_t colluders{0};
  std::size_t agree_count{0};
  bool valid{true};
  bool accepted{false};
  bool truthful{false};
};

struct AttackSpec {
  std::size_t malicious_count{10};
  double onset_s{300};
  std::size_t partners_per_candidate{3};
  /// Vehicles each malicious candidate misbehaves toward; 0 means every
  /// vehicle that is not one of its partners.
  std::size_t target_count{0};
  double misbehavior_rate_min{0.52};
  double misbehavior_rate_max{0.70};
  /// Share of active seats taken by undetected malicious candidates once
  /// they turn malicious.
  double active_collusion_fraction{0.0};
  bool manager_corruption{true};
  /// Candidate whose reputation is traced from a victim's view; -1 picks the
  /// malicious candidate with the highest misbehavior rate.
  long tracked_candidate{-1};

  void validate(std::size_t candidates, std::size_t vehicles) const;
};

struct ScenarioConfig {
  std::size_t vehicles{60};
  std::size_t candidates{40};
  BoundingBox region{37.75, 37.777, -122.45, -122.416};
  std::pair<double, double> coverage_radius_m{300, 500};
  std::pair<double, double> speed_kmh{50, 150};
  double trace_step_s{10};
  std::string trace_dir;  // empty: synthetic traces
  std::size_t rounds{60};
  double update_period_s{60};
  InteractionParams interaction{125.0, 720.0, 0.6, 1.0};
  ReputationWeights weights{0.6, 0.4, 0.4, 0.6, 1.0, 0.5, 360.0, 1e18};
  TslParams tsl{};
  double ta_threshold{0.3};
  double detection_threshold{0.5};
  /// Reputation that voters rank by and that screens out detected candidates.
  Scheme detection_scheme{Scheme::mwsl};
  std::uint64_t max_age_rounds{10};
  std::size_t k{9};
  std::size_t y{15};
  bool standby_verification{true};
  bool contract_enabled{true};
  double standby_fraction{1.0};   // joining share when the contract is disabled
  std::size_t standby_cap{0};     // 0: no cap
  std::size_t max_types{10};
  ContractParams contract{};
  double block_validity_rate{1.0};
  AttackSpec attack{};
  std::uint64_t seed{1};

  /// Throws std::invalid_argument naming the first violated invariant.
  void validate() const;
};

/// Weighted and plain evidence of every (vehicle, candidate) pair up to a
/// point in time, plus the recommendation weight each vehicle earns.
class EvidenceSnapshot {
 public:
  EvidenceSnapshot(std::span<const InteractionRecord> events, double now, const ReputationWeights& weights,
                   std::size_t vehicles, std::size_t candidates);

  const EvidenceCounts& weighted(VehicleId v, CandidateId c) const { return weighted_[at(v, c)]; }
  const EvidenceCounts& plain(VehicleId v, CandidateId c) const { return plain_[at(v, c)]; }
  std::size_t interactions(VehicleId v, CandidateId c) const { return count_[at(v, c)]; }
  std::size_t negatives(VehicleId v, CandidateId c) const { return negative_[at(v, c)]; }
  /// rho times the interaction frequency; 0 for a vehicle with no evidence.
  double recommendation_weight(VehicleId v, CandidateId c) const { return delta_[at(v, c)]; }

  std::size_t vehicles() const { return vehicles_; }
  std::size_t candidates() const { return candidates_; }

 private:
  std::size_t at(VehicleId v, CandidateId c) const { return v.value * candidates_ + c.value; }

  std::size_t vehicles_, candidates_;
  std::vector<EvidenceCounts> weighted_, plain_;
  std::vector<std::size_t> count_, negative_;
  std::vector<double> delta_;
};

Opinion mwsl_local(const EvidenceSnapshot& s, VehicleId v, CandidateId c);
Opinion tsl_local(const EvidenceSnapshot& s, VehicleId v, CandidateId c);
/// Reputation that ignores outcomes: every interaction counts as good
/// evidence with two units of prior uncertainty.
double no_reputation_score(const EvidenceSnapshot& s, VehicleId v, CandidateId c);

struct FinalReputation {
  CandidateId candidate;
  Opinion local;
  Opinion final;
  double score{0};
  bool dogmatic_fallback{false};
};

std::set<CandidateId> admit_candidates(const Ledger& ledger, std::span<const CandidateId> roster, double ta_threshold,
                                       double uncertainty_effect, std::uint64_t max_age_rounds);

std::vector<FinalReputation> compute_final_reputations(VehicleId rater, std::span<const CandidateId> candidates,
                                                       const EvidenceSnapshot& evidence, const Ledger& ledger,
                                                       const ReputationWeights& weights,
                                                       std::uint64_t max_age_rounds);

/// Baseline: linear blend of the mean recommended opinion and the rater's own
/// latest opinion. Without recommendations the own opinion stands for both.
std::vector<double> compute_tsl_reputations(VehicleId rater, std::span<const CandidateId> candidates,
                                            const EvidenceSnapshot& evidence, const Ledger& tsl_ledger,
                                            const TslParams& params, std::uint64_t max_age_rounds);

/// Plurality of ballot mentions; ties go to the smaller candidate id.
MinerGroup vote_and_select(std::span<const Ballot> ballots, std::size_t k, std::size_t y);

CandidateId rotate_manager(const MinerGroup& group, std::size_t slot);

struct BlockContext {
  std::uint64_t round{0};
  std::size_t slot{0};
  CandidateId manager;
  std::vector<CandidateId> verifiers;
  std::size_t standby_verifiers{0};
  std::set<CandidateId> colluders;
  bool manager_corrupt{false};
  double validity_rate{1.0};
};

/// Honest verifiers vote for the truth, colluders against it; the block is
/// accepted when strictly more than two thirds agree.
BlockOutcome verify_block(const BlockContext& ctx, std::uint64_t seed);

struct RoundRecord {
  std::uint64_t round{0};
  double time{0};
  MinerGroup group;
  std::set<CandidateId> admitted;
  std::set<CandidateId> eligible;
  std::vector<CandidateId> captured;  // seats taken by colluders
};

struct SimulationReport {
  std::size_t candidates{0};
  std::set<CandidateId> malicious;
  std::set<VehicleId> compromised;
  std::map<CandidateId, double> misbehavior_rate;
  std::vector<RoundRecord> rounds;
  /// system_average[scheme][round][candidate]: mean score over the vehicles
  /// that are not compromised.
  std::map<Scheme, std::vector<std::vector<double>>> system_average;
  std::optional<CandidateId> tracked;
  std::optional<VehicleId> observer;
  std::map<Scheme, std::vector<double>> observer_series;
  std::vector<BlockOutcome> blocks;
  std::size_t dogmatic_fallbacks{0};
  Ledger ledger;
  std::vector<InteractionRecord> events;
};

SimulationReport run_simulation(const ScenarioConfig& config);

/// Round index at which the tracked series first drops strictly below
/// `threshold`, if ever.
std::optional<std::size_t> first_drop(std::span<const double> series, double threshold);

/// Share of malicious candidates whose system average fell strictly below
/// `threshold` in one of the first `horizon_rounds` rounds. Throws
/// std::domain_error when the report has no malicious candidate.
double detection_rate(const SimulationReport& report, Scheme scheme, double threshold, std::size_t horizon_rounds);

/// Share of blocks whose acceptance matched their validity; 1 when no block
/// was produced.
double correct_block_probability(const SimulationReport& report);

}  // namespace rdpos
