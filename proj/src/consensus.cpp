#include "rdpos/consensus.hpp"
#include "rdpos/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace rdpos {

namespace {

void require(bool cond, const std::string& what) {
  if (!cond) throw std::invalid_argument(what);
}

bool in_unit(double x) { return x >= 0.0 && x <= 1.0; }

std::vector<CandidateId> candidate_range(std::size_t n) {
  std::vector<CandidateId> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = CandidateId{static_cast<std::uint32_t>(i)};
  return out;
}

// Candidates ordered by descending score, ascending id on ties.
std::vector<CandidateId> rank_by_score(std::vector<CandidateId> ids, const std::vector<double>& score) {
  std::sort(ids.begin(), ids.end(), [&](CandidateId a, CandidateId b) {
    if (score[a.value] != score[b.value]) return score[a.value] > score[b.value];
    return a < b;
  });
  return ids;
}

struct Roles {
  std::set<CandidateId> malicious;
  std::map<CandidateId, std::set<VehicleId>> partners;
  std::map<VehicleId, std::set<CandidateId>> partner_of;
  std::map<CandidateId, double> rate;
  std::vector<BehaviorProfile> behaviors;
};

Roles assign_roles(const ScenarioConfig& cfg) {
  const auto& atk = cfg.attack;
  Roles roles;
  Rng rng(derive_seed(cfg.seed, "roles"));

  auto cands = candidate_range(cfg.candidates);
  rng.shuffle(std::span<CandidateId>(cands));
  std::vector<VehicleId> vehicles(cfg.vehicles);
  for (std::size_t i = 0; i < cfg.vehicles; ++i) vehicles[i] = VehicleId{static_cast<std::uint32_t>(i)};
  rng.shuffle(std::span<VehicleId>(vehicles));

  std::vector<double> rates(atk.malicious_count);
  for (std::size_t i = 0; i < rates.size(); ++i)
    rates[i] = rates.size() == 1 ? atk.misbehavior_rate_max
                                 : atk.misbehavior_rate_min + (atk.misbehavior_rate_max - atk.misbehavior_rate_min) *
                                                                  static_cast<double>(i) /
                                                                  static_cast<double>(rates.size() - 1);
  rng.shuffle(std::span<double>(rates));

  std::size_t next_vehicle = 0;
  for (std::size_t i = 0; i < atk.malicious_count; ++i) {
    const CandidateId c = cands[i];
    roles.malicious.insert(c);
    roles.rate[c] = rates[i];
    for (std::size_t j = 0; j < atk.partners_per_candidate; ++j) {
      const VehicleId v = vehicles[next_vehicle++];
      roles.partners[c].insert(v);
      roles.partner_of[v].insert(c);
    }
  }

  for (const auto c : roles.malicious) {
    BehaviorProfile b;
    b.entity = c;
    b.schedule = {{0.0, atk.onset_s, Mode::honest}, {atk.onset_s, std::numeric_limits<double>::infinity(), Mode::malicious}};
    if (atk.onset_s <= 0) b.schedule = {{0.0, std::numeric_limits<double>::infinity(), Mode::malicious}};
    b.collusion_partners = roles.partners[c];
    b.misbehavior_rate = roles.rate[c];
    if (atk.target_count > 0) {
      std::vector<VehicleId> pool;
      for (std::size_t v = 0; v < cfg.vehicles; ++v) {
        const VehicleId id{static_cast<std::uint32_t>(v)};
        if (!roles.partner_of.contains(id)) pool.push_back(id);
      }
      Rng pick(derive_seed(cfg.seed, "targets", c.value));
      pick.shuffle(std::span<VehicleId>(pool));
      const auto n = std::min(atk.target_count, pool.size());
      b.targets.insert(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(n));
    }
    roles.behaviors.push_back(std::move(b));
  }
  return roles;
}

std::vector<TracePoint> scenario_traces(const ScenarioConfig& cfg) {
  const double duration = static_cast<double>(cfg.rounds) * cfg.update_period_s;
  if (cfg.trace_dir.empty())
    return synthetic_traces(cfg.vehicles, cfg.region, cfg.speed_kmh, duration, cfg.trace_step_s,
                            derive_seed(cfg.seed, "traces"));

  const auto set = load_trace_dir(cfg.trace_dir);
  auto inside = filter_region(set.points, cfg.region);
  if (inside.empty()) throw TraceError("no trace point falls inside the scenario region");
  double t0 = inside.front().timestamp;
  for (const auto& p : inside) t0 = std::min(t0, p.timestamp);
  // Keep the first `vehicles` vehicles that still have points, renumbered.
  std::map<VehicleId, VehicleId> renumber;
  std::vector<TracePoint> out;
  for (const auto& p : inside) {
    if (p.timestamp - t0 > duration) continue;
    auto it = renumber.find(p.vehicle);
    if (it == renumber.end()) {
      if (renumber.size() == cfg.vehicles) continue;
      it = renumber.emplace(p.vehicle, VehicleId{static_cast<std::uint32_t>(renumber.size())}).first;
    }
    out.push_back({it->second, p.latitude, p.longitude, p.timestamp - t0});
  }
  return out;
}

// Contract-based standby participation for one group.
class StandbyMarket {
 public:
  explicit StandbyMarket(const ScenarioConfig& cfg) : cfg_(cfg) {}

  std::vector<CandidateId> join(const MinerGroup& group, const std::vector<double>& reputation) {
    std::vector<CandidateId> joined;
    if (group.standby.empty()) return joined;
    if (!cfg_.contract_enabled) {
      const auto n = static_cast<std::size_t>(std::ceil(cfg_.standby_fraction * static_cast<double>(group.standby.size()) - 1e-9));
      joined.assign(group.standby.begin(), group.standby.begin() + static_cast<std::ptrdiff_t>(std::min(n, group.standby.size())));
    } else {
      std::vector<CandidateId> members = group.active;
      members.insert(members.end(), group.standby.begin(), group.standby.end());
      std::sort(members.begin(), members.end(), [&](CandidateId a, CandidateId b) {
        if (reputation[a.value] != reputation[b.value]) return reputation[a.value] < reputation[b.value];
        return a < b;
      });
      const std::size_t n = members.size();
      const std::size_t Q = std::min(cfg_.max_types, n);
      const ContractMenu* menu = menu_for(Q, n);
      if (menu == nullptr) return joined;
      std::map<CandidateId, std::size_t> type_of;
      for (std::size_t r = 0; r < n; ++r) type_of[members[r]] = r * Q / n;
      for (const auto c : group.standby) {
        const double theta = static_cast<double>(type_of[c] + 1);
        double best = -std::numeric_limits<double>::infinity();
        for (const auto& item : menu->items) best = std::max(best, verifier_utility(theta, item, cfg_.contract.unit_cost));
        if (best >= -1e-12) joined.push_back(c);
      }
    }
    if (cfg_.standby_cap > 0 && joined.size() > cfg_.standby_cap) joined.resize(cfg_.standby_cap);
    return joined;
  }

 private:
  const ContractMenu* menu_for(std::size_t Q, std::size_t n) {
    const auto key = std::make_pair(Q, n);
    auto it = menus_.find(key);
    if (it == menus_.end()) {
      ContractParams params = cfg_.contract;
      params.verifier_count = static_cast<double>(n);
      std::optional<ContractMenu> menu;
      try {
        menu = solve_optimal_contract(VerifierTypeProfile::uniform(Q), params);
      } catch (const ContractInfeasible&) {
      }
      it = menus_.emplace(key, std::move(menu)).first;
    }
    return it->second ? &*it->second : nullptr;
  }

  const ScenarioConfig& cfg_;
  std::map<std::pair<std::size_t, std::size_t>, std::optional<ContractMenu>> menus_;
};

}  // namespace

const char* to_string(Scheme s) {
  switch (s) {
    case Scheme::none:
      return "none";
    case Scheme::tsl:
      return "TSL";
    case Scheme::mwsl:
      return "MWSL";
  }
  return "?";
}

void AttackSpec::validate(std::size_t candidates, std::size_t vehicles) const {
  require(malicious_count <= candidates, "malicious_count exceeds the candidate count");
  require(malicious_count * partners_per_candidate <= vehicles, "not enough vehicles for every collusion partner");
  require(target_count <= vehicles, "target_count exceeds the vehicle count");
  require(in_unit(misbehavior_rate_min) && in_unit(misbehavior_rate_max) && misbehavior_rate_min <= misbehavior_rate_max,
          "misbehavior rates must satisfy 0 <= min <= max <= 1");
  require(in_unit(active_collusion_fraction), "active_collusion_fraction must lie in [0, 1]");
  require(tracked_candidate < static_cast<long>(candidates), "tracked_candidate is not a candidate");
  require(tracked_candidate < 0 || malicious_count > 0, "tracked_candidate needs a malicious roster");
}

void ScenarioConfig::validate() const {
  require(vehicles >= 1, "at least one vehicle is required");
  require(candidates >= 1, "at least one candidate is required");
  region.validate();
  require(coverage_radius_m.first > 0 && coverage_radius_m.first <= coverage_radius_m.second,
          "coverage radius range must be positive and ordered");
  require(speed_kmh.first > 0 && speed_kmh.first <= speed_kmh.second, "speed range must be positive and ordered");
  require(trace_step_s > 0, "trace_step_s must be positive");
  require(update_period_s > 0, "update_period_s must be positive");
  interaction.validate();
  weights.validate();
  require(in_unit(tsl.blend), "tsl blend must lie in [0, 1]");
  require(in_unit(ta_threshold), "ta_threshold must lie in [0, 1]");
  require(in_unit(detection_threshold), "detection_threshold must lie in [0, 1]");
  require(k % 2 == 1, "k must be odd");
  require(k < y, "k must be smaller than y");
  require(y <= candidates, "y must not exceed the candidate count");
  require(in_unit(standby_fraction), "standby_fraction must lie in [0, 1]");
  require(max_types >= 1, "max_types must be positive");
  contract.validate();
  require(in_unit(block_validity_rate), "block_validity_rate must lie in [0, 1]");
  attack.validate(candidates, vehicles);
}

EvidenceSnapshot::EvidenceSnapshot(std::span<const InteractionRecord> events, double now,
                                   const ReputationWeights& weights, std::size_t vehicles, std::size_t candidates)
    : vehicles_(vehicles), candidates_(candidates) {
  const std::size_t n = vehicles * candidates;
  weighted_.assign(n, {});
  plain_.assign(n, {});
  count_.assign(n, 0);
  negative_.assign(n, 0);
  delta_.assign(n, 0.0);

  std::vector<std::vector<TimedOutcome>> timed(n);
  std::vector<double> lq_sum(n, 0.0);
  for (const auto& e : events) {
    if (e.timestamp > now || now - e.timestamp > weights.window_s) continue;
    if (e.vehicle.value >= vehicles || e.rsu.value >= candidates) throw std::out_of_range("event outside the roster");
    const auto i = at(e.vehicle, e.rsu);
    timed[i].push_back({e.timestamp, e.outcome});
    lq_sum[i] += e.link_quality;
    ++count_[i];
    if (e.outcome == Outcome::negative) ++negative_[i];
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (count_[i] == 0) continue;
    const double lq = lq_sum[i] / static_cast<double>(count_[i]);
    weighted_[i] = weighted_counts(timed[i], now, weights);
    weighted_[i].link_quality = lq;
    plain_[i] = {static_cast<double>(count_[i] - negative_[i]), static_cast<double>(negative_[i]), lq};
  }
  for (std::size_t v = 0; v < vehicles; ++v) {
    std::vector<EvidenceCounts> peers;
    for (std::size_t c = 0; c < candidates; ++c)
      if (count_[v * candidates + c] > 0) peers.push_back(weighted_[v * candidates + c]);
    if (peers.empty()) continue;
    for (std::size_t c = 0; c < candidates; ++c)
      delta_[v * candidates + c] = rdpos::recommendation_weight(weighted_[v * candidates + c], peers, weights.scale);
  }
}

Opinion mwsl_local(const EvidenceSnapshot& s, VehicleId v, CandidateId c) {
  return opinion_from_evidence(s.weighted(v, c));
}

Opinion tsl_local(const EvidenceSnapshot& s, VehicleId v, CandidateId c) {
  return opinion_from_evidence(s.plain(v, c));
}

double no_reputation_score(const EvidenceSnapshot& s, VehicleId v, CandidateId c) {
  const double n = static_cast<double>(s.interactions(v, c));
  return reputation_score({n / (n + 2), 0.0, 2 / (n + 2)}, 0.5);
}

std::set<CandidateId> admit_candidates(const Ledger& ledger, std::span<const CandidateId> roster, double ta_threshold,
                                       double uncertainty_effect, std::uint64_t max_age_rounds) {
  std::set<CandidateId> out;
  for (const auto c : roster)
    if (ledger.average_reputation(c, uncertainty_effect, max_age_rounds) > ta_threshold) out.insert(c);
  return out;
}

std::vector<FinalReputation> compute_final_reputations(VehicleId rater, std::span<const CandidateId> candidates,
                                                       const EvidenceSnapshot& evidence, const Ledger& ledger,
                                                       const ReputationWeights& weights,
                                                       std::uint64_t max_age_rounds) {
  std::vector<FinalReputation> out;
  out.reserve(candidates.size());
  std::vector<Recommendation> recs;
  for (const auto c : candidates) {
    FinalReputation r;
    r.candidate = c;
    r.local = mwsl_local(evidence, rater, c);
    recs.clear();
    for (const auto& ro : ledger.recommended_opinions(c, rater, max_age_rounds))
      recs.push_back({evidence.recommendation_weight(ro.rater, c), ro.opinion});
    const auto fused = final_opinion(r.local, recs);
    r.final = fused.opinion;
    r.dogmatic_fallback = fused.dogmatic_fallback;
    r.score = reputation_score(r.final, weights.uncertainty_effect);
    out.push_back(r);
  }
  return out;
}

std::vector<double> compute_tsl_reputations(VehicleId rater, std::span<const CandidateId> candidates,
                                            const EvidenceSnapshot& evidence, const Ledger& tsl_ledger,
                                            const TslParams& params, std::uint64_t max_age_rounds) {
  std::vector<double> out;
  out.reserve(candidates.size());
  std::vector<Recommendation> recs;
  for (const auto c : candidates) {
    const Opinion latest = tsl_local(evidence, rater, c);
    recs.clear();
    for (const auto& ro : tsl_ledger.recommended_opinions(c, rater, max_age_rounds)) recs.push_back({1.0, ro.opinion});
    const Opinion avg = recs.empty() ? latest : aggregate_recommendations(recs);
    out.push_back(tsl_reputation(avg, latest, params));
  }
  return out;
}

MinerGroup vote_and_select(std::span<const Ballot> ballots, std::size_t k, std::size_t y) {
  require(k >= 1 && k % 2 == 1, "k must be odd");
  require(k < y, "k must be smaller than y");
  std::map<CandidateId, std::size_t> tally;
  for (const auto& b : ballots) {
    require(b.ranked_choices.size() == y, "ballot of " + to_string(b.voter) + " does not list exactly y candidates");
    std::set<CandidateId> seen(b.ranked_choices.begin(), b.ranked_choices.end());
    require(seen.size() == y, "ballot of " + to_string(b.voter) + " repeats a candidate");
    for (const auto c : b.ranked_choices) ++tally[c];
  }
  require(tally.size() >= y, "ballots name fewer than y candidates");
  std::vector<std::pair<CandidateId, std::size_t>> order(tally.begin(), tally.end());
  std::stable_sort(order.begin(), order.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  MinerGroup g;
  for (std::size_t i = 0; i < y; ++i) (i < k ? g.active : g.standby).push_back(order[i].first);
  return g;
}

CandidateId rotate_manager(const MinerGroup& group, std::size_t slot) {
  require(!group.active.empty(), "miner group has no active member");
  return group.active[slot % group.active.size()];
}

BlockOutcome verify_block(const BlockContext& ctx, std::uint64_t seed) {
  Rng rng(derive_seed(seed, "block", ctx.round * 1024 + ctx.slot));
  BlockOutcome out;
  out.round = ctx.round;
  out.slot = ctx.slot;
  out.manager = ctx.manager;
  out.verifiers = ctx.verifiers;
  out.standby_verifiers = ctx.standby_verifiers;
  const bool draw_valid = rng.bernoulli(ctx.validity_rate);
  out.valid = ctx.manager_corrupt ? false : draw_valid;
  for (const auto v : ctx.verifiers) {
    const bool colluding = ctx.colluders.contains(v);
    out.colluders += colluding ? 1 : 0;
    if (colluding != out.valid) ++out.agree_count;
  }
  out.accepted = out.agree_count > (2 * ctx.verifiers.size()) / 3;
  out.truthful = out.accepted == out.valid;
  return out;
}

SimulationReport run_simulation(const ScenarioConfig& cfg) {
  cfg.validate();
  SimulationReport rep;
  rep.candidates = cfg.candidates;
  if (cfg.rounds == 0) return rep;

  const Roles roles = assign_roles(cfg);
  rep.malicious = roles.malicious;
  rep.misbehavior_rate = roles.rate;
  for (const auto& [v, _] : roles.partner_of) rep.compromised.insert(v);

  const auto traces = scenario_traces(cfg);
  const auto sites = deploy_rsus(cfg.candidates, cfg.region, cfg.coverage_radius_m, derive_seed(cfg.seed, "rsus"));
  auto stream = interaction_events(traces, sites, roles.behaviors, cfg.interaction, derive_seed(cfg.seed, "interactions"));
  rep.events = std::move(stream.records);

  if (!roles.malicious.empty()) {
    if (cfg.attack.tracked_candidate >= 0) {
      rep.tracked = CandidateId{static_cast<std::uint32_t>(cfg.attack.tracked_candidate)};
    } else {
      for (const auto c : roles.malicious)
        if (!rep.tracked || roles.rate.at(c) > roles.rate.at(*rep.tracked)) rep.tracked = c;
    }
  }

  const auto roster = candidate_range(cfg.candidates);
  const std::size_t V = cfg.vehicles, C = cfg.candidates;
  std::vector<VehicleId> honest;
  for (std::size_t v = 0; v < V; ++v)
    if (!rep.compromised.contains(VehicleId{static_cast<std::uint32_t>(v)}))
      honest.push_back(VehicleId{static_cast<std::uint32_t>(v)});

  Ledger& ledger = rep.ledger;
  Ledger tsl_ledger;
  StandbyMarket market(cfg);
  std::map<Scheme, std::vector<std::vector<double>>> tracked_scores;  // [scheme][round][vehicle]
  const std::uint64_t block_seed = derive_seed(cfg.seed, "blocks");

  for (std::size_t r = 0; r < cfg.rounds; ++r) {
    const double now = static_cast<double>(r + 1) * cfg.update_period_s;
    const EvidenceSnapshot ev(rep.events, now, cfg.weights, V, C);

    // Reputation under the three schemes.
    std::vector<std::vector<double>> mwsl(V), tsl(V), none(V, std::vector<double>(C));
    for (std::size_t v = 0; v < V; ++v) {
      const VehicleId id{static_cast<std::uint32_t>(v)};
      for (const auto& fr : compute_final_reputations(id, roster, ev, ledger, cfg.weights, cfg.max_age_rounds)) {
        mwsl[v].push_back(fr.score);
        rep.dogmatic_fallbacks += fr.dogmatic_fallback ? 1 : 0;
      }
      tsl[v] = compute_tsl_reputations(id, roster, ev, tsl_ledger, cfg.tsl, cfg.max_age_rounds);
      for (std::size_t c = 0; c < C; ++c) none[v][c] = no_reputation_score(ev, id, CandidateId{static_cast<std::uint32_t>(c)});
    }
    for (auto [scheme, table] : {std::pair{Scheme::mwsl, &mwsl}, std::pair{Scheme::tsl, &tsl}, std::pair{Scheme::none, &none}}) {
      std::vector<double> avg(C, 0.0);
      for (const auto v : honest)
        for (std::size_t c = 0; c < C; ++c) avg[c] += (*table)[v.value][c];
      for (auto& a : avg) a = honest.empty() ? 0.5 : a / static_cast<double>(honest.size());
      rep.system_average[scheme].push_back(avg);
      if (rep.tracked) {
        std::vector<double> per_vehicle(V);
        for (std::size_t v = 0; v < V; ++v) per_vehicle[v] = (*table)[v][rep.tracked->value];
        tracked_scores[scheme].push_back(std::move(per_vehicle));
      }
    }
    const auto& sys = rep.system_average[cfg.detection_scheme].back();
    const auto& own = cfg.detection_scheme == Scheme::mwsl ? mwsl : cfg.detection_scheme == Scheme::tsl ? tsl : none;

    // Admission, voting and miner group.
    RoundRecord rr;
    rr.round = r;
    rr.time = now;
    rr.admitted = admit_candidates(ledger, roster, cfg.ta_threshold, cfg.weights.uncertainty_effect, cfg.max_age_rounds);
    for (const auto c : rr.admitted)
      if (!(sys[c.value] < cfg.detection_threshold)) rr.eligible.insert(c);

    const std::size_t n_eligible = rr.eligible.size();
    if (n_eligible > 0) {
      const std::size_t y = std::min(cfg.y, n_eligible);
      std::size_t k = y == 1 ? 1 : std::min(cfg.k, y - 1);
      if (k % 2 == 0) --k;
      const std::vector<CandidateId> eligible(rr.eligible.begin(), rr.eligible.end());

      MinerGroup group;
      if (y == 1) {
        group.active = eligible;
      } else {
        std::vector<Ballot> ballots;
        for (std::size_t v = 0; v < V; ++v) {
          const VehicleId id{static_cast<std::uint32_t>(v)};
          auto ranked = rank_by_score(eligible, own[v]);
          if (const auto it = roles.partner_of.find(id); it != roles.partner_of.end())
            std::stable_partition(ranked.begin(), ranked.end(), [&](CandidateId c) { return it->second.contains(c); });
          ranked.resize(y);
          ballots.push_back({id, std::move(ranked)});
        }
        group = vote_and_select(ballots, k, y);
      }

      // Colluding candidates that have turned take active seats.
      std::vector<CandidateId> coalition;
      if (cfg.attack.active_collusion_fraction > 0 && now > cfg.attack.onset_s)
        for (const auto c : eligible)
          if (roles.malicious.contains(c)) coalition.push_back(c);
      const auto seats = std::min(
          coalition.size(),
          static_cast<std::size_t>(std::ceil(cfg.attack.active_collusion_fraction * static_cast<double>(k) - 1e-9)));
      if (seats > 0) {
        rr.captured.assign(coalition.begin(), coalition.begin() + static_cast<std::ptrdiff_t>(seats));
        std::vector<CandidateId> rest;
        for (const auto& list : {group.active, group.standby})
          for (const auto c : list)
            if (std::find(rr.captured.begin(), rr.captured.end(), c) == rr.captured.end()) rest.push_back(c);
        for (const auto c : rank_by_score(eligible, sys))
          if (std::find(rest.begin(), rest.end(), c) == rest.end() &&
              std::find(rr.captured.begin(), rr.captured.end(), c) == rr.captured.end())
            rest.push_back(c);
        group.active = rr.captured;
        group.standby.clear();
        for (const auto c : rest) {
          if (group.active.size() < k)
            group.active.push_back(c);
          else if (group.size() < y)
            group.standby.push_back(c);
        }
      }
      rr.group = group;

      // Verification in k manager slots.
      std::set<CandidateId> colluders;
      if (cfg.attack.active_collusion_fraction > 0 && now > cfg.attack.onset_s)
        for (const auto c : coalition) colluders.insert(c);
      std::vector<CandidateId> joined;
      if (cfg.standby_verification) joined = market.join(group, sys);
      for (std::size_t slot = 0; slot < group.active.size(); ++slot) {
        BlockContext ctx;
        ctx.round = r;
        ctx.slot = slot;
        ctx.manager = rotate_manager(group, slot);
        ctx.verifiers = group.active;
        ctx.verifiers.insert(ctx.verifiers.end(), joined.begin(), joined.end());
        ctx.standby_verifiers = joined.size();
        ctx.colluders = colluders;
        ctx.manager_corrupt = cfg.attack.manager_corruption && colluders.contains(ctx.manager);
        ctx.validity_rate = cfg.block_validity_rate;
        rep.blocks.push_back(verify_block(ctx, block_seed));
      }
    }
    rep.rounds.push_back(std::move(rr));

    // Uploads of local opinions for the next round.
    std::vector<ReputationRecord> batch, tsl_batch;
    for (std::size_t v = 0; v < V; ++v) {
      const VehicleId id{static_cast<std::uint32_t>(v)};
      const auto partners = roles.partner_of.find(id);
      for (const auto c : roster) {
        const bool fabricated = partners != roles.partner_of.end() && partners->second.contains(c);
        if (fabricated) {
          batch.push_back({id, c, {1, 0, 0}, r, true});
          tsl_batch.push_back({id, c, {1, 0, 0}, r, true});
        } else if (ev.interactions(id, c) > 0) {
          batch.push_back({id, c, mwsl_local(ev, id, c), r, true});
          tsl_batch.push_back({id, c, tsl_local(ev, id, c), r, true});
        }
      }
    }
    ledger.append(std::move(batch), r);
    tsl_ledger.append(std::move(tsl_batch), r);
  }

  if (rep.tracked) {
    // The observer is the victim hit hardest among those that knew the
    // candidate before it turned; any victim if nobody did.
    std::vector<std::size_t> negatives(V, 0);
    std::vector<bool> knew(V, false);
    for (const auto& e : rep.events) {
      if (e.rsu != *rep.tracked) continue;
      if (e.outcome == Outcome::negative) ++negatives[e.vehicle.value];
      if (e.timestamp < cfg.attack.onset_s) knew[e.vehicle.value] = true;
    }
    const bool any_knew = std::any_of(honest.begin(), honest.end(), [&](VehicleId v) { return knew[v.value]; });
    for (const auto v : honest) {
      if (any_knew && !knew[v.value]) continue;
      if (!rep.observer || negatives[v.value] > negatives[rep.observer->value]) rep.observer = v;
    }
    if (rep.observer)
      for (auto& [scheme, rounds] : tracked_scores)
        for (const auto& per_vehicle : rounds) rep.observer_series[scheme].push_back(per_vehicle[rep.observer->value]);
  }
  return rep;
}

std::optional<std::size_t> first_drop(std::span<const double> series, double threshold) {
  for (std::size_t i = 0; i < series.size(); ++i)
    if (series[i] < threshold) return i;
  return std::nullopt;
}

double detection_rate(const SimulationReport& report, Scheme scheme, double threshold, std::size_t horizon_rounds) {
  if (report.malicious.empty()) throw std::domain_error("detection rate needs at least one malicious candidate");
  const auto it = report.system_average.find(scheme);
  std::size_t detected = 0;
  for (const auto c : report.malicious) {
    if (it == report.system_average.end()) break;
    const auto& rounds = it->second;
    for (std::size_t r = 0; r < std::min(horizon_rounds, rounds.size()); ++r)
      if (rounds[r][c.value] < threshold) {
        ++detected;
        break;
      }
  }
  return static_cast<double>(detected) / static_cast<double>(report.malicious.size());
}

double correct_block_probability(const SimulationReport& report) {
  if (report.blocks.empty()) return 1.0;
  const auto ok = std::count_if(report.blocks.begin(), report.blocks.end(), [](const auto& b) { return b.truthful; });
  return static_cast<double>(ok) / static_cast<double>(report.blocks.size());
}

}  // namespace rdpos
