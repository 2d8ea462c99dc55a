#include "rdpos/ledger.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>
#include <string>
#include <tuple>

namespace rdpos {

void Ledger::append(std::vector<ReputationRecord> batch, std::uint64_t round) {
  if (!records_.empty() && round < head_round_) {
    throw LedgerError("round " + std::to_string(round) + " precedes ledger head " + std::to_string(head_round_));
  }
  for (const auto& r : batch) {
    if (!r.signed_by_rater) throw LedgerError("unsigned record from " + to_string(r.rater));
    if (r.round != round) throw LedgerError("record round does not match batch round");
    if (!r.opinion.valid()) throw LedgerError("record opinion violates b+d+u=1");
  }
  std::stable_sort(batch.begin(), batch.end(), [](const ReputationRecord& a, const ReputationRecord& b) {
    return std::tie(a.rater, a.ratee) < std::tie(b.rater, b.ratee);
  });
  if (batch.empty()) return;

  records_.reserve(records_.size() + batch.size());
  for (auto& r : batch) {
    latest_[r.ratee][r.rater] = records_.size();
    records_.push_back(std::move(r));
  }
  head_round_ = round;
}

std::vector<RaterOpinion> Ledger::recommended_opinions(CandidateId ratee, std::optional<VehicleId> exclude_rater,
                                                       std::uint64_t max_age_rounds) const {
  std::vector<RaterOpinion> out;
  const auto it = latest_.find(ratee);
  if (it == latest_.end()) return out;
  const std::uint64_t oldest = head_round_ > max_age_rounds ? head_round_ - max_age_rounds : 0;
  out.reserve(it->second.size());
  for (const auto& [rater, idx] : it->second) {
    if (exclude_rater && rater == *exclude_rater) continue;
    const auto& rec = records_[idx];
    if (rec.round < oldest) continue;
    out.push_back({rater, rec.opinion});
  }
  return out;
}

double Ledger::average_reputation(CandidateId ratee, double uncertainty_effect, std::uint64_t max_age_rounds,
                                  double neutral_prior) const {
  const auto ops = recommended_opinions(ratee, std::nullopt, max_age_rounds);
  if (ops.empty()) return neutral_prior;
  double sum = 0.0;
  for (const auto& o : ops) sum += reputation_score(o.opinion, uncertainty_effect);
  return sum / static_cast<double>(ops.size());
}

void Ledger::export_lines(std::ostream& out) const {
  char buf[160];
  for (const auto& r : records_) {
    std::snprintf(buf, sizeof buf, "%s,%s,%.10g,%.10g,%.10g,%llu\n", to_string(r.rater).c_str(),
                  to_string(r.ratee).c_str(), r.opinion.belief, r.opinion.disbelief, r.opinion.uncertainty,
                  static_cast<unsigned long long>(r.round));
    out << buf;
  }
}

}  // namespace rdpos
