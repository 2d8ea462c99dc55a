#pragma once

#include "rdpos/ids.hpp"
#include "rdpos/opinion.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace rdpos {

/// One vehicle's opinion of one candidate, as uploaded in a consensus round.
/// `signed_by_rater` stands in for the digital signature check.
struct ReputationRecord {
  VehicleId rater;
  CandidateId ratee;
  Opinion opinion;
  std::uint64_t round{0};
  bool signed_by_rater{true};

  friend bool operator==(const ReputationRecord&, const ReputationRecord&) = default;
};

struct RaterOpinion {
  VehicleId rater;
  Opinion opinion;
};

class LedgerError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Append-only store of reputation records. Readers see the latest opinion
/// per (rater, ratee); superseded records stay in the log.
class Ledger {
 public:
  /// Appends a batch for `round`, sorted by (rater, ratee). The batch is
  /// rejected as a whole, leaving the ledger unchanged, if any record is
  /// unsigned, carries a different round, has an invalid opinion, or if
  /// `round` precedes head_round().
  void append(std::vector<ReputationRecord> batch, std::uint64_t round);

  std::span<const ReputationRecord> records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  std::uint64_t head_round() const { return head_round_; }

  /// Latest opinion of each rater on `ratee` no older than
  /// head_round() - max_age_rounds, ordered by rater.
  std::vector<RaterOpinion> recommended_opinions(CandidateId ratee, std::optional<VehicleId> exclude_rater,
                                                 std::uint64_t max_age_rounds) const;

  /// Mean expected belief over recommended_opinions(ratee, none, max_age);
  /// `neutral_prior` when there is nothing on record.
  double average_reputation(CandidateId ratee, double uncertainty_effect, std::uint64_t max_age_rounds,
                            double neutral_prior = 0.5) const;

  /// One line per record: rater,ratee,b,d,u,round
  void export_lines(std::ostream& out) const;

 private:
  std::vector<ReputationRecord> records_;
  std::uint64_t head_round_{0};
  // ratee -> rater -> index of that rater's latest record
  std::map<CandidateId, std::map<VehicleId, std::size_t>> latest_;
};

}  // namespace rdpos
