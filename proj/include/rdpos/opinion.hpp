#pragma once

#include <span>
#include <stdexcept>
#include <vector>

namespace rdpos {

/// Subjective-logic opinion: belief, disbelief and uncertainty summing to one.
struct Opinion {
  double belief{0.0};
  double disbelief{0.0};
  double uncertainty{1.0};

  static constexpr Opinion vacuous() { return {0.0, 0.0, 1.0}; }

  bool valid(double tol = 1e-9) const;
  bool dogmatic() const { return uncertainty == 0.0; }

  friend bool operator==(const Opinion&, const Opinion&) = default;
};

/// Weighted interaction evidence about one ratee. `link_quality` is the
/// probability a packet crosses the link successfully.
struct EvidenceCounts {
  double positive{0.0};
  double negative{0.0};
  double link_quality{1.0};

  double total() const { return positive + negative; }
  bool valid() const;
};

struct ReputationWeights {
  double recent_weight{0.6};
  double past_weight{0.4};
  double positive_weight{0.4};
  double negative_weight{0.6};
  double scale{1.0};
  double uncertainty_effect{0.5};
  double recent_horizon_s{3.0 * 24 * 3600};
  double window_s{30.0 * 24 * 3600};

  /// Throws std::invalid_argument naming the first violated invariant.
  void validate() const;
};

struct TslParams {
  double blend{0.5};
};

enum class Outcome { positive, negative };

struct TimedOutcome {
  double timestamp{0.0};
  Outcome outcome{Outcome::positive};
};

struct Recommendation {
  double weight{0.0};
  Opinion opinion;
};

/// Raised when both opinions handed to fuse() carry zero uncertainty.
class DogmaticFusionError : public std::domain_error {
 public:
  DogmaticFusionError() : std::domain_error("consensus fusion of two dogmatic opinions is undefined") {}
};

/// Evidence to opinion. Zero evidence yields the vacuous opinion whatever the
/// link quality.
Opinion opinion_from_evidence(const EvidenceCounts& counts);

/// Expected belief b + gamma * u.
double reputation_score(const Opinion& op, double uncertainty_effect);

/// Splits events into recent and past by `recent_horizon_s` and applies the
/// timeliness and effect weights. Events older than the window are ignored;
/// events in the future throw std::invalid_argument. The returned
/// link_quality is left at 1 for the caller to set.
EvidenceCounts weighted_counts(std::span<const TimedOutcome> events, double now, const ReputationWeights& w);

/// Ratio of the target's weighted interaction total to the mean total over
/// every ratee in `peer_counts`. Throws std::domain_error when that mean is 0.
double interaction_frequency(const EvidenceCounts& target, std::span<const EvidenceCounts> peer_counts);

/// delta = scale * IF, with a rater that has no interactions weighted 0.
double recommendation_weight(const EvidenceCounts& target, std::span<const EvidenceCounts> peer_counts,
                             double scale);

/// Weight-averaged opinion. Throws std::invalid_argument if `recs` is empty,
/// a weight is negative, or all weights are zero.
Opinion aggregate_recommendations(std::span<const Recommendation> recs);

/// Consensus fusion of the local opinion with the aggregated recommendation.
/// Throws DogmaticFusionError when both are dogmatic.
Opinion fuse(const Opinion& local, const Opinion& rec);

struct FusionOutcome {
  Opinion opinion;
  bool dogmatic_fallback{false};
};

/// fuse() with the dogmatic-dogmatic case resolved to the local opinion.
FusionOutcome fuse_or_local(const Opinion& local, const Opinion& rec);

/// Local opinion combined with whatever recommendations exist: skips fusion
/// when there is nothing with positive weight.
FusionOutcome final_opinion(const Opinion& local, std::span<const Recommendation> recs);

/// Linear-blend baseline: (1-k)(b_avg + u_avg/2) + k(b_last + u_last/2).
double tsl_reputation(const Opinion& avg, const Opinion& latest, const TslParams& p);

}  // namespace rdpos
