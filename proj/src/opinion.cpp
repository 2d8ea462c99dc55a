#include "rdpos/opinion.hpp"

#include <cmath>
#include <string>

namespace rdpos {

namespace {

bool in_unit(double x) { return x >= 0.0 && x <= 1.0; }

void require(bool cond, const char* what) {
  if (!cond) throw std::invalid_argument(what);
}

}  // namespace

bool Opinion::valid(double tol) const {
  const auto near_unit = [tol](double x) { return x >= -tol && x <= 1.0 + tol; };
  return near_unit(belief) && near_unit(disbelief) && near_unit(uncertainty) &&
         std::abs(belief + disbelief + uncertainty - 1.0) <= tol;
}

bool EvidenceCounts::valid() const { return positive >= 0.0 && negative >= 0.0 && in_unit(link_quality); }

void ReputationWeights::validate() const {
  require(recent_weight >= 0.0 && past_weight >= 0.0, "timeliness weights must be nonnegative");
  require(std::abs(recent_weight + past_weight - 1.0) <= 1e-9, "recent_weight + past_weight must equal 1");
  require(recent_weight > past_weight, "recent_weight must exceed past_weight");
  require(positive_weight >= 0.0 && negative_weight >= 0.0, "effect weights must be nonnegative");
  require(std::abs(positive_weight + negative_weight - 1.0) <= 1e-9,
          "positive_weight + negative_weight must equal 1");
  require(positive_weight < negative_weight, "positive_weight must be below negative_weight");
  require(in_unit(scale), "scale must lie in [0, 1]");
  require(in_unit(uncertainty_effect), "uncertainty_effect must lie in [0, 1]");
  require(recent_horizon_s > 0.0, "recent_horizon_s must be positive");
  require(window_s > 0.0, "window_s must be positive");
}

Opinion opinion_from_evidence(const EvidenceCounts& counts) {
  const double total = counts.positive + counts.negative;
  if (total <= 0.0) return Opinion::vacuous();
  const double u = 1.0 - counts.link_quality;
  const double certain = counts.link_quality;
  // Disbelief is taken as the remainder so the triple sums to one exactly.
  const double b = certain * (counts.positive / total);
  return {b, certain - b, u};
}

double reputation_score(const Opinion& op, double uncertainty_effect) {
  return op.belief + uncertainty_effect * op.uncertainty;
}

EvidenceCounts weighted_counts(std::span<const TimedOutcome> events, double now, const ReputationWeights& w) {
  double recent_pos = 0, recent_neg = 0, past_pos = 0, past_neg = 0;
  for (const auto& ev : events) {
    if (ev.timestamp > now) throw std::invalid_argument("interaction timestamp lies after the evaluation time");
    const double age = now - ev.timestamp;
    if (age > w.window_s) continue;
    const bool recent = age <= w.recent_horizon_s;
    if (ev.outcome == Outcome::positive)
      (recent ? recent_pos : past_pos) += 1.0;
    else
      (recent ? recent_neg : past_neg) += 1.0;
  }
  EvidenceCounts out;
  out.positive = w.recent_weight * w.positive_weight * recent_pos + w.past_weight * w.positive_weight * past_pos;
  out.negative = w.recent_weight * w.negative_weight * recent_neg + w.past_weight * w.negative_weight * past_neg;
  return out;
}

double interaction_frequency(const EvidenceCounts& target, std::span<const EvidenceCounts> peer_counts) {
  if (peer_counts.empty()) throw std::domain_error("interaction frequency needs at least one peer");
  double sum = 0.0;
  for (const auto& c : peer_counts) sum += c.total();
  const double mean = sum / static_cast<double>(peer_counts.size());
  if (mean <= 0.0) throw std::domain_error("rater has no interactions in the window");
  return target.total() / mean;
}

double recommendation_weight(const EvidenceCounts& target, std::span<const EvidenceCounts> peer_counts,
                             double scale) {
  double sum = 0.0;
  for (const auto& c : peer_counts) sum += c.total();
  if (peer_counts.empty() || sum <= 0.0) return 0.0;
  return scale * interaction_frequency(target, peer_counts);
}

Opinion aggregate_recommendations(std::span<const Recommendation> recs) {
  if (recs.empty()) throw std::invalid_argument("no recommendations to aggregate");
  double total = 0.0, b = 0.0, d = 0.0, u = 0.0;
  for (const auto& r : recs) {
    if (!(r.weight >= 0.0)) throw std::invalid_argument("recommendation weight must be nonnegative");
    total += r.weight;
    b += r.weight * r.opinion.belief;
    d += r.weight * r.opinion.disbelief;
    u += r.weight * r.opinion.uncertainty;
  }
  if (total <= 0.0) throw std::invalid_argument("all recommendation weights are zero");
  return {b / total, d / total, u / total};
}

Opinion fuse(const Opinion& local, const Opinion& rec) {
  const double ul = local.uncertainty;
  const double ur = rec.uncertainty;
  const double denom = ul + ur - ur * ul;
  if (denom <= 0.0) throw DogmaticFusionError();
  // Closed forms of the general expression at its boundary cases, taken
  // verbatim so the identities hold bit-for-bit rather than to rounding.
  if (ul == 0.0 || ur == 1.0) return local;
  if (ur == 0.0 || ul == 1.0) return rec;
  return {(local.belief * ur + rec.belief * ul) / denom, (local.disbelief * ur + rec.disbelief * ul) / denom,
          (ur * ul) / denom};
}

FusionOutcome fuse_or_local(const Opinion& local, const Opinion& rec) {
  if (local.uncertainty + rec.uncertainty - rec.uncertainty * local.uncertainty <= 0.0) return {local, true};
  return {fuse(local, rec), false};
}

FusionOutcome final_opinion(const Opinion& local, std::span<const Recommendation> recs) {
  double total = 0.0;
  for (const auto& r : recs) total += r.weight;
  if (recs.empty() || total <= 0.0) return {local, false};
  return fuse_or_local(local, aggregate_recommendations(recs));
}

double tsl_reputation(const Opinion& avg, const Opinion& latest, const TslParams& p) {
  const double k = p.blend;
  return (1.0 - k) * (avg.belief + 0.5 * avg.uncertainty) + k * (latest.belief + 0.5 * latest.uncertainty);
}

}  // namespace rdpos
