#pragma once
// Direct transcriptions of the trust formulas, written without reference to
// the library so the two can be compared. Plain arrays, no shared helpers.

#include <array>
#include <vector>

namespace oracle {

using Triple = std::array<double, 3>;  // b, d, u

inline Triple local_opinion(double alpha, double beta, double s) {
  if (alpha + beta == 0.0) return {0.0, 0.0, 1.0};
  const double u = 1.0 - s;
  return {(1.0 - u) * alpha / (alpha + beta), (1.0 - u) * beta / (alpha + beta), u};
}

inline double expected_belief(const Triple& w, double gamma) { return w[0] + gamma * w[2]; }

struct Event {
  double t;
  bool positive;
};

struct Weights {
  double zeta, sigma, theta, tau, t_recent, window;
};

inline std::array<double, 2> multi_weight_counts(const std::vector<Event>& events, double now, const Weights& w) {
  double a1 = 0, a2 = 0, b1 = 0, b2 = 0;
  for (const auto& e : events) {
    if (now - e.t > w.window) continue;
    if (now - e.t <= w.t_recent) {
      if (e.positive) a1 += 1; else b1 += 1;
    } else {
      if (e.positive) a2 += 1; else b2 += 1;
    }
  }
  return {w.zeta * w.theta * a1 + w.sigma * w.theta * a2, w.zeta * w.tau * b1 + w.sigma * w.tau * b2};
}

// N_{i->j} / ((1/|S|) sum_s N_{i->s})
inline double interaction_frequency(double n_target, const std::vector<double>& n_all) {
  double s = 0;
  for (double n : n_all) s += n;
  return n_target / (s / static_cast<double>(n_all.size()));
}

inline Triple recommended(const std::vector<double>& delta, const std::vector<Triple>& ops) {
  double sd = 0;
  for (double d : delta) sd += d;
  Triple out{0, 0, 0};
  for (std::size_t k = 0; k < 3; ++k) {
    double acc = 0;
    for (std::size_t x = 0; x < ops.size(); ++x) acc += delta[x] * ops[x][k];
    out[k] = acc / sd;
  }
  return out;
}

inline Triple final_opinion(const Triple& loc, const Triple& rec) {
  const double den = loc[2] + rec[2] - rec[2] * loc[2];
  return {(loc[0] * rec[2] + rec[0] * loc[2]) / den, (loc[1] * rec[2] + rec[1] * loc[2]) / den,
          (rec[2] * loc[2]) / den};
}

inline double linear_blend(const Triple& ave, const Triple& las, double kappa) {
  return (1 - kappa) * (ave[0] + 0.5 * ave[2]) + kappa * (las[0] + 0.5 * las[2]);
}

}  // namespace oracle
