#pragma once
// Straight transcriptions of the incentive formulas for cross-checking the
// library. The default constants match the library defaults.

#include <cmath>
#include <vector>

namespace oracle {

struct Table {
  double g1 = 1.2, e1 = 15, e2 = 10, z1 = 2, z2 = 1, l = 5, lp = 1, T = 300, Rmax = 1000, M = 10;
};

inline double phi(double theta, double p, double L, const Table& t) {
  const double A = t.T * std::pow(t.e1, 1 / t.z2) * std::pow(theta * t.M * p, t.z1 / t.z2) / std::pow(t.e2, 1 / t.z2);
  if (L > 0 && L < A) return t.e1 * std::pow(theta * t.M * p, t.z1) - t.e2 * std::pow(L / t.T, t.z2);
  return 0;
}

// Rewards by summing the increments explicitly.
inline std::vector<double> rewards(const std::vector<double>& x, const std::vector<double>& theta, double lp) {
  std::vector<double> R;
  for (std::size_t q = 0; q < x.size(); ++q) {
    double r = lp * x[0] / theta[0];
    for (std::size_t k = 1; k <= q; ++k) r += lp * x[k] / theta[k] - lp * x[k - 1] / theta[k];
    R.push_back(r);
  }
  return R;
}

inline std::vector<double> f(const std::vector<double>& theta, const std::vector<double>& p, double lp) {
  const std::size_t Q = theta.size();
  std::vector<double> out;
  for (std::size_t q = 0; q < Q; ++q) {
    if (q + 1 == Q) {
      out.push_back(lp * p[q] / theta[q]);
      continue;
    }
    double tail = 0;
    for (std::size_t i = q + 1; i < Q; ++i) tail += p[i];
    out.push_back(lp * p[q] / theta[q] + (lp / theta[q] - lp / theta[q + 1]) * tail);
  }
  return out;
}

inline double profit(const std::vector<double>& R, const std::vector<double>& x, const std::vector<double>& theta,
                     const std::vector<double>& p, const Table& t) {
  double u = 0;
  for (std::size_t q = 0; q < R.size(); ++q) u += t.M * p[q] * (t.g1 * phi(theta[q], p[q], 1 / x[q], t) - t.l * R[q]);
  return u;
}

// Objective after eliminating rewards, on the smooth branch of the metric.
inline double reduced_objective(const std::vector<double>& x, const std::vector<double>& theta,
                                const std::vector<double>& p, const Table& t) {
  const auto fq = f(theta, p, t.lp);
  double u = 0;
  for (std::size_t q = 0; q < x.size(); ++q) {
    u += t.M * p[q] * (t.g1 * t.e1 * std::pow(theta[q] * t.M * p[q], t.z1) - t.g1 * t.e2 * std::pow(1 / (x[q] * t.T), t.z2));
    u -= t.M * t.l * fq[q] * x[q];
  }
  return u;
}

}  // namespace oracle
