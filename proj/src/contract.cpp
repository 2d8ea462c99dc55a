#include "rdpos/contract.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace rdpos {

namespace {

void require(bool cond, const char* what) {
  if (!cond) throw std::invalid_argument(what);
}

void require_size(const VerifierTypeProfile& profile, std::size_t n, const char* what) {
  if (profile.size() != n) throw std::invalid_argument(what);
}

// Per-type constants of the benefit term, shared by the solver paths.
struct TypeTerms {
  double weight;  // M p_q
  double scale;   // e1 (theta_q M p_q)^z1
  double kink;    // inverse latency below which the metric is zero
};

std::vector<TypeTerms> type_terms(const VerifierTypeProfile& profile, const ContractParams& params) {
  std::vector<TypeTerms> out;
  for (std::size_t q = 0; q < profile.size(); ++q) {
    const double mp = params.verifier_count * profile.priors[q];
    const double a = metric_cutoff_latency(profile.types[q], profile.priors[q], params.verifier_count, params);
    out.push_back({mp, params.scale_coeff * std::pow(profile.types[q] * mp, params.scale_exp),
                   a > 0 ? 1.0 / a : std::numeric_limits<double>::infinity()});
  }
  return out;
}

// Lagrangian of a run of types [first, last) sharing one inverse latency x.
class RunObjective {
 public:
  RunObjective(const std::vector<TypeTerms>& terms, std::span<const double> f, const ContractParams& params,
               double multiplier, std::size_t first, std::size_t last)
      : terms_(terms), params_(params), first_(first), last_(last) {
    double F = 0;
    for (std::size_t q = first; q < last; ++q) F += f[q];
    cost_ = (params.reward_weight + multiplier) * params.verifier_count * F;
  }

  double value(double x) const {
    double benefit = 0;
    const double penalty = params_.latency_coeff * std::pow(x * params_.max_latency, -params_.latency_exp);
    for (std::size_t q = first_; q < last_; ++q)
      benefit += terms_[q].weight * params_.gain * std::max(0.0, terms_[q].scale - penalty);
    return benefit - cost_ * x;
  }

  // The objective is smooth between kinks; on each piece the maximizer is
  // the clamped stationary point of the active types.
  double argmax(double floor) const {
    std::vector<double> cuts{floor};
    for (std::size_t q = first_; q < last_; ++q)
      if (terms_[q].kink > floor && std::isfinite(terms_[q].kink)) cuts.push_back(terms_[q].kink);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    double best_x = floor, best_v = value(floor);
    const auto consider = [&](double x) {
      const double v = value(x);
      if (v > best_v) best_x = x, best_v = v;
    };
    for (std::size_t i = 0; i < cuts.size(); ++i) {
      const double lo = cuts[i];
      const double hi = i + 1 < cuts.size() ? cuts[i + 1] : std::numeric_limits<double>::infinity();
      double active = 0;
      for (std::size_t q = first_; q < last_; ++q)
        if (terms_[q].kink <= lo) active += terms_[q].weight;
      consider(lo);
      if (active <= 0) continue;
      if (cost_ <= 0) {
        if (std::isfinite(hi)) consider(hi);
        continue;
      }
      const double z2 = params_.latency_exp;
      const double x = std::pow(params_.gain * params_.latency_coeff * z2 * active /
                                    (std::pow(params_.max_latency, z2) * cost_),
                                1.0 / (z2 + 1.0));
      consider(std::clamp(x, lo, hi));
    }
    return best_x;
  }

 private:
  const std::vector<TypeTerms>& terms_;
  const ContractParams& params_;
  std::size_t first_, last_;
  double cost_{0};
};

struct Allocation {
  std::vector<double> x;
  std::size_t pooled_runs{0};
};

Allocation allocate(const std::vector<TypeTerms>& terms, std::span<const double> f, const ContractParams& params,
                    double multiplier, bool ironing) {
  const double floor = 1.0 / params.max_latency;
  const std::size_t Q = terms.size();
  struct Run {
    std::size_t first, last;
    double x;
  };
  std::vector<Run> runs;
  for (std::size_t q = 0; q < Q; ++q) {
    runs.push_back({q, q + 1, RunObjective(terms, f, params, multiplier, q, q + 1).argmax(floor)});
    while (ironing && runs.size() >= 2 && runs[runs.size() - 2].x > runs.back().x) {
      const Run top = runs.back();
      runs.pop_back();
      Run& prev = runs.back();
      prev.last = top.last;
      prev.x = RunObjective(terms, f, params, multiplier, prev.first, prev.last).argmax(floor);
    }
  }
  Allocation out;
  out.x.resize(Q);
  for (const auto& r : runs) {
    if (r.last - r.first > 1) ++out.pooled_runs;
    for (std::size_t q = r.first; q < r.last; ++q) out.x[q] = r.x;
  }
  return out;
}

double spend(std::span<const double> x, std::span<const double> f, double verifier_count) {
  double s = 0;
  for (std::size_t q = 0; q < x.size(); ++q) s += f[q] * x[q];
  return verifier_count * s;
}

struct Solution {
  std::vector<double> x;
  double multiplier{0};
  std::size_t pooled_runs{0};
};

Solution solve_core(const VerifierTypeProfile& profile, const ContractParams& params, std::span<const double> f,
                    bool ironing, BudgetMethod method) {
  const auto terms = type_terms(profile, params);
  const double floor = 1.0 / params.max_latency;
  const std::vector<double> floors(profile.size(), floor);
  if (spend(floors, f, params.verifier_count) > params.budget)
    throw ContractInfeasible("budget cannot cover the maximum tolerable latency for every type");

  auto base = allocate(terms, f, params, 0.0, ironing);
  if (spend(base.x, f, params.verifier_count) <= params.budget) return {base.x, 0.0, base.pooled_runs};

  if (method == BudgetMethod::uniform_scale) {
    const auto scaled = [&](double c) {
      std::vector<double> x(base.x.size());
      for (std::size_t q = 0; q < x.size(); ++q) x[q] = std::max(floor, c * base.x[q]);
      return x;
    };
    double lo = 0, hi = 1;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (spend(scaled(mid), f, params.verifier_count) <= params.budget ? lo : hi) = mid;
    }
    return {scaled(lo), 0.0, base.pooled_runs};
  }

  double lo = 0, hi = params.reward_weight > 0 ? params.reward_weight : 1.0;
  while (spend(allocate(terms, f, params, hi, ironing).x, f, params.verifier_count) > params.budget) {
    lo = hi;
    hi *= 2;
    if (hi > 1e300) throw ContractInfeasible("budget multiplier search diverged");
  }
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (spend(allocate(terms, f, params, mid, ironing).x, f, params.verifier_count) <= params.budget ? hi : lo) = mid;
  }
  auto sol = allocate(terms, f, params, hi, ironing);
  return {sol.x, hi, sol.pooled_runs};
}

ContractMenu to_menu(const std::vector<double>& x, const std::vector<double>& rewards,
                     const VerifierTypeProfile& profile, const ContractParams& params) {
  ContractMenu menu;
  for (std::size_t q = 0; q < x.size(); ++q) menu.items.push_back({rewards[q], x[q]});
  menu.profit = manager_profit(menu.items, profile, params);
  return menu;
}

}  // namespace

VerifierTypeProfile VerifierTypeProfile::uniform(std::size_t q) {
  require(q >= 1, "at least one verifier type is required");
  VerifierTypeProfile p;
  for (std::size_t i = 1; i <= q; ++i) {
    p.types.push_back(static_cast<double>(i));
    p.priors.push_back(1.0 / static_cast<double>(q));
  }
  return p;
}

void VerifierTypeProfile::validate() const {
  require(!types.empty(), "at least one verifier type is required");
  require(types.size() == priors.size(), "types and priors differ in length");
  double sum = 0;
  for (std::size_t q = 0; q < types.size(); ++q) {
    require(types[q] > 0, "verifier types must be positive");
    require(q == 0 || types[q] > types[q - 1], "verifier types must be strictly ascending");
    require(priors[q] >= 0, "type priors must be nonnegative");
    sum += priors[q];
  }
  require(std::abs(sum - 1.0) <= 1e-12 * static_cast<double>(types.size()), "type priors must sum to one");
}

void ContractParams::validate() const {
  require(gain > 0 && scale_coeff > 0 && latency_coeff > 0, "gain and metric coefficients must be positive");
  require(scale_exp >= 1 && latency_exp >= 1, "metric exponents must be at least 1");
  require(reward_weight > 0 && unit_cost > 0, "reward weight and unit cost must be positive");
  require(max_latency > 0 && budget > 0, "maximum latency and budget must be positive");
  require(verifier_count > 0, "verifier count must be positive");
}

void VerificationTask::validate() const {
  require(cpu_cycles > 0 && input_size > 0 && output_size > 0, "task sizes must be positive");
  require(broadcast_coeff >= 0, "broadcast coefficient must be nonnegative");
}

double link_rate(std::size_t m, const RadioParams& radio, std::span<const std::size_t> active_set) {
  require(std::find(active_set.begin(), active_set.end(), m) != active_set.end(), "verifier is not in the active set");
  require(m < radio.tx_power.size() && m < radio.channel_gain.size(), "verifier index outside radio parameters");
  const auto received = [&](std::size_t i) { return radio.tx_power.at(i) * radio.channel_gain.at(i) * radio.channel_gain.at(i); };
  double interference = 0;
  for (auto i : active_set)
    if (i != m) interference += received(i);
  return radio.bandwidth * std::log2(1.0 + received(m) / (interference + radio.noise_density * radio.bandwidth));
}

double verification_latency(const VerificationTask& task, double compute_rate, double rate_down, double rate_up,
                            double verifier_count) {
  task.validate();
  require(compute_rate > 0 && rate_down > 0 && rate_up > 0 && verifier_count > 0,
          "rates and verifier count must be positive");
  return task.input_size / rate_down + task.cpu_cycles / compute_rate +
         task.broadcast_coeff * task.input_size * verifier_count + task.output_size / rate_up;
}

double metric_cutoff_latency(double theta, double prior, double verifier_count, const ContractParams& params) {
  const double inv_z2 = 1.0 / params.latency_exp;
  return params.max_latency * std::pow(params.scale_coeff, inv_z2) *
         std::pow(theta * verifier_count * prior, params.scale_exp * inv_z2) / std::pow(params.latency_coeff, inv_z2);
}

double security_latency_metric(double theta, double prior, double verifier_count, double latency,
                               const ContractParams& params) {
  const double cutoff = metric_cutoff_latency(theta, prior, verifier_count, params);
  if (!(latency > 0 && latency < cutoff)) return 0.0;
  return params.scale_coeff * std::pow(theta * verifier_count * prior, params.scale_exp) -
         params.latency_coeff * std::pow(latency / params.max_latency, params.latency_exp);
}

double verifier_utility(double theta, const ContractItem& item, double unit_cost) {
  return theta * item.reward - unit_cost * item.inv_latency;
}

double verifier_utility(double theta, const ContractItem& item, double unit_cost, const Valuation& eta) {
  return theta * eta(item.reward) - unit_cost * item.inv_latency;
}

double manager_profit(std::span<const ContractItem> menu, const VerifierTypeProfile& profile,
                      const ContractParams& params) {
  require_size(profile, menu.size(), "menu length must match the number of types");
  double total = 0;
  for (std::size_t q = 0; q < menu.size(); ++q) {
    const double mp = params.verifier_count * profile.priors[q];
    const double phi = security_latency_metric(profile.types[q], profile.priors[q], params.verifier_count,
                                               1.0 / menu[q].inv_latency, params);
    total += mp * (params.gain * phi - params.reward_weight * menu[q].reward);
  }
  return total;
}

std::vector<double> reward_schedule(std::span<const double> inv_latencies, const VerifierTypeProfile& profile,
                                    double unit_cost) {
  require_size(profile, inv_latencies.size(), "inverse latencies must match the number of types");
  std::vector<double> r(inv_latencies.size());
  for (std::size_t q = 0; q < r.size(); ++q) {
    r[q] = q == 0 ? unit_cost * inv_latencies[0] / profile.types[0]
                  : r[q - 1] + unit_cost * (inv_latencies[q] - inv_latencies[q - 1]) / profile.types[q];
  }
  return r;
}

std::vector<double> f_coefficients(const VerifierTypeProfile& profile, double unit_cost) {
  const std::size_t Q = profile.size();
  std::vector<double> f(Q);
  double tail = 0;
  for (std::size_t i = Q; i-- > 0;) {
    f[i] = unit_cost * profile.priors[i] / profile.types[i];
    if (i + 1 < Q) f[i] += (unit_cost / profile.types[i] - unit_cost / profile.types[i + 1]) * tail;
    tail += profile.priors[i];
  }
  return f;
}

ContractMenu solve_optimal_contract(const VerifierTypeProfile& profile, const ContractParams& params,
                                    const SolverOptions& options) {
  profile.validate();
  params.validate();
  const auto f = f_coefficients(profile, params.unit_cost);
  const auto sol = solve_core(profile, params, f, options.ironing, options.budget_method);
  auto menu = to_menu(sol.x, reward_schedule(sol.x, profile, params.unit_cost), profile, params);
  menu.budget_multiplier = sol.multiplier;
  menu.pooled_runs = sol.pooled_runs;
  return menu;
}

ContractMenu stackelberg_symmetric(const VerifierTypeProfile& profile, const ContractParams& params) {
  profile.validate();
  params.validate();
  std::vector<double> f(profile.size());
  for (std::size_t q = 0; q < f.size(); ++q) f[q] = params.unit_cost * profile.priors[q] / profile.types[q];
  const auto sol = solve_core(profile, params, f, false, BudgetMethod::bisection);
  std::vector<double> rewards(f.size());
  for (std::size_t q = 0; q < f.size(); ++q) rewards[q] = params.unit_cost * sol.x[q] / profile.types[q];
  auto menu = to_menu(sol.x, rewards, profile, params);
  menu.budget_multiplier = sol.multiplier;
  return menu;
}

ContractMenu brute_force_contract(const VerifierTypeProfile& profile, const ContractParams& params,
                                  std::size_t grid_resolution) {
  profile.validate();
  params.validate();
  const std::size_t Q = profile.size();
  require(Q <= 6, "brute force search is limited to six types");
  require(grid_resolution >= 2, "grid needs at least two points");

  // Past its stationary point or its solo budget share, no type gains from
  // more inverse latency, so the grid stops at the largest such bound.
  const double floor = 1.0 / params.max_latency;
  const auto f = f_coefficients(profile, params.unit_cost);
  const double z2 = params.latency_exp;
  double top = floor;
  for (std::size_t q = 0; q < Q; ++q) {
    if (f[q] <= 0) continue;
    const double stationary = std::pow(params.gain * params.latency_coeff * z2 * profile.priors[q] /
                                           (std::pow(params.max_latency, z2) * params.reward_weight * f[q]),
                                       1.0 / (z2 + 1.0));
    top = std::max(top, std::min(stationary, params.budget / (params.verifier_count * f[q])));
  }
  top *= 1.05;
  std::vector<double> grid(grid_resolution);
  for (std::size_t i = 0; i < grid_resolution; ++i)
    grid[i] = floor * std::pow(top / floor, static_cast<double>(i) / static_cast<double>(grid_resolution - 1));

  std::vector<std::vector<double>> phi(Q, std::vector<double>(grid_resolution));
  for (std::size_t q = 0; q < Q; ++q)
    for (std::size_t i = 0; i < grid_resolution; ++i)
      phi[q][i] = security_latency_metric(profile.types[q], profile.priors[q], params.verifier_count, 1.0 / grid[i],
                                          params);

  std::vector<std::size_t> idx(Q), best_idx;
  double best = -std::numeric_limits<double>::infinity();
  const auto search = [&](auto&& self, std::size_t q, std::size_t from, double prev_reward, double paid,
                          double profit) -> void {
    if (q == Q) {
      if (profit > best) best = profit, best_idx = idx;
      return;
    }
    const double mp = params.verifier_count * profile.priors[q];
    for (std::size_t i = from; i < grid_resolution; ++i) {
      const double reward = q == 0 ? params.unit_cost * grid[i] / profile.types[0]
                                   : prev_reward + params.unit_cost * (grid[i] - grid[idx[q - 1]]) / profile.types[q];
      const double now_paid = paid + mp * reward;
      if (now_paid > params.budget * (1 + 1e-12)) break;  // rewards only grow along the grid
      idx[q] = i;
      self(self, q + 1, i, reward, now_paid,
           profit + mp * (params.gain * phi[q][i] - params.reward_weight * reward));
    }
  };
  search(search, 0, 0, 0.0, 0.0, 0.0);
  if (best_idx.empty()) throw ContractInfeasible("no grid point satisfies the budget");

  std::vector<double> x(Q);
  for (std::size_t q = 0; q < Q; ++q) x[q] = grid[best_idx[q]];
  return to_menu(x, reward_schedule(x, profile, params.unit_cost), profile, params);
}

MenuReport check_menu(std::span<const ContractItem> menu, const VerifierTypeProfile& profile, double unit_cost) {
  require_size(profile, menu.size(), "menu length must match the number of types");
  const std::size_t Q = menu.size();
  MenuReport rep;
  rep.utility.assign(Q, std::vector<double>(Q));
  for (std::size_t i = 0; i < Q; ++i)
    for (std::size_t j = 0; j < Q; ++j) rep.utility[i][j] = verifier_utility(profile.types[i], menu[j], unit_cost);

  rep.ir_min_slack = std::numeric_limits<double>::infinity();
  rep.ic_min_slack = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < Q; ++i) {
    rep.ir_min_slack = std::min(rep.ir_min_slack, rep.utility[i][i]);
    for (std::size_t j = 0; j < Q; ++j) {
      if (i == j) continue;
      rep.ic_min_slack = std::min(rep.ic_min_slack, rep.utility[i][i] - rep.utility[i][j]);
      if (rep.utility[i][j] > rep.utility[i][i] + 1e-9) rep.diagonal_row_max = false;
    }
    if (i > 0) {
      rep.reward_monotonicity_violation =
          std::max(rep.reward_monotonicity_violation, menu[i - 1].reward - menu[i].reward);
      rep.latency_monotonicity_violation =
          std::max(rep.latency_monotonicity_violation, menu[i - 1].inv_latency - menu[i].inv_latency);
    }
  }
  if (Q == 1) rep.ic_min_slack = 0;
  rep.type1_ir_gap = Q > 0 ? std::abs(rep.utility[0][0]) : 0;
  return rep;
}

}  // namespace rdpos
