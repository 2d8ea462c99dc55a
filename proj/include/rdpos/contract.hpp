#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

namespace rdpos {

/// Verifier types in ascending order of reputation with their prior
/// probabilities.
struct VerifierTypeProfile {
  std::vector<double> types;
  std::vector<double> priors;

  std::size_t size() const { return types.size(); }
  /// Q types theta_q = q with probability 1/Q each.
  static VerifierTypeProfile uniform(std::size_t q);
  /// Throws std::invalid_argument unless types are positive and strictly
  /// ascending and priors are nonnegative and sum to one.
  void validate() const;
};

struct ContractItem {
  double reward{0};
  double inv_latency{1};  // 1/seconds

  friend bool operator==(const ContractItem&, const ContractItem&) = default;
};

struct ContractMenu {
  std::vector<ContractItem> items;  // one per type, ascending
  double profit{0};
  double budget_multiplier{0};  // shadow price of the budget; 0 when slack
  std::size_t pooled_runs{0};   // runs of adjacent types merged to restore monotonicity
};

struct ContractParams {
  double gain{1.2};            // g1
  double scale_coeff{15.0};    // e1
  double latency_coeff{10.0};  // e2
  double scale_exp{2.0};       // z1
  double latency_exp{1.0};     // z2
  double reward_weight{5.0};   // l
  double unit_cost{1.0};       // l'
  double max_latency{300.0};   // T_max, seconds
  double budget{1000.0};       // R_max
  double verifier_count{10.0};

  void validate() const;
};

struct VerificationTask {
  double cpu_cycles{1e8};
  double input_size{8e5};   // bits
  double output_size{8e4};  // bits
  double broadcast_coeff{0.5};  // seconds per bit and verifier

  void validate() const;
};

struct RadioParams {
  double bandwidth{20e6};  // Hz
  std::vector<double> tx_power;       // watts, per verifier
  std::vector<double> channel_gain;   // amplitude, per verifier
  double noise_density{1e-20};        // W/Hz
};

class ContractInfeasible : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shannon rate of verifier m with every other member of `active_set` as
/// interference.
double link_rate(std::size_t m, const RadioParams& radio, std::span<const std::size_t> active_set);

double verification_latency(const VerificationTask& task, double compute_rate, double rate_down, double rate_up,
                            double verifier_count);

/// Zero once the latency reaches the point where the latency penalty cancels
/// the scale term, and for nonpositive latency.
double security_latency_metric(double theta, double prior, double verifier_count, double latency,
                               const ContractParams& params);

/// Latency at which the security-latency metric reaches zero.
double metric_cutoff_latency(double theta, double prior, double verifier_count, const ContractParams& params);

using Valuation = std::function<double(double)>;

double verifier_utility(double theta, const ContractItem& item, double unit_cost);
double verifier_utility(double theta, const ContractItem& item, double unit_cost, const Valuation& eta);

double manager_profit(std::span<const ContractItem> menu, const VerifierTypeProfile& profile,
                      const ContractParams& params);

/// Rewards that make type 1's participation constraint and every adjacent
/// downward incentive constraint bind.
std::vector<double> reward_schedule(std::span<const double> inv_latencies, const VerifierTypeProfile& profile,
                                    double unit_cost);

/// Per-type cost of inverse latency once rewards are eliminated:
/// sum_q M p_q R_q = M sum_q f_q / L_q.
std::vector<double> f_coefficients(const VerifierTypeProfile& profile, double unit_cost);

enum class BudgetMethod { bisection, uniform_scale };

struct SolverOptions {
  BudgetMethod budget_method{BudgetMethod::bisection};
  bool ironing{true};
};

/// Profit-maximizing screening menu. Throws ContractInfeasible when even the
/// slowest admissible latencies exceed the budget.
ContractMenu solve_optimal_contract(const VerifierTypeProfile& profile, const ContractParams& params,
                                    const SolverOptions& options = {});

/// Exhaustive search over monotone tuples on a geometric grid of inverse
/// latencies. Q is limited to 6.
ContractMenu brute_force_contract(const VerifierTypeProfile& profile, const ContractParams& params,
                                  std::size_t grid_resolution);

/// Complete-information benchmark: every type is held to zero utility.
ContractMenu stackelberg_symmetric(const VerifierTypeProfile& profile, const ContractParams& params);

struct MenuReport {
  double ir_min_slack{0};
  double type1_ir_gap{0};  // |U_1(item_1)|
  double ic_min_slack{0};
  double reward_monotonicity_violation{0};
  double latency_monotonicity_violation{0};
  bool diagonal_row_max{true};
  std::vector<std::vector<double>> utility;  // utility[i][j]: type i choosing item j

  bool ok(double tol = 1e-9) const {
    return ir_min_slack >= -tol && type1_ir_gap <= tol && ic_min_slack >= -tol &&
           reward_monotonicity_violation <= tol && latency_monotonicity_violation <= tol && diagonal_row_max;
  }
};

MenuReport check_menu(std::span<const ContractItem> menu, const VerifierTypeProfile& profile, double unit_cost);

}  // namespace rdpos
