#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "amtm/pricing.hpp"
#include "amtm/topology.hpp"
#include "amtm/traffic.hpp"

namespace amtm {

struct SolveOptions {
  double tol_rel = 1e-4;  // dual gap below tol_rel * |U|
  int max_iters = 20000;
  double initial_step = 1.0;  // on capacity-normalized gradient
  double lambda_tol = 0.0;    // > 0: additionally polish until the iterate settles
  bool restrict_to_chosen = false;
  double price_ceiling = 1e6;
  bool parallel = true;
  std::vector<double> warm_lambda;
};

struct NumSolution {
  std::vector<double> lambda;  // per link, iterate at the best dual value
  // Per flow: candidate path ids and recovered feasible rates, aligned.
  std::vector<std::vector<int>> paths;
  std::vector<std::vector<double>> rates;
  std::vector<double> flow_rate;  // x_j
  double utility = 0.0;           // primal at the recovered feasible point
  double dual = 0.0;              // best dual value seen
  double gap = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<std::uint8_t> capacity_exhausted;  // per link (backlog variant)
};

/// Projected dual-(sub)gradient solve of the utility maximization over the
/// candidate paths, with ergodic primal averaging and feasibility scaling for
/// the recovered allocation. Reports the best iterate when the gap target is
/// not met within the budget.
NumSolution solve_num(const std::vector<Flow>& flows, const PathSet& ps,
                      std::span<const double> capacity,
                      const SolveOptions& opt = {});

/// Same with each capacity reduced by the backlog burden
/// n * sum_(p,s at e) sum_(k<=s) R_p^k, floored at zero; fully consumed links
/// are flagged and pinned at the price ceiling. Yields the iteration target.
NumSolution solve_num_with_backlog(const std::vector<Flow>& flows, const PathSet& ps,
                                   std::span<const double> capacity,
                                   std::span<const double> backlog_mbit,
                                   double n_gain, const SolveOptions& opt = {});

/// Periodic centralized baseline: per-flow optimal allocation at the period
/// boundary, two control messages per flow (collect + configure). Rates and
/// routing of the passed flows are replaced by the solution.
struct CentralizedOutcome {
  NumSolution solution;
  long messages = 0;
};
CentralizedOutcome centralized_period(std::vector<Flow>& flows, const PathSet& ps,
                                      std::span<const double> capacity,
                                      const SolveOptions& opt = {});

/// Periodic semi-centralized baseline: budgets per (node pair, class) from the
/// previous period's demand estimates. Delay-sensitive classes are pinned to
/// the shortest candidate path; elastic demand is spread over candidate paths
/// proportionally to residual capacity. Classes are served in descending
/// weight order. Two control messages per reporting group.
struct PathBudget {
  int path_id = -1;
  double budget_mbps = 0.0;
};
struct SemiAllocation {
  // Indexed by pair * nclasses + cls.
  std::vector<std::vector<PathBudget>> budgets;
  int groups_reporting = 0;
  long messages = 0;
};
SemiAllocation semi_centralized_period(std::span<const double> demand_mbps,
                                       const PathSet& ps,
                                       std::span<const double> capacity,
                                       const std::vector<TrafficClass>& classes);

}  // namespace amtm
