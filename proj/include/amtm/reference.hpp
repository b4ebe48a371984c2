#pragma once

#include <span>
#include <vector>

#include "amtm/link_dynamics.hpp"
#include "amtm/topology.hpp"

namespace amtm::reference {

// Serial reference implementations written directly from the definitional
// formulas (dense incidence scans over Path objects, no CSR structures, no
// threading). They double as independent oracles for the optimized kernels
// and as the baseline side of the kernel benchmark.

void step_deep(const PathSet& ps, std::span<const double> capacity,
               LinkDynamicsState& st, double dt_s, double b_max_mbit);

void propagate_shallow(const PathSet& ps, std::span<const double> capacity,
                       LinkDynamicsState& st, int max_sweeps = 1000,
                       double tol_mbps = 1e-9);

std::vector<double> queueing_estimates(const PathSet& ps,
                                       std::span<const double> capacity,
                                       const LinkDynamicsState& st);

/// Price deltas of the shallow strategy, mu * (sum overload - idle), via the
/// literal prefix-sum-of-drops definition of the overload rate.
std::vector<double> nipu_shallow_delta(const StateReport& report, const PathSet& ps,
                                       double mu);

/// Backlog burden of the deep strategy, sum_p sum_s sum_{k<=s} Phi_pe^s R_p^k,
/// as a literal triple sum with dense incidence tests.
std::vector<double> deep_backlog_term(const StateReport& report, const PathSet& ps);

}  // namespace amtm::reference
