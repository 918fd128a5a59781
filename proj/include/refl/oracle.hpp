#pragma once

#include <optional>
#include <span>
#include <vector>

#include "refl/scores.hpp"
#include "refl/tilt.hpp"

namespace refl {
namespace oracle {

// Result of a brute-force verification run. Slow by design; these routines
// certify the fast paths and must stay independent of their closed forms.
struct OracleReport {
    double value = 0.0;
    std::vector<double> argmax_weights; // simplex search only
    std::optional<double> argmin_z;     // grid search only
    double grid_resolution = 0.0;
    long long runtime_ms = 0;
};

/**
 * Direct maximisation of sum_i q_i s_i over probability vectors q with
 * KL(q || w) <= eps, by projected gradient ascent from many random interior
 * starts followed by pairwise mass-transfer polishing. Restricted to n <= 8
 * atoms. The KL-ball pullback bisects a temperature parameter along the
 * mixed path between the iterate and the baseline weights.
 */
OracleReport simplex_worst_case(std::span<const double> score_values,
                                std::span<const double> weights,
                                double epsilon);

// Exhaustive scan of J(z) over the given grid; certifies the continuous
// one-dimensional solver to within one grid step. Requires >= 100 points.
OracleReport grid_ref(const ScoreFamily& family,
                      const EmpiricalDistribution& dist, double epsilon,
                      std::span<const double> z_grid);

// Expectile by bisection on its identification equation, solved to 1e-12.
double brute_expectile(std::span<const double> atoms,
                       std::span<const double> weights, double tau);

} // namespace oracle
} // namespace refl
