#pragma once

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "refl/dists.hpp"
#include "refl/matrix.hpp"
#include "refl/scores.hpp"
#include "refl/tilt.hpp"

namespace refl {

struct SolverDiagnostics {
    int iterations = 0;
    int derivative_evals = 0;
    bool converged = true;
    bool degenerate_hit = false;   // some evaluation reached the KL cap
    bool quantile_crossing = false; // (VaR, ES) result with z1 > z2
};

// Minimiser of the worst-case expected score.
struct RefResult {
    std::vector<double> z_star;        // scalar, (z1, z2), or coefficients
    double eta_star = 0.0;
    double value = 0.0;                // worst-case expected score at z_star
    std::vector<double> baseline_value; // classical (eps = 0) solution
    SolverDiagnostics diagnostics;
};

struct RegressionFit {
    std::vector<double> beta;
    double epsilon = 0.0;
    double mse = 0.0; // in-sample, under the baseline measure
    double eta_star = 0.0;
    SolverDiagnostics diagnostics;
};

// Derivative of the worst-case value J at z: the tilted expectation of
// dS/dz under the worst-case measure at z.
double j_derivative(const ScoreFamily& family,
                    const EmpiricalDistribution& dist, double z,
                    double epsilon);

/**
 * One-dimensional robust functional: minimises J(z) by bisection on the sign
 * of its derivative, which crosses zero exactly once. The default bracket is
 * the atom range, expanded until the derivative changes sign across it and
 * clipped to the action domain. Set-valued minimisers (flat quantile
 * intervals) resolve to the infimum of the argmin interval.
 */
RefResult ref_1d(const ScoreFamily& family, const EmpiricalDistribution& dist,
                 double epsilon,
                 std::optional<std::pair<double, double>> bracket = {});

/**
 * Two-dimensional robust (VaR, ES): Nelder-Mead descent on J(z1, z2) started
 * from the empirical (VaR, ES) pair (or the given init), with random
 * restarts around the start. A single tilt solution at the optimum serves
 * both coordinates. A crossing z1 > z2 is reported through the diagnostics,
 * not raised.
 */
RefResult ref_kd(const ScoreFamily& family, const EmpiricalDistribution& dist,
                 double epsilon,
                 std::optional<std::array<double, 2>> init = {});

/**
 * Robust regression coefficients: minimises the worst-case expected score of
 * beta^T x_i against y_i by gradient descent with backtracking line search,
 * warm-started at the eps = 0 fit (the normal-equations solution for the
 * squared-error family). The reported mse is computed under the baseline
 * measure. Non-convergence within the iteration cap is flagged, not raised.
 */
RegressionFit robust_regression(const ScoreFamily& family, const Matrix& X,
                                std::span<const double> y, double epsilon,
                                std::optional<std::span<const double>> init = {});

// Least-squares coefficients via the normal equations; throws RankDeficient.
std::vector<double> least_squares(const Matrix& X, std::span<const double> y);

} // namespace refl
