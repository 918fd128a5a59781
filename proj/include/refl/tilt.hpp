#pragma once

#include <span>
#include <utility>
#include <vector>

#include "refl/errors.hpp"
#include "refl/scores.hpp"

namespace refl {

// Weighted sample playing the role of the baseline measure: atoms y_i with
// probabilities w_i. Weights are validated and normalised to sum to one at
// construction.
struct EmpiricalDistribution {
    std::vector<double> atoms;
    std::vector<double> weights;

    EmpiricalDistribution(std::vector<double> atoms_,
                          std::vector<double> weights_);

    // Equally weighted atoms.
    static EmpiricalDistribution uniform(std::vector<double> atoms_);

    std::size_t size() const { return atoms.size(); }
};

// Solution of the inner problem sup { E^Q[s] : KL(Q || P) <= eps } over a
// weighted sample of score values.
struct TiltSolution {
    double eta_star = 0.0;              // tilt parameter; +inf when degenerate
    std::vector<double> tilted_weights; // Q-probability of each atom
    double kl_achieved = 0.0;
    double value = 0.0;                 // worst-case expected score
    double pi_hat = 1.0;                // baseline mass on the max-score atoms
    bool degenerate = false;
    int iterations = 0;
};

/**
 * Cumulant generating function of the score sample and its eta-derivative:
 *
 *   K(eta)  = log sum_i w_i exp(eta s_i)
 *   K'(eta) = sum_i w_i s_i exp(eta s_i) / sum_i w_i exp(eta s_i)
 *
 * Exponentials are shifted by max(s) so nothing overflows for any eta >= 0.
 */
std::pair<double, double> cgf_and_prime(std::span<const double> score_values,
                                        std::span<const double> weights,
                                        double eta);

// KL divergence of the tilted measure from the baseline,
// d(eta) = eta K'(eta) - K(eta) >= 0, with d(0) = 0.
double kl_at(std::span<const double> score_values,
             std::span<const double> weights, double eta);

/**
 * Solves the inner worst-case problem for a fixed prediction.
 *
 * When eps < log(1/pi_hat) the KL constraint binds and the optimum is the
 * exponential tilt dQ/dP proportional to exp(eta* s) with eta* the unique
 * root of d(eta) = eps; the value is K'(eta*). Once eps reaches
 * log(1/pi_hat) the optimal measure concentrates on the atoms attaining the
 * maximal score and the value is that maximum; the solution is returned with
 * degenerate = true rather than as an error, so outer solvers can keep
 * minimising the maximal score.
 */
// eta_hint, when nonnegative, seeds the root search (e.g. with the solution
// at a nearby prediction); it changes the iteration count, never the result.
TiltSolution solve_tilt(std::span<const double> score_values,
                        std::span<const double> weights, double epsilon,
                        double eta_hint = -1.0);

// Scores the sample at prediction z and delegates to solve_tilt; the value
// of the returned solution is J(z).
TiltSolution worst_case_expectation(const ScoreFamily& family,
                                    const EmpiricalDistribution& dist,
                                    std::span<const double> z,
                                    double epsilon);
TiltSolution worst_case_expectation(const ScoreFamily& family,
                                    const EmpiricalDistribution& dist,
                                    double z, double epsilon);

} // namespace refl
