#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "refl/errors.hpp"
#include "refl/matrix.hpp"

namespace refl {

// ----------------------------------------------------------------------------
// Generative model specifications
// ----------------------------------------------------------------------------

// Exponential(rate) right-truncated at its trunc_q quantile. Sampling and
// quantiles use the inverse transform F^{-1}(u) = -log(1 - u q) / rate.
struct TExpSpec {
    double rate = 1.0;
    double trunc_q = 0.95;
};

struct BetaSpec {
    double a = 2.0;
    double b = 2.0;
};

struct LogNormalSpec {
    double mu = 0.0;
    double sigma = 1.0;
};

// Type-I Pareto moment-matched to a target mean and standard deviation:
// shape = 1 + sqrt(1 + (mean/std)^2), scale = mean (shape - 1) / shape.
struct ParetoMMSpec {
    double mean = 1.0;
    double stdev = 1.0;
};

using DistributionSpec =
    std::variant<TExpSpec, BetaSpec, LogNormalSpec, ParetoMMSpec>;

// Archimedean Gumbel copula, sampled through the positive-stable mixture.
struct GumbelCopulaSpec {
    double theta = 1.0;
    int dim = 2;
};

// Student-t copula: correlated multivariate t, then componentwise t cdf.
struct StudentTCopulaSpec {
    Matrix corr; // symmetric positive definite with unit diagonal
    int df = 4;
};

using CopulaSpec = std::variant<GumbelCopulaSpec, StudentTCopulaSpec>;

// One excess-of-loss layer: pays min{(x - deductible)_+, limit}.
struct LayerSpec {
    double deductible = 0.0;
    double limit = 1.0;
};

// ----------------------------------------------------------------------------
// Sampling
// ----------------------------------------------------------------------------

void validate(const DistributionSpec& spec);
void validate(const CopulaSpec& spec);

double quantile(const DistributionSpec& spec, double u);

// n draws; identical seeds give identical output.
std::vector<double> sample(const DistributionSpec& spec, std::size_t n,
                           std::uint64_t seed);

// n rows of copula uniforms, one column per component.
Matrix sample(const CopulaSpec& spec, std::size_t n, std::uint64_t seed);

// Inverse-transform marginals applied columnwise to copula uniforms.
Matrix apply_marginals(const Matrix& uniforms,
                       std::span<const DistributionSpec> marginals);

// ----------------------------------------------------------------------------
// Empirical functionals of a weighted sample
// ----------------------------------------------------------------------------

struct Functional {
    enum class Kind { Mean, VaR, ES, Expectile } kind = Kind::Mean;
    double level = 0.5; // alpha for VaR/ES, tau for Expectile
};

double empirical_mean(std::span<const double> atoms,
                      std::span<const double> weights);

// Lower (infimum-convention) weighted quantile.
double empirical_value_at_risk(double alpha, std::span<const double> atoms,
                               std::span<const double> weights);

// Tail average above the alpha-quantile with the boundary atom split
// fractionally, so the averaged mass is exactly 1 - alpha.
double empirical_expected_shortfall(double alpha,
                                    std::span<const double> atoms,
                                    std::span<const double> weights);

// Root of tau E[(Y-e)_+] = (1-tau) E[(e-Y)_+], by bisection.
double empirical_expectile(double tau, std::span<const double> atoms,
                           std::span<const double> weights,
                           double tol = 1e-10);

double empirical_functional(const Functional& f,
                            std::span<const double> atoms,
                            std::span<const double> weights);

// Kendall rank correlation of two columns (O(n^2); intended for tests and
// moderate n).
double kendall_tau(std::span<const double> x, std::span<const double> y);

// ----------------------------------------------------------------------------
// Reinsurance experiment building blocks
// ----------------------------------------------------------------------------

// Total layered loss per row: Y_i = sum_k min{(X_ik - d_k)_+, l_k}.
std::vector<double> reinsurance_losses(const Matrix& X,
                                       const std::array<LayerSpec, 3>& layers);

// Layer rule from empirical marginal quantiles of the simulated factors:
// lines 1 and 2 attach at the 60% and cap at the 80% quantile; line 3 at the
// 85% and 95% quantiles.
std::array<LayerSpec, 3> layers_from_quantiles(const Matrix& X);

// Built-in risk-factor model: two log-normal lines and one moment-matched
// Pareto line, coupled by a t copula with 4 degrees of freedom.
std::array<DistributionSpec, 3> reinsurance_marginals();
StudentTCopulaSpec reinsurance_copula();
Matrix sample_reinsurance_factors(std::size_t n, std::uint64_t seed);

namespace detail {
// Standard-normal quantile (Acklam rational approximation with one Newton
// polish step), and the regularised incomplete beta used by the t cdf.
double inv_norm_cdf(double u);
double reg_inc_beta(double a, double b, double x);
double student_t_cdf(double t, double df);
} // namespace detail

} // namespace refl
