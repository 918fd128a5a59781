#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "refl/dists.hpp"
#include "refl/matrix.hpp"
#include "refl/scores.hpp"
#include "refl/solver.hpp"

namespace refl {

// Experiment drivers shared by the command-line tool and the test suites.
// Every run is deterministic for a fixed seed; replicates and grid cells use
// per-cell seed streams and the output rows are emitted in a fixed order.

// --- ref: robust functional of a loss sample over a tolerance grid ---------

struct RefRunConfig {
    ScoreParams score;
    std::vector<double> eps;
    std::vector<double> losses;
    std::string invocation;
};

struct RefRow {
    double epsilon;
    std::vector<double> z_star;
    double eta_star;
    double value;
    bool degenerate_hit;
};

std::vector<RefRow> ref_rows(const RefRunConfig& cfg);
std::string run_ref(const RefRunConfig& cfg);

// --- murphy: functional against the homogeneity degree ---------------------

struct MurphyConfig {
    ScoreParams score; // kind, alpha/tau and constants; b comes from b_grid
    std::vector<double> b_grid;
    std::vector<double> eps;
    std::optional<DistributionSpec> dist; // sample n atoms when set
    std::vector<double> losses;           // used when dist is not set
    std::size_t n = 10000;
    std::uint64_t seed = 1;
    std::string invocation;
};

struct MurphyRow {
    double b;
    double epsilon;
    double z_star;
};

std::vector<MurphyRow> murphy_rows(const MurphyConfig& cfg);
std::string run_murphy(const MurphyConfig& cfg);

// --- reinsurance: replicated joint (VaR, ES) of layered losses -------------

struct ReinsuranceConfig {
    std::size_t n = 10000;
    int replicates = 100;
    std::uint64_t seed = 1;
    std::vector<double> eps{0.6, 0.7, 0.8, 0.9};
    std::vector<double> alphas{0.9, 0.975};
    double b = 0.5;
    double loss_scale = 0.01; // solve on scaled losses, rescale by degree 1
    std::string invocation;
};

struct ReinsuranceRow {
    int replicate;
    double alpha;
    double epsilon;
    double var;
    double es;
    bool rejected;
};

std::vector<ReinsuranceRow> reinsurance_rows(const ReinsuranceConfig& cfg);
std::string run_reinsurance(const ReinsuranceConfig& cfg);

// --- regress: robust regression on generated or supplied data --------------

struct RegressionData {
    Matrix X; // includes the intercept column
    std::vector<double> y;
};

// Contamination study datasets: model A is a Gumbel(5)-coupled pair with
// uniform marginals; B and C add 4 and 8 independent outliers.
RegressionData make_contamination_model(char model, std::size_t n_base,
                                        std::uint64_t seed);

struct RegressConfig {
    ScoreParams score{.kind = "mean", .b = 2.0};
    std::vector<double> eps{0.0};
    std::optional<char> model; // 'A' | 'B' | 'C'
    std::size_t n = 40;        // base sample size for generated models
    std::uint64_t seed = 1;
    std::optional<RegressionData> data; // user-supplied design
    std::string invocation;
};

struct RegressRow {
    double epsilon;
    std::vector<double> beta;
    double mse;
};

std::vector<RegressRow> regress_rows(const RegressConfig& cfg);
std::string run_regress(const RegressConfig& cfg);

// --- check: tilt solver against the simplex oracle --------------------------

struct CheckConfig {
    int instances = 20;
    int atoms = 6;
    std::vector<double> eps{0.01, 0.05, 0.1, 0.3};
    std::uint64_t seed = 1;
    std::string invocation;
};

struct CheckRow {
    int instance;
    int n_atoms;
    double epsilon;
    double tilt_value;
    double oracle_value;
    double rel_diff;
};

std::vector<CheckRow> check_rows(const CheckConfig& cfg);
std::string run_check(const CheckConfig& cfg);

// Parses "texp:rate[:trunc_q]", "beta:a:b", "lognormal:mu:sigma",
// "pareto:mean:std".
DistributionSpec parse_distribution(const std::string& text);

} // namespace refl
