#include "refl/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <future>
#include <sstream>
#include <thread>

#include "refl/csv.hpp"
#include "refl/oracle.hpp"
#include "refl/rng.hpp"

namespace refl {

namespace {

// Runs f(0..n-1) across hardware threads; results land by index so the
// output order never depends on scheduling.
template <typename F>
void parallel_for(std::size_t n, F&& f) {
    const std::size_t workers =
        std::min<std::size_t>(std::max(1u, std::thread::hardware_concurrency()), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) f(i);
        return;
    }
    std::vector<std::future<void>> futures;
    futures.reserve(workers);
    std::atomic<std::size_t> next{0};
    for (std::size_t t = 0; t < workers; ++t)
        futures.push_back(std::async(std::launch::async, [&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= n) return;
                f(i);
            }
        }));
    for (auto& fu : futures) fu.get();
}

std::vector<double> sorted_unique(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

} // namespace

// ----------------------------------------------------------------------------
// ref
// ----------------------------------------------------------------------------

std::vector<RefRow> ref_rows(const RefRunConfig& cfg) {
    if (cfg.losses.empty()) throw EmptyInput("no losses supplied");
    for (double e : cfg.eps)
        if (e < 0.0) throw BadEpsilon("epsilon must be nonnegative");
    const ScoreFamily family = ScoreFamily::make(cfg.score);
    const auto dist = EmpiricalDistribution::uniform(cfg.losses);

    std::vector<RefRow> rows;
    std::optional<std::array<double, 2>> warm;
    for (double eps : sorted_unique(cfg.eps)) {
        RefRow row;
        row.epsilon = eps;
        if (family.dim() == 1) {
            const RefResult r = ref_1d(family, dist, eps);
            row.z_star = r.z_star;
            row.eta_star = r.eta_star;
            row.value = r.value;
            row.degenerate_hit = r.diagnostics.degenerate_hit;
        } else {
            const RefResult r = ref_kd(family, dist, eps, warm);
            warm = {r.z_star[0], r.z_star[1]};
            row.z_star = r.z_star;
            row.eta_star = r.eta_star;
            row.value = r.value;
            row.degenerate_hit = r.diagnostics.degenerate_hit;
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string run_ref(const RefRunConfig& cfg) {
    const auto rows = ref_rows(cfg);
    const bool joint = cfg.score.kind == "vares";
    std::vector<std::string> header{"epsilon", "z_star"};
    if (joint) header = {"epsilon", "z_star", "z2_star"};
    header.push_back("eta_star");
    header.push_back("value");
    header.push_back("degenerate_hit");
    std::vector<std::vector<double>> table;
    for (const auto& r : rows) {
        std::vector<double> row{r.epsilon, r.z_star[0]};
        if (joint) row.push_back(r.z_star[1]);
        row.push_back(r.eta_star);
        row.push_back(r.value);
        row.push_back(r.degenerate_hit ? 1.0 : 0.0);
        table.push_back(std::move(row));
    }
    return csv_to_string(cfg.invocation, header, table);
}

// ----------------------------------------------------------------------------
// murphy
// ----------------------------------------------------------------------------

std::vector<MurphyRow> murphy_rows(const MurphyConfig& cfg) {
    if (cfg.b_grid.empty()) throw EmptyInput("empty b grid");
    if (cfg.eps.empty()) throw EmptyInput("empty epsilon grid");
    for (double e : cfg.eps)
        if (e < 0.0) throw BadEpsilon("epsilon must be nonnegative");

    std::vector<double> losses = cfg.losses;
    if (cfg.dist) losses = sample(*cfg.dist, cfg.n, cfg.seed);
    if (losses.empty()) throw EmptyInput("no losses supplied");
    const auto dist = EmpiricalDistribution::uniform(losses);

    const auto eps = sorted_unique(cfg.eps);
    const std::size_t cells = cfg.b_grid.size() * eps.size();
    std::vector<MurphyRow> rows(cells);
    parallel_for(cells, [&](std::size_t c) {
        const std::size_t bi = c / eps.size();
        const std::size_t ei = c % eps.size();
        ScoreParams p = cfg.score;
        p.b = cfg.b_grid[bi];
        const ScoreFamily family = ScoreFamily::make(p);
        const RefResult r = ref_1d(family, dist, eps[ei]);
        rows[c] = {p.b, eps[ei], r.z_star[0]};
    });
    return rows;
}

std::string run_murphy(const MurphyConfig& cfg) {
    const auto rows = murphy_rows(cfg);
    const std::vector<std::string> header{"b", "epsilon", "z_star"};
    std::vector<std::vector<double>> table;
    for (const auto& r : rows) table.push_back({r.b, r.epsilon, r.z_star});
    return csv_to_string(cfg.invocation, header, table);
}

// ----------------------------------------------------------------------------
// reinsurance
// ----------------------------------------------------------------------------

std::vector<ReinsuranceRow> reinsurance_rows(const ReinsuranceConfig& cfg) {
    if (cfg.replicates <= 0) throw BadSpec("replicates must be positive");
    if (cfg.n == 0) throw BadSpec("sample size must be positive");
    for (double e : cfg.eps)
        if (e < 0.0) throw BadEpsilon("epsilon must be nonnegative");
    for (double a : cfg.alphas)
        if (!(a > 0.0 && a < 1.0)) throw RangeError("alpha in (0,1)");

    const auto eps = sorted_unique(cfg.eps);
    const std::size_t per_rep = cfg.alphas.size() * eps.size();
    std::vector<ReinsuranceRow> rows(
        static_cast<std::size_t>(cfg.replicates) * per_rep);

    parallel_for(static_cast<std::size_t>(cfg.replicates), [&](std::size_t rep) {
        const Matrix X = sample_reinsurance_factors(
            cfg.n, replicate_seed(cfg.seed, rep));
        const auto layers = layers_from_quantiles(X);
        std::vector<double> y = reinsurance_losses(X, layers);
        for (double& v : y) v *= cfg.loss_scale;
        const auto dist = EmpiricalDistribution::uniform(std::move(y));

        bool crossed = false;
        std::size_t base = rep * per_rep;
        for (std::size_t ai = 0; ai < cfg.alphas.size(); ++ai) {
            ScoreParams p;
            p.kind = "vares";
            p.b = cfg.b;
            p.alpha = cfg.alphas[ai];
            const ScoreFamily family = ScoreFamily::make(p);
            std::optional<std::array<double, 2>> warm;
            for (std::size_t ei = 0; ei < eps.size(); ++ei) {
                const RefResult r = ref_kd(family, dist, eps[ei], warm);
                warm = {r.z_star[0], r.z_star[1]};
                if (r.diagnostics.quantile_crossing) crossed = true;
                // rescale through degree-1 homogeneity of the functional
                rows[base + ai * eps.size() + ei] = {
                    static_cast<int>(rep), cfg.alphas[ai], eps[ei],
                    r.z_star[0] / cfg.loss_scale,
                    r.z_star[1] / cfg.loss_scale, false};
            }
        }
        if (crossed)
            for (std::size_t k = 0; k < per_rep; ++k)
                rows[base + k].rejected = true;
    });
    return rows;
}

std::string run_reinsurance(const ReinsuranceConfig& cfg) {
    const auto rows = reinsurance_rows(cfg);
    const std::vector<std::string> header{"replicate", "alpha", "epsilon",
                                          "var",       "es",    "rejected"};
    std::vector<std::vector<double>> table;
    for (const auto& r : rows)
        table.push_back({static_cast<double>(r.replicate), r.alpha, r.epsilon,
                         r.var, r.es, r.rejected ? 1.0 : 0.0});
    return csv_to_string(cfg.invocation, header, table);
}

// ----------------------------------------------------------------------------
// regress
// ----------------------------------------------------------------------------

RegressionData make_contamination_model(char model, std::size_t n_base,
                                        std::uint64_t seed) {
    if (model != 'A' && model != 'B' && model != 'C')
        throw BadSpec("model must be A, B or C");
    const std::size_t n_out = model == 'A' ? 0 : (model == 'B' ? 4 : 8);

    const Matrix u =
        sample(CopulaSpec{GumbelCopulaSpec{5.0, 2}}, n_base, seed);
    // outliers share nothing with the base sample: independent uniforms on a
    // separate stream
    Rng rng(replicate_seed(seed, 1000003));
    RegressionData d;
    d.X = Matrix(n_base + n_out, 2);
    d.y.resize(n_base + n_out);
    for (std::size_t i = 0; i < n_base; ++i) {
        d.X(i, 0) = 1.0;
        d.X(i, 1) = u(i, 0);
        d.y[i] = u(i, 1);
    }
    for (std::size_t i = 0; i < n_out; ++i) {
        d.X(n_base + i, 0) = 1.0;
        d.X(n_base + i, 1) = rng.uniform_open();
        d.y[n_base + i] = rng.uniform_open();
    }
    return d;
}

std::vector<RegressRow> regress_rows(const RegressConfig& cfg) {
    if (cfg.eps.empty()) throw EmptyInput("empty epsilon grid");
    for (double e : cfg.eps)
        if (e < 0.0) throw BadEpsilon("epsilon must be nonnegative");
    RegressionData data;
    if (cfg.data) {
        data = *cfg.data;
    } else if (cfg.model) {
        data = make_contamination_model(*cfg.model, cfg.n, cfg.seed);
    } else {
        throw BadSpec("either --input data or --model A|B|C is required");
    }

    const ScoreFamily family = ScoreFamily::make(cfg.score);
    std::vector<RegressRow> rows;
    std::optional<std::vector<double>> warm;
    for (double eps : sorted_unique(cfg.eps)) {
        const RegressionFit fit = robust_regression(
            family, data.X, data.y, eps,
            warm ? std::optional<std::span<const double>>(*warm)
                 : std::nullopt);
        warm = fit.beta;
        rows.push_back({eps, fit.beta, fit.mse});
    }
    return rows;
}

std::string run_regress(const RegressConfig& cfg) {
    const auto rows = regress_rows(cfg);
    std::vector<std::string> header{"epsilon"};
    for (std::size_t j = 0; j < rows.front().beta.size(); ++j)
        header.push_back("beta_" + std::to_string(j));
    header.push_back("mse");
    std::vector<std::vector<double>> table;
    for (const auto& r : rows) {
        std::vector<double> row{r.epsilon};
        row.insert(row.end(), r.beta.begin(), r.beta.end());
        row.push_back(r.mse);
        table.push_back(std::move(row));
    }
    return csv_to_string(cfg.invocation, header, table);
}

// ----------------------------------------------------------------------------
// check
// ----------------------------------------------------------------------------

std::vector<CheckRow> check_rows(const CheckConfig& cfg) {
    if (cfg.instances <= 0) throw BadSpec("instances must be positive");
    if (cfg.atoms < 2 || cfg.atoms > 8)
        throw BadSpec("atoms must lie in [2, 8]");
    std::vector<CheckRow> rows;
    Rng rng(cfg.seed);
    for (int inst = 0; inst < cfg.instances; ++inst) {
        const int n = 2 + static_cast<int>(rng.raw() % (cfg.atoms - 1));
        std::vector<double> s(n), w(n);
        double norm = 0.0;
        for (int i = 0; i < n; ++i) {
            s[i] = 3.0 * rng.uniform();
            w[i] = 0.1 + rng.exponential();
            norm += w[i];
        }
        for (double& v : w) v /= norm;
        for (double eps : cfg.eps) {
            const TiltSolution ts = solve_tilt(s, w, eps);
            const auto rep = oracle::simplex_worst_case(s, w, eps);
            const double denom = std::max(std::fabs(ts.value), 1e-12);
            rows.push_back({inst, n, eps, ts.value, rep.value,
                            std::fabs(ts.value - rep.value) / denom});
        }
    }
    return rows;
}

std::string run_check(const CheckConfig& cfg) {
    const auto rows = check_rows(cfg);
    const std::vector<std::string> header{
        "instance", "n_atoms", "epsilon", "tilt_value", "oracle_value",
        "rel_diff"};
    std::vector<std::vector<double>> table;
    for (const auto& r : rows)
        table.push_back({static_cast<double>(r.instance),
                         static_cast<double>(r.n_atoms), r.epsilon,
                         r.tilt_value, r.oracle_value, r.rel_diff});
    return csv_to_string(cfg.invocation, header, table);
}

// ----------------------------------------------------------------------------
// distribution spec parsing
// ----------------------------------------------------------------------------

DistributionSpec parse_distribution(const std::string& text) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    std::string part;
    while (std::getline(ss, part, ':')) parts.push_back(part);
    if (parts.empty()) throw BadSpec("empty distribution spec");
    auto num = [&](std::size_t i) {
        try {
            return std::stod(parts.at(i));
        } catch (const std::exception&) {
            throw BadSpec("bad number in distribution spec '" + text + "'");
        }
    };
    const std::string& kind = parts[0];
    if (kind == "texp") {
        TExpSpec s;
        s.rate = num(1);
        if (parts.size() > 2) s.trunc_q = num(2);
        validate(DistributionSpec{s});
        return s;
    }
    if (kind == "beta") {
        BetaSpec s{num(1), num(2)};
        validate(DistributionSpec{s});
        return s;
    }
    if (kind == "lognormal") {
        LogNormalSpec s{num(1), num(2)};
        validate(DistributionSpec{s});
        return s;
    }
    if (kind == "pareto") {
        ParetoMMSpec s{num(1), num(2)};
        validate(DistributionSpec{s});
        return s;
    }
    throw BadSpec("unknown distribution '" + kind +
                  "' (expected texp, beta, lognormal or pareto)");
}

} // namespace refl
