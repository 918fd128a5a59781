#include "refl/dists.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "refl/rng.hpp"

namespace refl {

namespace detail {

double inv_norm_cdf(double u) {
    if (!(u > 0.0 && u < 1.0))
        throw RangeError("normal quantile needs u in (0,1)");
    // Acklam's rational approximation
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425;
    double x;
    if (u < plow) {
        const double q = std::sqrt(-2.0 * std::log(u));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q +
             c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (u <= 1.0 - plow) {
        const double q = u - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r +
             a[5]) *
            q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r +
             1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log(1.0 - u));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q +
              c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    // one Newton step against the exact cdf
    const double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - u;
    const double pdf =
        std::exp(-0.5 * x * x) / std::sqrt(2.0 * 3.14159265358979323846);
    x -= e / pdf;
    return x;
}

namespace {
double inc_beta_cf(double a, double b, double x) {
    // Lentz continued fraction for the incomplete beta
    const double tiny = 1e-300;
    const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 300; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < 3e-16) break;
    }
    return h;
}
} // namespace

double reg_inc_beta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double ln_front = std::lgamma(a + b) - std::lgamma(a) -
                            std::lgamma(b) + a * std::log(x) +
                            b * std::log(1.0 - x);
    const double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0)) return front * inc_beta_cf(a, b, x) / a;
    return 1.0 - front * inc_beta_cf(b, a, 1.0 - x) / b;
}

double student_t_cdf(double t, double df) {
    const double x = df / (df + t * t);
    const double p = 0.5 * reg_inc_beta(0.5 * df, 0.5, x);
    return t > 0.0 ? 1.0 - p : p;
}

} // namespace detail

// ----------------------------------------------------------------------------
// Spec validation and quantiles
// ----------------------------------------------------------------------------

namespace {

struct ValidateDist {
    void operator()(const TExpSpec& s) const {
        if (!(s.rate > 0.0)) throw BadSpec("truncated exponential: rate > 0");
        if (!(s.trunc_q > 0.0 && s.trunc_q < 1.0))
            throw BadSpec("truncated exponential: trunc_q in (0,1)");
    }
    void operator()(const BetaSpec& s) const {
        if (!(s.a > 0.0 && s.b > 0.0))
            throw BadSpec("beta: shape parameters must be positive");
    }
    void operator()(const LogNormalSpec& s) const {
        if (!(s.sigma > 0.0)) throw BadSpec("lognormal: sigma > 0");
    }
    void operator()(const ParetoMMSpec& s) const {
        if (!(s.mean > 0.0 && s.stdev > 0.0))
            throw BadSpec("pareto: mean and std must be positive");
    }
};

struct ParetoShapeScale {
    double shape;
    double scale;
};

ParetoShapeScale pareto_from_moments(const ParetoMMSpec& s) {
    // mean^2/var = shape (shape - 2) inverted in closed form; shape > 2 so
    // both matched moments exist
    const double kappa = (s.mean / s.stdev) * (s.mean / s.stdev);
    const double shape = 1.0 + std::sqrt(1.0 + kappa);
    return {shape, s.mean * (shape - 1.0) / shape};
}

// Positive one-sided stable variable with Laplace transform exp(-t^alpha),
// alpha in (0,1), by Kanter's construction.
double positive_stable(Rng& rng, double alpha) {
    const double pi = 3.14159265358979323846;
    const double u = pi * rng.uniform_open();
    const double e = rng.exponential();
    const double a =
        std::pow(std::pow(std::sin(alpha * u), alpha) *
                     std::pow(std::sin((1.0 - alpha) * u), 1.0 - alpha) /
                     std::sin(u),
                 1.0 / (1.0 - alpha));
    return std::pow(a / e, (1.0 - alpha) / alpha);
}

// Lower-triangular Cholesky factor; throws when the matrix is not positive
// definite.
Matrix cholesky(const Matrix& m) {
    if (m.rows != m.cols) throw BadSpec("correlation matrix must be square");
    const std::size_t k = m.rows;
    Matrix L(k, k, 0.0);
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double sum = m(i, j);
            for (std::size_t p = 0; p < j; ++p) sum -= L(i, p) * L(j, p);
            if (i == j) {
                if (!(sum > 0.0))
                    throw BadSpec("correlation matrix is not positive definite");
                L(i, j) = std::sqrt(sum);
            } else {
                L(i, j) = sum / L(j, j);
            }
        }
    }
    return L;
}

} // namespace

void validate(const DistributionSpec& spec) {
    std::visit(ValidateDist{}, spec);
}

void validate(const CopulaSpec& spec) {
    if (const auto* g = std::get_if<GumbelCopulaSpec>(&spec)) {
        if (!(g->theta >= 1.0)) throw BadSpec("gumbel: theta >= 1");
        if (g->dim < 2) throw BadSpec("gumbel: dim >= 2");
        return;
    }
    const auto& t = std::get<StudentTCopulaSpec>(spec);
    if (t.df <= 0) throw BadSpec("t copula: df > 0");
    if (t.corr.rows != t.corr.cols || t.corr.rows < 2)
        throw BadSpec("t copula: square correlation matrix of dim >= 2");
    for (std::size_t i = 0; i < t.corr.rows; ++i) {
        if (std::fabs(t.corr(i, i) - 1.0) > 1e-12)
            throw BadSpec("t copula: unit diagonal required");
        for (std::size_t j = 0; j < i; ++j)
            if (std::fabs(t.corr(i, j) - t.corr(j, i)) > 1e-12)
                throw BadSpec("t copula: correlation matrix must be symmetric");
    }
    cholesky(t.corr);
}

double quantile(const DistributionSpec& spec, double u) {
    validate(spec);
    if (!(u >= 0.0 && u < 1.0))
        throw RangeError("quantile level must lie in [0,1)");
    if (const auto* e = std::get_if<TExpSpec>(&spec))
        return -std::log1p(-u * e->trunc_q) / e->rate;
    if (const auto* l = std::get_if<LogNormalSpec>(&spec)) {
        if (u == 0.0) return 0.0;
        return std::exp(l->mu + l->sigma * detail::inv_norm_cdf(u));
    }
    if (const auto* p = std::get_if<ParetoMMSpec>(&spec)) {
        const auto ps = pareto_from_moments(*p);
        return ps.scale * std::pow(1.0 - u, -1.0 / ps.shape);
    }
    const auto& b = std::get<BetaSpec>(spec);
    if (u == 0.0) return 0.0;
    // bisection on the regularised incomplete beta
    double lo = 0.0, hi = 1.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (detail::reg_inc_beta(b.a, b.b, mid) < u)
            lo = mid;
        else
            hi = mid;
        if (hi - lo < 1e-15) break;
    }
    return 0.5 * (lo + hi);
}

// ----------------------------------------------------------------------------
// Sampling
// ----------------------------------------------------------------------------

std::vector<double> sample(const DistributionSpec& spec, std::size_t n,
                           std::uint64_t seed) {
    validate(spec);
    if (n == 0) throw BadSpec("sample size must be positive");
    Rng rng(seed);
    std::vector<double> out(n);
    if (const auto* e = std::get_if<TExpSpec>(&spec)) {
        for (double& x : out)
            x = -std::log1p(-rng.uniform_open() * e->trunc_q) / e->rate;
        return out;
    }
    if (const auto* l = std::get_if<LogNormalSpec>(&spec)) {
        for (double& x : out) x = std::exp(l->mu + l->sigma * rng.normal());
        return out;
    }
    if (const auto* p = std::get_if<ParetoMMSpec>(&spec)) {
        const auto ps = pareto_from_moments(*p);
        for (double& x : out)
            x = ps.scale * std::pow(1.0 - rng.uniform(), -1.0 / ps.shape);
        return out;
    }
    const auto& b = std::get<BetaSpec>(spec);
    for (double& x : out) {
        const double g1 = rng.gamma(b.a);
        const double g2 = rng.gamma(b.b);
        x = g1 / (g1 + g2);
    }
    return out;
}

Matrix sample(const CopulaSpec& spec, std::size_t n, std::uint64_t seed) {
    validate(spec);
    if (n == 0) throw BadSpec("sample size must be positive");
    Rng rng(seed);
    if (const auto* g = std::get_if<GumbelCopulaSpec>(&spec)) {
        const std::size_t k = static_cast<std::size_t>(g->dim);
        Matrix u(n, k);
        if (g->theta <= 1.0 + 1e-12) {
            for (double& v : u.data) v = rng.uniform_open();
            return u;
        }
        const double alpha = 1.0 / g->theta;
        for (std::size_t i = 0; i < n; ++i) {
            const double v = positive_stable(rng, alpha);
            for (std::size_t j = 0; j < k; ++j)
                u(i, j) =
                    std::exp(-std::pow(rng.exponential() / v, alpha));
        }
        return u;
    }
    const auto& t = std::get<StudentTCopulaSpec>(spec);
    const std::size_t k = t.corr.rows;
    const Matrix L = cholesky(t.corr);
    Matrix u(n, k);
    std::vector<double> z(k);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < k; ++j) z[j] = rng.normal();
        const double g = std::sqrt(rng.chi_square(t.df) / t.df);
        for (std::size_t j = 0; j < k; ++j) {
            double x = 0.0;
            for (std::size_t p = 0; p <= j; ++p) x += L(j, p) * z[p];
            u(i, j) = detail::student_t_cdf(x / g, t.df);
        }
    }
    return u;
}

Matrix apply_marginals(const Matrix& uniforms,
                       std::span<const DistributionSpec> marginals) {
    if (uniforms.cols != marginals.size())
        throw ShapeMismatch("one marginal per copula column required");
    Matrix x(uniforms.rows, uniforms.cols);
    for (std::size_t j = 0; j < uniforms.cols; ++j) {
        const auto& m = marginals[j];
        for (std::size_t i = 0; i < uniforms.rows; ++i)
            x(i, j) = quantile(m, uniforms(i, j));
    }
    return x;
}

// ----------------------------------------------------------------------------
// Empirical functionals
// ----------------------------------------------------------------------------

namespace {

void check_weighted_sample(std::span<const double> atoms,
                           std::span<const double> weights) {
    if (atoms.empty()) throw EmptyInput("empty sample");
    if (atoms.size() != weights.size())
        throw LengthMismatch("atoms and weights differ in length");
}

std::vector<std::size_t> order_by_atom(std::span<const double> atoms) {
    std::vector<std::size_t> idx(atoms.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t a, std::size_t b) { return atoms[a] < atoms[b]; });
    return idx;
}

} // namespace

double empirical_mean(std::span<const double> atoms,
                      std::span<const double> weights) {
    check_weighted_sample(atoms, weights);
    double m = 0.0;
    for (std::size_t i = 0; i < atoms.size(); ++i) m += weights[i] * atoms[i];
    return m;
}

double empirical_value_at_risk(double alpha, std::span<const double> atoms,
                               std::span<const double> weights) {
    check_weighted_sample(atoms, weights);
    if (!(alpha > 0.0 && alpha < 1.0)) throw RangeError("alpha in (0,1)");
    const auto idx = order_by_atom(atoms);
    double cum = 0.0;
    for (std::size_t i : idx) {
        cum += weights[i];
        // the gate keeps weight-summation rounding from pushing the
        // infimum-convention quantile one atom high
        if (cum >= alpha - 1e-10) return atoms[i];
    }
    return atoms[idx.back()];
}

double empirical_expected_shortfall(double alpha,
                                    std::span<const double> atoms,
                                    std::span<const double> weights) {
    check_weighted_sample(atoms, weights);
    if (!(alpha > 0.0 && alpha < 1.0)) throw RangeError("alpha in (0,1)");
    const auto idx = order_by_atom(atoms);
    double remaining = 1.0 - alpha;
    double acc = 0.0;
    for (auto it = idx.rbegin(); it != idx.rend() && remaining > 0.0; ++it) {
        const double take = std::min(remaining, weights[*it]);
        acc += take * atoms[*it];
        remaining -= take;
    }
    return acc / (1.0 - alpha);
}

double empirical_expectile(double tau, std::span<const double> atoms,
                           std::span<const double> weights, double tol) {
    check_weighted_sample(atoms, weights);
    if (!(tau > 0.0 && tau < 1.0)) throw RangeError("tau in (0,1)");
    const auto [mn, mx] = std::minmax_element(atoms.begin(), atoms.end());
    double lo = *mn, hi = *mx;
    if (hi - lo == 0.0) return lo;
    // identification tau E[(Y-e)_+] - (1-tau) E[(e-Y)_+] decreases in e
    auto ident = [&](double e) {
        double up = 0.0, down = 0.0;
        for (std::size_t i = 0; i < atoms.size(); ++i) {
            const double diff = atoms[i] - e;
            if (diff > 0.0)
                up += weights[i] * diff;
            else
                down -= weights[i] * diff;
        }
        return tau * up - (1.0 - tau) * down;
    };
    for (int i = 0; i < 400 && hi - lo > tol; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (ident(mid) > 0.0)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

double empirical_functional(const Functional& f, std::span<const double> atoms,
                            std::span<const double> weights) {
    switch (f.kind) {
    case Functional::Kind::Mean:
        return empirical_mean(atoms, weights);
    case Functional::Kind::VaR:
        return empirical_value_at_risk(f.level, atoms, weights);
    case Functional::Kind::ES:
        return empirical_expected_shortfall(f.level, atoms, weights);
    case Functional::Kind::Expectile:
        return empirical_expectile(f.level, atoms, weights);
    }
    throw BadSpec("unknown functional");
}

double kendall_tau(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw LengthMismatch("columns differ in length");
    if (x.size() < 2) throw EmptyInput("need at least two points");
    const std::size_t n = x.size();
    long long concordant = 0, discordant = 0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double s = (x[i] - x[j]) * (y[i] - y[j]);
            if (s > 0.0)
                ++concordant;
            else if (s < 0.0)
                ++discordant;
        }
    }
    const double pairs = 0.5 * static_cast<double>(n) *
                         static_cast<double>(n - 1);
    return static_cast<double>(concordant - discordant) / pairs;
}

// ----------------------------------------------------------------------------
// Reinsurance
// ----------------------------------------------------------------------------

std::vector<double>
reinsurance_losses(const Matrix& X, const std::array<LayerSpec, 3>& layers) {
    if (X.cols != 3) throw ShapeMismatch("three risk-factor columns required");
    for (const auto& l : layers) {
        if (!(l.limit > 0.0) || !std::isfinite(l.limit) ||
            !(l.deductible >= 0.0) || !std::isfinite(l.deductible))
            throw BadSpec("layer: deductible >= 0 and limit > 0");
    }
    std::vector<double> y(X.rows, 0.0);
    for (std::size_t i = 0; i < X.rows; ++i) {
        double total = 0.0;
        for (std::size_t k = 0; k < 3; ++k) {
            const double exceed = std::max(0.0, X(i, k) - layers[k].deductible);
            total += std::min(exceed, layers[k].limit);
        }
        y[i] = total;
    }
    return y;
}

std::array<LayerSpec, 3> layers_from_quantiles(const Matrix& X) {
    if (X.cols != 3) throw ShapeMismatch("three risk-factor columns required");
    const std::vector<double> w(X.rows, 1.0 / static_cast<double>(X.rows));
    std::vector<double> col(X.rows);
    auto q = [&](std::size_t k, double level) {
        for (std::size_t i = 0; i < X.rows; ++i) col[i] = X(i, k);
        return empirical_value_at_risk(level, col, w);
    };
    std::array<LayerSpec, 3> layers;
    layers[0] = {q(0, 0.60), q(0, 0.80)};
    layers[1] = {q(1, 0.60), q(1, 0.80)};
    layers[2] = {q(2, 0.85), q(2, 0.95)};
    return layers;
}

std::array<DistributionSpec, 3> reinsurance_marginals() {
    return {LogNormalSpec{4.58, 0.19}, LogNormalSpec{4.98, 0.23},
            ParetoMMSpec{150.0, 40.0}};
}

StudentTCopulaSpec reinsurance_copula() {
    StudentTCopulaSpec spec;
    spec.df = 4;
    spec.corr = Matrix(3, 3);
    const double r[3][3] = {
        {1.0, 0.2, 0.0}, {0.2, 1.0, 0.8}, {0.0, 0.8, 1.0}};
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) spec.corr(i, j) = r[i][j];
    return spec;
}

Matrix sample_reinsurance_factors(std::size_t n, std::uint64_t seed) {
    const Matrix u = sample(CopulaSpec{reinsurance_copula()}, n, seed);
    const auto marginals = reinsurance_marginals();
    return apply_marginals(u, marginals);
}

} // namespace refl
