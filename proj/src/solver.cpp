#include "refl/solver.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "refl/rng.hpp"

namespace refl {

namespace {

// Evaluates J and its derivative over a fixed sample, reusing the per-atom
// score precomputation and warm-starting the tilt root search from the
// previous prediction.
class JEvaluator {
  public:
    JEvaluator(const ScoreFamily& family, const EmpiricalDistribution& dist,
               double epsilon)
        : family_(family), dist_(dist), epsilon_(epsilon),
          pre_(family.precompute_atoms(dist.atoms)), scores_(dist.size()) {}

    TiltSolution tilt_at(std::span<const double> z) {
        family_.eval_batch(z, dist_.atoms, pre_, scores_);
        TiltSolution ts =
            solve_tilt(scores_, dist_.weights, epsilon_, eta_hint_);
        if (!ts.degenerate && ts.eta_star > 0.0) eta_hint_ = ts.eta_star;
        degenerate_seen_ = degenerate_seen_ || ts.degenerate;
        return ts;
    }

    TiltSolution tilt_at1(double z) {
        const std::array<double, 1> zz{z};
        return tilt_at(std::span<const double>(zz));
    }

    // derivative of J at z under the worst-case measure at z
    double deriv1(double z, TiltSolution* tilt_out = nullptr) {
        TiltSolution ts = tilt_at1(z);
        double g = 0.0;
        for (std::size_t i = 0; i < dist_.size(); ++i)
            g += ts.tilted_weights[i] * family_.grad1(z, dist_.atoms[i]);
        if (tilt_out) *tilt_out = std::move(ts);
        return g;
    }

    bool degenerate_seen() const { return degenerate_seen_; }

  private:
    const ScoreFamily& family_;
    const EmpiricalDistribution& dist_;
    double epsilon_;
    std::vector<double> pre_;
    std::vector<double> scores_;
    double eta_hint_ = -1.0;
    bool degenerate_seen_ = false;
};

double classical_1d(const ScoreFamily& family,
                    const EmpiricalDistribution& dist) {
    switch (family.kind()) {
    case ScoreKind::MeanPatton:
        return empirical_mean(dist.atoms, dist.weights);
    case ScoreKind::VarHomogeneous:
        return empirical_value_at_risk(family.alpha(), dist.atoms,
                                       dist.weights);
    case ScoreKind::Expectile:
        return empirical_expectile(family.tau(), dist.atoms, dist.weights,
                                   1e-12);
    default:
        throw DomainError("one-dimensional family required");
    }
}

bool constant_atoms(const EmpiricalDistribution& dist) {
    const double first = dist.atoms.front();
    for (double a : dist.atoms)
        if (a != first) return false;
    return true;
}

} // namespace

double j_derivative(const ScoreFamily& family,
                    const EmpiricalDistribution& dist, double z,
                    double epsilon) {
    if (family.dim() != 1)
        throw DomainError("one-dimensional family required");
    JEvaluator eval(family, dist, epsilon);
    return eval.deriv1(z);
}

RefResult ref_1d(const ScoreFamily& family, const EmpiricalDistribution& dist,
                 double epsilon,
                 std::optional<std::pair<double, double>> bracket) {
    if (family.dim() != 1)
        throw DomainError("one-dimensional family required");
    if (epsilon < 0.0) throw BadEpsilon("epsilon must be nonnegative");

    RefResult res;

    // A constant sample pins the functional at the constant.
    if (constant_atoms(dist)) {
        const double m = dist.atoms.front();
        res.z_star = {m};
        res.baseline_value = {m};
        res.eta_star = 0.0;
        res.value = family.eval(m, m);
        res.diagnostics.degenerate_hit = epsilon > 0.0;
        return res;
    }

    res.baseline_value = {classical_1d(family, dist)};

    const auto [amin_it, amax_it] =
        std::minmax_element(dist.atoms.begin(), dist.atoms.end());
    const bool positive = family.action_domain() == ActionDomain::PositiveReals;

    double lo = bracket ? bracket->first : *amin_it;
    double hi = bracket ? bracket->second : *amax_it;
    if (positive) {
        lo = std::max(lo, 1e-9);
        hi = std::max(hi, lo + 1e-12);
    }
    if (lo > hi) std::swap(lo, hi);

    SolverDiagnostics& diag = res.diagnostics;
    JEvaluator eval(family, dist, epsilon);
    auto deriv = [&](double z, TiltSolution* ts = nullptr) {
        ++diag.derivative_evals;
        return eval.deriv1(z, ts);
    };

    double dlo = deriv(lo);
    double dhi = deriv(hi);

    // Expand until the derivative changes sign across the bracket.
    double width = std::max(hi - lo, 1e-6 * std::max(1.0, std::fabs(hi)));
    for (int k = 0; dlo > 0.0 && k < 200; ++k) {
        if (positive) {
            lo *= 0.5;
        } else {
            lo -= width;
            width *= 2.0;
        }
        dlo = deriv(lo);
    }
    width = std::max(hi - lo, 1e-6 * std::max(1.0, std::fabs(hi)));
    for (int k = 0; dhi < 0.0 && k < 200; ++k) {
        hi += width;
        width *= 2.0;
        dhi = deriv(hi);
    }
    if (dlo > 0.0 || dhi < 0.0)
        throw NoSignChange(
            "derivative of the worst-case value does not change sign over "
            "the expanded bracket");

    // Tolerances follow the bracket scale so rescaled data solves along an
    // equivalent path.
    const double scale = std::max({std::fabs(lo), std::fabs(hi), 1e-300});
    const double width_tol = 1e-10 * scale;
    const bool smooth = family.kind() == ScoreKind::MeanPatton ||
                        family.kind() == ScoreKind::Expectile;

    // Bisect on the raw derivative sign. Invariant: deriv(lo) < 0 <=
    // deriv(hi), so hi converges to the smallest point with nonnegative
    // derivative.
    while (hi - lo > width_tol) {
        ++diag.iterations;
        const double mid = 0.5 * (lo + hi);
        if (deriv(mid) >= 0.0)
            hi = mid;
        else
            lo = mid;
    }
    double z_star = smooth ? 0.5 * (lo + hi) : hi;

    // Quantile-type solutions sit on atoms where the derivative jumps. The
    // derivative at the true crossing atom may round to a negative within
    // summation noise, which parks the raw bisection one atom high; so
    // probe the atoms in the final bracket and the one just below it, and
    // accept an atom whose derivative is nonnegative relative to its own
    // jump size (the noise floor lies many orders below any true jump).
    {
        const double pad = std::max(hi - lo, 1e-12 * scale);
        std::vector<double> candidates;
        double just_below = -std::numeric_limits<double>::infinity();
        for (double a : dist.atoms) {
            if (a >= lo - pad && a <= hi + pad)
                candidates.push_back(a);
            else if (a < lo - pad)
                just_below = std::max(just_below, a);
        }
        if (std::isfinite(just_below)) candidates.push_back(just_below);
        std::sort(candidates.begin(), candidates.end());
        candidates.erase(std::unique(candidates.begin(), candidates.end()),
                         candidates.end());
        for (double a : candidates) {
            if (positive && !(a > 0.0)) continue;
            double prev = -std::numeric_limits<double>::infinity();
            for (double b : dist.atoms)
                if (b < a) prev = std::max(prev, b);
            double delta = std::isfinite(prev) ? 0.5 * (a - prev)
                                               : 1e-6 * scale;
            if (positive && !(a - delta > 0.0)) delta = 0.5 * a;
            const double d_at = deriv(a);
            const double d_below = deriv(a - delta);
            const double jump = std::max(d_at - d_below, 0.0);
            if (d_at >= -1e-6 * jump) {
                z_star = a;
                break;
            }
        }
    }

    TiltSolution final_tilt;
    deriv(z_star, &final_tilt);
    res.z_star = {z_star};
    res.eta_star = final_tilt.eta_star;
    res.value = final_tilt.value;
    diag.degenerate_hit = eval.degenerate_seen();
    diag.converged = true;
    return res;
}

// ----------------------------------------------------------------------------
// Nelder-Mead for the (VaR, ES) pair
// ----------------------------------------------------------------------------

namespace {

struct NmPoint {
    std::array<double, 2> x;
    double f;
};

// Standard Nelder-Mead on two coordinates with an infinite objective outside
// the action domain. Tolerance is relative to the coordinate scale so runs
// on rescaled data follow the same path.
NmPoint nelder_mead(const std::function<double(const std::array<double, 2>&)>& f,
                    std::array<double, 2> start, double rel_step,
                    double rel_tol, int max_iter, int* evals) {
    auto eval = [&](const std::array<double, 2>& x) {
        ++*evals;
        return f(x);
    };
    std::array<NmPoint, 3> simplex;
    simplex[0] = {start, eval(start)};
    for (int j = 0; j < 2; ++j) {
        auto v = start;
        const double step =
            rel_step * std::max(std::fabs(v[j]), 1e-8 * (1.0 + std::fabs(v[1 - j])));
        v[j] += step;
        simplex[j + 1] = {v, eval(v)};
    }
    auto by_f = [](const NmPoint& a, const NmPoint& b) { return a.f < b.f; };
    for (int it = 0; it < max_iter; ++it) {
        std::sort(simplex.begin(), simplex.end(), by_f);
        const double span = std::max(
            {std::fabs(simplex[0].x[0] - simplex[2].x[0]),
             std::fabs(simplex[0].x[1] - simplex[2].x[1]),
             std::fabs(simplex[0].x[0] - simplex[1].x[0]),
             std::fabs(simplex[0].x[1] - simplex[1].x[1])});
        const double xscale = std::max({std::fabs(simplex[0].x[0]),
                                        std::fabs(simplex[0].x[1]), 1e-12});
        if (span <= rel_tol * xscale) break;

        const std::array<double, 2> centroid{
            0.5 * (simplex[0].x[0] + simplex[1].x[0]),
            0.5 * (simplex[0].x[1] + simplex[1].x[1])};
        auto affine = [&](double t) {
            return std::array<double, 2>{
                centroid[0] + t * (simplex[2].x[0] - centroid[0]),
                centroid[1] + t * (simplex[2].x[1] - centroid[1])};
        };
        const auto xr = affine(-1.0);
        const double fr = eval(xr);
        if (fr < simplex[0].f) {
            const auto xe = affine(-2.0);
            const double fe = eval(xe);
            simplex[2] = fe < fr ? NmPoint{xe, fe} : NmPoint{xr, fr};
            continue;
        }
        if (fr < simplex[1].f) {
            simplex[2] = {xr, fr};
            continue;
        }
        const auto xc = affine(fr < simplex[2].f ? -0.5 : 0.5);
        const double fc = eval(xc);
        if (fc < std::min(fr, simplex[2].f)) {
            simplex[2] = {xc, fc};
            continue;
        }
        // shrink toward the best vertex
        for (int k = 1; k < 3; ++k) {
            for (int j = 0; j < 2; ++j)
                simplex[k].x[j] =
                    simplex[0].x[j] + 0.5 * (simplex[k].x[j] - simplex[0].x[j]);
            simplex[k].f = eval(simplex[k].x);
        }
    }
    std::sort(simplex.begin(), simplex.end(), by_f);
    return simplex[0];
}

} // namespace

RefResult ref_kd(const ScoreFamily& family, const EmpiricalDistribution& dist,
                 double epsilon, std::optional<std::array<double, 2>> init) {
    if (family.dim() != 2)
        throw DomainError("two-dimensional family required");
    if (epsilon < 0.0) throw BadEpsilon("epsilon must be nonnegative");

    RefResult res;

    if (constant_atoms(dist)) {
        const double m = dist.atoms.front();
        res.z_star = {m, m};
        res.baseline_value = {m, m};
        const std::array<double, 2> z{m, m};
        res.value = family.eval(std::span<const double>(z), m);
        res.diagnostics.degenerate_hit = epsilon > 0.0;
        return res;
    }

    const double var0 =
        empirical_value_at_risk(family.alpha(), dist.atoms, dist.weights);
    const double es0 = empirical_expected_shortfall(family.alpha(), dist.atoms,
                                                    dist.weights);
    res.baseline_value = {var0, es0};

    std::array<double, 2> start = init ? *init : std::array<double, 2>{var0, es0};
    const double floor = 1e-12 * std::max(1.0, std::fabs(start[1]));
    start[0] = std::max(start[0], floor);
    start[1] = std::max(start[1], floor);

    SolverDiagnostics& diag = res.diagnostics;
    JEvaluator eval(family, dist, epsilon);
    auto objective = [&](const std::array<double, 2>& z) {
        if (!(z[0] > 0.0 && z[1] > 0.0))
            return std::numeric_limits<double>::infinity();
        return eval.tilt_at(std::span<const double>(z)).value;
    };

    int evals = 0;
    NmPoint best = nelder_mead(objective, start, 0.05, 1e-9, 400, &evals);

    // Random restarts around the start; the perturbations are multiplicative
    // so rescaled problems explore equivalent paths.
    Rng rng(0x9e3779b97f4a7c15ULL);
    for (int r = 0; r < 5; ++r) {
        auto s = start;
        for (int j = 0; j < 2; ++j)
            s[j] *= 1.0 + 0.15 * (2.0 * rng.uniform() - 1.0);
        const NmPoint cand = nelder_mead(objective, s, 0.05, 1e-9, 400, &evals);
        if (cand.f < best.f) best = cand;
    }
    // polish from the incumbent
    best = nelder_mead(objective, best.x, 0.005, 1e-10, 400, &evals);

    // Once the radius dominates the tail, the exact optimum sits at the
    // essential-supremum prediction, a kink the simplex only approaches;
    // prefer that candidate whenever it does at least as well.
    {
        const double amax =
            *std::max_element(dist.atoms.begin(), dist.atoms.end());
        if (amax > 0.0) {
            const std::array<double, 2> cand{amax, amax};
            const double fc = objective(cand);
            ++evals;
            if (fc <= best.f) best = {cand, fc};
        }
    }

    const TiltSolution final_tilt =
        eval.tilt_at(std::span<const double>(best.x));
    res.z_star = {best.x[0], best.x[1]};
    res.eta_star = final_tilt.eta_star;
    res.value = final_tilt.value;
    diag.iterations = evals;
    diag.degenerate_hit = eval.degenerate_seen();
    // a crossing beyond solver resolution; z1 = z2 is a valid boundary
    // case, and the simplex resolves kinks to roughly 1e-6 of scale
    diag.quantile_crossing =
        best.x[0] - best.x[1] >
        1e-5 * std::max(1.0, std::fabs(best.x[1]));
    diag.converged = std::isfinite(best.f);
    return res;
}

// ----------------------------------------------------------------------------
// Robust regression
// ----------------------------------------------------------------------------

std::vector<double> least_squares(const Matrix& X, std::span<const double> y) {
    if (X.rows != y.size()) throw ShapeMismatch("X rows must match y length");
    if (X.cols == 0 || X.rows <= X.cols)
        throw ShapeMismatch("need n > m >= 1 observations");
    const std::size_t m = X.cols;
    Matrix a(m, m, 0.0);
    std::vector<double> rhs(m, 0.0);
    for (std::size_t i = 0; i < X.rows; ++i) {
        for (std::size_t p = 0; p < m; ++p) {
            rhs[p] += X(i, p) * y[i];
            for (std::size_t q = 0; q <= p; ++q)
                a(p, q) += X(i, p) * X(i, q);
        }
    }
    for (std::size_t p = 0; p < m; ++p)
        for (std::size_t q = p + 1; q < m; ++q) a(p, q) = a(q, p);

    // Cholesky solve of the normal equations
    double diag_scale = 0.0;
    for (std::size_t p = 0; p < m; ++p) diag_scale = std::max(diag_scale, a(p, p));
    Matrix L(m, m, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double sum = a(i, j);
            for (std::size_t p = 0; p < j; ++p) sum -= L(i, p) * L(j, p);
            if (i == j) {
                if (!(sum > 1e-12 * diag_scale))
                    throw RankDeficient("design matrix is rank deficient");
                L(i, j) = std::sqrt(sum);
            } else {
                L(i, j) = sum / L(j, j);
            }
        }
    }
    std::vector<double> z(m, 0.0), beta(m, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        double sum = rhs[i];
        for (std::size_t p = 0; p < i; ++p) sum -= L(i, p) * z[p];
        z[i] = sum / L(i, i);
    }
    for (std::size_t ii = m; ii-- > 0;) {
        double sum = z[ii];
        for (std::size_t p = ii + 1; p < m; ++p) sum -= L(p, ii) * beta[p];
        beta[ii] = sum / L(ii, ii);
    }
    return beta;
}

namespace {

struct RegressionObjective {
    const ScoreFamily& family;
    const Matrix& X;
    std::span<const double> y;
    double epsilon;
    std::vector<double> weights;
    mutable std::vector<double> fitted;
    mutable std::vector<double> scores;
    mutable bool degenerate_seen = false;

    RegressionObjective(const ScoreFamily& f, const Matrix& x,
                        std::span<const double> yy, double eps)
        : family(f), X(x), y(yy),
          epsilon(eps), weights(x.rows, 1.0 / static_cast<double>(x.rows)),
          fitted(x.rows), scores(x.rows) {}

    bool feasible(std::span<const double> beta) const {
        for (std::size_t i = 0; i < X.rows; ++i) {
            double r = 0.0;
            for (std::size_t j = 0; j < X.cols; ++j)
                r += X(i, j) * beta[j];
            fitted[i] = r;
            if (!family.admissible(r, y[i])) return false;
        }
        return true;
    }

    // feasible() must have filled fitted for this beta
    TiltSolution tilt() const {
        for (std::size_t i = 0; i < X.rows; ++i)
            scores[i] = family.eval(fitted[i], y[i]);
        TiltSolution ts = solve_tilt(scores, weights, epsilon);
        if (ts.degenerate) degenerate_seen = true;
        return ts;
    }

    std::vector<double> gradient(const TiltSolution& ts) const {
        std::vector<double> g(X.cols, 0.0);
        for (std::size_t i = 0; i < X.rows; ++i) {
            const double gi =
                ts.tilted_weights[i] * family.grad1(fitted[i], y[i]);
            for (std::size_t j = 0; j < X.cols; ++j) g[j] += gi * X(i, j);
        }
        return g;
    }

    double mse(std::span<const double> beta) const {
        double acc = 0.0;
        for (std::size_t i = 0; i < X.rows; ++i) {
            double r = 0.0;
            for (std::size_t j = 0; j < X.cols; ++j)
                r += X(i, j) * beta[j];
            const double e = y[i] - r;
            acc += weights[i] * e * e;
        }
        return acc;
    }
};

} // namespace

RegressionFit robust_regression(const ScoreFamily& family, const Matrix& X,
                                std::span<const double> y, double epsilon,
                                std::optional<std::span<const double>> init) {
    if (family.dim() != 1)
        throw DomainError("one-dimensional family required");
    if (epsilon < 0.0) throw BadEpsilon("epsilon must be nonnegative");

    RegressionFit fit;
    fit.epsilon = epsilon;

    std::vector<double> beta = least_squares(X, y);
    if (init) {
        if (init->size() != X.cols)
            throw ShapeMismatch("warm start has wrong dimension");
        beta.assign(init->begin(), init->end());
    }

    RegressionObjective obj(family, X, y, epsilon);
    if (!obj.feasible(beta))
        throw DomainError(
            "starting coefficients leave the score's action domain");

    TiltSolution ts = obj.tilt();
    double f = ts.value;
    std::vector<double> grad = obj.gradient(ts);

    const int max_iter = 10000;
    SolverDiagnostics& diag = fit.diagnostics;
    diag.converged = false;
    std::vector<double> trial(beta.size());
    for (int it = 0; it < max_iter; ++it) {
        ++diag.iterations;
        double gnorm = 0.0;
        for (double g : grad) gnorm += g * g;
        gnorm = std::sqrt(gnorm);
        ++diag.derivative_evals;
        if (gnorm <= 1e-8 * std::max(1.0, std::fabs(f))) {
            diag.converged = true;
            break;
        }

        // backtracking line search with an Armijo condition; infeasible
        // steps count as insufficient decrease
        double step = 1.0;
        bool accepted = false;
        for (int h = 0; h < 60; ++h) {
            for (std::size_t j = 0; j < beta.size(); ++j)
                trial[j] = beta[j] - step * grad[j];
            if (obj.feasible(trial)) {
                const TiltSolution cand = obj.tilt();
                if (cand.value <= f - 1e-4 * step * gnorm * gnorm) {
                    beta = trial;
                    f = cand.value;
                    ts = cand;
                    grad = obj.gradient(ts);
                    accepted = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if (!accepted) break; // no admissible descent step at this scale
    }

    obj.feasible(beta);
    fit.beta = beta;
    fit.mse = obj.mse(beta);
    fit.eta_star = ts.eta_star;
    diag.degenerate_hit = obj.degenerate_seen;
    return fit;
}

} // namespace refl
