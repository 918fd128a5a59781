#include "refl/oracle.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#include "refl/rng.hpp"

namespace refl {
namespace oracle {

namespace {

double kl_between(std::span<const double> q, std::span<const double> w) {
    double acc = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) {
        if (q[i] <= 0.0) continue;
        if (w[i] <= 0.0) return std::numeric_limits<double>::infinity();
        acc += q[i] * std::log(q[i] / w[i]);
    }
    return std::max(0.0, acc);
}

double dot(std::span<const double> a, std::span<const double> b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

// Euclidean projection onto the probability simplex (support of w only).
void project_simplex(std::vector<double>& q, std::span<const double> w) {
    const std::size_t n = q.size();
    for (std::size_t i = 0; i < n; ++i)
        if (w[i] <= 0.0) q[i] = 0.0;
    std::vector<double> u;
    u.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        if (w[i] > 0.0) u.push_back(q[i]);
    std::sort(u.begin(), u.end(), std::greater<>());
    double cum = 0.0, theta = 0.0;
    std::size_t k = 0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        cum += u[i];
        const double t = (cum - 1.0) / static_cast<double>(i + 1);
        if (u[i] - t > 0.0) {
            theta = t;
            k = i + 1;
        }
    }
    (void)k;
    for (std::size_t i = 0; i < n; ++i)
        q[i] = w[i] > 0.0 ? std::max(0.0, q[i] - theta) : 0.0;
}

// Pull an infeasible point back into the KL ball along the mixed path
// q(t)_i proportional to q_i^t w_i^(1-t); t = 0 is the baseline.
void kl_pullback(std::vector<double>& q, std::span<const double> w,
                 double eps) {
    if (kl_between(q, w) <= eps) return;
    const std::size_t n = q.size();
    std::vector<double> mix(n);
    auto at = [&](double t) {
        double norm = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (w[i] <= 0.0 || q[i] <= 0.0) {
                // t < 1 puts weight back on every baseline atom
                mix[i] = w[i] > 0.0
                             ? std::pow(w[i], 1.0 - t) *
                                   std::pow(1e-300, t)
                             : 0.0;
            } else {
                mix[i] = std::pow(q[i], t) * std::pow(w[i], 1.0 - t);
            }
            norm += mix[i];
        }
        for (double& v : mix) v /= norm;
    };
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 80; ++it) {
        const double mid = 0.5 * (lo + hi);
        at(mid);
        if (kl_between(mix, w) <= eps)
            lo = mid;
        else
            hi = mid;
    }
    at(lo);
    q = mix;
}

// Ascent along the objective gradient, projected onto the tangent space of
// the active KL sphere so progress is not erased by the pullback. The
// direction solves d = s - mu grad(KL) - nu 1 with <d, grad(KL)> = 0 and
// sum d = 0; at the optimum s lies in the span of grad(KL) and 1, so d
// vanishes exactly at stationarity.
void tangent_ascent(std::vector<double>& q, std::span<const double> s,
                    std::span<const double> w, double eps) {
    const std::size_t n = q.size();
    std::vector<double> d(n), trial(n);
    double lambda = 1.0;
    for (int it = 0; it < 4000; ++it) {
        const double val = dot(q, s);
        const bool boundary = kl_between(q, w) >= eps - 1e-12;
        if (!boundary) {
            double smean = 0.0;
            int cnt = 0;
            for (std::size_t i = 0; i < n; ++i)
                if (w[i] > 0.0) {
                    smean += s[i];
                    ++cnt;
                }
            smean /= std::max(1, cnt);
            for (std::size_t i = 0; i < n; ++i)
                d[i] = w[i] > 0.0 ? s[i] - smean : 0.0;
        } else {
            double gg = 0.0, g1 = 0.0, sg = 0.0, s1 = 0.0;
            int cnt = 0;
            std::vector<double> g(n, 0.0);
            for (std::size_t i = 0; i < n; ++i) {
                if (w[i] <= 0.0) continue;
                g[i] = std::log(std::max(q[i], 1e-300) / w[i]) + 1.0;
                gg += g[i] * g[i];
                g1 += g[i];
                sg += s[i] * g[i];
                s1 += s[i];
                ++cnt;
            }
            const double det = gg * cnt - g1 * g1;
            double mu = 0.0, nu = 0.0;
            if (std::fabs(det) > 1e-14 * std::max(1.0, gg * cnt)) {
                mu = (sg * cnt - s1 * g1) / det;
                nu = (gg * s1 - g1 * sg) / det;
            } else {
                nu = s1 / std::max(1, cnt);
            }
            for (std::size_t i = 0; i < n; ++i)
                d[i] = w[i] > 0.0 ? s[i] - mu * g[i] - nu : 0.0;
        }
        double dnorm = 0.0;
        for (double v : d) dnorm = std::max(dnorm, std::fabs(v));
        if (dnorm < 1e-14) return;

        bool accepted = false;
        for (int h = 0; h < 50; ++h) {
            double norm = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                // the optimum is interior whenever w_i > 0, so steps shrink
                // a coordinate at most geometrically instead of zeroing it
                trial[i] = std::max(q[i] + lambda * d[i], 0.1 * q[i]);
                norm += trial[i];
            }
            for (double& v : trial) v /= norm;
            kl_pullback(trial, w, eps);
            if (dot(trial, s) > val + 1e-15) {
                q = trial;
                accepted = true;
                lambda = std::min(lambda * 2.0, 1e3);
                break;
            }
            lambda *= 0.5;
        }
        if (!accepted) return;
    }
}

// Moves mass between atom pairs while it pays and stays inside the ball.
void pairwise_polish(std::vector<double>& q, std::span<const double> s,
                     std::span<const double> w, double eps) {
    const std::size_t n = q.size();
    std::vector<double> trial(n);
    for (int sweep = 0; sweep < 200; ++sweep) {
        bool improved = false;
        for (std::size_t i = 0; i < n; ++i) {
            if (q[i] <= 0.0) continue;
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i || w[j] <= 0.0 || s[j] <= s[i]) continue;
                // largest transfer delta from i to j inside the ball
                trial = q;
                trial[i] = 0.0;
                trial[j] = q[j] + q[i];
                double delta = q[i];
                if (kl_between(trial, w) > eps) {
                    double lo = 0.0, hi = q[i];
                    for (int it = 0; it < 60; ++it) {
                        const double mid = 0.5 * (lo + hi);
                        trial = q;
                        trial[i] -= mid;
                        trial[j] += mid;
                        if (kl_between(trial, w) <= eps)
                            lo = mid;
                        else
                            hi = mid;
                    }
                    delta = lo;
                }
                if (delta * (s[j] - s[i]) > 1e-15) {
                    q[i] -= delta;
                    q[j] += delta;
                    improved = true;
                }
            }
        }
        if (!improved) break;
    }
}

} // namespace

OracleReport simplex_worst_case(std::span<const double> s,
                                std::span<const double> w, double eps) {
    const auto t0 = std::chrono::steady_clock::now();
    if (s.empty()) throw EmptyInput("empty score sample");
    if (s.size() != w.size())
        throw LengthMismatch("scores and weights differ in length");
    if (s.size() > 8)
        throw TooManyAtoms("simplex oracle is limited to 8 atoms");
    if (eps < 0.0) throw BadEpsilon("epsilon must be nonnegative");

    const std::size_t n = s.size();
    double smax = -std::numeric_limits<double>::infinity();
    double smin = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i)
        if (w[i] > 0.0) {
            smax = std::max(smax, s[i]);
            smin = std::min(smin, s[i]);
        }
    const double range = std::max(smax - smin, 1e-12);

    std::vector<double> best(w.begin(), w.end());
    double best_value = dot(best, s);

    if (eps == 0.0) {
        // the ball is the singleton {w}
        OracleReport rep;
        rep.value = best_value;
        rep.argmax_weights = std::move(best);
        rep.runtime_ms =
            std::chrono::duration_cast<std::chrono::milliseconds>(
                std::chrono::steady_clock::now() - t0)
                .count();
        return rep;
    }

    auto consider = [&](std::vector<double> q) {
        tangent_ascent(q, s, w, eps);
        pairwise_polish(q, s, w, eps);
        tangent_ascent(q, s, w, eps);
        if (kl_between(q, w) > eps + 1e-9) return;
        const double v = dot(q, s);
        if (v > best_value) {
            best_value = v;
            best = std::move(q);
        }
    };

    // ascent from the baseline and from 50 random interior points
    Rng rng(0x2545f4914f6cdd1dULL);
    for (int start = 0; start < 51; ++start) {
        std::vector<double> q(n, 0.0);
        if (start == 0) {
            q.assign(w.begin(), w.end());
        } else {
            double norm = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                q[i] = w[i] > 0.0 ? rng.exponential() : 0.0;
                norm += q[i];
            }
            for (double& v : q) v /= norm;
            kl_pullback(q, w, eps);
            // a few plain projected-gradient steps diversify the start
            for (int it = 0; it < 20; ++it) {
                const double step = 0.5 / range / (1.0 + it / 5.0);
                for (std::size_t i = 0; i < n; ++i)
                    if (w[i] > 0.0) q[i] += step * s[i];
                project_simplex(q, w);
                kl_pullback(q, w, eps);
            }
        }
        consider(std::move(q));
    }

    // near-vertex optima: start from the baseline renormalised on the k
    // highest-score atoms for every k
    {
        std::vector<std::size_t> order;
        for (std::size_t i = 0; i < n; ++i)
            if (w[i] > 0.0) order.push_back(i);
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b) { return s[a] > s[b]; });
        for (std::size_t k = 1; k <= order.size(); ++k) {
            std::vector<double> q(n, 0.0);
            double mass = 0.0;
            for (std::size_t j = 0; j < k; ++j) mass += w[order[j]];
            for (std::size_t j = 0; j < k; ++j)
                q[order[j]] = w[order[j]] / mass;
            kl_pullback(q, w, eps);
            consider(std::move(q));
        }
    }

    OracleReport rep;
    rep.value = best_value;
    rep.argmax_weights = std::move(best);
    rep.runtime_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                         std::chrono::steady_clock::now() - t0)
                         .count();
    return rep;
}

OracleReport grid_ref(const ScoreFamily& family,
                      const EmpiricalDistribution& dist, double epsilon,
                      std::span<const double> z_grid) {
    const auto t0 = std::chrono::steady_clock::now();
    if (z_grid.size() < 100)
        throw GridTooCoarse("grid search needs at least 100 points");
    double best_z = z_grid[0];
    double best_v = std::numeric_limits<double>::infinity();
    double resolution = 0.0;
    for (std::size_t i = 0; i < z_grid.size(); ++i) {
        if (i > 0)
            resolution = std::max(resolution, z_grid[i] - z_grid[i - 1]);
        if (!family.admissible(z_grid[i], dist.atoms.front())) continue;
        const TiltSolution ts =
            worst_case_expectation(family, dist, z_grid[i], epsilon);
        if (ts.value < best_v) {
            best_v = ts.value;
            best_z = z_grid[i];
        }
    }
    OracleReport rep;
    rep.value = best_v;
    rep.argmin_z = best_z;
    rep.grid_resolution = resolution;
    rep.runtime_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                         std::chrono::steady_clock::now() - t0)
                         .count();
    return rep;
}

double brute_expectile(std::span<const double> atoms,
                       std::span<const double> weights, double tau) {
    if (atoms.empty()) throw EmptyInput("empty sample");
    if (atoms.size() != weights.size())
        throw LengthMismatch("atoms and weights differ in length");
    if (!(tau > 0.0 && tau < 1.0)) throw RangeError("tau in (0,1)");
    double lo = atoms[0], hi = atoms[0];
    for (double a : atoms) {
        lo = std::min(lo, a);
        hi = std::max(hi, a);
    }
    if (hi == lo) return lo;
    auto gap = [&](double e) {
        // tau E[(Y-e)_+] - (1-tau) E[(e-Y)_+], strictly decreasing in e
        double above = 0.0, below = 0.0;
        for (std::size_t i = 0; i < atoms.size(); ++i) {
            if (atoms[i] > e)
                above += weights[i] * (atoms[i] - e);
            else
                below += weights[i] * (e - atoms[i]);
        }
        return tau * above - (1.0 - tau) * below;
    };
    for (int it = 0; it < 200 && hi - lo > 1e-12; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (gap(mid) > 0.0)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

} // namespace oracle
} // namespace refl
