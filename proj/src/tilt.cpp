#include "refl/tilt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace refl {

namespace {

void check_sample(std::span<const double> s, std::span<const double> w) {
    if (s.empty()) throw EmptyInput("empty score sample");
    if (s.size() != w.size())
        throw LengthMismatch("scores and weights differ in length");
}

void check_weights(std::span<const double> w) {
    double sum = 0.0;
    for (double wi : w) {
        if (!(wi >= 0.0)) throw BadWeights("weights must be nonnegative");
        sum += wi;
    }
    if (std::fabs(sum - 1.0) > 1e-9)
        throw BadWeights("weights must sum to one");
}

// K, K' and K'' (the tilted variance) in one pass, shifted by smax.
struct CgfValues {
    double k;
    double kprime;
    double ksecond;
};

CgfValues cgf_all(std::span<const double> s, std::span<const double> w,
                  double eta, double smax) {
    double z = 0.0, m1 = 0.0, m2 = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double e = w[i] * std::exp(eta * (s[i] - smax));
        z += e;
        m1 += e * s[i];
        m2 += e * s[i] * s[i];
    }
    if (!(z > 0.0) || !std::isfinite(z))
        throw NonFinite("cumulant generating function overflowed");
    const double mean = m1 / z;
    CgfValues out;
    out.k = eta * smax + std::log(z);
    out.kprime = mean;
    out.ksecond = std::max(0.0, m2 / z - mean * mean);
    return out;
}

double max_score(std::span<const double> s) {
    double m = -std::numeric_limits<double>::infinity();
    for (double v : s) {
        if (!std::isfinite(v)) throw NonFinite("non-finite score value");
        m = std::max(m, v);
    }
    return m;
}

} // namespace

EmpiricalDistribution::EmpiricalDistribution(std::vector<double> atoms_,
                                             std::vector<double> weights_)
    : atoms(std::move(atoms_)), weights(std::move(weights_)) {
    if (atoms.empty()) throw EmptyInput("empty sample");
    if (atoms.size() != weights.size())
        throw LengthMismatch("atoms and weights differ in length");
    for (double a : atoms)
        if (!std::isfinite(a)) throw NonFinite("non-finite atom");
    check_weights(weights);
    double sum = 0.0;
    for (double wi : weights) sum += wi;
    for (double& wi : weights) wi /= sum;
}

EmpiricalDistribution
EmpiricalDistribution::uniform(std::vector<double> atoms_) {
    const std::size_t n = atoms_.size();
    if (n == 0) throw EmptyInput("empty sample");
    return EmpiricalDistribution(std::move(atoms_),
                                 std::vector<double>(n, 1.0 / n));
}

std::pair<double, double> cgf_and_prime(std::span<const double> s,
                                        std::span<const double> w,
                                        double eta) {
    check_sample(s, w);
    check_weights(w);
    const auto v = cgf_all(s, w, eta, max_score(s));
    return {v.k, v.kprime};
}

double kl_at(std::span<const double> s, std::span<const double> w,
             double eta) {
    check_sample(s, w);
    check_weights(w);
    if (eta < 0.0) throw BadEpsilon("eta must be nonnegative");
    const auto v = cgf_all(s, w, eta, max_score(s));
    return eta * v.kprime - v.k;
}

TiltSolution solve_tilt(std::span<const double> s,
                        std::span<const double> w, double epsilon,
                        double eta_hint) {
    check_sample(s, w);
    check_weights(w);
    if (epsilon < 0.0) throw BadEpsilon("epsilon must be nonnegative");

    const std::size_t n = s.size();
    const double smax = max_score(s);
    double smin = smax;
    for (double v : s) smin = std::min(smin, v);
    const double sscale = std::max(1.0, std::fabs(smax));
    const double argmax_cut = smax - 1e-12 * sscale;

    TiltSolution out;
    double pi_hat = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        if (s[i] >= argmax_cut) pi_hat += w[i];
    out.pi_hat = pi_hat;

    if (epsilon == 0.0) {
        out.eta_star = 0.0;
        out.tilted_weights.assign(w.begin(), w.end());
        out.kl_achieved = 0.0;
        double v = 0.0;
        for (std::size_t i = 0; i < n; ++i) v += w[i] * s[i];
        out.value = v;
        return out;
    }

    if (smax - smin <= 1e-14 * sscale) {
        // constant scores: every feasible measure yields the same value
        out.eta_star = 0.0;
        out.tilted_weights.assign(w.begin(), w.end());
        out.kl_achieved = 0.0;
        out.value = smax;
        out.degenerate = true;
        return out;
    }

    const double kl_cap = -std::log(pi_hat);

    auto degenerate_solution = [&] {
        out.eta_star = std::numeric_limits<double>::infinity();
        out.tilted_weights.assign(n, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            if (s[i] >= argmax_cut) out.tilted_weights[i] = w[i] / pi_hat;
        out.kl_achieved = kl_cap;
        out.value = smax;
        out.degenerate = true;
        return out;
    };

    if (epsilon >= kl_cap) return degenerate_solution();

    // Bracket [lo, hi] with d(lo) < eps <= d(hi); d(eta) = eta K' - K is
    // strictly increasing and tends to kl_cap > eps, so a finite hi exists.
    const double range = smax - smin;
    double lo = 0.0;
    double hi = 1.0 / range;
    if (eta_hint > 0.0 && std::isfinite(eta_hint))
        hi = std::max(hi, 2.0 * eta_hint);
    int iters = 0;
    auto d_at = [&](double eta, double& dprime) {
        const auto v = cgf_all(s, w, eta, smax);
        dprime = eta * v.ksecond;
        ++iters;
        return eta * v.kprime - v.k;
    };
    double dp_hi = 0.0;
    double d_hi = d_at(hi, dp_hi);
    int doublings = 0;
    while (d_hi < epsilon) {
        lo = hi;
        hi *= 2.0;
        d_hi = d_at(hi, dp_hi);
        if (++doublings > 400) return degenerate_solution();
    }

    // Newton from the hint or a small-eta quadratic guess, bisection
    // fallback inside the bracket, until |d(eta) - eps| <= 1e-10.
    double eta = eta_hint;
    if (!(eta > lo && eta < hi)) {
        const auto base = cgf_all(s, w, 0.0, smax);
        eta = base.ksecond > 0.0 ? std::sqrt(2.0 * epsilon / base.ksecond)
                                 : 0.5 * (lo + hi);
        if (!(eta > lo && eta < hi)) eta = 0.5 * (lo + hi);
    }

    const double tol = 1e-10;
    double dval = 0.0, dprime = 0.0;
    for (int k = 0; k < 300; ++k) {
        dval = d_at(eta, dprime);
        if (std::fabs(dval - epsilon) <= tol) break;
        if (dval < epsilon)
            lo = eta;
        else
            hi = eta;
        double next = dprime > 0.0 ? eta - (dval - epsilon) / dprime : 0.0;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (hi - lo <= 1e-15 * std::max(1.0, hi)) {
            eta = 0.5 * (lo + hi);
            dval = d_at(eta, dprime);
            break;
        }
        eta = next;
    }

    out.eta_star = eta;
    out.iterations = iters;
    out.kl_achieved = dval;
    out.degenerate = false;
    out.tilted_weights.assign(n, 0.0);
    double norm = 0.0, m1 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double e = w[i] * std::exp(eta * (s[i] - smax));
        out.tilted_weights[i] = e;
        norm += e;
        m1 += e * s[i];
    }
    for (double& q : out.tilted_weights) q /= norm;
    out.value = m1 / norm;
    return out;
}

TiltSolution worst_case_expectation(const ScoreFamily& family,
                                    const EmpiricalDistribution& dist,
                                    std::span<const double> z,
                                    double epsilon) {
    std::vector<double> s(dist.size());
    for (std::size_t i = 0; i < dist.size(); ++i)
        s[i] = family.eval(z, dist.atoms[i]);
    return solve_tilt(s, dist.weights, epsilon);
}

TiltSolution worst_case_expectation(const ScoreFamily& family,
                                    const EmpiricalDistribution& dist,
                                    double z, double epsilon) {
    const std::array<double, 1> zz{z};
    return worst_case_expectation(family, dist,
                                  std::span<const double>(zz), epsilon);
}

} // namespace refl
