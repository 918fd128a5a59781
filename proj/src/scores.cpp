#include "refl/scores.hpp"

#include <cmath>
#include <limits>

namespace refl {

namespace {

void check_level(double v, const char* name) {
    if (!(v > 0.0 && v < 1.0))
        throw RangeError(std::string(name) + " must lie in (0,1)");
}

// g of the homogeneous quantile score, increasing on its domain.
double var_g(double x, double b, const ScoreConstants& c) {
    if (b > 0.0) {
        if (x > 0.0) return c.d1 * std::pow(x, b);
        if (x < 0.0) return -c.d2 * std::pow(-x, b);
        return 0.0;
    }
    if (b == 0.0) return c.d * std::log(x);
    return -c.d * std::pow(x, b);
}

double var_g_prime(double x, double b, const ScoreConstants& c) {
    if (b > 0.0) {
        if (x > 0.0) return c.d1 * b * std::pow(x, b - 1.0);
        if (x < 0.0) return c.d2 * b * std::pow(-x, b - 1.0);
        // right derivative at 0: finite only for b >= 1
        if (b == 1.0) return c.d1;
        return b > 1.0 ? 0.0 : std::numeric_limits<double>::infinity();
    }
    if (b == 0.0) return c.d / x;
    return -c.d * b * std::pow(x, b - 1.0);
}

// Patton-family score for the mean, z, y in the action domain.
double mean_eval(double z, double y, double b) {
    if (b == 2.0) return 0.5 * (y - z) * (y - z);
    if (b == 0.0) return y / z - std::log(y / z) - 1.0;
    if (b == 1.0) return y * std::log(y / z) - (y - z);
    return (std::pow(y, b) - std::pow(z, b)) / (b * (b - 1.0)) -
           std::pow(z, b - 1.0) / (b - 1.0) * (y - z);
}

// All branches share the closed form z^(b-2) (z - y).
double mean_grad(double z, double y, double b) {
    if (b == 2.0) return z - y;
    if (b == 1.0) return (z - y) / z;
    if (b == 0.0) return (z - y) / (z * z);
    return std::pow(z, b - 2.0) * (z - y);
}

// G1 and its derivative for the (VaR, ES) score, case b in (0,1).
double ves_G1(double x, double b, const ScoreConstants& c) {
    if (b < 0.0) return -c.c0;
    const double s = x >= 0.0 ? c.d1 : -c.d2;
    return s * std::pow(std::fabs(x), b) - c.c0;
}

double ves_G1_prime(double x, double b, const ScoreConstants& c) {
    if (b < 0.0) return 0.0;
    const double s = x >= 0.0 ? c.d1 : c.d2;
    return s * b * std::pow(std::fabs(x), b - 1.0);
}

// G2 = (d/dx) script-G2 where script-G2 is c1 x^b + c0 for b in (0,1) and
// -c1 x^b + c0 for b < 0; strictly increasing and strictly concave either
// way, so G2 > 0 and G2' < 0 on x > 0.
double ves_G2(double x, double b, double c1) {
    const double v = c1 * b * std::pow(x, b - 1.0);
    return b > 0.0 ? v : -v;
}

double ves_G2_prime(double x, double b, double c1) {
    const double v = c1 * b * (b - 1.0) * std::pow(x, b - 2.0);
    return b > 0.0 ? v : -v;
}

double ves_script_G2(double x, double b, const ScoreConstants& c) {
    const double v = c.c1 * std::pow(x, b);
    return (b > 0.0 ? v : -v) + c.c0;
}

} // namespace

ScoreFamily ScoreFamily::mean_patton(double b) {
    ScoreFamily f;
    f.kind_ = ScoreKind::MeanPatton;
    f.b_ = b;
    f.dim_ = 1;
    // The non-quadratic branches involve powers and logs and need z, y > 0;
    // b = 2 is the squared-error score and lives on all of R^2.
    f.domain_ = b == 2.0 ? ActionDomain::AllReals : ActionDomain::PositiveReals;
    return f;
}

ScoreFamily ScoreFamily::var_homogeneous(double b, double alpha,
                                         const ScoreConstants& c) {
    check_level(alpha, "alpha");
    if (b > 0.0) {
        if (!(c.d1 > 0.0) || !(c.d2 > 0.0))
            throw BadConstant("d1 and d2 must be positive");
    } else if (!(c.d > 0.0)) {
        throw BadConstant("d must be positive");
    }
    ScoreFamily f;
    f.kind_ = ScoreKind::VarHomogeneous;
    f.b_ = b;
    f.alpha_ = alpha;
    f.dim_ = 1;
    f.domain_ =
        b > 0.0 ? ActionDomain::AllReals : ActionDomain::PositiveReals;
    f.constants_ = c;
    return f;
}

ScoreFamily ScoreFamily::expectile(double b, double tau) {
    check_level(tau, "tau");
    ScoreFamily f;
    f.kind_ = ScoreKind::Expectile;
    f.b_ = b;
    f.tau_ = tau;
    f.dim_ = 1;
    f.domain_ = b == 2.0 ? ActionDomain::AllReals : ActionDomain::PositiveReals;
    return f;
}

ScoreFamily ScoreFamily::var_es_joint(double b, double alpha,
                                      const ScoreConstants& c) {
    check_level(alpha, "alpha");
    if (b == 0.0 || b >= 1.0)
        throw UnsupportedDegree(
            "no positively homogeneous (VaR, ES) score of degree b = 0 or "
            "b >= 1; use b in (0,1) or b < 0");
    if (!(c.c1 > 0.0)) throw BadConstant("c1 must be positive");
    if (b > 0.0 && (c.d1 < 0.0 || c.d2 < 0.0))
        throw BadConstant("d1 and d2 must be nonnegative");
    ScoreFamily f;
    f.kind_ = ScoreKind::VarEsJoint;
    f.b_ = b;
    f.alpha_ = alpha;
    f.dim_ = 2;
    f.domain_ = ActionDomain::PositiveReals;
    f.constants_ = c;
    return f;
}

ScoreFamily ScoreFamily::make(const ScoreParams& p) {
    if (p.kind == "mean") return mean_patton(p.b);
    if (p.kind == "var") return var_homogeneous(p.b, p.alpha, p.constants);
    if (p.kind == "expectile") return expectile(p.b, p.tau);
    if (p.kind == "vares") return var_es_joint(p.b, p.alpha, p.constants);
    throw BadSpec("unknown score kind '" + p.kind +
                  "' (expected mean, var, expectile or vares)");
}

bool ScoreFamily::admissible(double z, double y) const {
    if (dim_ != 1) return false;
    if (domain_ == ActionDomain::PositiveReals) return z > 0.0 && y > 0.0;
    return true;
}

bool ScoreFamily::admissible(std::span<const double> z, double y) const {
    if (static_cast<int>(z.size()) != dim_) return false;
    if (dim_ == 1) return admissible(z[0], y);
    // (VaR, ES) predictions must be positive; losses may touch zero, which
    // happens whenever every line stays below its deductible.
    return z[0] > 0.0 && z[1] > 0.0 && y >= 0.0;
}

void ScoreFamily::require_domain(double z, double y) const {
    if (!admissible(z, y))
        throw DomainError("score family requires z > 0 and y > 0");
}

void ScoreFamily::require_domain2(double z1, double z2, double y) const {
    const std::array<double, 2> z{z1, z2};
    if (!admissible(std::span<const double>(z), y))
        throw DomainError(
            "joint (VaR, ES) score requires z1 > 0, z2 > 0 and y >= 0");
}

double ScoreFamily::eval(double z, double y) const {
    switch (kind_) {
    case ScoreKind::MeanPatton:
        require_domain(z, y);
        return mean_eval(z, y, b_);
    case ScoreKind::VarHomogeneous:
        require_domain(z, y);
        return (static_cast<double>(y <= z) - alpha_) *
               (var_g(z, b_, constants_) - var_g(y, b_, constants_));
    case ScoreKind::Expectile: {
        require_domain(z, y);
        const double w = y <= z ? 1.0 - tau_ : tau_;
        return w * mean_eval(z, y, b_);
    }
    case ScoreKind::VarEsJoint:
        throw DomainError("two-dimensional family: pass both coordinates");
    }
    return 0.0; // unreachable
}

double ScoreFamily::eval(std::span<const double> z, double y) const {
    if (static_cast<int>(z.size()) != dim_)
        throw LengthMismatch("prediction dimension mismatch");
    if (dim_ == 1) return eval(z[0], y);
    const double z1 = z[0], z2 = z[1];
    require_domain2(z1, z2, y);
    const double g2 = ves_G2(z2, b_, constants_.c1);
    double s = (1.0 - alpha_) *
               (ves_G1(z1, b_, constants_) - g2 * (z2 - z1) +
                ves_script_G2(z2, b_, constants_));
    if (y > z1)
        s += -ves_G1(z1, b_, constants_) + ves_G1(y, b_, constants_) +
             g2 * (y - z1);
    return s;
}

double ScoreFamily::grad1(double z, double y) const {
    switch (kind_) {
    case ScoreKind::MeanPatton:
        require_domain(z, y);
        return mean_grad(z, y, b_);
    case ScoreKind::VarHomogeneous:
        require_domain(z, y);
        return (static_cast<double>(y <= z) - alpha_) *
               var_g_prime(z, b_, constants_);
    case ScoreKind::Expectile: {
        require_domain(z, y);
        const double w = y <= z ? 1.0 - tau_ : tau_;
        return w * mean_grad(z, y, b_);
    }
    case ScoreKind::VarEsJoint:
        throw DomainError("two-dimensional family: use grad2");
    }
    return 0.0; // unreachable
}

std::array<double, 2> ScoreFamily::grad2(double z1, double z2,
                                         double y) const {
    if (kind_ != ScoreKind::VarEsJoint)
        throw DomainError("grad2 is only defined for the (VaR, ES) family");
    require_domain2(z1, z2, y);
    const double g1p = ves_G1_prime(z1, b_, constants_);
    const double g2 = ves_G2(z2, b_, constants_.c1);
    const double g2p = ves_G2_prime(z2, b_, constants_.c1);
    const double exceed = y > z1 ? 1.0 : 0.0;
    const double d1 =
        exceed * (-g1p - g2) + (1.0 - alpha_) * (g1p + g2);
    const double d2 =
        g2p * (exceed * (y - z1) - (1.0 - alpha_) * (z2 - z1));
    return {d1, d2};
}

void ScoreFamily::grad(std::span<const double> z, double y,
                       std::span<double> out) const {
    if (static_cast<int>(z.size()) != dim_ ||
        static_cast<int>(out.size()) != dim_)
        throw LengthMismatch("prediction dimension mismatch");
    if (dim_ == 1) {
        out[0] = grad1(z[0], y);
        return;
    }
    const auto g = grad2(z[0], z[1], y);
    out[0] = g[0];
    out[1] = g[1];
}

std::vector<double>
ScoreFamily::precompute_atoms(std::span<const double> y) const {
    std::vector<double> pre(y.size());
    switch (kind_) {
    case ScoreKind::MeanPatton:
    case ScoreKind::Expectile:
        for (std::size_t i = 0; i < y.size(); ++i) {
            if (domain_ == ActionDomain::PositiveReals && !(y[i] > 0.0))
                throw DomainError("score family requires y > 0");
            if (b_ == 2.0)
                pre[i] = y[i];
            else if (b_ == 0.0)
                pre[i] = std::log(y[i]);
            else if (b_ == 1.0)
                pre[i] = y[i] * std::log(y[i]);
            else
                pre[i] = std::pow(y[i], b_);
        }
        return pre;
    case ScoreKind::VarHomogeneous:
        for (std::size_t i = 0; i < y.size(); ++i) {
            if (domain_ == ActionDomain::PositiveReals && !(y[i] > 0.0))
                throw DomainError("score family requires y > 0");
            pre[i] = var_g(y[i], b_, constants_);
        }
        return pre;
    case ScoreKind::VarEsJoint:
        for (std::size_t i = 0; i < y.size(); ++i) {
            if (!(y[i] >= 0.0))
                throw DomainError("joint (VaR, ES) score requires y >= 0");
            pre[i] = ves_G1(y[i], b_, constants_);
        }
        return pre;
    }
    return pre; // unreachable
}

void ScoreFamily::eval_batch(std::span<const double> z,
                             std::span<const double> y,
                             std::span<const double> pre,
                             std::span<double> out) const {
    if (static_cast<int>(z.size()) != dim_)
        throw LengthMismatch("prediction dimension mismatch");
    if (y.size() != pre.size() || y.size() != out.size())
        throw LengthMismatch("sample length mismatch");

    if (dim_ == 2) {
        const double z1 = z[0], z2 = z[1];
        require_domain2(z1, z2, y.empty() ? 0.0 : y[0]);
        const double g1z = ves_G1(z1, b_, constants_);
        const double g2 = ves_G2(z2, b_, constants_.c1);
        const double tail = (1.0 - alpha_) *
                            (g1z - g2 * (z2 - z1) +
                             ves_script_G2(z2, b_, constants_));
        for (std::size_t i = 0; i < y.size(); ++i)
            out[i] = tail + (y[i] > z1
                                 ? -g1z + pre[i] + g2 * (y[i] - z1)
                                 : 0.0);
        return;
    }

    const double zz = z[0];
    if (domain_ == ActionDomain::PositiveReals && !(zz > 0.0))
        throw DomainError("score family requires z > 0");

    if (kind_ == ScoreKind::VarHomogeneous) {
        const double gz = var_g(zz, b_, constants_);
        for (std::size_t i = 0; i < y.size(); ++i)
            out[i] = (static_cast<double>(y[i] <= zz) - alpha_) *
                     (gz - pre[i]);
        return;
    }

    // Patton mean branches, with the expectile weight when applicable
    const bool weighted = kind_ == ScoreKind::Expectile;
    if (b_ == 2.0) {
        for (std::size_t i = 0; i < y.size(); ++i) {
            const double v = 0.5 * (y[i] - zz) * (y[i] - zz);
            out[i] = weighted ? (y[i] <= zz ? 1.0 - tau_ : tau_) * v : v;
        }
        return;
    }
    if (b_ == 0.0) {
        const double logz = std::log(zz);
        for (std::size_t i = 0; i < y.size(); ++i) {
            const double v = y[i] / zz - pre[i] + logz - 1.0;
            out[i] = weighted ? (y[i] <= zz ? 1.0 - tau_ : tau_) * v : v;
        }
        return;
    }
    if (b_ == 1.0) {
        const double logz = std::log(zz);
        for (std::size_t i = 0; i < y.size(); ++i) {
            const double v = pre[i] - y[i] * logz - (y[i] - zz);
            out[i] = weighted ? (y[i] <= zz ? 1.0 - tau_ : tau_) * v : v;
        }
        return;
    }
    const double zb = std::pow(zz, b_);
    const double zb1 = std::pow(zz, b_ - 1.0);
    const double inv_bb1 = 1.0 / (b_ * (b_ - 1.0));
    const double inv_b1 = 1.0 / (b_ - 1.0);
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double v =
            (pre[i] - zb) * inv_bb1 - zb1 * inv_b1 * (y[i] - zz);
        out[i] = weighted ? (y[i] <= zz ? 1.0 - tau_ : tau_) * v : v;
    }
}

} // namespace refl
