#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "refl/errors.hpp"

namespace refl {

enum class ScoreKind { MeanPatton, VarHomogeneous, Expectile, VarEsJoint };
enum class ActionDomain { AllReals, PositiveReals };

// Constants of the homogeneous score families. d, d1, d2 weight the
// positive/negative branches of the quantile score's g; c0, c1 parameterise
// the (VaR, ES) score's G1 and G2.
struct ScoreConstants {
    double d = 1.0;
    double d1 = 1.0;
    double d2 = 1.0;
    double c0 = 0.0;
    double c1 = 1.0;
};

// Flat parameter record. Mirrors the key/value form accepted on the command
// line and in config files: kind, b, alpha, tau, d, d1, d2, c0, c1.
struct ScoreParams {
    std::string kind = "mean"; // mean | var | expectile | vares
    double b = 2.0;
    double alpha = 0.95;
    double tau = 0.5;
    ScoreConstants constants{};
};

/**
 * A positively b-homogeneous strictly consistent scoring function, S(cz, cy)
 * = c^b S(z, y) for c > 0, together with its analytic z-derivative.
 *
 * Four families are supported:
 *  - MeanPatton: the Patton family for the mean, with branches for
 *    b outside {0,1}, b = 0 and b = 1. b = 2 reduces to (y-z)^2 / 2.
 *  - VarHomogeneous: (1{y<=z} - alpha)(g(z) - g(y)) with the power/log g
 *    branches for b > 0, b = 0, b < 0. b = 1 with d1 = d2 = 1 is the pinball
 *    loss.
 *  - Expectile: |1{y<=z} - tau| times the mean family.
 *  - VarEsJoint: the two-dimensional score eliciting (VaR_alpha, ES_alpha)
 *    jointly, defined for b in (0,1) or b < 0 only.
 *
 * Values are immutable after construction and safe to share across threads.
 */
class ScoreFamily {
  public:
    static ScoreFamily mean_patton(double b);
    static ScoreFamily var_homogeneous(double b, double alpha,
                                       const ScoreConstants& c = {});
    static ScoreFamily expectile(double b, double tau);
    static ScoreFamily var_es_joint(double b, double alpha,
                                    const ScoreConstants& c = {});

    // Validating factory from the flat parameter record.
    static ScoreFamily make(const ScoreParams& params);

    ScoreKind kind() const { return kind_; }
    double b() const { return b_; }
    double alpha() const { return alpha_; }
    double tau() const { return tau_; }
    int dim() const { return dim_; }
    ActionDomain action_domain() const { return domain_; }
    const ScoreConstants& constants() const { return constants_; }

    // True when (z, y) is admissible for this family.
    bool admissible(std::span<const double> z, double y) const;
    bool admissible(double z, double y) const;

    // S(z, y). Scalar overload for one-dimensional families; the span
    // overload accepts dim() coordinates. Throws DomainError outside the
    // action domain.
    double eval(double z, double y) const;
    double eval(std::span<const double> z, double y) const;

    // dS/dz. At the quantile-type kink y = z the indicator is taken
    // left-closed, 1{y<=z} = 1, and the right derivative is returned.
    double grad1(double z, double y) const;
    std::array<double, 2> grad2(double z1, double z2, double y) const;
    void grad(std::span<const double> z, double y,
              std::span<double> out) const;

    // Batch scoring of one prediction against a fixed sample. The per-atom
    // powers and logs depend only on y, so solvers that sweep predictions
    // over the same sample compute them once.
    std::vector<double> precompute_atoms(std::span<const double> y) const;
    void eval_batch(std::span<const double> z, std::span<const double> y,
                    std::span<const double> pre,
                    std::span<double> out) const;

  private:
    ScoreFamily() = default;

    void require_domain(double z, double y) const;
    void require_domain2(double z1, double z2, double y) const;

    ScoreKind kind_ = ScoreKind::MeanPatton;
    double b_ = 2.0;
    double alpha_ = 0.95;
    double tau_ = 0.5;
    int dim_ = 1;
    ActionDomain domain_ = ActionDomain::AllReals;
    ScoreConstants constants_{};
};

} // namespace refl
