#pragma once

#include <string>

namespace recursim {

/// Offset used in place of zero when a decreasing hazard (shape < 1) must be
/// bounded or evaluated near its singularity.
inline constexpr double kSingularityOffset = 1e-6;

enum class HazardKind { Constant, Weibull };

/// Parametric baseline hazard lambda * nu * t^(nu - 1).
///
/// Constant is the nu == 1 member of the family and is kept as a distinct
/// kind so that scenarios can say what they mean. Construct through the
/// factories, which validate the parameters.
class BaselineHazard {
 public:
  static BaselineHazard constant(double lambda);
  static BaselineHazard weibull(double lambda, double nu);

  HazardKind kind() const noexcept { return kind_; }
  double lambda() const noexcept { return lambda_; }
  double nu() const noexcept { return nu_; }

  /// True when the hazard does not depend on time (Constant, or Weibull nu == 1).
  bool is_time_constant() const noexcept { return nu_ == 1.0; }

  std::string describe() const;

  friend bool operator==(const BaselineHazard&, const BaselineHazard&) = default;

 private:
  BaselineHazard(HazardKind kind, double lambda, double nu)
      : kind_(kind), lambda_(lambda), nu_(nu) {}

  HazardKind kind_ = HazardKind::Constant;
  double lambda_ = 1.0;
  double nu_ = 1.0;
};

/// Hazard value at t >= 0. Throws DomainError at t == 0 when nu < 1.
double hazard_at(const BaselineHazard& baseline, double t);

/// Closed-form integral of the hazard over [a, b]. Throws ArgumentOrderError
/// when a > b and DomainError when a < 0.
double cumulative_hazard(const BaselineHazard& baseline, double a, double b);

/// Time w with cumulative_hazard(baseline, 0, w) == y, in closed form.
double inverse_cumulative_hazard(const BaselineHazard& baseline, double y);

/// Finite rate that dominates the hazard on [kSingularityOffset, horizon]
/// (on [0, horizon] when nu >= 1).
double hazard_upper_bound(const BaselineHazard& baseline, double horizon,
                          double offset = kSingularityOffset);

/// Supremum of the hazard over [a, b], with arguments below `offset` raised
/// to `offset` when nu < 1.
double hazard_sup(const BaselineHazard& baseline, double a, double b,
                  double offset = kSingularityOffset);

/// Hazard evaluated at max(t, offset) when nu < 1; plain hazard otherwise.
double hazard_at_floored(const BaselineHazard& baseline, double t,
                         double offset = kSingularityOffset);

/// Numeric inversion of the cumulative hazard by bisection. The bracket
/// [0, horizon * 2^k] is widened until it contains the root; the search stops
/// once |H(w) - y| <= 1e-12 or after 200 halvings. Kept for baseline families
/// without a closed-form inverse and as a cross-check of the closed form.
double bisect_cumulative_hazard(const BaselineHazard& baseline, double y,
                                double horizon = 1.0);

}  // namespace recursim
