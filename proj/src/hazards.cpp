#include "recursim/hazards.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "recursim/errors.hpp"

namespace recursim {

namespace {

void require_positive(double value, const char* name) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    std::ostringstream os;
    os << "baseline hazard parameter " << name << " must be positive and finite, got " << value;
    throw ConfigError(os.str(), std::string("model.baseline.") + name);
  }
}

}  // namespace

BaselineHazard BaselineHazard::constant(double lambda) {
  require_positive(lambda, "lambda");
  return BaselineHazard(HazardKind::Constant, lambda, 1.0);
}

BaselineHazard BaselineHazard::weibull(double lambda, double nu) {
  require_positive(lambda, "lambda");
  require_positive(nu, "nu");
  return BaselineHazard(HazardKind::Weibull, lambda, nu);
}

std::string BaselineHazard::describe() const {
  std::ostringstream os;
  if (kind_ == HazardKind::Constant) {
    os << "Constant(lambda=" << lambda_ << ")";
  } else {
    os << "Weibull(lambda=" << lambda_ << ", nu=" << nu_ << ")";
  }
  return os.str();
}

double hazard_at(const BaselineHazard& baseline, double t) {
  if (!(t >= 0.0)) {
    throw DomainError("hazard evaluated at negative time");
  }
  if (baseline.kind() == HazardKind::Constant) {
    return baseline.lambda();
  }
  const double nu = baseline.nu();
  if (nu < 1.0 && t == 0.0) {
    throw DomainError("Weibull hazard with shape < 1 is singular at t = 0");
  }
  return baseline.lambda() * nu * std::pow(t, nu - 1.0);
}

double hazard_at_floored(const BaselineHazard& baseline, double t, double offset) {
  if (baseline.nu() < 1.0) {
    t = std::max(t, offset);
  }
  return hazard_at(baseline, t);
}

double cumulative_hazard(const BaselineHazard& baseline, double a, double b) {
  if (a > b) {
    throw ArgumentOrderError("cumulative hazard interval has a > b");
  }
  if (!(a >= 0.0)) {
    throw DomainError("cumulative hazard interval starts before zero");
  }
  if (a == b) {
    return 0.0;
  }
  if (baseline.kind() == HazardKind::Constant) {
    return baseline.lambda() * (b - a);
  }
  const double nu = baseline.nu();
  return baseline.lambda() * (std::pow(b, nu) - std::pow(a, nu));
}

double inverse_cumulative_hazard(const BaselineHazard& baseline, double y) {
  if (!(y >= 0.0)) {
    throw DomainError("inverse cumulative hazard of a negative value");
  }
  if (baseline.kind() == HazardKind::Constant) {
    return y / baseline.lambda();
  }
  return std::pow(y / baseline.lambda(), 1.0 / baseline.nu());
}

double hazard_sup(const BaselineHazard& baseline, double a, double b, double offset) {
  if (a > b) {
    throw ArgumentOrderError("hazard supremum interval has a > b");
  }
  const double nu = baseline.nu();
  if (nu >= 1.0) {
    return hazard_at(baseline, b);
  }
  return hazard_at(baseline, std::max(a, offset));
}

double hazard_upper_bound(const BaselineHazard& baseline, double horizon, double offset) {
  if (!(horizon > 0.0)) {
    throw DomainError("hazard upper bound needs a positive horizon");
  }
  return hazard_sup(baseline, 0.0, std::max(horizon, offset), offset);
}

double bisect_cumulative_hazard(const BaselineHazard& baseline, double y, double horizon) {
  if (!(y >= 0.0)) {
    throw DomainError("inverse cumulative hazard of a negative value");
  }
  if (y == 0.0) {
    return 0.0;
  }
  double hi = horizon > 0.0 ? horizon : 1.0;
  for (int k = 0; k < 2000 && cumulative_hazard(baseline, 0.0, hi) < y; ++k) {
    hi *= 2.0;
  }
  double lo = 0.0;
  double mid = 0.5 * (lo + hi);
  for (int iter = 0; iter < 200; ++iter) {
    mid = 0.5 * (lo + hi);
    const double diff = cumulative_hazard(baseline, 0.0, mid) - y;
    if (std::abs(diff) <= 1e-12) {
      break;
    }
    (diff < 0.0 ? lo : hi) = mid;
  }
  return mid;
}

}  // namespace recursim
