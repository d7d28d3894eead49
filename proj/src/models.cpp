#include "recursim/models.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>

#include "quadrature.hpp"
#include "recursim/errors.hpp"

namespace recursim {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kQuadratureTolerance = 1e-10;
constexpr int kQuadratureDepth = 60;

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string_view::npos) {
    return {};
  }
  const auto last = s.find_last_not_of(" \t");
  return std::string(s.substr(first, last - first + 1));
}

double parse_number(const std::string& text) {
  double value = 0.0;
  const auto* begin = text.data();
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end) {
    throw ConfigError("not a number: '" + text + "'");
  }
  return value;
}

}  // namespace

// ---------------------------------------------------------------------------
// FrailtySpec

FrailtySpec FrailtySpec::gamma(double variance) {
  FrailtySpec spec;
  spec.kind = FrailtyKind::Gamma;
  spec.variance = variance;
  spec.validate();
  return spec;
}

FrailtySpec FrailtySpec::lognormal(double variance) {
  FrailtySpec spec;
  spec.kind = FrailtyKind::LogNormal;
  spec.variance = variance;
  spec.validate();
  return spec;
}

FrailtySpec FrailtySpec::binary(double low_value, double high_value, double high_prob) {
  FrailtySpec spec;
  spec.kind = FrailtyKind::Binary;
  spec.low_value = low_value;
  spec.high_value = high_value;
  spec.high_prob = high_prob;
  spec.validate();
  return spec;
}

double FrailtySpec::mean() const {
  if (kind == FrailtyKind::Binary) {
    return low_value * (1.0 - high_prob) + high_value * high_prob;
  }
  return 1.0;
}

double FrailtySpec::second_moment() const {
  switch (kind) {
    case FrailtyKind::None:
      return 1.0;
    case FrailtyKind::Gamma:
    case FrailtyKind::LogNormal:
      return 1.0 + variance;
    case FrailtyKind::Binary:
      return low_value * low_value * (1.0 - high_prob) + high_value * high_value * high_prob;
  }
  return 1.0;
}

bool FrailtySpec::is_degenerate() const {
  return kind == FrailtyKind::None ||
         ((kind == FrailtyKind::Gamma || kind == FrailtyKind::LogNormal) && variance == 0.0);
}

void FrailtySpec::validate() const {
  switch (kind) {
    case FrailtyKind::None:
      return;
    case FrailtyKind::Gamma:
    case FrailtyKind::LogNormal:
      if (!(variance >= 0.0) || !std::isfinite(variance)) {
        throw ConfigError("frailty variance must be a finite nonnegative number", "frailty.variance");
      }
      return;
    case FrailtyKind::Binary:
      if (!(low_value >= 0.0) || !std::isfinite(low_value)) {
        throw ConfigError("binary frailty low_value must be >= 0", "frailty.low_value");
      }
      if (!(high_value > low_value) || !std::isfinite(high_value)) {
        throw ConfigError("binary frailty high_value must exceed low_value", "frailty.high_value");
      }
      if (!(high_prob > 0.0 && high_prob < 1.0)) {
        throw ConfigError("binary frailty high_prob must lie in (0, 1)", "frailty.high_prob");
      }
      return;
  }
}

double draw_frailty(const FrailtySpec& spec, RandomStream& rng) {
  if (spec.is_degenerate()) {
    return 1.0;
  }
  switch (spec.kind) {
    case FrailtyKind::Gamma: {
      std::gamma_distribution<double> dist(1.0 / spec.variance, spec.variance);
      return dist(rng);
    }
    case FrailtyKind::LogNormal: {
      const double sigma2 = std::log1p(spec.variance);
      std::lognormal_distribution<double> dist(-0.5 * sigma2, std::sqrt(sigma2));
      return dist(rng);
    }
    case FrailtyKind::Binary:
      return uniform_open(rng) < spec.high_prob ? spec.high_value : spec.low_value;
    case FrailtyKind::None:
      break;
  }
  return 1.0;
}

// ---------------------------------------------------------------------------
// CatalogFunction

CatalogFunction CatalogFunction::parse(std::string_view text) {
  const std::string s = trim(text);
  const auto open = s.find('(');
  if (open == std::string::npos || s.back() != ')') {
    throw ConfigError("expected constant(c), linear(a, b) or log(a, b), got '" + s + "'");
  }
  const std::string name = trim(std::string_view(s).substr(0, open));
  const std::string inner = s.substr(open + 1, s.size() - open - 2);
  std::vector<double> args;
  std::size_t start = 0;
  while (start <= inner.size()) {
    auto comma = inner.find(',', start);
    if (comma == std::string::npos) {
      comma = inner.size();
    }
    args.push_back(parse_number(trim(std::string_view(inner).substr(start, comma - start))));
    start = comma + 1;
  }
  if (name == "constant" && args.size() == 1) {
    return constant(args[0]);
  }
  if (name == "linear" && args.size() == 2) {
    return linear(args[0], args[1]);
  }
  if (name == "log" && args.size() == 2) {
    return log(args[0], args[1]);
  }
  throw ConfigError("unknown catalog function '" + s + "'");
}

double CatalogFunction::operator()(double x) const {
  switch (kind) {
    case Kind::Constant:
      return a;
    case Kind::Linear:
      return a + b * x;
    case Kind::Log:
      return a + b * std::log(std::max(x, kSingularityOffset));
  }
  return a;
}

double CatalogFunction::sup(double lo, double hi) const {
  return std::max((*this)(lo), (*this)(hi));
}

std::string CatalogFunction::describe() const {
  std::ostringstream os;
  switch (kind) {
    case Kind::Constant:
      os << "constant(" << a << ")";
      break;
    case Kind::Linear:
      os << "linear(" << a << ", " << b << ")";
      break;
    case Kind::Log:
      os << "log(" << a << ", " << b << ")";
      break;
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// EventDependenceSpec

EventDependenceSpec EventDependenceSpec::gap_multiplier(double alpha, std::optional<std::size_t> cap) {
  EventDependenceSpec spec;
  spec.kind = DependenceKind::GapBaselineMultiplier;
  spec.alpha = alpha;
  spec.cap = cap;
  spec.validate();
  return spec;
}

EventDependenceSpec EventDependenceSpec::count(double phi) {
  EventDependenceSpec spec;
  spec.kind = DependenceKind::CountCovariate;
  spec.phi = phi;
  spec.validate();
  return spec;
}

EventDependenceSpec EventDependenceSpec::capped_count(double phi, std::size_t cap) {
  EventDependenceSpec spec;
  spec.kind = DependenceKind::CappedCountCovariate;
  spec.phi = phi;
  spec.cap = cap;
  spec.validate();
  return spec;
}

EventDependenceSpec EventDependenceSpec::decayed_count(double phi) {
  EventDependenceSpec spec;
  spec.kind = DependenceKind::DecayedCountCovariate;
  spec.phi = phi;
  spec.validate();
  return spec;
}

EventDependenceSpec EventDependenceSpec::windowed_rate(double phi, double window) {
  EventDependenceSpec spec;
  spec.kind = DependenceKind::WindowedRateCovariate;
  spec.phi = phi;
  spec.window = window;
  spec.validate();
  return spec;
}

EventDependenceSpec EventDependenceSpec::general(CatalogFunction g0, CatalogFunction g1,
                                                 CatalogFunction g2) {
  EventDependenceSpec spec;
  spec.kind = DependenceKind::General;
  spec.g0 = g0;
  spec.g1 = g1;
  spec.g2 = g2;
  spec.validate();
  return spec;
}

bool EventDependenceSpec::constant_within_gap() const {
  switch (kind) {
    case DependenceKind::None:
    case DependenceKind::GapBaselineMultiplier:
    case DependenceKind::CountCovariate:
    case DependenceKind::CappedCountCovariate:
      return true;
    default:
      return false;
  }
}

void EventDependenceSpec::validate() const {
  switch (kind) {
    case DependenceKind::None:
      return;
    case DependenceKind::GapBaselineMultiplier:
      if (!(alpha > 0.0) || !std::isfinite(alpha)) {
        throw ConfigError("dependence.alpha must be positive and finite", "dependence.alpha");
      }
      if (cap && *cap == 0) {
        throw ConfigError("dependence.cap must be a positive integer", "dependence.cap");
      }
      return;
    case DependenceKind::CappedCountCovariate:
      if (!cap || *cap == 0) {
        throw ConfigError("capped count covariate needs a positive dependence.cap", "dependence.cap");
      }
      [[fallthrough]];
    case DependenceKind::CountCovariate:
    case DependenceKind::DecayedCountCovariate:
      if (!std::isfinite(phi)) {
        throw ConfigError("dependence.phi must be finite", "dependence.phi");
      }
      return;
    case DependenceKind::WindowedRateCovariate:
      if (!std::isfinite(phi)) {
        throw ConfigError("dependence.phi must be finite", "dependence.phi");
      }
      if (!(window > 0.0) || !std::isfinite(window)) {
        throw ConfigError("windowed rate covariate needs dependence.window > 0", "dependence.window");
      }
      return;
    case DependenceKind::General:
      for (const auto* g : {&g0, &g1, &g2}) {
        if (!std::isfinite(g->a) || !std::isfinite(g->b)) {
          throw ConfigError("general intensity function coefficients must be finite", "dependence.g");
        }
      }
      return;
  }
}

// ---------------------------------------------------------------------------
// IntensityModel

void IntensityModel::validate() const {
  frailty.validate();
  dependence.validate();
  if (dependence.kind == DependenceKind::GapBaselineMultiplier && timescale != Timescale::Gap) {
    throw ConfigError("gap baseline multiplier dependence requires the gap timescale",
                      "dependence.kind");
  }
  for (double b : beta) {
    if (!std::isfinite(b)) {
      throw ConfigError("model.beta entries must be finite", "model.beta");
    }
  }
}

double IntensityModel::linear_predictor(std::span<const double> x) const {
  if (x.size() != beta.size()) {
    std::ostringstream os;
    os << "covariate vector has " << x.size() << " entries but model.beta has " << beta.size();
    throw DomainError(os.str());
  }
  double eta = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    eta += beta[i] * x[i];
  }
  return eta;
}

std::size_t SubjectState::count_before(double t) const {
  return static_cast<std::size_t>(
      std::lower_bound(event_times.begin(), event_times.end(), t) - event_times.begin());
}

// ---------------------------------------------------------------------------
// FrozenIntensity

FrozenIntensity::FrozenIntensity(const IntensityModel& model, double frailty,
                                 double linear_predictor, std::span<const double> history)
    : model_(&model),
      history_(history),
      frailty_(frailty),
      linear_predictor_(linear_predictor),
      last_(history.empty() ? 0.0 : history.back()),
      closed_form_(model.dependence.constant_within_gap()),
      constant_factor_(0.0) {
  if (closed_form_) {
    constant_factor_ = frailty_ * std::exp(linear_predictor_ + log_multiplier(last_));
  }
}

double FrozenIntensity::covariate(double t) const {
  const auto& dep = model_->dependence;
  const auto n = static_cast<double>(history_.size());
  switch (dep.kind) {
    case DependenceKind::CountCovariate:
      return n;
    case DependenceKind::CappedCountCovariate:
      return std::min(n, static_cast<double>(*dep.cap));
    case DependenceKind::DecayedCountCovariate:
      return t > 0.0 ? n / t : 0.0;
    case DependenceKind::WindowedRateCovariate: {
      if (t < dep.window) {
        return t > 0.0 ? n / t : 0.0;
      }
      const auto first_in =
          std::upper_bound(history_.begin(), history_.end(), t - dep.window);
      return static_cast<double>(history_.end() - first_in) / dep.window;
    }
    default:
      return 0.0;
  }
}

double FrozenIntensity::log_multiplier(double t) const {
  const auto& dep = model_->dependence;
  switch (dep.kind) {
    case DependenceKind::None:
    case DependenceKind::General:
      return 0.0;
    case DependenceKind::GapBaselineMultiplier: {
      std::size_t power = history_.size();
      if (dep.cap) {
        power = std::min(power, *dep.cap);
      }
      return static_cast<double>(power) * std::log(dep.alpha);
    }
    default:
      return dep.phi * covariate(t);
  }
}

double FrozenIntensity::baseline_argument(double t) const {
  if (t < last_) {
    throw HistoryOrderError("intensity evaluated before the last recorded event");
  }
  return model_->timescale == Timescale::Calendar ? t : t - last_;
}

double FrozenIntensity::general_log_rate(double t) const {
  const auto& dep = model_->dependence;
  double value = dep.g0(t) + dep.g2(static_cast<double>(history_.size())) + linear_predictor_;
  if (!history_.empty()) {
    value += dep.g1(t - last_);
  }
  return value;
}

double FrozenIntensity::rate(double t) const {
  if (model_->dependence.kind == DependenceKind::General) {
    if (t < last_) {
      throw HistoryOrderError("intensity evaluated before the last recorded event");
    }
    return frailty_ * std::exp(general_log_rate(t));
  }
  const double h = hazard_at(model_->baseline, baseline_argument(t));
  if (closed_form_) {
    return constant_factor_ * h;
  }
  return frailty_ * h * std::exp(linear_predictor_ + log_multiplier(t));
}

double FrozenIntensity::rate_floored(double t) const {
  if (model_->dependence.kind == DependenceKind::General) {
    return rate(t);
  }
  const double h = hazard_at_floored(model_->baseline, baseline_argument(t));
  if (closed_form_) {
    return constant_factor_ * h;
  }
  return frailty_ * h * std::exp(linear_predictor_ + log_multiplier(t));
}

double FrozenIntensity::baseline_integral(double a, double b) const {
  if (model_->timescale == Timescale::Calendar) {
    return cumulative_hazard(model_->baseline, a, b);
  }
  return cumulative_hazard(model_->baseline, a - last_, b - last_);
}

double FrozenIntensity::baseline_inverse(double start, double amount) const {
  const auto& base = model_->baseline;
  if (model_->timescale == Timescale::Calendar) {
    return inverse_cumulative_hazard(base, cumulative_hazard(base, 0.0, start) + amount);
  }
  const double gap = start - last_;
  return last_ + inverse_cumulative_hazard(base, cumulative_hazard(base, 0.0, gap) + amount);
}

// Integral over [a, b] in the baseline's own cumulative scale v = B(s), where
// the integrand u * exp(eta + log_multiplier(s(v))) is bounded even when the
// baseline hazard is singular.
double FrozenIntensity::numeric_segment(double a, double b) const {
  const auto& base = model_->baseline;
  const double offset = model_->timescale == Timescale::Calendar ? 0.0 : last_;
  const double v0 = cumulative_hazard(base, 0.0, a - offset);
  const double v1 = cumulative_hazard(base, 0.0, b - offset);
  const double scale = frailty_;
  const double eta = linear_predictor_;
  auto integrand = [&](double v) {
    const double s = std::clamp(offset + inverse_cumulative_hazard(base, v), a, b);
    return scale * std::exp(eta + log_multiplier(s));
  };
  return detail::adaptive_simpson(integrand, v0, v1, kQuadratureTolerance, kQuadratureDepth);
}

double FrozenIntensity::numeric_compensator(double a, double b) const {
  const auto& dep = model_->dependence;
  if (dep.kind == DependenceKind::General) {
    auto integrand = [&](double s) { return frailty_ * std::exp(general_log_rate(s)); };
    return detail::adaptive_simpson(integrand, a, b, kQuadratureTolerance, kQuadratureDepth);
  }
  const double n = static_cast<double>(history_.size());
  if (n == 0.0) {
    return frailty_ * std::exp(linear_predictor_) * baseline_integral(a, b);
  }
  if (dep.kind == DependenceKind::DecayedCountCovariate) {
    return numeric_segment(a, b);
  }
  // Windowed rate: the covariate is n/s below the window length and a step
  // function above it, jumping where an event leaves the window.
  std::vector<double> cuts{a, b};
  if (dep.window > a && dep.window < b) {
    cuts.push_back(dep.window);
  }
  for (double t : history_) {
    const double leave = t + dep.window;
    if (leave > a && leave < b) {
      cuts.push_back(leave);
    }
  }
  std::sort(cuts.begin(), cuts.end());
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double p = cuts[i];
    const double q = cuts[i + 1];
    if (q <= p) {
      continue;
    }
    if (q <= dep.window) {
      total += numeric_segment(p, q);
    } else {
      const double z = covariate(0.5 * (p + q));
      total += frailty_ * std::exp(linear_predictor_ + dep.phi * z) * baseline_integral(p, q);
    }
  }
  return total;
}

double FrozenIntensity::compensator(double a, double b) const {
  if (a > b) {
    throw ArgumentOrderError("compensator interval has a > b");
  }
  if (a < last_) {
    throw HistoryOrderError("compensator interval starts before the last recorded event");
  }
  if (a == b) {
    return 0.0;
  }
  if (closed_form_) {
    return constant_factor_ == 0.0 ? 0.0 : constant_factor_ * baseline_integral(a, b);
  }
  return numeric_compensator(a, b);
}

double FrozenIntensity::upper_bound(double a, double b) const {
  if (a > b) {
    throw ArgumentOrderError("bound interval has a > b");
  }
  if (a < last_) {
    throw HistoryOrderError("bound interval starts before the last recorded event");
  }
  const auto& dep = model_->dependence;
  if (dep.kind == DependenceKind::General) {
    double log_bound = dep.g0.sup(a, b) + dep.g2(static_cast<double>(history_.size())) +
                       linear_predictor_;
    if (!history_.empty()) {
      log_bound += dep.g1.sup(a - last_, b - last_);
    }
    return frailty_ * std::exp(log_bound);
  }
  const double h = model_->timescale == Timescale::Calendar
                       ? hazard_sup(model_->baseline, a, b)
                       : hazard_sup(model_->baseline, a - last_, b - last_);
  if (closed_form_) {
    return constant_factor_ * h;
  }
  const double n = static_cast<double>(history_.size());
  double log_mult = 0.0;
  if (dep.kind == DependenceKind::DecayedCountCovariate) {
    if (dep.phi >= 0.0) {
      log_mult = a > 0.0 ? dep.phi * n / a : 0.0;
    } else {
      log_mult = b > 0.0 ? dep.phi * n / b : 0.0;
    }
  } else if (dep.phi > 0.0) {
    // Windowed: with history frozen the covariate never exceeds its value
    // at the start of the interval (or n / a while below the window).
    double z_max = 0.0;
    if (a < dep.window) {
      z_max = a > 0.0 ? n / a : 0.0;
    } else {
      z_max = covariate(a);
    }
    log_mult = dep.phi * z_max;
  }
  return frailty_ * h * std::exp(linear_predictor_ + log_mult);
}

double FrozenIntensity::numeric_invert(double start, double target, double limit) const {
  double lo = start;
  double cum_lo = 0.0;
  double hi = limit;
  double cum_hi = 0.0;
  if (std::isfinite(limit)) {
    cum_hi = compensator(start, limit);
    if (cum_hi < target) {
      return kInf;
    }
  } else {
    double step = std::max(1.0, start);
    hi = start + step;
    cum_hi = compensator(start, hi);
    int expansions = 0;
    while (cum_hi < target) {
      if (++expansions > 1100) {
        return kInf;
      }
      lo = hi;
      cum_lo = cum_hi;
      step *= 2.0;
      hi = lo + step;
      cum_hi = cum_lo + compensator(lo, hi);
    }
  }

  // Newton steps on s -> compensator(start, s) - target, falling back to
  // bisection whenever a step leaves the bracket.
  const double tol = 1e-12 * std::max(1.0, target);
  double x = lo;
  double cum_x = cum_lo;
  for (int iter = 0; iter < 200; ++iter) {
    const double r = rate_floored(x);
    double cand = (r > 0.0 && std::isfinite(r)) ? x + (target - cum_x) / r : lo;
    if (!(cand > lo && cand < hi)) {
      cand = 0.5 * (lo + hi);
    }
    const double c = cum_lo + compensator(lo, cand);
    if (std::abs(c - target) <= tol) {
      return cand;
    }
    if (c < target) {
      lo = cand;
      cum_lo = c;
    } else {
      hi = cand;
      cum_hi = c;
    }
    x = cand;
    cum_x = c;
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(hi))) {
      break;
    }
  }
  return 0.5 * (lo + hi);
}

double FrozenIntensity::invert(double start, double target, double limit) const {
  if (!(target >= 0.0)) {
    throw DomainError("compensator target must be nonnegative");
  }
  if (start < last_) {
    throw HistoryOrderError("inversion starts before the last recorded event");
  }
  if (target == 0.0) {
    return start;
  }
  if (closed_form_) {
    if (constant_factor_ == 0.0) {
      return kInf;
    }
    return baseline_inverse(start, target / constant_factor_);
  }
  return numeric_invert(start, target, limit);
}

// ---------------------------------------------------------------------------
// Free functions

double intensity_at(const IntensityModel& model, const SubjectState& state, double t) {
  if (!(t >= 0.0)) {
    throw DomainError("intensity evaluated at negative time");
  }
  if (!state.event_times.empty() && t < state.event_times.back()) {
    throw HistoryOrderError("intensity evaluated before the last recorded event");
  }
  const std::span<const double> history(state.event_times.data(), state.count_before(t));
  const FrozenIntensity frozen(model, state.frailty, model.linear_predictor(state.covariates),
                               history);
  return frozen.rate(t);
}

namespace {

FrozenIntensity frozen_at_now(const IntensityModel& model, const SubjectState& state) {
  if (!state.event_times.empty() && state.now < state.event_times.back()) {
    throw HistoryOrderError("subject state time precedes its last event");
  }
  return FrozenIntensity(model, state.frailty, model.linear_predictor(state.covariates),
                         std::span<const double>(state.event_times));
}

}  // namespace

double conditional_gap_cdf(const IntensityModel& model, const SubjectState& state, double w) {
  if (!(w > 0.0)) {
    throw DomainError("conditional gap CDF needs a positive gap");
  }
  const auto frozen = frozen_at_now(model, state);
  return -std::expm1(-frozen.compensator(state.now, state.now + w));
}

double invert_gap_cdf(const IntensityModel& model, const SubjectState& state, double p) {
  if (!(p >= 0.0 && p < 1.0)) {
    throw DomainError("gap CDF inversion needs p in [0, 1)");
  }
  const auto frozen = frozen_at_now(model, state);
  const double s = frozen.invert(state.now, -std::log1p(-p), kInf);
  return s - state.now;
}

std::string to_string(Timescale value) {
  return value == Timescale::Calendar ? "calendar" : "gap";
}

std::string to_string(FrailtyKind value) {
  switch (value) {
    case FrailtyKind::None:
      return "none";
    case FrailtyKind::Gamma:
      return "gamma";
    case FrailtyKind::LogNormal:
      return "lognormal";
    case FrailtyKind::Binary:
      return "binary";
  }
  return "none";
}

std::string to_string(DependenceKind value) {
  switch (value) {
    case DependenceKind::None:
      return "none";
    case DependenceKind::GapBaselineMultiplier:
      return "gap_multiplier";
    case DependenceKind::CountCovariate:
      return "count";
    case DependenceKind::CappedCountCovariate:
      return "capped_count";
    case DependenceKind::DecayedCountCovariate:
      return "decayed_count";
    case DependenceKind::WindowedRateCovariate:
      return "windowed_rate";
    case DependenceKind::General:
      return "general";
  }
  return "none";
}

}  // namespace recursim
