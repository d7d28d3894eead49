#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "recursim/hazards.hpp"
#include "recursim/rng.hpp"

namespace recursim {

/// Calendar: baseline indexed by time since origin.
/// Gap: baseline indexed by time since the previous event.
enum class Timescale { Calendar, Gap };

// ---------------------------------------------------------------------------
// Frailty

enum class FrailtyKind { None, Gamma, LogNormal, Binary };

/// Subject-level multiplicative random effect. Gamma and LogNormal are
/// parameterized by their variance with mean fixed at 1.
struct FrailtySpec {
  FrailtyKind kind = FrailtyKind::None;
  double variance = 0.0;
  double low_value = 0.0;
  double high_value = 0.0;
  double high_prob = 0.0;

  static FrailtySpec none() { return {}; }
  static FrailtySpec gamma(double variance);
  static FrailtySpec lognormal(double variance);
  static FrailtySpec binary(double low_value, double high_value, double high_prob);

  /// E[U] and E[U^2] of the frailty law.
  double mean() const;
  double second_moment() const;

  /// True when every draw is the same value.
  bool is_degenerate() const;

  void validate() const;
};

/// One frailty draw. FrailtyKind::None (and zero variance) returns exactly 1
/// without consuming randomness.
double draw_frailty(const FrailtySpec& spec, RandomStream& rng);

// ---------------------------------------------------------------------------
// Event dependence

/// Named scalar function used by the general intensity: a + b*x (Linear),
/// a + b*log(x) (Log, with x raised to kSingularityOffset near zero), or the
/// constant a. All members are monotone, so suprema sit at interval ends.
struct CatalogFunction {
  enum class Kind { Constant, Linear, Log };

  Kind kind = Kind::Constant;
  double a = 0.0;
  double b = 0.0;

  static CatalogFunction constant(double c) { return {Kind::Constant, c, 0.0}; }
  static CatalogFunction linear(double a, double b) { return {Kind::Linear, a, b}; }
  static CatalogFunction log(double a, double b) { return {Kind::Log, a, b}; }

  /// Parses "constant(c)", "linear(a, b)" or "log(a, b)".
  static CatalogFunction parse(std::string_view text);

  double operator()(double x) const;
  double sup(double lo, double hi) const;
  bool is_constant() const { return kind == Kind::Constant || b == 0.0; }
  std::string describe() const;
};

enum class DependenceKind {
  None,
  GapBaselineMultiplier,
  CountCovariate,
  CappedCountCovariate,
  DecayedCountCovariate,
  WindowedRateCovariate,
  General,
};

struct EventDependenceSpec {
  DependenceKind kind = DependenceKind::None;
  double alpha = 1.0;
  std::optional<std::size_t> cap;
  double phi = 0.0;
  double window = 0.0;
  CatalogFunction g0;
  CatalogFunction g1;
  CatalogFunction g2;

  static EventDependenceSpec none() { return {}; }
  static EventDependenceSpec gap_multiplier(double alpha, std::optional<std::size_t> cap);
  static EventDependenceSpec count(double phi);
  static EventDependenceSpec capped_count(double phi, std::size_t cap);
  static EventDependenceSpec decayed_count(double phi);
  static EventDependenceSpec windowed_rate(double phi, double window);
  static EventDependenceSpec general(CatalogFunction g0, CatalogFunction g1, CatalogFunction g2);

  /// Within one at-risk interval the dependence contributes a constant factor.
  bool constant_within_gap() const;

  void validate() const;
};

// ---------------------------------------------------------------------------
// Intensity model

struct IntensityModel {
  Timescale timescale = Timescale::Calendar;
  BaselineHazard baseline = BaselineHazard::constant(1.0);
  std::vector<double> beta;
  FrailtySpec frailty;
  EventDependenceSpec dependence;

  void validate() const;
  double linear_predictor(std::span<const double> x) const;
};

/// Evolving history of one subject.
struct SubjectState {
  std::vector<double> covariates;
  double frailty = 1.0;
  std::vector<double> event_times;
  double now = 0.0;

  /// N(t-): number of recorded events strictly before t.
  std::size_t count_before(double t) const;
};

/// Intensity of one subject on an at-risk interval whose history is fixed.
///
/// `history` lists the events counted by N(s-) for every s in the interval;
/// the interval starts at history.back() (or 0). The object borrows
/// `model` and `history`, both of which must outlive it.
class FrozenIntensity {
 public:
  FrozenIntensity(const IntensityModel& model, double frailty, double linear_predictor,
                  std::span<const double> history);

  double last_event() const noexcept { return last_; }
  std::size_t events() const noexcept { return history_.size(); }

  /// Exact rate at t. Throws DomainError at a singular baseline point.
  double rate(double t) const;

  /// Rate with baseline and log arguments raised to kSingularityOffset.
  double rate_floored(double t) const;

  /// Integral of the rate over [a, b], closed form where the dependence is
  /// constant on the interval, adaptive quadrature otherwise.
  double compensator(double a, double b) const;

  /// Upper bound of rate_floored over [a, b].
  double upper_bound(double a, double b) const;

  /// Smallest s > start with compensator(start, s) == target. When the
  /// compensator up to `limit` stays below the target the result is some
  /// value >= limit, possibly +infinity.
  double invert(double start, double target, double limit) const;

  /// True when invert() and compensator() run in closed form.
  bool closed_form() const noexcept { return closed_form_; }

 private:
  double covariate(double t) const;
  double log_multiplier(double t) const;
  double baseline_argument(double t) const;
  double general_log_rate(double t) const;
  double baseline_integral(double a, double b) const;
  double baseline_inverse(double start, double amount) const;
  double numeric_segment(double a, double b) const;
  double numeric_compensator(double a, double b) const;
  double numeric_invert(double start, double target, double limit) const;

  const IntensityModel* model_;
  std::span<const double> history_;
  double frailty_;
  double linear_predictor_;
  double last_;
  bool closed_form_;
  double constant_factor_;
};

/// lambda(t | H(t), u, x) for the state's history. Throws HistoryOrderError
/// when t precedes the last recorded event.
double intensity_at(const IntensityModel& model, const SubjectState& state, double t);

/// P(next gap <= w) with history frozen at state.now.
double conditional_gap_cdf(const IntensityModel& model, const SubjectState& state, double w);

/// Gap w with conditional_gap_cdf(model, state, w) == p, for p in [0, 1).
double invert_gap_cdf(const IntensityModel& model, const SubjectState& state, double p);

std::string to_string(Timescale value);
std::string to_string(FrailtyKind value);
std::string to_string(DependenceKind value);

}  // namespace recursim
