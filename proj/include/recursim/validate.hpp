#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "recursim/engines.hpp"
#include "recursim/models.hpp"
#include "recursim/study.hpp"

namespace recursim {

/// Outcome of one statistical check. `pass` holds exactly when `statistic`
/// is within `threshold`.
struct ValidationReport {
  std::string name;
  std::size_t sample_size = 0;
  double statistic = 0.0;
  double threshold = 0.0;
  bool pass = false;
  std::string detail;
};

// ---------------------------------------------------------------------------
// Kolmogorov-Smirnov

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// Survival function of the Kolmogorov distribution, P(K > lambda).
double kolmogorov_survival(double lambda);

/// One-sample test of `sample` against a continuous `cdf`. p uses the
/// asymptotic Kolmogorov law at sqrt(n) * D.
KsResult ks_test(std::span<const double> sample, const std::function<double(double)>& cdf);

/// Two-sample test; p uses the effective size n*m/(n+m).
KsResult ks_two_sample(std::span<const double> a, std::span<const double> b);

/// Asymptotic critical value sqrt(-log(alpha/2)/2) / sqrt(n_effective).
double ks_critical_value(double alpha, double n_effective);
double ks_two_sample_critical_value(double alpha, std::size_t n, std::size_t m);

double unit_exponential_cdf(double x);

// ---------------------------------------------------------------------------
// Oracles

/// Compensator increment over every uncensored gap, using each subject's
/// realized frailty. Under a correct generator these are i.i.d. unit
/// exponential. Throws MissingDataError when the model has a non-degenerate
/// frailty and a history lacks its realized value.
std::vector<double> time_rescaling_residuals(std::span<const EventHistory> cohort,
                                             const IntensityModel& model);

/// Inter-event gaps of the cohort's rescaled processes laid end to end.
///
/// Each subject's rescaled process is a unit-rate Poisson process stopped
/// at the compensator of its censoring time, so the concatenation is one
/// unit-rate Poisson process and these gaps are i.i.d. unit exponential.
/// Censored remainders are carried into the next subject's first gap. The
/// per-subject uncensored gaps alone are not: a finite window favours short
/// gaps.
std::vector<double> pooled_rescaled_gaps(std::span<const EventHistory> cohort,
                                         const IntensityModel& model);

/// One-sample KS of the pooled rescaled gaps against the unit exponential.
ValidationReport time_rescaling_check(std::span<const EventHistory> cohort,
                                      const IntensityModel& model, double alpha = 0.01);

/// Mean and variance of N(t) against the Poisson / mixed-Poisson marginal
/// moments. Passes when both z-scores are at most `z_threshold`. Throws
/// UnsupportedCheckError for event-dependent or renewal models.
ValidationReport count_moment_check(std::span<const EventHistory> cohort,
                                    const IntensityModel& model, double t,
                                    double z_threshold = 3.0);

struct AgreementOptions {
  double alpha = 0.01;
  /// Censoring time of every subject; defaults to the scenario's
  /// reference horizon.
  std::optional<double> horizon;
  /// Master seed of the second arm; defaults to an independent derived seed.
  std::optional<std::uint64_t> seed_b;
  /// Step for a discrete arm when the scenario has none.
  double dt = 1e-3;
  unsigned workers = 0;
};

/// First event time of `n` subjects (the horizon when no event occurs)
/// simulated by `engine` with the scenario's model and covariate law.
std::vector<double> first_event_times(const ScenarioConfig& config, Engine engine, std::size_t n,
                                      double horizon, std::uint64_t seed, double dt,
                                      unsigned workers = 0);

/// Two-sample KS between the first-event-time laws of two engines.
ValidationReport engine_agreement(const ScenarioConfig& config, Engine a, Engine b,
                                  std::size_t n, const AgreementOptions& options = {});

/// The oracle suite applicable to the scenario: count moments (Poisson-type
/// models without dependence), time rescaling against `oracle`, and engine
/// agreement between every supported engine pair with inversion.
std::vector<ValidationReport> validate_scenario(const ScenarioConfig& data,
                                                const IntensityModel& oracle,
                                                unsigned workers = 0);

/// Human-readable multi-line rendering.
std::string render_text(std::span<const ValidationReport> reports);

/// One line per check: "name statistic threshold pass|fail".
std::string render_summary(std::span<const ValidationReport> reports);

}  // namespace recursim
