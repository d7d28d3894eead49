#include "recursim/validate.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include "recursim/errors.hpp"

namespace recursim {

// ---------------------------------------------------------------------------
// Kolmogorov-Smirnov

double kolmogorov_survival(double lambda) {
  if (!(lambda > 0.0)) {
    return 1.0;
  }
  constexpr double pi = std::numbers::pi;
  if (lambda < 1.18) {
    // Jacobi theta form of the CDF; the alternating series converges too
    // slowly for small lambda.
    const double factor = -pi * pi / (8.0 * lambda * lambda);
    double sum = 0.0;
    for (int k = 1; k <= 100; ++k) {
      const double odd = 2.0 * k - 1.0;
      const double term = std::exp(factor * odd * odd);
      sum += term;
      if (term < 1e-16) {
        break;
      }
    }
    return std::clamp(1.0 - std::sqrt(2.0 * pi) / lambda * sum, 0.0, 1.0);
  }
  double sum = 0.0;
  for (int k = 1; k <= 1000; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1 ? term : -term);
    if (term < 1e-12) {
      break;
    }
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

KsResult ks_test(std::span<const double> sample, const std::function<double(double)>& cdf) {
  if (sample.empty()) {
    throw DomainError("KS test needs a nonempty sample");
  }
  std::vector<double> sorted(sample.begin(), sample.end());
  std::sort(sorted.begin(), sorted.end());
  const auto n = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = cdf(sorted[i]);
    const auto di = static_cast<double>(i);
    d = std::max({d, (di + 1.0) / n - f, f - di / n});
  }
  return {d, kolmogorov_survival(std::sqrt(n) * d)};
}

KsResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) {
    throw DomainError("two-sample KS test needs two nonempty samples");
  }
  std::vector<double> x(a.begin(), a.end());
  std::vector<double> y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const auto n = static_cast<double>(x.size());
  const auto m = static_cast<double>(y.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / n - static_cast<double>(j) / m));
  }
  const double n_eff = n * m / (n + m);
  return {d, kolmogorov_survival(std::sqrt(n_eff) * d)};
}

double ks_critical_value(double alpha, double n_effective) {
  return std::sqrt(-0.5 * std::log(0.5 * alpha)) / std::sqrt(n_effective);
}

double ks_two_sample_critical_value(double alpha, std::size_t n, std::size_t m) {
  const auto dn = static_cast<double>(n);
  const auto dm = static_cast<double>(m);
  return ks_critical_value(alpha, dn * dm / (dn + dm));
}

double unit_exponential_cdf(double x) { return x <= 0.0 ? 0.0 : -std::expm1(-x); }

// ---------------------------------------------------------------------------
// Oracles

namespace {

double realized_frailty(const EventHistory& h, const IntensityModel& model, std::size_t id) {
  if (!model.frailty.is_degenerate()) {
    if (!h.frailty) {
      throw MissingDataError("subject " + std::to_string(id) +
                             " has no realized frailty; time rescaling needs it");
    }
    return *h.frailty;
  }
  return h.frailty.value_or(1.0);
}

// Calls on_gap(residual) for every uncensored gap, then returns the
// compensator of the censored remainder [T_n, C].
template <class OnGap>
double rescale_subject(const EventHistory& h, const IntensityModel& model, std::size_t id,
                       OnGap&& on_gap) {
  const double u = realized_frailty(h, model, id);
  const double eta = model.linear_predictor(h.covariates);
  double start = 0.0;
  for (std::size_t j = 0; j < h.event_times.size(); ++j) {
    const FrozenIntensity frozen(model, u, eta,
                                 std::span<const double>(h.event_times.data(), j));
    on_gap(frozen.compensator(start, h.event_times[j]));
    start = h.event_times[j];
  }
  const FrozenIntensity tail(model, u, eta, h.event_times);
  return start < h.censoring_time ? tail.compensator(start, h.censoring_time) : 0.0;
}

}  // namespace

std::vector<double> time_rescaling_residuals(std::span<const EventHistory> cohort,
                                             const IntensityModel& model) {
  std::vector<double> residuals;
  for (std::size_t id = 0; id < cohort.size(); ++id) {
    rescale_subject(cohort[id], model, id, [&](double r) { residuals.push_back(r); });
  }
  return residuals;
}

std::vector<double> pooled_rescaled_gaps(std::span<const EventHistory> cohort,
                                         const IntensityModel& model) {
  std::vector<double> gaps;
  double carry = 0.0;
  for (std::size_t id = 0; id < cohort.size(); ++id) {
    carry += rescale_subject(cohort[id], model, id, [&](double r) {
      gaps.push_back(carry + r);
      carry = 0.0;
    });
  }
  return gaps;
}

ValidationReport time_rescaling_check(std::span<const EventHistory> cohort,
                                      const IntensityModel& model, double alpha) {
  const auto residuals = pooled_rescaled_gaps(cohort, model);
  ValidationReport report;
  report.name = "time_rescaling";
  report.sample_size = residuals.size();
  if (residuals.empty()) {
    report.detail = "no uncensored gaps";
    return report;
  }
  const auto ks = ks_test(residuals, unit_exponential_cdf);
  report.statistic = ks.statistic;
  report.threshold = ks_critical_value(alpha, static_cast<double>(residuals.size()));
  report.pass = report.statistic < report.threshold;
  std::ostringstream os;
  os << "KS of pooled rescaled gaps vs Exp(1), p = " << ks.p_value << ", alpha = " << alpha;
  report.detail = os.str();
  return report;
}

ValidationReport count_moment_check(std::span<const EventHistory> cohort,
                                    const IntensityModel& model, double t, double z_threshold) {
  if (model.dependence.kind != DependenceKind::None) {
    throw UnsupportedCheckError("count moment check needs a model without event dependence");
  }
  if (model.timescale == Timescale::Gap && !model.baseline.is_time_constant()) {
    throw UnsupportedCheckError(
        "count moment check has no oracle for a renewal process with time-varying gap hazard");
  }
  if (cohort.size() < 2) {
    throw DomainError("count moment check needs at least two subjects");
  }
  const double base = cumulative_hazard(model.baseline, 0.0, t);
  const auto n = static_cast<double>(cohort.size());
  double mu1 = 0.0;
  double mu2 = 0.0;
  std::vector<double> counts;
  counts.reserve(cohort.size());
  for (const auto& h : cohort) {
    if (h.censoring_time < t) {
      throw DomainError("count moment check time exceeds a subject's censoring time");
    }
    const double mu = std::exp(model.linear_predictor(h.covariates)) * base;
    mu1 += mu;
    mu2 += mu * mu;
    counts.push_back(static_cast<double>(
        std::upper_bound(h.event_times.begin(), h.event_times.end(), t) - h.event_times.begin()));
  }
  mu1 /= n;
  mu2 /= n;
  const double eu = model.frailty.mean();
  const double eu2 = model.frailty.second_moment();
  const double target_mean = eu * mu1;
  const double target_var = eu * mu1 + eu2 * mu2 - target_mean * target_mean;

  const double mean = std::accumulate(counts.begin(), counts.end(), 0.0) / n;
  double m2 = 0.0;
  double m4 = 0.0;
  for (double c : counts) {
    const double d = c - mean;
    m2 += d * d;
    m4 += d * d * d * d;
  }
  m2 /= n;
  m4 /= n;
  const double var = m2 * n / (n - 1.0);
  const double se_mean = std::sqrt(var / n);
  const double se_var = std::sqrt(std::max(m4 - m2 * m2 * (n - 3.0) / (n - 1.0), 0.0) / n);
  const double z_mean = se_mean > 0.0 ? std::abs(mean - target_mean) / se_mean
                                      : (mean == target_mean ? 0.0 : INFINITY);
  const double z_var = se_var > 0.0 ? std::abs(var - target_var) / se_var
                                    : (var == target_var ? 0.0 : INFINITY);

  ValidationReport report;
  report.name = "count_moments";
  report.sample_size = cohort.size();
  report.statistic = std::max(z_mean, z_var);
  report.threshold = z_threshold;
  report.pass = report.statistic <= z_threshold;
  std::ostringstream os;
  os << "N(" << t << "): mean " << mean << " (target " << target_mean << ", z " << z_mean
     << "), variance " << var << " (target " << target_var << ", z " << z_var << ")";
  report.detail = os.str();
  return report;
}

std::vector<double> first_event_times(const ScenarioConfig& config, Engine engine, std::size_t n,
                                      double horizon, std::uint64_t seed, double dt,
                                      unsigned workers) {
  check_engine_supports(config.model, engine);
  std::vector<double> times(n);
  parallel_for(n, workers, [&](std::size_t i) {
    auto rng = subject_stream(seed, i);
    std::vector<double> x(config.covariates.size());
    for (std::size_t k = 0; k < x.size(); ++k) {
      x[k] = config.covariates[k].draw(rng);
    }
    SimulationOptions options;
    options.event_limit = config.event_limit;
    options.stop_after = 1;
    options.subject = i;
    const auto h = simulate_subject(engine, config.model, x, horizon, rng, dt, options);
    times[i] = h.event_times.empty() ? horizon : h.event_times.front();
  });
  return times;
}

ValidationReport engine_agreement(const ScenarioConfig& config, Engine a, Engine b, std::size_t n,
                                  const AgreementOptions& options) {
  check_engine_supports(config.model, a);
  check_engine_supports(config.model, b);
  if (n == 0) {
    throw DomainError("engine agreement needs a positive sample size");
  }
  const double horizon = options.horizon.value_or(config.censoring.reference_horizon());
  const double dt = config.dt.value_or(options.dt);
  const std::uint64_t seed_b = options.seed_b.value_or(splitmix64(config.seed ^ 0xa5a5a5a5ULL));
  const auto sample_a = first_event_times(config, a, n, horizon, config.seed, dt, options.workers);
  const auto sample_b = first_event_times(config, b, n, horizon, seed_b, dt, options.workers);
  const auto ks = ks_two_sample(sample_a, sample_b);

  ValidationReport report;
  report.name = "engine_agreement_" + to_string(a) + "_vs_" + to_string(b);
  report.sample_size = n;
  report.statistic = ks.statistic;
  report.threshold = ks_two_sample_critical_value(options.alpha, n, n);
  report.pass = report.statistic < report.threshold;
  std::ostringstream os;
  os << "two-sample KS of first event times on [0, " << horizon << "], p = " << ks.p_value
     << ", alpha = " << options.alpha;
  report.detail = os.str();
  return report;
}

std::vector<ValidationReport> validate_scenario(const ScenarioConfig& data,
                                                const IntensityModel& oracle, unsigned workers) {
  data.validate();
  oracle.validate();
  std::vector<ValidationReport> reports;
  const double horizon = data.censoring.reference_horizon();

  const bool poisson_type = oracle.dependence.kind == DependenceKind::None &&
                            (oracle.timescale == Timescale::Calendar ||
                             oracle.baseline.is_time_constant());
  if (poisson_type) {
    ScenarioConfig fixed = data;
    fixed.censoring = CensoringSpec::fixed(horizon);
    const auto cohort = simulate_cohort(fixed, workers);
    reports.push_back(count_moment_check(cohort, oracle, horizon));
  }

  {
    const auto cohort = simulate_cohort(data, workers);
    reports.push_back(time_rescaling_check(cohort, oracle));
  }

  AgreementOptions agree;
  agree.workers = workers;
  std::vector<Engine> others;
  for (Engine e : {Engine::Thinning, Engine::GapRejection}) {
    try {
      check_engine_supports(data.model, e);
      others.push_back(e);
    } catch (const ConfigError&) {
    }
  }
  for (Engine e : others) {
    reports.push_back(engine_agreement(data, Engine::Inversion, e, data.n_subjects, agree));
  }
  return reports;
}

std::string render_text(std::span<const ValidationReport> reports) {
  std::ostringstream os;
  std::size_t passed = 0;
  for (const auto& r : reports) {
    passed += r.pass ? 1 : 0;
    os << (r.pass ? "[PASS] " : "[FAIL] ") << r.name << "  n=" << r.sample_size
       << "  statistic=" << r.statistic << "  threshold=" << r.threshold << '\n';
    if (!r.detail.empty()) {
      os << "       " << r.detail << '\n';
    }
  }
  os << passed << " of " << reports.size() << " checks passed\n";
  return os.str();
}

std::string render_summary(std::span<const ValidationReport> reports) {
  std::ostringstream os;
  for (const auto& r : reports) {
    os << r.name << ' ' << format_double(r.statistic) << ' ' << format_double(r.threshold) << ' '
       << (r.pass ? "pass" : "fail") << '\n';
  }
  return os.str();
}

}  // namespace recursim
