#include "recursim/engines.hpp"

#include <cmath>
#include <sstream>

#include "recursim/errors.hpp"

namespace recursim {

namespace {

// Relative slack when comparing the true intensity to its bound; covers
// rounding differences between the two evaluation paths.
constexpr double kBoundSlack = 1e-9;

/// Shared bookkeeping of one subject's run.
class Recorder {
 public:
  Recorder(const IntensityModel& model, std::span<const double> x, double censor,
           Engine engine, RandomStream& rng, const SimulationOptions& options)
      : model_(model), options_(options) {
    if (!(censor > 0.0) || !std::isfinite(censor)) {
      throw DomainError("censoring time must be positive and finite");
    }
    model.validate();
    check_engine_supports(model, engine);
    history_.censoring_time = censor;
    history_.covariates.assign(x.begin(), x.end());
    history_.engine = engine;
    linear_predictor_ = model.linear_predictor(x);
    history_.frailty = draw_frailty(model.frailty, rng);
  }

  double censor() const { return history_.censoring_time; }
  double last() const { return history_.event_times.empty() ? 0.0 : history_.event_times.back(); }

  FrozenIntensity frozen() const {
    return FrozenIntensity(model_, *history_.frailty, linear_predictor_,
                           std::span<const double>(history_.event_times));
  }

  /// Appends an event. Returns false when stop_after is reached.
  bool record(double t) {
    const auto& events = history_.event_times;
    if (!events.empty() && !(t > events.back())) {
      explode("event times stopped advancing");
    }
    if (events.size() >= options_.event_limit) {
      explode("exceeded the event limit of " + std::to_string(options_.event_limit));
    }
    history_.event_times.push_back(t);
    if (options_.stats != nullptr) {
      ++options_.stats->accepted;
    }
    if (options_.stop_after > 0 && history_.event_times.size() >= options_.stop_after) {
      history_.stopped_early = true;
      return false;
    }
    return true;
  }

  void candidate() {
    if (options_.stats != nullptr) {
      ++options_.stats->candidates;
    }
  }

  double checked_bound(double bound) {
    if (!std::isfinite(bound)) {
      explode("intensity bound is no longer finite");
    }
    return bound;
  }

  void check_bound(double rate, double bound, double t) const {
    if (rate > bound * (1.0 + kBoundSlack)) {
      std::ostringstream os;
      os << "intensity " << rate << " exceeds thinning bound " << bound << " at t = " << t
         << " (subject " << options_.subject << ")";
      throw BoundViolation(os.str());
    }
  }

  [[noreturn]] void explode(const std::string& reason) const {
    std::ostringstream os;
    os << "subject " << options_.subject << " exploded: " << reason << " after "
       << history_.event_times.size() << " events (last event time " << last() << ")";
    throw ExplosionError(options_.subject, history_.event_times.size(), last(), os.str());
  }

  EventHistory finish() { return std::move(history_); }

 private:
  const IntensityModel& model_;
  const SimulationOptions& options_;
  EventHistory history_;
  double linear_predictor_ = 0.0;
};

}  // namespace

std::string to_string(Engine engine) {
  switch (engine) {
    case Engine::Inversion:
      return "inversion";
    case Engine::Thinning:
      return "thinning";
    case Engine::GapRejection:
      return "gap-rejection";
    case Engine::Discrete:
      return "discrete";
  }
  return "inversion";
}

Engine parse_engine(std::string_view name) {
  if (name == "inversion") return Engine::Inversion;
  if (name == "thinning") return Engine::Thinning;
  if (name == "gap-rejection") return Engine::GapRejection;
  if (name == "discrete") return Engine::Discrete;
  throw ConfigError("unknown engine '" + std::string(name) +
                        "' (expected inversion, thinning, gap-rejection or discrete)",
                    "engine");
}

void check_engine_supports(const IntensityModel& model, Engine engine) {
  const auto& dep = model.dependence;
  const bool rejection = engine == Engine::Thinning || engine == Engine::GapRejection;
  if (rejection && dep.kind == DependenceKind::GapBaselineMultiplier && dep.alpha > 1.0 &&
      !dep.cap) {
    throw ConfigError(
        "gap baseline multiplier with alpha > 1 needs dependence.cap under " + to_string(engine),
        "dependence.cap");
  }
  if (engine == Engine::GapRejection && model.timescale != Timescale::Gap) {
    throw ConfigError("the gap-rejection engine requires model.timescale = gap",
                      "model.timescale");
  }
}

EventHistory simulate_inversion(const IntensityModel& model, std::span<const double> x,
                                double censor, RandomStream& rng,
                                const SimulationOptions& options) {
  Recorder rec(model, x, censor, Engine::Inversion, rng, options);
  double t = 0.0;
  for (;;) {
    const auto frozen = rec.frozen();
    // -log(V) stands in for -log(1 - V); both are unit exponential.
    const double target = -std::log(uniform_open(rng));
    const double next = frozen.invert(t, target, censor);
    if (!(next < censor)) {
      break;
    }
    if (!rec.record(next)) {
      break;
    }
    t = next;
  }
  return rec.finish();
}

EventHistory simulate_thinning(const IntensityModel& model, std::span<const double> x,
                               double censor, RandomStream& rng,
                               const SimulationOptions& options) {
  Recorder rec(model, x, censor, Engine::Thinning, rng, options);
  auto frozen = rec.frozen();
  double bound = rec.checked_bound(frozen.upper_bound(0.0, censor));
  double t = 0.0;
  for (;;) {
    t += exponential(rng, bound);
    if (!(t < censor)) {
      break;
    }
    rec.candidate();
    const double rate = frozen.rate_floored(t);
    rec.check_bound(rate, bound, t);
    if (uniform_open(rng) * bound <= rate) {
      if (!rec.record(t)) {
        break;
      }
      frozen = rec.frozen();
      bound = rec.checked_bound(frozen.upper_bound(t, censor));
    }
  }
  return rec.finish();
}

EventHistory simulate_gap_rejection(const IntensityModel& model, std::span<const double> x,
                                    double censor, RandomStream& rng,
                                    const SimulationOptions& options) {
  Recorder rec(model, x, censor, Engine::GapRejection, rng, options);
  for (;;) {
    const double start = rec.last();
    const auto frozen = rec.frozen();
    const double bound = rec.checked_bound(frozen.upper_bound(start, censor));
    double gap = 0.0;
    bool accepted = false;
    for (;;) {
      gap += exponential(rng, bound);
      const double t = start + gap;
      if (!(t < censor)) {
        break;
      }
      rec.candidate();
      const double h = frozen.rate_floored(t);
      rec.check_bound(h, bound, t);
      if (uniform_open(rng) <= h / bound) {
        accepted = true;
        break;
      }
    }
    if (!accepted || !rec.record(start + gap)) {
      break;
    }
  }
  return rec.finish();
}

EventHistory simulate_discrete(const IntensityModel& model, std::span<const double> x,
                               double censor, double dt, RandomStream& rng,
                               const SimulationOptions& options) {
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    throw DomainError("discrete engine needs dt > 0");
  }
  Recorder rec(model, x, censor, Engine::Discrete, rng, options);
  auto frozen = rec.frozen();
  for (std::size_t k = 0;; ++k) {
    const double left = static_cast<double>(k) * dt;
    const double right = static_cast<double>(k + 1) * dt;
    if (!(right < censor)) {
      break;
    }
    // The history includes an event placed at `left` by the previous step.
    const double p = frozen.rate_floored(left) * dt;
    if (p > 1.0) {
      std::ostringstream os;
      os << "event probability " << p << " exceeds 1 at t = " << left
         << "; use a smaller dt than " << dt;
      throw StepSizeError(os.str());
    }
    if (uniform_open(rng) < p) {
      if (!rec.record(right)) {
        break;
      }
      frozen = rec.frozen();
    }
  }
  return rec.finish();
}

EventHistory simulate_subject(Engine engine, const IntensityModel& model,
                              std::span<const double> x, double censor, RandomStream& rng,
                              double dt, const SimulationOptions& options) {
  switch (engine) {
    case Engine::Inversion:
      return simulate_inversion(model, x, censor, rng, options);
    case Engine::Thinning:
      return simulate_thinning(model, x, censor, rng, options);
    case Engine::GapRejection:
      return simulate_gap_rejection(model, x, censor, rng, options);
    case Engine::Discrete:
      return simulate_discrete(model, x, censor, dt, rng, options);
  }
  throw ConfigError("unknown engine");
}

}  // namespace recursim
