#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "recursim/models.hpp"
#include "recursim/rng.hpp"

namespace recursim {

enum class Engine { Inversion, Thinning, GapRejection, Discrete };

std::string to_string(Engine engine);
Engine parse_engine(std::string_view name);

/// Finalized output for one subject. Event times are calendar times,
/// strictly increasing and all below censoring_time.
struct EventHistory {
  std::vector<double> event_times;
  double censoring_time = 0.0;
  /// Realized frailty; empty when recovered from data that omits it.
  std::optional<double> frailty;
  std::vector<double> covariates;
  Engine engine = Engine::Inversion;
  /// Set when SimulationOptions::stop_after ended the run before censoring.
  bool stopped_early = false;

  friend bool operator==(const EventHistory&, const EventHistory&) = default;
};

/// Candidate bookkeeping for the rejection-based engines.
struct SimulationStats {
  std::size_t candidates = 0;
  std::size_t accepted = 0;
};

struct SimulationOptions {
  /// Hard per-subject event limit; exceeding it raises ExplosionError.
  std::size_t event_limit = 10000;
  /// Stop as soon as this many events are recorded (0 = run to censoring).
  std::size_t stop_after = 0;
  /// Subject index reported in errors.
  std::size_t subject = 0;
  SimulationStats* stats = nullptr;
};

/// Throws ConfigError when `engine` cannot simulate `model`.
void check_engine_supports(const IntensityModel& model, Engine engine);

EventHistory simulate_inversion(const IntensityModel& model, std::span<const double> x,
                                double censor, RandomStream& rng,
                                const SimulationOptions& options = {});

EventHistory simulate_thinning(const IntensityModel& model, std::span<const double> x,
                               double censor, RandomStream& rng,
                               const SimulationOptions& options = {});

EventHistory simulate_gap_rejection(const IntensityModel& model, std::span<const double> x,
                                    double censor, RandomStream& rng,
                                    const SimulationOptions& options = {});

EventHistory simulate_discrete(const IntensityModel& model, std::span<const double> x,
                               double censor, double dt, RandomStream& rng,
                               const SimulationOptions& options = {});

/// Dispatches to the engine; `dt` is used by Engine::Discrete only.
EventHistory simulate_subject(Engine engine, const IntensityModel& model,
                              std::span<const double> x, double censor, RandomStream& rng,
                              double dt = 0.0, const SimulationOptions& options = {});

}  // namespace recursim
