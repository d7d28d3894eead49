#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>

#include "recursim/study.hpp"

namespace recursim {

/// Scenario files are flat `key = value` lines. `#` starts a comment, blank
/// lines are ignored, and every key may appear once. Unknown keys, and keys
/// that do not apply to the selected kinds, are ConfigErrors carrying the
/// key and line number.
///
///   model.timescale        calendar | gap                      (calendar)
///   model.baseline.kind    constant | weibull                  required
///   model.baseline.lambda  > 0                                 required
///   model.baseline.nu      > 0                                 weibull only
///   model.beta             comma-separated reals               (empty)
///   covariates             bernoulli(p) | normal(mean, sd), one per beta
///   frailty.kind           none | gamma | lognormal | binary   (none)
///   frailty.variance       gamma and lognormal
///   frailty.low_value, frailty.high_value, frailty.high_prob   binary
///   dependence.kind        none | gap_multiplier | count | capped_count |
///                          decayed_count | windowed_rate | general   (none)
///   dependence.alpha       gap_multiplier
///   dependence.cap         gap_multiplier (optional), capped_count
///   dependence.phi         count, capped_count, decayed_count, windowed_rate
///   dependence.window      windowed_rate
///   dependence.g0/g1/g2    general: constant(c) | linear(a, b) | log(a, b)
///   censoring.kind         fixed | exponential | uniform       required
///   censoring.value        fixed
///   censoring.rate         exponential
///   censoring.low, censoring.high                              uniform
///   n_subjects             positive integer                    required
///   seed                   unsigned 64-bit integer             (1)
///   engine                 inversion | thinning | gap-rejection | discrete
///   dt                     > 0, discrete engine only
///   event_limit            positive integer                    (10000)
ScenarioConfig parse_scenario(std::istream& in);
ScenarioConfig parse_scenario_text(std::string_view text);
ScenarioConfig load_scenario(const std::filesystem::path& path);

/// Renders a config in the scenario file format; parse_scenario_text of the
/// result reproduces the config.
std::string format_scenario(const ScenarioConfig& config);

}  // namespace recursim
