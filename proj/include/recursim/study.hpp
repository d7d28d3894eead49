#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "recursim/engines.hpp"
#include "recursim/models.hpp"
#include "recursim/rng.hpp"

namespace recursim {

// ---------------------------------------------------------------------------
// Censoring and covariates

enum class CensoringKind { Fixed, Exponential, Uniform };

struct CensoringSpec {
  CensoringKind kind = CensoringKind::Fixed;
  double value = 1.0;
  double rate = 1.0;
  double low = 0.0;
  double high = 1.0;

  static CensoringSpec fixed(double value);
  static CensoringSpec exponential(double rate);
  static CensoringSpec uniform(double low, double high);

  /// A time that a typical subject is followed to: the fixed value, the
  /// upper uniform limit, or three exponential means.
  double reference_horizon() const;

  void validate() const;
};

double draw_censoring(const CensoringSpec& spec, RandomStream& rng);

/// Generator for one covariate coordinate.
struct CovariateGenerator {
  enum class Kind { Bernoulli, Normal };

  Kind kind = Kind::Bernoulli;
  double p = 0.5;
  double mean = 0.0;
  double sd = 1.0;

  static CovariateGenerator bernoulli(double p);
  static CovariateGenerator normal(double mean, double sd);

  double draw(RandomStream& rng) const;
  std::string describe() const;
  void validate() const;
};

// ---------------------------------------------------------------------------
// Scenario

struct ScenarioConfig {
  IntensityModel model;
  CensoringSpec censoring;
  std::size_t n_subjects = 1;
  std::vector<CovariateGenerator> covariates;
  std::uint64_t seed = 1;
  Engine engine = Engine::Inversion;
  std::optional<double> dt;
  std::size_t event_limit = 10000;

  void validate() const;
};

/// Covariates, censoring time and event history of subject `index`, all
/// drawn from that subject's own stream in this order.
EventHistory simulate_one(const ScenarioConfig& config, std::size_t index);

/// Simulates every subject, fanning out over `workers` threads (0 picks the
/// hardware concurrency). The result is identical for any worker count.
/// When subjects fail, the error of the lowest failing index is rethrown.
std::vector<EventHistory> simulate_cohort(const ScenarioConfig& config, unsigned workers = 0);

/// Runs fn(i) for i in [0, n) on up to `workers` threads; rethrows the
/// exception of the lowest failing index.
void parallel_for(std::size_t n, unsigned workers, const std::function<void(std::size_t)>& fn);

// ---------------------------------------------------------------------------
// Counting-process export

struct CountingProcessRecord {
  std::size_t subject_id = 0;
  std::size_t event_number = 1;
  double start = 0.0;
  double stop = 0.0;
  int status = 0;
  std::vector<double> covariates;
  std::optional<double> frailty;

  friend bool operator==(const CountingProcessRecord&, const CountingProcessRecord&) = default;
};

/// Rows (0,T1,1), (T1,T2,1), ..., (Tn,C,0) per subject, subject_id being
/// the cohort index. Frailty is attached only when `include_frailty` is set.
std::vector<CountingProcessRecord> to_counting_process(std::span<const EventHistory> cohort,
                                                       bool include_frailty = false);

/// Inverse of to_counting_process. Engine labels are not stored in the rows
/// and come back as Engine::Inversion.
std::vector<EventHistory> from_counting_process(std::span<const CountingProcessRecord> records);

/// Writes the CSV dataset: header then one line per record, numbers in
/// shortest round-trip form.
void write_counting_process_csv(std::ostream& out, std::span<const CountingProcessRecord> records,
                                std::size_t n_covariates, bool include_frailty);

std::vector<CountingProcessRecord> read_counting_process_csv(std::istream& in);

/// Shortest decimal string that parses back to exactly `value`.
std::string format_double(double value);

// ---------------------------------------------------------------------------
// Taxonomy

enum class BaselineClass { ConstantBaseline, GapTimeBaseline, CalendarTimeBaseline };
enum class PopulationClass { Homogeneous, Heterogeneous };
enum class DependenceClass { None, EventDependent };

struct TaxonomyLabel {
  BaselineClass baseline = BaselineClass::ConstantBaseline;
  PopulationClass population = PopulationClass::Homogeneous;
  DependenceClass dependence = DependenceClass::None;

  friend bool operator==(const TaxonomyLabel&, const TaxonomyLabel&) = default;
};

TaxonomyLabel classify_model(const IntensityModel& model);
TaxonomyLabel classify_scenario(const ScenarioConfig& config);

std::string to_string(BaselineClass value);
std::string to_string(PopulationClass value);
std::string to_string(DependenceClass value);
std::string to_string(const TaxonomyLabel& label);

/// One cell of the baseline x population x dependence grid together with
/// scenario keys that land a model in it.
struct TaxonomyCell {
  TaxonomyLabel label;
  std::vector<std::string> keys;
};

/// All 3 x 2 x 2 cells.
std::vector<TaxonomyCell> taxonomy_catalog();

}  // namespace recursim
