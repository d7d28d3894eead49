#include "recursim/study.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <exception>
#include <istream>
#include <limits>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "recursim/errors.hpp"

namespace recursim {

// ---------------------------------------------------------------------------
// Censoring and covariates

CensoringSpec CensoringSpec::fixed(double value) {
  CensoringSpec spec;
  spec.kind = CensoringKind::Fixed;
  spec.value = value;
  spec.validate();
  return spec;
}

CensoringSpec CensoringSpec::exponential(double rate) {
  CensoringSpec spec;
  spec.kind = CensoringKind::Exponential;
  spec.rate = rate;
  spec.validate();
  return spec;
}

CensoringSpec CensoringSpec::uniform(double low, double high) {
  CensoringSpec spec;
  spec.kind = CensoringKind::Uniform;
  spec.low = low;
  spec.high = high;
  spec.validate();
  return spec;
}

double CensoringSpec::reference_horizon() const {
  switch (kind) {
    case CensoringKind::Fixed:
      return value;
    case CensoringKind::Exponential:
      return 3.0 / rate;
    case CensoringKind::Uniform:
      return high;
  }
  return value;
}

void CensoringSpec::validate() const {
  switch (kind) {
    case CensoringKind::Fixed:
      if (!(value > 0.0) || !std::isfinite(value)) {
        throw ConfigError("censoring.value must be positive and finite", "censoring.value");
      }
      return;
    case CensoringKind::Exponential:
      if (!(rate > 0.0) || !std::isfinite(rate)) {
        throw ConfigError("censoring.rate must be positive and finite", "censoring.rate");
      }
      return;
    case CensoringKind::Uniform:
      if (!(low >= 0.0) || !(high > low) || !std::isfinite(high)) {
        throw ConfigError("uniform censoring needs 0 <= censoring.low < censoring.high",
                          "censoring.high");
      }
      return;
  }
}

double draw_censoring(const CensoringSpec& spec, RandomStream& rng) {
  switch (spec.kind) {
    case CensoringKind::Fixed:
      return spec.value;
    case CensoringKind::Exponential:
      return exponential(rng, spec.rate);
    case CensoringKind::Uniform:
      return spec.low + (spec.high - spec.low) * uniform_open(rng);
  }
  return spec.value;
}

CovariateGenerator CovariateGenerator::bernoulli(double p) {
  CovariateGenerator gen;
  gen.kind = Kind::Bernoulli;
  gen.p = p;
  gen.validate();
  return gen;
}

CovariateGenerator CovariateGenerator::normal(double mean, double sd) {
  CovariateGenerator gen;
  gen.kind = Kind::Normal;
  gen.mean = mean;
  gen.sd = sd;
  gen.validate();
  return gen;
}

double CovariateGenerator::draw(RandomStream& rng) const {
  if (kind == Kind::Bernoulli) {
    return uniform_open(rng) < p ? 1.0 : 0.0;
  }
  std::normal_distribution<double> dist(mean, sd);
  return dist(rng);
}

std::string CovariateGenerator::describe() const {
  std::ostringstream os;
  if (kind == Kind::Bernoulli) {
    os << "bernoulli(" << format_double(p) << ")";
  } else {
    os << "normal(" << format_double(mean) << ", " << format_double(sd) << ")";
  }
  return os.str();
}

void CovariateGenerator::validate() const {
  if (kind == Kind::Bernoulli) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw ConfigError("bernoulli covariate probability must lie in [0, 1]", "covariates");
    }
  } else if (!std::isfinite(mean) || !(sd >= 0.0) || !std::isfinite(sd)) {
    throw ConfigError("normal covariate needs a finite mean and sd >= 0", "covariates");
  }
}

// ---------------------------------------------------------------------------
// Scenario and cohort

void ScenarioConfig::validate() const {
  model.validate();
  censoring.validate();
  if (n_subjects == 0) {
    throw ConfigError("n_subjects must be positive", "n_subjects");
  }
  if (covariates.size() != model.beta.size()) {
    std::ostringstream os;
    os << "covariates lists " << covariates.size() << " generators but model.beta has "
       << model.beta.size() << " coefficients";
    throw ConfigError(os.str(), "covariates");
  }
  for (const auto& gen : covariates) {
    gen.validate();
  }
  if (engine == Engine::Discrete) {
    if (!dt || !(*dt > 0.0) || !std::isfinite(*dt)) {
      throw ConfigError("the discrete engine needs dt > 0", "dt");
    }
  } else if (dt) {
    throw ConfigError("dt applies only to the discrete engine", "dt");
  }
  if (event_limit == 0) {
    throw ConfigError("event_limit must be positive", "event_limit");
  }
  check_engine_supports(model, engine);
}

EventHistory simulate_one(const ScenarioConfig& config, std::size_t index) {
  auto rng = subject_stream(config.seed, index);
  std::vector<double> x(config.covariates.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    x[k] = config.covariates[k].draw(rng);
  }
  const double censor = draw_censoring(config.censoring, rng);
  SimulationOptions options;
  options.event_limit = config.event_limit;
  options.subject = index;
  return simulate_subject(config.engine, config.model, x, censor, rng, config.dt.value_or(0.0),
                          options);
}

void parallel_for(std::size_t n, unsigned workers, const std::function<void(std::size_t)>& fn) {
  if (workers == 0) {
    workers = std::max(1u, std::thread::hardware_concurrency());
  }
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, std::max<std::size_t>(n, 1)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) {
      fn(i);
    }
    return;
  }

  std::mutex mutex;
  std::size_t failed_index = std::numeric_limits<std::size_t>::max();
  std::exception_ptr failure;
  const std::size_t chunk = (n + workers - 1) / workers;
  std::vector<std::thread> threads;
  threads.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(n, begin + chunk);
    threads.emplace_back([&, begin, end] {
      for (std::size_t i = begin; i < end; ++i) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(mutex);
          if (i < failed_index) {
            failed_index = i;
            failure = std::current_exception();
          }
          return;
        }
      }
    });
  }
  for (auto& t : threads) {
    t.join();
  }
  if (failure) {
    std::rethrow_exception(failure);
  }
}

std::vector<EventHistory> simulate_cohort(const ScenarioConfig& config, unsigned workers) {
  config.validate();
  std::vector<EventHistory> cohort(config.n_subjects);
  parallel_for(config.n_subjects, workers,
               [&](std::size_t i) { cohort[i] = simulate_one(config, i); });
  return cohort;
}

// ---------------------------------------------------------------------------
// Counting-process export

std::vector<CountingProcessRecord> to_counting_process(std::span<const EventHistory> cohort,
                                                       bool include_frailty) {
  std::vector<CountingProcessRecord> rows;
  for (std::size_t id = 0; id < cohort.size(); ++id) {
    const auto& h = cohort[id];
    if (h.stopped_early) {
      throw DomainError("subject " + std::to_string(id) +
                        " was stopped early and has no censored interval to export");
    }
    CountingProcessRecord row;
    row.subject_id = id;
    row.covariates = h.covariates;
    if (include_frailty) {
      row.frailty = h.frailty;
    }
    double start = 0.0;
    std::size_t j = 1;
    for (double t : h.event_times) {
      row.event_number = j++;
      row.start = start;
      row.stop = t;
      row.status = 1;
      rows.push_back(row);
      start = t;
    }
    row.event_number = j;
    row.start = start;
    row.stop = h.censoring_time;
    row.status = 0;
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<EventHistory> from_counting_process(std::span<const CountingProcessRecord> records) {
  std::vector<EventHistory> cohort;
  bool open = false;
  double expected_start = 0.0;
  for (const auto& row : records) {
    if (!open) {
      if (row.subject_id != cohort.size()) {
        throw DomainError("counting-process rows are not ordered by subject_id");
      }
      EventHistory h;
      h.covariates = row.covariates;
      h.frailty = row.frailty;
      cohort.push_back(std::move(h));
      open = true;
      expected_start = 0.0;
    } else if (row.subject_id + 1 != cohort.size()) {
      throw DomainError("subject " + std::to_string(cohort.size() - 1) +
                        " has no censored final row");
    }
    auto& h = cohort.back();
    if (row.start != expected_start || !(row.stop > row.start) ||
        row.event_number != h.event_times.size() + 1) {
      throw DomainError("rows of subject " + std::to_string(row.subject_id) +
                        " do not partition the follow-up interval");
    }
    expected_start = row.stop;
    if (row.status == 1) {
      h.event_times.push_back(row.stop);
    } else {
      h.censoring_time = row.stop;
      open = false;
    }
  }
  if (open) {
    throw DomainError("last subject has no censored final row");
  }
  return cohort;
}

std::string format_double(double value) {
  char buffer[64];
  const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
  if (ec != std::errc{}) {
    throw DomainError("cannot format floating-point value");
  }
  return std::string(buffer, ptr);
}

void write_counting_process_csv(std::ostream& out, std::span<const CountingProcessRecord> records,
                                std::size_t n_covariates, bool include_frailty) {
  out << "subject_id,event_number,start,stop,status";
  for (std::size_t k = 1; k <= n_covariates; ++k) {
    out << ",x" << k;
  }
  if (include_frailty) {
    out << ",frailty";
  }
  out << '\n';
  for (const auto& row : records) {
    if (row.covariates.size() != n_covariates) {
      throw DomainError("record covariate count does not match the header");
    }
    out << row.subject_id << ',' << row.event_number << ',' << format_double(row.start) << ','
        << format_double(row.stop) << ',' << row.status;
    for (double x : row.covariates) {
      out << ',' << format_double(x);
    }
    if (include_frailty) {
      if (!row.frailty) {
        throw DomainError("frailty column requested but a record has no frailty");
      }
      out << ',' << format_double(*row.frailty);
    }
    out << '\n';
  }
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    fields.push_back(line.substr(start, comma == std::string::npos ? comma : comma - start));
    if (comma == std::string::npos) {
      return fields;
    }
    start = comma + 1;
  }
}

template <class T>
T parse_field(const std::string& text, std::size_t line) {
  T value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw DomainError("line " + std::to_string(line) + ": cannot parse field '" + text + "'");
  }
  return value;
}

}  // namespace

std::vector<CountingProcessRecord> read_counting_process_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) {
    throw DomainError("empty counting-process file");
  }
  const auto header = split_csv_line(line);
  if (header.size() < 5 || header[0] != "subject_id" || header[1] != "event_number" ||
      header[2] != "start" || header[3] != "stop" || header[4] != "status") {
    throw DomainError("unexpected counting-process header: " + line);
  }
  const bool has_frailty = header.back() == "frailty";
  const std::size_t n_cov = header.size() - 5 - (has_frailty ? 1 : 0);
  for (std::size_t k = 0; k < n_cov; ++k) {
    if (header[5 + k] != "x" + std::to_string(k + 1)) {
      throw DomainError("unexpected covariate column '" + header[5 + k] + "'");
    }
  }

  std::vector<CountingProcessRecord> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) {
      continue;
    }
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      throw DomainError("line " + std::to_string(line_no) + ": wrong number of fields");
    }
    CountingProcessRecord row;
    row.subject_id = parse_field<std::size_t>(fields[0], line_no);
    row.event_number = parse_field<std::size_t>(fields[1], line_no);
    row.start = parse_field<double>(fields[2], line_no);
    row.stop = parse_field<double>(fields[3], line_no);
    row.status = parse_field<int>(fields[4], line_no);
    for (std::size_t k = 0; k < n_cov; ++k) {
      row.covariates.push_back(parse_field<double>(fields[5 + k], line_no));
    }
    if (has_frailty) {
      row.frailty = parse_field<double>(fields.back(), line_no);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Taxonomy

TaxonomyLabel classify_model(const IntensityModel& model) {
  TaxonomyLabel label;
  const auto& dep = model.dependence;

  if (dep.kind == DependenceKind::General) {
    if (!dep.g0.is_constant()) {
      label.baseline = BaselineClass::CalendarTimeBaseline;
    } else if (!dep.g1.is_constant()) {
      label.baseline = BaselineClass::GapTimeBaseline;
    } else {
      label.baseline = BaselineClass::ConstantBaseline;
    }
  } else if (model.baseline.is_time_constant()) {
    label.baseline = BaselineClass::ConstantBaseline;
  } else {
    label.baseline = model.timescale == Timescale::Gap ? BaselineClass::GapTimeBaseline
                                                       : BaselineClass::CalendarTimeBaseline;
  }

  label.population =
      model.frailty.is_degenerate() ? PopulationClass::Homogeneous : PopulationClass::Heterogeneous;

  bool dependent = false;
  switch (dep.kind) {
    case DependenceKind::None:
      break;
    case DependenceKind::GapBaselineMultiplier:
      dependent = dep.alpha != 1.0;
      break;
    case DependenceKind::General: {
      const bool g1_zero = dep.g1.is_constant() && dep.g1(1.0) == 0.0;
      // A gap-time effect is the baseline itself when nothing else varies.
      dependent = label.baseline == BaselineClass::GapTimeBaseline
                      ? !dep.g2.is_constant()
                      : (!g1_zero || !dep.g2.is_constant());
      break;
    }
    default:
      dependent = dep.phi != 0.0;
      break;
  }
  label.dependence = dependent ? DependenceClass::EventDependent : DependenceClass::None;
  return label;
}

TaxonomyLabel classify_scenario(const ScenarioConfig& config) {
  return classify_model(config.model);
}

std::string to_string(BaselineClass value) {
  switch (value) {
    case BaselineClass::ConstantBaseline:
      return "ConstantBaseline";
    case BaselineClass::GapTimeBaseline:
      return "GapTimeBaseline";
    case BaselineClass::CalendarTimeBaseline:
      return "CalendarTimeBaseline";
  }
  return "ConstantBaseline";
}

std::string to_string(PopulationClass value) {
  return value == PopulationClass::Homogeneous ? "Homogeneous" : "Heterogeneous";
}

std::string to_string(DependenceClass value) {
  return value == DependenceClass::None ? "None" : "EventDependent";
}

std::string to_string(const TaxonomyLabel& label) {
  return to_string(label.baseline) + "/" + to_string(label.population) + "/" +
         to_string(label.dependence);
}

std::vector<TaxonomyCell> taxonomy_catalog() {
  std::vector<TaxonomyCell> cells;
  for (auto baseline : {BaselineClass::ConstantBaseline, BaselineClass::GapTimeBaseline,
                        BaselineClass::CalendarTimeBaseline}) {
    for (auto population : {PopulationClass::Homogeneous, PopulationClass::Heterogeneous}) {
      for (auto dependence : {DependenceClass::None, DependenceClass::EventDependent}) {
        TaxonomyCell cell;
        cell.label = {baseline, population, dependence};
        switch (baseline) {
          case BaselineClass::ConstantBaseline:
            cell.keys.push_back("model.baseline.kind = constant");
            break;
          case BaselineClass::GapTimeBaseline:
            cell.keys.push_back("model.timescale = gap");
            cell.keys.push_back("model.baseline.kind = weibull (model.baseline.nu != 1)");
            break;
          case BaselineClass::CalendarTimeBaseline:
            cell.keys.push_back("model.timescale = calendar");
            cell.keys.push_back("model.baseline.kind = weibull (model.baseline.nu != 1)");
            break;
        }
        cell.keys.push_back(population == PopulationClass::Homogeneous
                                ? "frailty.kind = none"
                                : "frailty.kind = gamma | lognormal | binary");
        if (dependence == DependenceClass::None) {
          cell.keys.push_back("dependence.kind = none");
        } else if (baseline == BaselineClass::CalendarTimeBaseline) {
          cell.keys.push_back(
              "dependence.kind = count | capped_count | decayed_count | windowed_rate | general");
        } else {
          cell.keys.push_back(
              "dependence.kind = gap_multiplier (gap timescale) | count | capped_count | "
              "decayed_count | windowed_rate");
        }
        cells.push_back(std::move(cell));
      }
    }
  }
  return cells;
}

}  // namespace recursim
