#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <vector>

#include "recursim/errors.hpp"
#include "recursim/study.hpp"

using namespace recursim;

namespace {

ScenarioConfig poisson_config(std::size_t n, double lambda, double censor, std::uint64_t seed) {
  ScenarioConfig c;
  c.model.baseline = BaselineHazard::constant(lambda);
  c.censoring = CensoringSpec::fixed(censor);
  c.n_subjects = n;
  c.seed = seed;
  return c;
}

std::vector<double> count_vector(const std::vector<EventHistory>& cohort) {
  std::vector<double> out;
  for (const auto& h : cohort) out.push_back(static_cast<double>(h.event_times.size()));
  return out;
}

double mean(const std::vector<double>& xs) {
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double variance(const std::vector<double>& xs) {
  const double m = mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return ss / static_cast<double>(xs.size() - 1);
}

EventHistory history(std::vector<double> events, double censor) {
  EventHistory h;
  h.event_times = std::move(events);
  h.censoring_time = censor;
  h.frailty = 1.0;
  return h;
}

}  // namespace

TEST(DrawCensoring, Fixed) {
  RandomStream rng(1);
  EXPECT_EQ(draw_censoring(CensoringSpec::fixed(10.0), rng), 10.0);
}

TEST(DrawCensoring, UniformMean) {
  RandomStream rng(2);
  const auto spec = CensoringSpec::uniform(0.0, 10.0);
  double s = 0.0;
  for (int i = 0; i < 1000000; ++i) {
    const double c = draw_censoring(spec, rng);
    ASSERT_GT(c, 0.0);
    ASSERT_LT(c, 10.0);
    s += c;
  }
  EXPECT_NEAR(s / 1e6, 5.0, 0.01);
}

TEST(DrawCensoring, ExponentialMean) {
  RandomStream rng(3);
  const auto spec = CensoringSpec::exponential(0.2);
  double s = 0.0;
  for (int i = 0; i < 1000000; ++i) s += draw_censoring(spec, rng);
  EXPECT_NEAR(s / 1e6, 5.0, 0.02);
}

TEST(CensoringSpec, Validation) {
  EXPECT_THROW(CensoringSpec::fixed(0.0), ConfigError);
  EXPECT_THROW(CensoringSpec::exponential(-1.0), ConfigError);
  EXPECT_THROW(CensoringSpec::uniform(2.0, 2.0), ConfigError);
  EXPECT_THROW(CensoringSpec::uniform(-1.0, 2.0), ConfigError);
  EXPECT_EQ(CensoringSpec::fixed(4.0).reference_horizon(), 4.0);
  EXPECT_EQ(CensoringSpec::uniform(1.0, 6.0).reference_horizon(), 6.0);
  EXPECT_DOUBLE_EQ(CensoringSpec::exponential(0.5).reference_horizon(), 6.0);
}

TEST(CovariateGenerator, DrawsAndValidation) {
  RandomStream rng(4);
  const auto b = CovariateGenerator::bernoulli(0.3);
  const auto n = CovariateGenerator::normal(2.0, 0.5);
  double sb = 0.0;
  double sn = 0.0;
  for (int i = 0; i < 200000; ++i) {
    const double x = b.draw(rng);
    ASSERT_TRUE(x == 0.0 || x == 1.0);
    sb += x;
    sn += n.draw(rng);
  }
  EXPECT_NEAR(sb / 2e5, 0.3, 0.005);
  EXPECT_NEAR(sn / 2e5, 2.0, 0.005);
  EXPECT_THROW(CovariateGenerator::bernoulli(1.5), ConfigError);
  EXPECT_THROW(CovariateGenerator::normal(0.0, -1.0), ConfigError);
}

TEST(ScenarioConfig, Validation) {
  auto c = poisson_config(10, 1.0, 1.0, 1);
  EXPECT_NO_THROW(c.validate());
  c.model.beta = {0.5};
  EXPECT_THROW(c.validate(), ConfigError);
  c.covariates = {CovariateGenerator::bernoulli(0.5)};
  EXPECT_NO_THROW(c.validate());
  c.engine = Engine::Discrete;
  EXPECT_THROW(c.validate(), ConfigError);
  c.dt = 1e-3;
  EXPECT_NO_THROW(c.validate());
  c.engine = Engine::Inversion;
  EXPECT_THROW(c.validate(), ConfigError);
  c.dt.reset();
  c.n_subjects = 0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(SimulateCohort, DeterministicAndWorkerIndependent) {
  auto c = poisson_config(1000, 1.0, 5.0, 77);
  c.model.frailty = FrailtySpec::gamma(0.4);
  c.model.beta = {0.3, -0.2};
  c.covariates = {CovariateGenerator::bernoulli(0.5), CovariateGenerator::normal(0.0, 1.0)};
  const auto a = simulate_cohort(c, 1);
  const auto b = simulate_cohort(c, 1);
  const auto d = simulate_cohort(c, 4);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a, d);
  // Any visiting order gives the same subject.
  for (std::size_t i : {999u, 0u, 500u}) {
    EXPECT_EQ(simulate_one(c, i), a[i]);
  }
  c.seed = 78;
  EXPECT_NE(simulate_cohort(c, 1), a);
}

TEST(SimulateCohort, MixedPoissonVariance) {
  auto c = poisson_config(40000, 1.0, 2.0, 5);
  c.model.frailty = FrailtySpec::gamma(0.5);
  const auto n = count_vector(simulate_cohort(c));
  // Var of the sample variance via the fourth central moment.
  const double m = mean(n);
  double m2 = 0.0;
  double m4 = 0.0;
  for (double x : n) {
    m2 += std::pow(x - m, 2);
    m4 += std::pow(x - m, 4);
  }
  m2 /= n.size();
  m4 /= n.size();
  const double se = std::sqrt((m4 - m2 * m2) / n.size());
  EXPECT_LT(std::abs(variance(n) - 4.0), 3.0 * se);
}

TEST(SimulateCohort, CovariateEffectOnMean) {
  ScenarioConfig c;
  c.model.baseline = BaselineHazard::weibull(1.0, 2.0);
  c.model.beta = {std::log(2.0)};
  c.covariates = {CovariateGenerator::bernoulli(0.5)};
  c.censoring = CensoringSpec::fixed(1.0);
  c.n_subjects = 40000;
  c.seed = 12;
  const auto n = count_vector(simulate_cohort(c));
  EXPECT_LT(std::abs(mean(n) - 1.5), 3.0 * std::sqrt(variance(n) / n.size()));
}

TEST(SimulateCohort, ExplosionNamesLowestSubject) {
  ScenarioConfig c;
  c.model.timescale = Timescale::Gap;
  c.model.baseline = BaselineHazard::constant(1.0);
  c.model.dependence = EventDependenceSpec::gap_multiplier(2.0, std::nullopt);
  c.censoring = CensoringSpec::fixed(50.0);
  c.n_subjects = 8;
  try {
    simulate_cohort(c, 3);
    FAIL() << "expected ExplosionError";
  } catch (const ExplosionError& e) {
    EXPECT_EQ(e.subject(), 0u);
  }
}

TEST(ParallelFor, CoversEveryIndexAndRethrowsLowest) {
  std::vector<int> hits(1000, 0);
  parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i] += 1; });
  EXPECT_EQ(std::count(hits.begin(), hits.end(), 1), 1000);
  try {
    parallel_for(100, 4, [](std::size_t i) {
      if (i == 37 || i == 80) throw std::runtime_error(std::to_string(i));
    });
    FAIL();
  } catch (const std::runtime_error& e) {
    EXPECT_STREQ(e.what(), "37");
  }
}

TEST(ToCountingProcess, Layout) {
  const std::vector<EventHistory> cohort = {history({1.0, 3.0}, 5.0), history({}, 2.0)};
  const auto rows = to_counting_process(cohort);
  ASSERT_EQ(rows.size(), 4u);
  auto check = [](const CountingProcessRecord& r, std::size_t id, std::size_t j, double a,
                  double b, int status) {
    EXPECT_EQ(r.subject_id, id);
    EXPECT_EQ(r.event_number, j);
    EXPECT_EQ(r.start, a);
    EXPECT_EQ(r.stop, b);
    EXPECT_EQ(r.status, status);
  };
  check(rows[0], 0, 1, 0.0, 1.0, 1);
  check(rows[1], 0, 2, 1.0, 3.0, 1);
  check(rows[2], 0, 3, 3.0, 5.0, 0);
  check(rows[3], 1, 1, 0.0, 2.0, 0);
  EXPECT_FALSE(rows[0].frailty.has_value());
  EXPECT_TRUE(to_counting_process(cohort, true)[0].frailty.has_value());
}

TEST(ToCountingProcess, RefusesTruncatedHistories) {
  auto h = history({1.0}, 5.0);
  h.stopped_early = true;
  const std::vector<EventHistory> cohort = {h};
  EXPECT_THROW(to_counting_process(cohort), DomainError);
}

TEST(ToCountingProcess, StructuralInvariantsAndRoundTrip) {
  ScenarioConfig c;
  c.model.baseline = BaselineHazard::weibull(0.8, 1.4);
  c.model.frailty = FrailtySpec::lognormal(0.3);
  c.model.beta = {0.2};
  c.covariates = {CovariateGenerator::normal(0.0, 1.0)};
  c.censoring = CensoringSpec::uniform(0.5, 4.0);
  c.n_subjects = 2000;
  c.seed = 31;
  const auto cohort = simulate_cohort(c);
  const auto rows = to_counting_process(cohort, true);

  std::size_t k = 0;
  for (std::size_t id = 0; id < cohort.size(); ++id) {
    const auto& h = cohort[id];
    double prev = 0.0;
    int statuses = 0;
    std::size_t j = 1;
    while (k < rows.size() && rows[k].subject_id == id) {
      const auto& r = rows[k];
      ASSERT_EQ(r.start, prev);
      ASSERT_LT(r.start, r.stop);
      ASSERT_EQ(r.event_number, j++);
      ASSERT_EQ(r.covariates, h.covariates);
      statuses += r.status;
      prev = r.stop;
      ++k;
      if (r.status == 0) break;
    }
    ASSERT_EQ(prev, h.censoring_time);
    ASSERT_EQ(static_cast<std::size_t>(statuses), h.event_times.size());
  }
  ASSERT_EQ(k, rows.size());

  const auto back = from_counting_process(rows);
  ASSERT_EQ(back.size(), cohort.size());
  for (std::size_t i = 0; i < cohort.size(); ++i) {
    EXPECT_EQ(back[i].event_times, cohort[i].event_times);
    EXPECT_EQ(back[i].censoring_time, cohort[i].censoring_time);
    EXPECT_EQ(back[i].covariates, cohort[i].covariates);
    EXPECT_EQ(back[i].frailty, cohort[i].frailty);
  }
}

TEST(FromCountingProcess, RejectsBrokenPartitions) {
  std::vector<CountingProcessRecord> rows = {{0, 1, 0.0, 1.0, 1, {}, {}},
                                             {0, 2, 1.5, 3.0, 0, {}, {}}};
  EXPECT_THROW(from_counting_process(rows), DomainError);
  rows[1].start = 1.0;
  EXPECT_NO_THROW(from_counting_process(rows));
  rows[1].status = 1;
  EXPECT_THROW(from_counting_process(rows), DomainError);
}

TEST(CountingProcessCsv, RoundTripExact) {
  ScenarioConfig c;
  c.model.baseline = BaselineHazard::weibull(1.3, 0.7);
  c.model.frailty = FrailtySpec::gamma(0.8);
  c.model.beta = {0.4, -1.0};
  c.covariates = {CovariateGenerator::bernoulli(0.4), CovariateGenerator::normal(1.0, 2.0)};
  c.censoring = CensoringSpec::exponential(0.3);
  c.n_subjects = 500;
  c.seed = 2;
  const auto rows = to_counting_process(simulate_cohort(c), true);
  std::stringstream ss;
  write_counting_process_csv(ss, rows, 2, true);
  const std::string text = ss.str();
  EXPECT_EQ(text.substr(0, text.find('\n')), "subject_id,event_number,start,stop,status,x1,x2,frailty");
  const auto back = read_counting_process_csv(ss);
  EXPECT_EQ(back, rows);

  std::stringstream plain;
  write_counting_process_csv(plain, to_counting_process(simulate_cohort(c)), 2, false);
  EXPECT_EQ(plain.str().substr(0, plain.str().find('\n')),
            "subject_id,event_number,start,stop,status,x1,x2");
}

TEST(CountingProcessCsv, RejectsMalformedInput) {
  std::stringstream bad_header("id,start,stop\n");
  EXPECT_THROW(read_counting_process_csv(bad_header), DomainError);
  std::stringstream bad_field("subject_id,event_number,start,stop,status\n0,1,0,abc,0\n");
  EXPECT_THROW(read_counting_process_csv(bad_field), DomainError);
}

TEST(FormatDouble, ShortestRoundTrip) {
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(5.0), "5");
  EXPECT_EQ(format_double(1e-300), "1e-300");
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> unit(-50.0, 50.0);
  for (int i = 0; i < 10000; ++i) {
    const double v = std::exp(unit(rng));
    ASSERT_EQ(std::stod(format_double(v)), v);
  }
}

TEST(ClassifyScenario, Examples) {
  IntensityModel m;
  m.baseline = BaselineHazard::constant(1.0);
  m.frailty = FrailtySpec::gamma(0.5);
  EXPECT_EQ(classify_model(m), (TaxonomyLabel{BaselineClass::ConstantBaseline,
                                               PopulationClass::Heterogeneous,
                                               DependenceClass::None}));

  IntensityModel cal;
  cal.baseline = BaselineHazard::weibull(1.0, 2.0);
  cal.dependence = EventDependenceSpec::count(0.3);
  EXPECT_EQ(classify_model(cal), (TaxonomyLabel{BaselineClass::CalendarTimeBaseline,
                                                 PopulationClass::Homogeneous,
                                                 DependenceClass::EventDependent}));

  IntensityModel g;
  g.timescale = Timescale::Gap;
  g.baseline = BaselineHazard::weibull(1.0, 1.0);
  EXPECT_EQ(classify_model(g), (TaxonomyLabel{BaselineClass::ConstantBaseline,
                                               PopulationClass::Homogeneous,
                                               DependenceClass::None}));
  g.baseline = BaselineHazard::weibull(1.0, 2.0);
  g.dependence = EventDependenceSpec::gap_multiplier(1.5, 4);
  EXPECT_EQ(classify_model(g), (TaxonomyLabel{BaselineClass::GapTimeBaseline,
                                               PopulationClass::Homogeneous,
                                               DependenceClass::EventDependent}));
  g.dependence = EventDependenceSpec::gap_multiplier(1.0, std::nullopt);
  EXPECT_EQ(classify_model(g).dependence, DependenceClass::None);

  ScenarioConfig c;
  c.model = cal;
  EXPECT_EQ(classify_scenario(c), classify_model(cal));
}

TEST(ClassifyScenario, CatalogIsTheFullGrid) {
  const auto cells = taxonomy_catalog();
  ASSERT_EQ(cells.size(), 12u);
  std::set<std::string> labels;
  for (const auto& cell : cells) {
    labels.insert(to_string(cell.label));
    EXPECT_FALSE(cell.keys.empty());
  }
  EXPECT_EQ(labels.size(), 12u);
}

TEST(ClassifyScenario, TotalOverModelGrid) {
  const std::vector<BaselineHazard> baselines = {BaselineHazard::constant(1.0),
                                                 BaselineHazard::weibull(1.0, 1.0),
                                                 BaselineHazard::weibull(1.0, 0.5)};
  const std::vector<FrailtySpec> frailties = {FrailtySpec::none(), FrailtySpec::gamma(0.5),
                                              FrailtySpec::lognormal(0.5),
                                              FrailtySpec::binary(0.5, 2.0, 1.0 / 3)};
  const std::vector<EventDependenceSpec> deps = {
      EventDependenceSpec::none(), EventDependenceSpec::count(0.1),
      EventDependenceSpec::capped_count(0.1, 2), EventDependenceSpec::decayed_count(0.1),
      EventDependenceSpec::windowed_rate(0.1, 1.0)};
  std::set<std::string> seen;
  for (auto ts : {Timescale::Calendar, Timescale::Gap}) {
    for (const auto& b : baselines) {
      for (const auto& f : frailties) {
        for (const auto& d : deps) {
          IntensityModel m;
          m.timescale = ts;
          m.baseline = b;
          m.frailty = f;
          m.dependence = d;
          const auto label = classify_model(m);
          seen.insert(to_string(label));
          EXPECT_EQ(label.population == PopulationClass::Heterogeneous,
                    f.kind != FrailtyKind::None);
          EXPECT_EQ(label.dependence == DependenceClass::EventDependent,
                    d.kind != DependenceKind::None);
          EXPECT_EQ(label.baseline == BaselineClass::ConstantBaseline, b.nu() == 1.0);
        }
      }
    }
  }
  EXPECT_EQ(seen.size(), 12u);
}
