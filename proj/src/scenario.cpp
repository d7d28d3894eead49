#include "recursim/scenario.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#include "recursim/errors.hpp"

namespace recursim {

namespace {

constexpr std::array kKnownKeys = {
    "model.timescale",    "model.baseline.kind", "model.baseline.lambda", "model.baseline.nu",
    "model.beta",         "covariates",          "frailty.kind",          "frailty.variance",
    "frailty.low_value",  "frailty.high_value",  "frailty.high_prob",     "dependence.kind",
    "dependence.alpha",   "dependence.cap",      "dependence.phi",        "dependence.window",
    "dependence.g0",      "dependence.g1",       "dependence.g2",         "censoring.kind",
    "censoring.value",    "censoring.rate",      "censoring.low",         "censoring.high",
    "n_subjects",         "seed",                "engine",                "dt",
    "event_limit",
};

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) {
    return {};
  }
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

/// Splits on commas that are not inside parentheses.
std::vector<std::string> split_top_level(const std::string& text) {
  std::vector<std::string> parts;
  int depth = 0;
  std::string current;
  for (char c : text) {
    if (c == '(') ++depth;
    if (c == ')') --depth;
    if (c == ',' && depth == 0) {
      parts.push_back(trim(current));
      current.clear();
    } else {
      current += c;
    }
  }
  if (!trim(current).empty() || !parts.empty()) {
    parts.push_back(trim(current));
  }
  return parts;
}

struct Entry {
  std::string value;
  std::size_t line = 0;
  bool used = false;
};

class KeyValues {
 public:
  void add(std::string key, std::string value, std::size_t line) {
    if (std::find(kKnownKeys.begin(), kKnownKeys.end(), key) == kKnownKeys.end()) {
      throw ConfigError("line " + std::to_string(line) + ": unknown key '" + key + "'", key, line);
    }
    if (entries_.count(key) != 0) {
      throw ConfigError("line " + std::to_string(line) + ": duplicate key '" + key + "'", key,
                        line);
    }
    entries_[key] = Entry{std::move(value), line, false};
  }

  bool has(const std::string& key) const { return entries_.count(key) != 0; }

  std::size_t line_of(const std::string& key) const {
    const auto it = entries_.find(key);
    return it == entries_.end() ? 0 : it->second.line;
  }

  std::optional<std::string> take(const std::string& key) {
    const auto it = entries_.find(key);
    if (it == entries_.end()) {
      return std::nullopt;
    }
    it->second.used = true;
    return it->second.value;
  }

  std::string require(const std::string& key) {
    auto value = take(key);
    if (!value) {
      throw ConfigError("missing required key '" + key + "'", key);
    }
    return *value;
  }

  double number(const std::string& key, const std::string& text) const {
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
      fail(key, "expected a number, got '" + text + "'");
    }
    return value;
  }

  template <class T>
  T integer(const std::string& key, const std::string& text) const {
    T value{};
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
      fail(key, "expected a nonnegative integer, got '" + text + "'");
    }
    return value;
  }

  double require_number(const std::string& key) { return number(key, require(key)); }

  std::optional<double> optional_number(const std::string& key) {
    auto text = take(key);
    if (!text) {
      return std::nullopt;
    }
    return number(key, *text);
  }

  [[noreturn]] void fail(const std::string& key, const std::string& message) const {
    const std::size_t line = line_of(key);
    std::string where = line > 0 ? "line " + std::to_string(line) + ": " : std::string();
    throw ConfigError(where + key + ": " + message, key, line);
  }

  void reject_unused() const {
    for (const auto& [key, entry] : entries_) {
      if (!entry.used) {
        throw ConfigError("line " + std::to_string(entry.line) + ": key '" + key +
                              "' does not apply to this scenario",
                          key, entry.line);
      }
    }
  }

 private:
  std::map<std::string, Entry> entries_;
};

CovariateGenerator parse_covariate(KeyValues& kv, const std::string& text) {
  const auto open = text.find('(');
  if (open == std::string::npos || text.back() != ')') {
    kv.fail("covariates", "expected bernoulli(p) or normal(mean, sd), got '" + text + "'");
  }
  const std::string name = trim(std::string_view(text).substr(0, open));
  const auto args = split_top_level(text.substr(open + 1, text.size() - open - 2));
  if (name == "bernoulli" && args.size() == 1) {
    return CovariateGenerator::bernoulli(kv.number("covariates", args[0]));
  }
  if (name == "normal" && args.size() == 2) {
    return CovariateGenerator::normal(kv.number("covariates", args[0]),
                                      kv.number("covariates", args[1]));
  }
  kv.fail("covariates", "unknown covariate generator '" + text + "'");
}

IntensityModel parse_model(KeyValues& kv) {
  IntensityModel model;
  if (auto ts = kv.take("model.timescale")) {
    if (*ts == "calendar") {
      model.timescale = Timescale::Calendar;
    } else if (*ts == "gap") {
      model.timescale = Timescale::Gap;
    } else {
      kv.fail("model.timescale", "expected calendar or gap, got '" + *ts + "'");
    }
  }

  const std::string kind = kv.require("model.baseline.kind");
  const double lambda = kv.require_number("model.baseline.lambda");
  if (kind == "constant") {
    model.baseline = BaselineHazard::constant(lambda);
  } else if (kind == "weibull") {
    model.baseline = BaselineHazard::weibull(lambda, kv.require_number("model.baseline.nu"));
  } else {
    kv.fail("model.baseline.kind", "expected constant or weibull, got '" + kind + "'");
  }

  if (auto beta = kv.take("model.beta")) {
    for (const auto& part : split_top_level(*beta)) {
      model.beta.push_back(kv.number("model.beta", part));
    }
  }

  const std::string frailty = kv.take("frailty.kind").value_or("none");
  if (frailty == "none") {
    model.frailty = FrailtySpec::none();
  } else if (frailty == "gamma") {
    model.frailty = FrailtySpec::gamma(kv.require_number("frailty.variance"));
  } else if (frailty == "lognormal") {
    model.frailty = FrailtySpec::lognormal(kv.require_number("frailty.variance"));
  } else if (frailty == "binary") {
    const double low = kv.require_number("frailty.low_value");
    const double high = kv.require_number("frailty.high_value");
    const double p = kv.require_number("frailty.high_prob");
    model.frailty = FrailtySpec::binary(low, high, p);
  } else {
    kv.fail("frailty.kind", "expected none, gamma, lognormal or binary, got '" + frailty + "'");
  }

  const std::string dep = kv.take("dependence.kind").value_or("none");
  auto cap = [&]() -> std::optional<std::size_t> {
    auto text = kv.take("dependence.cap");
    if (!text) {
      return std::nullopt;
    }
    return kv.integer<std::size_t>("dependence.cap", *text);
  };
  auto catalog = [&](const std::string& key) {
    auto text = kv.take(key);
    return text ? CatalogFunction::parse(*text) : CatalogFunction::constant(0.0);
  };
  if (dep == "none") {
    model.dependence = EventDependenceSpec::none();
  } else if (dep == "gap_multiplier") {
    const double alpha = kv.require_number("dependence.alpha");
    model.dependence = EventDependenceSpec::gap_multiplier(alpha, cap());
  } else if (dep == "count") {
    model.dependence = EventDependenceSpec::count(kv.require_number("dependence.phi"));
  } else if (dep == "capped_count") {
    const double phi = kv.require_number("dependence.phi");
    const auto k = cap();
    if (!k) {
      kv.fail("dependence.cap", "capped_count needs dependence.cap");
    }
    model.dependence = EventDependenceSpec::capped_count(phi, *k);
  } else if (dep == "decayed_count") {
    model.dependence = EventDependenceSpec::decayed_count(kv.require_number("dependence.phi"));
  } else if (dep == "windowed_rate") {
    const double phi = kv.require_number("dependence.phi");
    model.dependence =
        EventDependenceSpec::windowed_rate(phi, kv.require_number("dependence.window"));
  } else if (dep == "general") {
    auto g0 = catalog("dependence.g0");
    auto g1 = catalog("dependence.g1");
    auto g2 = catalog("dependence.g2");
    model.dependence = EventDependenceSpec::general(g0, g1, g2);
  } else {
    kv.fail("dependence.kind", "unknown dependence kind '" + dep + "'");
  }
  return model;
}

CensoringSpec parse_censoring(KeyValues& kv) {
  const std::string kind = kv.require("censoring.kind");
  if (kind == "fixed") {
    return CensoringSpec::fixed(kv.require_number("censoring.value"));
  }
  if (kind == "exponential") {
    return CensoringSpec::exponential(kv.require_number("censoring.rate"));
  }
  if (kind == "uniform") {
    const double low = kv.optional_number("censoring.low").value_or(0.0);
    return CensoringSpec::uniform(low, kv.require_number("censoring.high"));
  }
  kv.fail("censoring.kind", "expected fixed, exponential or uniform, got '" + kind + "'");
}

ScenarioConfig build(KeyValues& kv) {
  ScenarioConfig config;
  config.model = parse_model(kv);
  config.censoring = parse_censoring(kv);
  if (auto cov = kv.take("covariates")) {
    for (const auto& part : split_top_level(*cov)) {
      config.covariates.push_back(parse_covariate(kv, part));
    }
  }
  config.n_subjects = kv.integer<std::size_t>("n_subjects", kv.require("n_subjects"));
  if (auto seed = kv.take("seed")) {
    config.seed = kv.integer<std::uint64_t>("seed", *seed);
  }
  if (auto engine = kv.take("engine")) {
    config.engine = parse_engine(*engine);
  }
  config.dt = kv.optional_number("dt");
  if (auto limit = kv.take("event_limit")) {
    config.event_limit = kv.integer<std::size_t>("event_limit", *limit);
  }
  kv.reject_unused();
  config.validate();
  return config;
}

}  // namespace

ScenarioConfig parse_scenario(std::istream& in) {
  KeyValues kv;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    const std::string content = trim(hash == std::string::npos ? line : line.substr(0, hash));
    if (content.empty()) {
      continue;
    }
    const auto eq = content.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'", {},
                        line_no);
    }
    kv.add(trim(content.substr(0, eq)), trim(content.substr(eq + 1)), line_no);
  }
  try {
    return build(kv);
  } catch (const ConfigError& e) {
    // Attach the line of the offending key when validation raised it.
    if (e.line() == 0 && !e.key().empty() && kv.line_of(e.key()) > 0) {
      const std::size_t line = kv.line_of(e.key());
      throw ConfigError("line " + std::to_string(line) + ": " + e.what(), e.key(), line);
    }
    throw;
  }
}

ScenarioConfig parse_scenario_text(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_scenario(in);
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open scenario file '" + path.string() + "'");
  }
  return parse_scenario(in);
}

std::string format_scenario(const ScenarioConfig& config) {
  std::ostringstream os;
  const auto& m = config.model;
  os << "model.timescale = " << to_string(m.timescale) << '\n';
  if (m.baseline.kind() == HazardKind::Constant) {
    os << "model.baseline.kind = constant\n";
    os << "model.baseline.lambda = " << format_double(m.baseline.lambda()) << '\n';
  } else {
    os << "model.baseline.kind = weibull\n";
    os << "model.baseline.lambda = " << format_double(m.baseline.lambda()) << '\n';
    os << "model.baseline.nu = " << format_double(m.baseline.nu()) << '\n';
  }
  if (!m.beta.empty()) {
    os << "model.beta = ";
    for (std::size_t i = 0; i < m.beta.size(); ++i) {
      os << (i ? ", " : "") << format_double(m.beta[i]);
    }
    os << '\n';
    os << "covariates = ";
    for (std::size_t i = 0; i < config.covariates.size(); ++i) {
      os << (i ? ", " : "") << config.covariates[i].describe();
    }
    os << '\n';
  }

  os << "frailty.kind = " << to_string(m.frailty.kind) << '\n';
  if (m.frailty.kind == FrailtyKind::Gamma || m.frailty.kind == FrailtyKind::LogNormal) {
    os << "frailty.variance = " << format_double(m.frailty.variance) << '\n';
  } else if (m.frailty.kind == FrailtyKind::Binary) {
    os << "frailty.low_value = " << format_double(m.frailty.low_value) << '\n';
    os << "frailty.high_value = " << format_double(m.frailty.high_value) << '\n';
    os << "frailty.high_prob = " << format_double(m.frailty.high_prob) << '\n';
  }

  const auto& d = m.dependence;
  os << "dependence.kind = " << to_string(d.kind) << '\n';
  switch (d.kind) {
    case DependenceKind::None:
      break;
    case DependenceKind::GapBaselineMultiplier:
      os << "dependence.alpha = " << format_double(d.alpha) << '\n';
      if (d.cap) {
        os << "dependence.cap = " << *d.cap << '\n';
      }
      break;
    case DependenceKind::CappedCountCovariate:
      os << "dependence.cap = " << *d.cap << '\n';
      [[fallthrough]];
    case DependenceKind::CountCovariate:
    case DependenceKind::DecayedCountCovariate:
      os << "dependence.phi = " << format_double(d.phi) << '\n';
      break;
    case DependenceKind::WindowedRateCovariate:
      os << "dependence.phi = " << format_double(d.phi) << '\n';
      os << "dependence.window = " << format_double(d.window) << '\n';
      break;
    case DependenceKind::General: {
      auto fn = [](const CatalogFunction& g) {
        switch (g.kind) {
          case CatalogFunction::Kind::Constant:
            return "constant(" + format_double(g.a) + ")";
          case CatalogFunction::Kind::Linear:
            return "linear(" + format_double(g.a) + ", " + format_double(g.b) + ")";
          case CatalogFunction::Kind::Log:
            return "log(" + format_double(g.a) + ", " + format_double(g.b) + ")";
        }
        return std::string();
      };
      os << "dependence.g0 = " << fn(d.g0) << '\n';
      os << "dependence.g1 = " << fn(d.g1) << '\n';
      os << "dependence.g2 = " << fn(d.g2) << '\n';
      break;
    }
  }

  const auto& c = config.censoring;
  switch (c.kind) {
    case CensoringKind::Fixed:
      os << "censoring.kind = fixed\ncensoring.value = " << format_double(c.value) << '\n';
      break;
    case CensoringKind::Exponential:
      os << "censoring.kind = exponential\ncensoring.rate = " << format_double(c.rate) << '\n';
      break;
    case CensoringKind::Uniform:
      os << "censoring.kind = uniform\ncensoring.low = " << format_double(c.low)
         << "\ncensoring.high = " << format_double(c.high) << '\n';
      break;
  }
  os << "n_subjects = " << config.n_subjects << '\n';
  os << "seed = " << config.seed << '\n';
  os << "engine = " << to_string(config.engine) << '\n';
  if (config.dt) {
    os << "dt = " << format_double(*config.dt) << '\n';
  }
  os << "event_limit = " << config.event_limit << '\n';
  return os.str();
}

}  // namespace recursim
