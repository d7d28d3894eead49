#include "recursim/cli.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <system_error>

#include "recursim/errors.hpp"
#include "recursim/scenario.hpp"
#include "recursim/study.hpp"
#include "recursim/validate.hpp"

namespace recursim::cli {

namespace {

constexpr int kExitInternal = 70;

ScenarioConfig load_with_overrides(const CliInvocation& inv) {
  ScenarioConfig config = load_scenario(inv.scenario);
  if (inv.seed) {
    config.seed = *inv.seed;
  }
  if (inv.engine) {
    config.engine = *inv.engine;
    if (config.engine != Engine::Discrete) {
      config.dt.reset();
    }
  }
  if (inv.dt) {
    config.dt = inv.dt;
  }
  config.validate();
  return config;
}

template <class Body>
int guarded(std::ostream& err, Body&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const ExplosionError& e) {
    err << "explosion: " << e.what() << '\n';
    return kExitExplosion;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << '\n';
    return kExitIoError;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
}

}  // namespace

void write_file_atomically(const std::filesystem::path& path, std::string_view content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw IoError("cannot open '" + tmp.string() + "' for writing");
    }
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      std::error_code ignored;
      std::filesystem::remove(tmp, ignored);
      throw IoError("write to '" + tmp.string() + "' failed");
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::error_code ignored;
    std::filesystem::remove(tmp, ignored);
    throw IoError("cannot move output into place at '" + path.string() + "': " + ec.message());
  }
}

int run_simulate(const CliInvocation& inv, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (inv.scenario.empty() || inv.out.empty()) {
      err << "simulate needs --scenario and --out\n";
      return kExitConfigError;
    }
    const auto config = load_with_overrides(inv);
    const auto cohort = simulate_cohort(config, inv.workers);
    const auto records = to_counting_process(cohort, inv.emit_frailty);
    std::ostringstream csv;
    write_counting_process_csv(csv, records, config.covariates.size(), inv.emit_frailty);
    write_file_atomically(inv.out, csv.str());

    std::size_t events = 0;
    for (const auto& h : cohort) {
      events += h.event_times.size();
    }
    out << "subjects=" << cohort.size() << " events=" << events << " mean_events="
        << std::setprecision(6)
        << static_cast<double>(events) / static_cast<double>(cohort.size()) << '\n';
    return kExitOk;
  });
}

int run_validate(const CliInvocation& inv, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (inv.scenario.empty()) {
      err << "validate needs --scenario\n";
      return kExitConfigError;
    }
    if (inv.format != "text" && inv.format != "summary") {
      err << "--format must be text or summary\n";
      return kExitConfigError;
    }
    const auto config = load_with_overrides(inv);
    IntensityModel oracle = config.model;
    if (!inv.oracle_scenario.empty()) {
      oracle = load_scenario(inv.oracle_scenario).model;
    }
    const auto reports = validate_scenario(config, oracle, inv.workers);
    out << (inv.format == "summary" ? render_summary(reports) : render_text(reports));
    if (!inv.out.empty()) {
      write_file_atomically(inv.out, render_summary(reports));
    }
    for (const auto& r : reports) {
      if (!r.pass) {
        return kExitChecksFailed;
      }
    }
    return kExitOk;
  });
}

int run_scenarios(std::ostream& out) {
  out << "baseline x population x dependence taxonomy (" << taxonomy_catalog().size()
      << " cells)\n";
  for (const auto& cell : taxonomy_catalog()) {
    out << to_string(cell.label) << '\n';
    for (const auto& key : cell.keys) {
      out << "    " << key << '\n';
    }
  }
  return kExitOk;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Recurrent-event simulation engine"};
  app.require_subcommand(1);

  CliInvocation inv;
  std::string engine;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--scenario", inv.scenario, "Scenario file")->required();
    sub->add_option("--seed", inv.seed, "Master seed, overrides the scenario");
    sub->add_option("--engine", engine, "inversion | thinning | gap-rejection | discrete");
    sub->add_option("--dt", inv.dt, "Grid step of the discrete engine");
    sub->add_option("--workers", inv.workers, "Worker threads (0 = hardware concurrency)");
  };

  auto* simulate = app.add_subcommand("simulate", "Simulate a cohort and write the dataset CSV");
  add_common(simulate);
  simulate->add_option("--out", inv.out, "Output CSV path")->required();
  simulate->add_flag("--emit-frailty", inv.emit_frailty, "Append the realized frailty column");

  auto* validate = app.add_subcommand("validate", "Run the statistical oracle suite");
  add_common(validate);
  validate->add_option("--out", inv.out, "Summary file path");
  validate->add_option("--format", inv.format, "Console report format: text | summary");
  validate->add_option("--oracle-scenario", inv.oracle_scenario,
                       "Scenario whose model is used as the oracle");

  app.add_subcommand("scenarios", "List the scenario taxonomy");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitConfigError;
  }

  if (!engine.empty()) {
    try {
      inv.engine = parse_engine(engine);
    } catch (const ConfigError& e) {
      err << "config error: " << e.what() << '\n';
      return kExitConfigError;
    }
  }

  if (simulate->parsed()) {
    inv.command = Command::Simulate;
    return run_simulate(inv, out, err);
  }
  if (validate->parsed()) {
    inv.command = Command::Validate;
    return run_validate(inv, out, err);
  }
  inv.command = Command::Scenarios;
  return run_scenarios(out);
}

}  // namespace recursim::cli
