#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>

#include "recursim/engines.hpp"

namespace recursim::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitChecksFailed = 1;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitExplosion = 3;
inline constexpr int kExitIoError = 4;

enum class Command { Simulate, Validate, Scenarios };

struct CliInvocation {
  Command command = Command::Scenarios;
  std::string scenario;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<Engine> engine;
  std::optional<double> dt;
  bool emit_frailty = false;
  /// Console rendering of validation reports: "text" or "summary".
  std::string format = "text";
  /// Scenario whose model serves as the validation oracle; defaults to
  /// the data scenario itself.
  std::string oracle_scenario;
  unsigned workers = 0;
};

int run_simulate(const CliInvocation& invocation, std::ostream& out, std::ostream& err);
int run_validate(const CliInvocation& invocation, std::ostream& out, std::ostream& err);
int run_scenarios(std::ostream& out);

/// Parses argv and dispatches; returns the process exit status.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Writes `content` to a sibling temporary file and renames it over `path`.
/// Throws IoError; on failure `path` is left untouched.
void write_file_atomically(const std::filesystem::path& path, std::string_view content);

}  // namespace recursim::cli
