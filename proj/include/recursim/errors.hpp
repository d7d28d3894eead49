#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace recursim {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation (negative
/// cumulative hazard, hazard singularity at zero, non-positive gap).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Interval bounds supplied in the wrong order.
class ArgumentOrderError : public Error {
 public:
  using Error::Error;
};

/// Intensity requested at a time before the last recorded event.
class HistoryOrderError : public Error {
 public:
  using Error::Error;
};

/// A subject exceeded the per-subject event limit, or its event times
/// stopped advancing in floating point.
class ExplosionError : public Error {
 public:
  ExplosionError(std::size_t subject, std::size_t events, double last_time,
                 const std::string& what)
      : Error(what), subject_(subject), events_(events), last_time_(last_time) {}

  std::size_t subject() const noexcept { return subject_; }
  std::size_t events() const noexcept { return events_; }
  double last_time() const noexcept { return last_time_; }

 private:
  std::size_t subject_;
  std::size_t events_;
  double last_time_;
};

/// The thinning bound was exceeded by the true intensity. Always a bug in
/// the bounding code, never a property of the input.
class BoundViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Discrete-grid event probability above one.
class StepSizeError : public Error {
 public:
  using Error::Error;
};

/// Invalid model, scenario or configuration file contents.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& what, std::string key = {}, std::size_t line = 0)
      : Error(what), key_(std::move(key)), line_(line) {}

  const std::string& key() const noexcept { return key_; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::string key_;
  std::size_t line_;
};

/// Validation input lacks data required by the oracle (e.g. realized frailty).
class MissingDataError : public Error {
 public:
  using Error::Error;
};

/// The requested check has no oracle for the given model.
class UnsupportedCheckError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace recursim
