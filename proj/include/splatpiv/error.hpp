#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace splatpiv {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Configuration document could not be parsed or violates an invariant.
class ConfigError : public Error {
  public:
    ConfigError(std::string field, const std::string& message, std::size_t line = 0)
        : Error(format(field, message, line)), field_(std::move(field)), line_(line) {}

    const std::string& field() const noexcept { return field_; }
    /// 1-based line number, 0 when not applicable.
    std::size_t line() const noexcept { return line_; }

  private:
    static std::string format(const std::string& field, const std::string& message,
                              std::size_t line) {
        std::string out = "config";
        if (line > 0) out += ":" + std::to_string(line);
        if (!field.empty()) out += ": '" + field + "'";
        return out + ": " + message;
    }

    std::string field_;
    std::size_t line_;
};

/// A flow-field container was malformed.
class FormatError : public Error {
  public:
    enum class Kind {
        bad_magic,
        truncated,
        bad_dimensions,
        non_finite,
        bad_header,
        column_count,
        incomplete_grid,
        non_uniform_spacing,
        missing_dataset,
        shape_mismatch,
        bad_rank,
    };

    FormatError(Kind kind, const std::string& message) : Error(message), kind_(kind) {}

    Kind kind() const noexcept { return kind_; }

  private:
    Kind kind_;
};

/// Filesystem access failed (missing file, unwritable directory, short write).
class IoError : public Error {
  public:
    using Error::Error;
};

/// The generation stream cannot continue.
class GenerationError : public Error {
  public:
    using Error::Error;
};

/// The flow-source stream ended (all sources failed, or a finite stream ran out).
class ExhaustedError : public GenerationError {
  public:
    using GenerationError::GenerationError;
};

/// Metric inputs are inconsistent (empty lists, mismatched shapes, zero denominator).
class MetricError : public Error {
  public:
    using Error::Error;
};

}  // namespace splatpiv
