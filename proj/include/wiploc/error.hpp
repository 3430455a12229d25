#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace wiploc {

/// Argument outside the documented domain of an operation.
class InvalidParameter : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// Payload whose chip count does not match the codebook layout.
class MalformedPayload : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// Degenerate geometry, e.g. transmitter and receiver at the same point.
class InvalidGeometry : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// Duty cycle that does not fit into the localization period.
class InfeasibleConfiguration : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Metrics requested over an empty set of requests.
class UndefinedMetrics : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Scenario that fails validation. Carries every violation found.
class ValidationError : public std::runtime_error {
  public:
    explicit ValidationError(std::vector<std::string> violations)
        : std::runtime_error(join(violations)), violations_(std::move(violations))
    {
    }

    const std::vector<std::string>& violations() const noexcept { return violations_; }

  private:
    static std::string join(const std::vector<std::string>& v)
    {
        std::string out = "invalid scenario";
        for (const auto& s : v) {
            out += "\n  - ";
            out += s;
        }
        return out;
    }

    std::vector<std::string> violations_;
};

} // namespace wiploc
