#pragma once

#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>

namespace relcm {

/// Failure of a numerical procedure: singular evaluation, step underflow,
/// root bracketing failure. Carries the evolution parameter where it happened
/// when one is known.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what,
                          std::optional<double> sigma = std::nullopt)
      : std::runtime_error(format(what, sigma)), sigma_(sigma) {}

  std::optional<double> sigma() const { return sigma_; }

 private:
  static std::string format(const std::string& what, std::optional<double> s) {
    if (!s) return what;
    std::ostringstream os;
    os.precision(17);
    os << what << " (at sigma = " << *s << ")";
    return os.str();
  }

  std::optional<double> sigma_;
};

/// Invalid experiment configuration or command-line usage.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace relcm
