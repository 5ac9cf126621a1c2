#pragma once

#include <stdexcept>
#include <string>

namespace oulab {

/// Base of every error raised by the library. The category is what the CLI
/// uses to choose an exit code, so keep it stable.
class Error : public std::runtime_error {
 public:
  enum class Kind {
    argument,
    stability,
    numerical,
    sectoriality,
    capability,
    domain,
    capacity,
    config,
  };

  Error(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

inline Error argument_error(const std::string& what) { return {Error::Kind::argument, what}; }
inline Error stability_error(const std::string& what) { return {Error::Kind::stability, what}; }
inline Error numerical_error(const std::string& what) { return {Error::Kind::numerical, what}; }
inline Error sectoriality_error(const std::string& what) { return {Error::Kind::sectoriality, what}; }
inline Error capability_error(const std::string& what) { return {Error::Kind::capability, what}; }
inline Error domain_error(const std::string& what) { return {Error::Kind::domain, what}; }
inline Error capacity_error(const std::string& what) { return {Error::Kind::capacity, what}; }
inline Error config_error(const std::string& what) { return {Error::Kind::config, what}; }

}  // namespace oulab
