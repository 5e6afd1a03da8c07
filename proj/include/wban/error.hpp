#pragma once

#include <stdexcept>
#include <string>

namespace wban {

// Invalid scenario, topology or channel data. Raised before a run starts;
// the CLI maps it to exit status 2.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// A link whose success probability is zero has no finite ETX.
class UnusableLink : public std::domain_error {
 public:
  explicit UnusableLink(const std::string& what) : std::domain_error(what) {}
};

}  // namespace wban
