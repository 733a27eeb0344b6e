#pragma once

#include <stdexcept>
#include <string>

namespace ppd {

// Configuration problems (bad ranges, missing fields). CLI maps these to exit code 2.
class config_error : public std::runtime_error {
public:
  explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

// Malformed or inconsistent input data. CLI maps these to exit code 3.
class data_error : public std::runtime_error {
public:
  explicit data_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace ppd
