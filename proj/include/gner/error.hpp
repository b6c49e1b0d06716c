#pragma once

#include <stdexcept>
#include <string>

namespace gner {

struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace gner
