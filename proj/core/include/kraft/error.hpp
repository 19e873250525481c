#pragma once

#include <stdexcept>
#include <string>

namespace kraft {

/// Raised for problems with user-supplied inputs: files, schemas, knowledge
/// graph documents, configuration values. Anything else escaping the library
/// is an internal fault.
class InputError : public std::runtime_error {
 public:
  explicit InputError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace kraft
