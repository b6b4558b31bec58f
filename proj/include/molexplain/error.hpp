#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace molexplain {

// Caller supplied something invalid: bad flags, files, strings, dimensions.
class UserError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Syntax or semantic error at a character offset of a text input.
class ParseError : public UserError {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : UserError(what + " at offset " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

// A library invariant did not hold. Indicates a bug, not bad input.
class InvariantError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace molexplain
