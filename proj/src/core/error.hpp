#pragma once

#include <stdexcept>
#include <string>

namespace veloreg {

// Error categories surfaced as status codes at the C boundary.
enum class Errc : int {
  invalid_argument = 1,
  grid_mismatch = 2,
  io = 3,
  bad_format = 4,
  not_converged = 5,
  internal = 6,
};

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& msg) { throw Error(code, msg); }

}  // namespace veloreg
