#pragma once

#include <stdexcept>
#include <string>

namespace lfpca {

enum class ErrorKind {
  validation,      // malformed input, bad arguments, inconsistent files
  identifiability, // design cannot separate the covariance components
  numerical,       // non-finite values, failed factorizations
  io,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) fail(kind, what);
}

}  // namespace lfpca
