#pragma once

#include <stdexcept>
#include <string>

namespace hydroqkd {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

class LengthMismatch : public Error {
 public:
  LengthMismatch(std::size_t lhs, std::size_t rhs)
      : Error("length mismatch: " + std::to_string(lhs) + " vs " + std::to_string(rhs)),
        lhs_(lhs),
        rhs_(rhs) {}

  std::size_t lhs() const noexcept { return lhs_; }
  std::size_t rhs() const noexcept { return rhs_; }

 private:
  std::size_t lhs_;
  std::size_t rhs_;
};

class EncodingError : public Error {
 public:
  EncodingError(const std::string& what, std::size_t position) : Error(what), position_(position) {}
  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

// Invalid simulation/scenario configuration. `field` names the offending entry.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& what)
      : Error(field.empty() ? what : field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

class EstimationError : public Error {
 public:
  using Error::Error;
};

class DegenerateChannel : public Error {
 public:
  using Error::Error;
};

// Not enough unconsumed key material. The store is left untouched.
class KeyExhausted : public Error {
 public:
  KeyExhausted(std::size_t requested, std::size_t available)
      : Error("key material exhausted: requested " + std::to_string(requested) + " bits, " +
              std::to_string(available) + " available"),
        requested_(requested),
        available_(available) {}
  std::size_t requested() const noexcept { return requested_; }
  std::size_t available() const noexcept { return available_; }

 private:
  std::size_t requested_;
  std::size_t available_;
};

class LedgerConflict : public Error {
 public:
  using Error::Error;
};

class NonceReuse : public Error {
 public:
  using Error::Error;
};

}  // namespace hydroqkd
