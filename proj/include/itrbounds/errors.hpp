#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace itrb {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed model, rule, request or configuration.
class ModelError : public Error {
 public:
  using Error::Error;
};

// Data that does not fit the declared model (domains, shapes, zero-mass arms).
class DataError : public Error {
 public:
  using Error::Error;
};

// The observed distribution is incompatible with the LP's causal constraints.
class InfeasibleError : public Error {
 public:
  InfeasibleError(std::string constraint, double violation)
      : Error("LP infeasible: observed distribution violates the model constraints; "
              "most violated constraint " + constraint + " (residual " +
              std::to_string(violation) + ")"),
        constraint_(std::move(constraint)),
        violation_(violation) {}

  const std::string& constraint() const noexcept { return constraint_; }
  double violation() const noexcept { return violation_; }

 private:
  std::string constraint_;
  double violation_;
};

// Response-type enumeration would exceed the configured class cap.
class CapExceededError : public Error {
 public:
  CapExceededError(std::uint64_t count, bool saturated, std::uint64_t cap)
      : Error("response-type class count " +
              (saturated ? std::string(">= 2^64") : std::to_string(count)) +
              " exceeds the cap of " + std::to_string(cap)),
        count_(count),
        saturated_(saturated),
        cap_(cap) {}

  std::uint64_t class_count() const noexcept { return count_; }
  bool saturated() const noexcept { return saturated_; }
  std::uint64_t cap() const noexcept { return cap_; }

 private:
  std::uint64_t count_;
  bool saturated_;
  std::uint64_t cap_;
};

}  // namespace itrb
