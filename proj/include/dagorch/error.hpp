// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace dagorch {

// Base for all engine faults. Expected outcomes (plan violations, tool-call
// denials, failed agent executions) are values, not exceptions.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed external document (plan, scenario, config, backend response).
class ParseError : public Error {
 public:
  using Error::Error;
};

// A plan that fails validation where a valid one is required.
class PlanError : public Error {
 public:
  using Error::Error;
};

// A backend could not produce an answer. Carries a short machine tag.
class BackendError : public Error {
 public:
  BackendError(std::string tag, const std::string& what)
      : Error(what), tag_(std::move(tag)) {}
  explicit BackendError(const std::string& what) : BackendError("failed", what) {}

  const std::string& tag() const noexcept { return tag_; }

 private:
  std::string tag_;
};

class NotFoundError : public Error {
 public:
  using Error::Error;
};

class CorruptRecordError : public Error {
 public:
  using Error::Error;
};

// Violated internal precondition: a coordinator bug, never a user error.
class InternalError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace dagorch
