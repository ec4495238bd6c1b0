// Copyright 2026 The gneva Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef GNEVA_ERRORS_HPP_
#define GNEVA_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace gneva {

// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad input: malformed files, violated preconditions, shape problems.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// A computation left its numerically valid domain.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class ParseError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class ShapeMismatch : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class EmptyInput : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class MissingHorizonState : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class HorizonMismatch : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class EmptyCandidatePool : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class RegionTooLarge : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class DomainError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class NotPositiveDefinite : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class DegreesOfFreedomTooSmall : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class NonFiniteLoss : public NumericalError {
 public:
  NonFiniteLoss(const std::string& scenario_id, const std::string& what)
      : NumericalError(what), scenario_id_(scenario_id) {}

  const std::string& scenario_id() const { return scenario_id_; }

 private:
  std::string scenario_id_;
};

}  // namespace gneva

#endif  // GNEVA_ERRORS_HPP_
