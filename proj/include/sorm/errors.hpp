/*
 * Copyright (c) 2026, The rare-sorm authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <stdexcept>
#include <string>

namespace sorm {

/// Error categories. The numeric values are mirrored by the C API status codes.
enum class ErrorCode : int {
  InvalidArgument = 1,
  Dimension = 2,
  Model = 3,
  Divergence = 4,
  NotConverged = 5,
  Nondegeneracy = 6,
  DegenerateReference = 7,
  Operator = 8,
  Sampling = 9,
  Io = 10,
  Config = 11,
  /// Id - B exactly singular (an eigenvalue equal to one).
  Singular = 12,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

class DimensionError : public Error {
 public:
  explicit DimensionError(const std::string& what) : Error(ErrorCode::Dimension, what) {}
};

class ModelError : public Error {
 public:
  explicit ModelError(const std::string& what) : Error(ErrorCode::Model, what) {}
};

/// Non-finite state encountered during a time sweep.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, int step)
      : Error(ErrorCode::Divergence, what + " (step " + std::to_string(step) + ")"), step_(step) {}
  int step() const noexcept { return step_; }

 private:
  int step_;
};

/// An eigenvalue of Id - B failed to stay positive.
class NondegeneracyError : public Error {
 public:
  NondegeneracyError(const std::string& what, double eigenvalue)
      : Error(eigenvalue == 1.0 ? ErrorCode::Singular : ErrorCode::Nondegeneracy, what), eigenvalue_(eigenvalue) {}
  double eigenvalue() const noexcept { return eigenvalue_; }
  /// Eigenvalue is exactly one, i.e. Id - B is singular rather than indefinite.
  bool singular() const noexcept { return eigenvalue_ == 1.0; }

 private:
  double eigenvalue_;
};

}  // namespace sorm
