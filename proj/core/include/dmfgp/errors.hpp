// Copyright 2026 The dmfgp Authors
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

#pragma once

#include <stdexcept>
#include <string>

namespace dmfgp {

/// A linear-algebra failure (non-finite covariance, failed factorization).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Cholesky failed even at the largest jitter of the escalation schedule.
class NotPositiveDefiniteError : public NumericalError {
 public:
  NotPositiveDefiniteError(const std::string& what, double jitter)
      : NumericalError(what), jitter_(jitter) {}

  /// Absolute diagonal jitter of the last attempt.
  double jitter() const { return jitter_; }

 private:
  double jitter_;
};

/// Every training restart failed.
class TrainingFailedError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace dmfgp
