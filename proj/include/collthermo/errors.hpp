// Copyright 2026 The collthermo Authors
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

namespace collthermo {

/// Raised when a numerical object leaves its admissible set (non-Hermitian
/// state, negative eigenvalue beyond tolerance, lost trace, ...).
///
/// Argument errors (bad dimensions, invalid slots, out-of-range parameters)
/// use std::invalid_argument instead.
class InvariantViolation : public std::runtime_error {
  public:
    InvariantViolation(std::string invariant, const std::string &detail)
        : std::runtime_error(invariant + ": " + detail),
          invariant_(std::move(invariant)) {}

    /// Short name of the violated invariant, e.g. "trace".
    [[nodiscard]] const std::string &invariant() const noexcept {
        return invariant_;
    }

  private:
    std::string invariant_;
};

} // namespace collthermo
