// Copyright 2026 The DavIR Toolkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef DAVIR_ERROR_HPP
#define DAVIR_ERROR_HPP

#include <stdexcept>
#include <string>

namespace davir {

/// Input data violates a documented invariant (malformed record, duplicate
/// id, mismatched array lengths, ...).
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A file could not be opened, read, written or renamed.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The input is well-formed but the requested quantity is undefined for it:
/// zero variance, zero denominator, empty stream.
class DegenerateInputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace davir

#endif  // DAVIR_ERROR_HPP
