// Copyright 2026 The melvin-surrogate Authors
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

namespace melvin {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Arity, index or shape mismatch between arguments.
class StructuralError : public Error {
 public:
  using Error::Error;
};

class NormalizationError : public Error {
 public:
  using Error::Error;
};

/// Invalid run configuration (empty class, missing fold, bad batch size).
class ConfigurationError : public Error {
 public:
  using Error::Error;
};

/// Token outside the vocabulary, or checkpoint/vocabulary hash mismatch.
class VocabularyError : public Error {
 public:
  using Error::Error;
};

/// Non-finite loss or gradient during training.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace melvin
