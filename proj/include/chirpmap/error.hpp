/*
 * Copyright 2026 The chirpmap Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef CHIRPMAP_ERROR_HPP
#define CHIRPMAP_ERROR_HPP

#include <stdexcept>
#include <string>

namespace chirpmap {

// Base of every error raised by the library. The CLI maps the three
// subclasses onto exit codes 1 (usage), 2 (data) and 3 (numeric).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual int exit_code() const noexcept { return 2; }
};

// Invalid configuration or parameter values supplied by the caller.
class UsageError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 1; }
};

// Malformed, missing, or insufficient input data.
class DataError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 2; }
};

// Numerical failure: non-finite values, unreachable targets.
class NumericError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 3; }
};

}  // namespace chirpmap

#endif  // CHIRPMAP_ERROR_HPP
