/*
 * Copyright 2026 The kgrbr Authors
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

#ifndef KGRBR_ERROR_HPP_
#define KGRBR_ERROR_HPP_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace kgrbr {

/// Base of every error the library throws. The CLI maps subclasses onto exit
/// codes: ConfigError -> 1, DataError and its subclasses -> 2.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Invalid hyperparameters, flags or preconditions supplied by the caller.
class ConfigError : public Error {
public:
  using Error::Error;
};

/// Problems with input data: files, formats, dimensions.
class DataError : public Error {
public:
  using Error::Error;
};

class IoError : public DataError {
public:
  using DataError::DataError;
};

class ParseError : public DataError {
public:
  ParseError(const std::string& what, std::size_t line)
  : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const { return line_; }

private:
  std::size_t line_;
};

class FormatError : public DataError {
public:
  using DataError::DataError;
};

class DimensionError : public DataError {
public:
  using DataError::DataError;
};

/// Raised by brute-force oracles when an instance exceeds their state budget.
class InstanceTooLarge : public Error {
public:
  using Error::Error;
};

} // namespace kgrbr

#endif // KGRBR_ERROR_HPP_
