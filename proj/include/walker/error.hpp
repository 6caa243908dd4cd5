/* Copyright 2026 The Walker MOT Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <stdexcept>
#include <string>

namespace walker {

// Base class for every error raised by the library. Callers that only care
// about "something in the tracking stack rejected its input" catch this.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Precondition violations: shapes, ranges, thresholds.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Malformed files and config.
class ParseError : public Error {
 public:
  using Error::Error;
};

}  // namespace walker
