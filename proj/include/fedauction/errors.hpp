#pragma once
//------------------------------------------------------------------------------
//
//   Copyright 2026 The fedauction Authors
//
//   Licensed under the Apache License, Version 2.0 (the "License");
//   you may not use this file except in compliance with the License.
//   You may obtain a copy of the License at
//
//       http://www.apache.org/licenses/LICENSE-2.0
//
//   Unless required by applicable law or agreed to in writing, software
//   distributed under the License is distributed on an "AS IS" BASIS,
//   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//   See the License for the specific language governing permissions and
//   limitations under the License.
//
//------------------------------------------------------------------------------

#include <stdexcept>
#include <string>

namespace fedauction {

/// Malformed arguments: mismatched shapes, out-of-range parameters, bad files.
class InvalidInput : public std::invalid_argument
{
public:
  using std::invalid_argument::invalid_argument;
};

/// A solver refused an instance larger than it is guarded for.
class CapacityError : public std::length_error
{
public:
  using std::length_error::length_error;
};

/// A verification oracle observed a precondition it relies on being broken,
/// e.g. a win predicate that is not monotone in the bid.
class OracleViolation : public std::logic_error
{
public:
  using std::logic_error::logic_error;
};

class FitFailure : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

class TrainingDiverged : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

}  // namespace fedauction
