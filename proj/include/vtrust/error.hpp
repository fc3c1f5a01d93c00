//------------------------------------------------------------------------------
//
//   Copyright 2026 The vtrust Authors
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

#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace vtrust {

enum class Errc
{
  DimensionMismatch,
  NonFinite,
  OutOfRange,
  InvalidArgument,
  Infeasible,
  Decode,
  Ordering,
  StaleRefinement,
  Unsealed,
  Diverged,
  Io,
};

char const *to_string(Errc code);

/// Single exception type for the library. `at()` carries an iteration or
/// block height when the failure is tied to one.
class Error : public std::runtime_error
{
public:
  Error(Errc code, std::string const &what, std::optional<std::size_t> at = std::nullopt);

  Errc                       code() const noexcept { return code_; }
  std::optional<std::size_t> at() const noexcept { return at_; }

private:
  Errc                       code_;
  std::optional<std::size_t> at_;
};

inline void require(bool cond, Errc code, std::string const &what)
{
  if (!cond)
  {
    throw Error(code, what);
  }
}

}  // namespace vtrust
