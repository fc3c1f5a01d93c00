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

#include "vtrust/error.hpp"

namespace vtrust {

char const *to_string(Errc code)
{
  switch (code)
  {
  case Errc::DimensionMismatch:
    return "dimension mismatch";
  case Errc::NonFinite:
    return "non-finite value";
  case Errc::OutOfRange:
    return "out of range";
  case Errc::InvalidArgument:
    return "invalid argument";
  case Errc::Infeasible:
    return "infeasible";
  case Errc::Decode:
    return "decode failure";
  case Errc::Ordering:
    return "ordering violation";
  case Errc::StaleRefinement:
    return "stale refinement base";
  case Errc::Unsealed:
    return "frame not sealed";
  case Errc::Diverged:
    return "computation diverged";
  case Errc::Io:
    return "i/o failure";
  }
  return "unknown";
}

Error::Error(Errc code, std::string const &what, std::optional<std::size_t> at)
  : std::runtime_error(std::string(to_string(code)) + ": " + what)
  , code_(code)
  , at_(at)
{}

}  // namespace vtrust
