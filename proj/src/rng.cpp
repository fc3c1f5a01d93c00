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

#include "vtrust/rng.hpp"

#include <cmath>
#include <numbers>

namespace vtrust {

std::uint64_t mix64(std::uint64_t x)
{
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30U)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27U)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31U);
}

CounterRng::CounterRng(DrawKey const &key)
  : counter_(mix64(mix64(mix64(mix64(key.seed) ^ key.agent) ^ key.t) ^ key.attempt))
{}

CounterRng::CounterRng(std::uint64_t seed)
  : counter_(mix64(seed))
{}

CounterRng::result_type CounterRng::operator()()
{
  counter_ += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = counter_;
  z               = (z ^ (z >> 30U)) * 0xbf58476d1ce4e5b9ULL;
  z               = (z ^ (z >> 27U)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31U);
}

double CounterRng::uniform()
{
  return static_cast<double>((*this)() >> 11U) * 0x1.0p-53;
}

std::uint64_t CounterRng::below(std::uint64_t bound)
{
  // rejection on the top of the range keeps every residue equally likely
  std::uint64_t const limit = max() - (max() % bound);
  std::uint64_t       x     = (*this)();
  while (x >= limit)
  {
    x = (*this)();
  }
  return x % bound;
}

double CounterRng::normal()
{
  if (has_spare_)
  {
    has_spare_ = false;
    return spare_;
  }
  double u1 = uniform();
  while (u1 <= 0.0)
  {
    u1 = uniform();
  }
  double const u2     = uniform();
  double const radius = std::sqrt(-2.0 * std::log(u1));
  double const angle  = 2.0 * std::numbers::pi * u2;
  spare_              = radius * std::sin(angle);
  has_spare_          = true;
  return radius * std::cos(angle);
}

}  // namespace vtrust
