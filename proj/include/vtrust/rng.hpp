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

#include <cstdint>
#include <limits>

namespace vtrust {

/// Identifies one stream of external randomness. Agent 0 is the client;
/// endorsers are numbered from 1. `attempt` distinguishes redraws of the
/// same iteration after an invalidation.
struct DrawKey
{
  std::uint64_t seed    = 0;
  std::uint64_t agent   = 0;
  std::uint64_t t       = 0;
  std::uint64_t attempt = 0;

  friend bool operator==(DrawKey const &, DrawKey const &) = default;
};

inline constexpr std::uint64_t kClientAgent = 0;

/// Counter-based generator: the whole stream is a pure function of the key,
/// so any agent can regenerate any draw without shared state. Output is
/// SplitMix64 over a counter seeded by a mix of the key words; the
/// distributions below are hand-rolled so sequences are identical across
/// standard libraries.
class CounterRng
{
public:
  using result_type = std::uint64_t;

  explicit CounterRng(DrawKey const &key);
  explicit CounterRng(std::uint64_t seed);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, bound), bound > 0, without modulo bias.
  std::uint64_t below(std::uint64_t bound);
  /// Standard normal via Box-Muller.
  double normal();

private:
  std::uint64_t counter_;
  double        spare_     = 0.0;
  bool          has_spare_ = false;
};

std::uint64_t mix64(std::uint64_t x);

}  // namespace vtrust
