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

#include "vtrust/netsim.hpp"
#include "vtrust/protocol.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace vtrust {

struct ProtocolSettings
{
  ValidationConfig validation;
  std::uint64_t    iterations = 100;
  std::uint64_t    seed       = 0;
  /// K used by the orderer in batch mode; the per-state modes store every state.
  std::uint64_t subsample_period = 1;
  /// Endorsers per frame. For stochastic ops they jointly recompute the mean
  /// of their draws; for deterministic ops each one recomputes alone.
  std::size_t endorsers = 1;
  /// Peer pool; 0 means exactly `endorsers`.
  std::size_t   endorser_pool = 0;
  std::uint64_t meta_bits     = kDefaultMetaBits;
  /// Client recomputations allowed per iteration before a rejected state is
  /// accepted as is. 0 means no limit (deterministic ops only).
  std::uint64_t recompute_budget = 0;
  /// 0 disables refinement.
  unsigned max_refinement_level = 0;
  /// Price of one f evaluation in bits, for the refine-or-recompute choice.
  double comp_bits_per_op = 64.0;
  bool   keep_trace       = false;
};

struct ProtocolRun
{
  AuditChain           chain;
  CostLedger           costs;
  std::vector<Message> trace;

  StateVector   final_true;
  StateVector   final_reported;
  std::uint64_t iterations           = 0;
  std::uint64_t subsample_period     = 1;
  std::uint64_t frames               = 0;
  std::uint64_t invalidations        = 0;
  std::uint64_t refinements          = 0;
  std::uint64_t forced_accepts       = 0;
  std::uint64_t client_recomputations = 0;
  std::uint64_t dictionary_entries   = 0;
  std::vector<std::uint64_t> conflicts;
  /// Iteration whose report could not be repaired; nothing after it commits.
  std::optional<std::uint64_t> halted_at;

  double recomputations_per_iter() const;
};

/// Client, endorsers and orderer over the simulated network, in the mode
/// named by settings.validation.mode. Deterministic per settings.
ProtocolRun run_protocol(AtomicOpSpec const &op, StateVector const &x0, ProtocolSettings const &settings);

}  // namespace vtrust
