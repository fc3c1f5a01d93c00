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

#include "vtrust/codec.hpp"
#include "vtrust/compute.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <variant>
#include <vector>

namespace vtrust {

using Hash = std::array<std::uint8_t, 32>;

Hash sha256(std::span<std::uint8_t const> bytes);

/// One stored record: a checkpoint, or the integer sum of the quantized
/// updates for iterations t_start..t_end (inclusive).
struct Audit
{
  std::variant<CheckpointCode, QuantizedUpdate> content;
  std::uint64_t                                 t_start = 0;
  std::uint64_t                                 t_end   = 0;

  bool is_checkpoint() const noexcept { return content.index() == 0; }
  friend bool operator==(Audit const &, Audit const &) = default;
};

/// Largest K <= k_cap with (L^K + 1) K eps <= delta_ver. Throws Infeasible
/// when even K = 1 fails.
std::uint64_t choose_subsample_period(double lipschitz, double epsilon, double delta_ver, std::uint64_t k_cap);
/// The coarser rule K = floor(delta_ver / delta_val), at least 1.
std::uint64_t ratio_subsample_period(double delta_ver, double delta_val);
/// (L^K + 1) K eps.
double verification_bound(double lipschitz, std::uint64_t k, double epsilon);

/// Checkpoint first, then runs of up to K updates summed in index space.
std::vector<Audit> subsample_frame(Frame const &frame, std::uint64_t k);

std::vector<std::uint8_t> encode_audits(std::span<Audit const> audits, LatticeQuantizer const &q);
std::vector<Audit>        decode_audits(std::span<std::uint8_t const> payload, LatticeQuantizer const &q);

struct BlockHeader
{
  Hash          prev_hash{};
  std::uint64_t height         = 0;
  std::uint64_t frame_index    = 0;
  std::uint64_t payload_length = 0;

  friend bool operator==(BlockHeader const &, BlockHeader const &) = default;
};

struct Block
{
  BlockHeader               header;
  std::vector<std::uint8_t> payload;

  friend bool operator==(Block const &, Block const &) = default;
};

inline constexpr std::uint64_t kBlockHeaderBytes = 32 + 8 + 8 + 8;

/// SHA-256 over prev_hash | height | frame_index | payload_length (LE) | payload.
Hash block_hash(Block const &block);

/// Append-only hash-chained blocks. The tip hash (hash of the last block) is
/// kept alongside the blocks so the final block is covered too.
class AuditChain
{
public:
  AuditChain() = default;

  /// Unchecked assembly, used by the file reader; run verify_chain_integrity after.
  static AuditChain from_parts(std::vector<Block> blocks, Hash tip);

  std::vector<Block> const &blocks() const noexcept { return blocks_; }
  std::size_t               size() const noexcept { return blocks_.size(); }
  bool                      empty() const noexcept { return blocks_.empty(); }
  Hash const               &tip() const noexcept { return tip_; }
  /// frame_index the next append must carry.
  std::uint64_t next_frame_index() const noexcept;

  /// First `n` blocks, with the tip taken from the recorded link.
  AuditChain prefix(std::size_t n) const;

  friend Block const &append_block(AuditChain &chain, std::uint64_t frame_index, std::vector<std::uint8_t> payload);

private:
  std::vector<Block> blocks_;
  Hash               tip_{};
};

/// Throws Ordering unless frame_index is the next dense index.
Block const &append_block(AuditChain &chain, std::uint64_t frame_index, std::vector<std::uint8_t> payload);

struct IntegrityReport
{
  bool                         ok = true;
  std::optional<std::uint64_t> first_bad_height;
};

IntegrityReport verify_chain_integrity(AuditChain const &chain);

/// prev_hash, height, frame_index, payload_length, payload per block, then
/// the 32-byte tip hash.
std::vector<std::uint8_t> serialize_chain(AuditChain const &chain);
/// Parses without verifying hashes. A structurally broken stream throws
/// Decode with the height of the block that could not be read.
AuditChain parse_chain(std::span<std::uint8_t const> bytes);
void       write_chain_file(AuditChain const &chain, std::filesystem::path const &path);
AuditChain read_chain_file(std::filesystem::path const &path);

struct VerificationSettings
{
  double        delta_ver        = 0.0;
  double        epsilon          = 0.0;
  double        delta_quant      = 0.0;
  double        state_bound      = 0.0;
  std::size_t   dimension        = 0;
};

struct AuditDeviation
{
  std::uint64_t height    = 0;
  std::uint64_t t_start   = 0;
  std::uint64_t t_end     = 0;
  std::uint64_t span      = 0;
  double        deviation = 0.0;
  bool          flagged   = false;
};

struct VerificationReport
{
  IntegrityReport             integrity;
  std::vector<AuditDeviation> audits;
  double                      max_deviation = 0.0;
  std::uint64_t               max_span      = 0;
  std::uint64_t               flagged       = 0;
  std::uint64_t               recomputations = 0;

  bool passed() const noexcept { return integrity.ok && flagged == 0; }
};

/// Replays the audits: every audit after the first is compared against f^k
/// of the previous reconstructed audit, k being the iterations between them.
/// Deterministic ops only.
VerificationReport verify_computation(AuditChain const &chain, AtomicOpSpec const &op,
                                      VerificationSettings const &settings);

}  // namespace vtrust
