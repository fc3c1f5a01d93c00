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

#include "vtrust/state.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <variant>
#include <vector>

namespace vtrust {

/// Scaled cubic lattice Z^d with pitch s = 2 eps / sqrt(d): rounding each
/// coordinate to the nearest multiple of s moves the vector by at most eps.
class LatticeQuantizer
{
public:
  LatticeQuantizer(std::size_t dimension, double max_error, double clamp_radius);

  std::size_t dimension() const noexcept { return dimension_; }
  double      max_error() const noexcept { return max_error_; }
  double      step() const noexcept { return step_; }
  double      clamp_radius() const noexcept { return clamp_radius_; }

  /// Pitch after `level` refinements: s / 2^level.
  double step_at(unsigned level) const;
  /// Largest index magnitude a level-0 update can need: ceil(clamp / s).
  std::int64_t max_index() const noexcept { return max_index_; }
  /// Fixed width of one signed level-0 coordinate index.
  unsigned index_bits() const noexcept { return index_bits_; }

private:
  std::size_t  dimension_;
  double       max_error_;
  double       step_;
  double       clamp_radius_;
  std::int64_t max_index_;
  unsigned     index_bits_;
};

struct QuantizedUpdate
{
  std::vector<std::int64_t> indices;
  unsigned                  level = 0;

  friend bool operator==(QuantizedUpdate const &, QuantizedUpdate const &) = default;
};

/// Nearest lattice point of delta / s, ties to even. Throws OutOfRange when
/// |delta| exceeds the clamp radius; the caller must checkpoint instead.
QuantizedUpdate quantize_update(LatticeQuantizer const &q, StateVector const &delta);
StateVector     dequantize_update(LatticeQuantizer const &q, QuantizedUpdate const &u);
/// d * ceil(log2(2 ceil(clamp / s) + 1)).
std::uint64_t update_bit_cost(LatticeQuantizer const &q);

/// Per-coordinate width for a sum of `count` level-`level` indices.
unsigned cumulative_index_bits(LatticeQuantizer const &q, std::uint64_t count, unsigned level);

struct DictIndex
{
  std::uint64_t index = 0;
  friend bool   operator==(DictIndex const &, DictIndex const &) = default;
};

struct NewEntry
{
  StateVector state;
  friend bool operator==(NewEntry const &, NewEntry const &) = default;
};

using CheckpointCode = std::variant<DictIndex, NewEntry>;

/// Lossy dictionary coder for checkpoints: a state within `tolerance` of an
/// existing entry is sent as that entry's index (first match in insertion
/// order); otherwise it is snapped to the lattice of pitch 2 tol / sqrt(d),
/// clamped to [-bound, bound] per coordinate, and appended.
class CheckpointDictionary
{
public:
  CheckpointDictionary(double tolerance, double bound);

  CheckpointCode encode(StateVector const &x);
  /// Decoder side: resolves a code, appending NewEntry payloads in stream order.
  StateVector const &absorb(CheckpointCode const &code);
  StateVector const &entry(std::uint64_t index) const;
  /// Drops entries added after the dictionary had `size` entries; used when a
  /// checkpoint is withdrawn before anyone has accepted it.
  void rollback(std::size_t size);

  std::size_t                     size() const noexcept { return entries_.size(); }
  std::vector<StateVector> const &entries() const noexcept { return entries_; }
  double                          tolerance() const noexcept { return tolerance_; }
  double                          bound() const noexcept { return bound_; }

private:
  double                   tolerance_;
  double                   bound_;
  std::vector<StateVector> entries_;
};

/// Snap x to the checkpoint lattice (pitch 2 tol / sqrt(d), clamp `bound`).
StateVector quantize_checkpoint(StateVector const &x, double tolerance, double bound);

/// A checkpoint followed by up to M-bar quantized deltas. Frame n covers
/// iterations T_n (the checkpoint) through T_n + M_n.
class Frame
{
public:
  Frame(std::uint64_t frame_index, CheckpointCode checkpoint, std::uint64_t checkpoint_time);

  std::uint64_t                       index() const noexcept { return index_; }
  CheckpointCode const               &checkpoint() const noexcept { return checkpoint_; }
  std::uint64_t                       checkpoint_time() const noexcept { return checkpoint_time_; }
  std::vector<QuantizedUpdate> const &updates() const noexcept { return updates_; }
  std::size_t                         size() const noexcept { return updates_.size(); }
  bool                                sealed() const noexcept { return sealed_; }
  /// Iteration of the last state in the frame.
  std::uint64_t last_time() const noexcept { return checkpoint_time_ + updates_.size(); }

  void append(QuantizedUpdate update);
  /// Replace update `offset` (1-based state offset; 0 is the checkpoint).
  void replace(std::size_t offset, QuantizedUpdate update);
  /// Drop every update after state offset `keep`.
  void truncate(std::size_t keep);
  void seal() noexcept { sealed_ = true; }

  friend bool operator==(Frame const &, Frame const &) = default;

private:
  void require_open() const;

  std::uint64_t                index_;
  CheckpointCode               checkpoint_;
  std::uint64_t                checkpoint_time_;
  std::vector<QuantizedUpdate> updates_;
  bool                         sealed_ = false;
};

struct EncodedFrame
{
  std::vector<std::uint8_t> bytes;
  std::uint64_t             bit_length = 0;
};

inline constexpr std::uint8_t kFrameMagic = 0xAF;

/// Header size in bits for a checkpoint code in dimension d.
std::uint64_t frame_header_bits(CheckpointCode const &code, std::size_t dimension);
/// Exact encoded length: header + M_n * update_bit_cost.
std::uint64_t frame_bit_length(Frame const &frame, LatticeQuantizer const &q);

/// Bit-exact layout: 0xAF, frame_index u64 LE, tag (0 dict / 1 new entry),
/// u64 LE index or d binary64 LE, update count u64 LE, then the packed
/// two's-complement level-0 indices MSB-first, zero-padded to a byte.
EncodedFrame encode_frame(Frame const &frame, LatticeQuantizer const &q);
/// Inverse of encode_frame. The stream does not carry T_n, so the caller
/// supplies it (T_0 = 0, T_{n+1} = T_n + M_n + 1). Result is sealed.
Frame decode_frame(std::span<std::uint8_t const> bytes, LatticeQuantizer const &q, std::uint64_t checkpoint_time);

/// Correction that moves an update from `level` to `level + 1`: the new
/// index is 2 * old + c with each c in {-1, 0, 1}.
struct RefinementChunk
{
  std::uint64_t            frame_index   = 0;
  std::uint64_t            update_offset = 0;
  unsigned                 level         = 1;
  std::vector<std::int8_t> correction;

  friend bool operator==(RefinementChunk const &, RefinementChunk const &) = default;
};

RefinementChunk refine_update(LatticeQuantizer const &q, StateVector const &true_delta,
                              QuantizedUpdate const &current, std::uint64_t frame_index = 0,
                              std::uint64_t update_offset = 0);
QuantizedUpdate apply_refinement(QuantizedUpdate const &current, RefinementChunk const &chunk);
/// Payload bits of one chunk: two bits per coordinate.
std::uint64_t refinement_bit_cost(std::size_t dimension);

/// Deepest refinement level representable in the fine accumulators.
inline constexpr unsigned kMaxRefinementLevel = 16;

/// In-frame states are checkpoint + s_fine * (running sum of indices scaled
/// to the finest level), so every reconstruction of the same prefix is
/// bit-identical however it was summed.
class FrameAccumulator
{
public:
  FrameAccumulator(LatticeQuantizer const &q, StateVector checkpoint);

  void               add(QuantizedUpdate const &u);
  void               subtract(QuantizedUpdate const &u);
  StateVector        state() const;
  StateVector const &checkpoint() const noexcept { return checkpoint_; }
  std::vector<std::int64_t> const &fine_sum() const noexcept { return fine_sum_; }

  static std::vector<std::int64_t> to_fine(QuantizedUpdate const &u);
  static StateVector reconstruct(LatticeQuantizer const &q, StateVector const &checkpoint,
                                 std::span<std::int64_t const> fine_sum);

private:
  LatticeQuantizer const   *q_;
  StateVector               checkpoint_;
  std::vector<std::int64_t> fine_sum_;
};

/// Reported states for a frame: element 0 is the checkpoint state, element j
/// the state after update j.
std::vector<StateVector> reported_states(Frame const &frame, StateVector const &checkpoint_state,
                                         LatticeQuantizer const &q);

}  // namespace vtrust
