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

#include "vtrust/codec.hpp"

#include "vtrust/bitstream.hpp"
#include "vtrust/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace vtrust {

namespace {

// keeps fine accumulators (index * 2^16 * frame length) far from int64 overflow
constexpr std::int64_t kMaxLatticeIndex = std::int64_t{1} << 32;

std::int64_t to_index(double scaled)
{
  // nearbyint honours the default round-half-to-even mode
  double const r = std::nearbyint(scaled);
  if (!(std::abs(r) <= static_cast<double>(kMaxLatticeIndex) * 65536.0))
  {
    throw Error(Errc::OutOfRange, "lattice index overflow");
  }
  return static_cast<std::int64_t>(r);
}

}  // namespace

LatticeQuantizer::LatticeQuantizer(std::size_t dimension, double max_error, double clamp_radius)
  : dimension_(dimension)
  , max_error_(max_error)
  , step_(0.0)
  , clamp_radius_(clamp_radius)
  , max_index_(0)
  , index_bits_(0)
{
  require(dimension > 0, Errc::InvalidArgument, "quantizer dimension must be positive");
  require(std::isfinite(max_error) && max_error > 0.0, Errc::InvalidArgument, "max error must be > 0");
  require(std::isfinite(clamp_radius) && clamp_radius > max_error, Errc::InvalidArgument,
          "clamp radius must exceed the max error");
  step_               = 2.0 * max_error / std::sqrt(static_cast<double>(dimension));
  double const cells  = std::ceil(clamp_radius / step_);
  require(cells <= static_cast<double>(kMaxLatticeIndex), Errc::InvalidArgument,
          "max error too small relative to the clamp radius");
  max_index_  = static_cast<std::int64_t>(cells);
  index_bits_ = bits_for_count(2 * static_cast<std::uint64_t>(max_index_) + 1);
}

double LatticeQuantizer::step_at(unsigned level) const
{
  return std::ldexp(step_, -static_cast<int>(level));
}

QuantizedUpdate quantize_update(LatticeQuantizer const &q, StateVector const &delta)
{
  check_dimension(delta, q.dimension(), "quantize_update");
  require(delta.all_finite(), Errc::NonFinite, "quantize_update input");
  double const len = norm(delta);
  if (len > q.clamp_radius())
  {
    throw Error(Errc::OutOfRange, "update norm " + std::to_string(len) + " exceeds the clamp radius");
  }
  QuantizedUpdate u;
  u.indices.resize(delta.size());
  for (std::size_t i = 0; i < delta.size(); ++i)
  {
    u.indices[i] = to_index(delta[i] / q.step());
  }
  return u;
}

StateVector dequantize_update(LatticeQuantizer const &q, QuantizedUpdate const &u)
{
  if (u.indices.size() != q.dimension())
  {
    throw Error(Errc::DimensionMismatch, "dequantize_update");
  }
  double const s = q.step_at(u.level);
  StateVector  out(u.indices.size());
  for (std::size_t i = 0; i < u.indices.size(); ++i)
  {
    out[i] = static_cast<double>(u.indices[i]) * s;
  }
  return out;
}

std::uint64_t update_bit_cost(LatticeQuantizer const &q)
{
  return static_cast<std::uint64_t>(q.dimension()) * q.index_bits();
}

unsigned cumulative_index_bits(LatticeQuantizer const &q, std::uint64_t count, unsigned level)
{
  std::uint64_t const span = static_cast<std::uint64_t>(q.max_index()) * count << level;
  return bits_for_count(2 * span + 1);
}

StateVector quantize_checkpoint(StateVector const &x, double tolerance, double bound)
{
  require(x.all_finite(), Errc::NonFinite, "checkpoint state");
  double const s = 2.0 * tolerance / std::sqrt(static_cast<double>(x.size()));
  StateVector  out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i)
  {
    double const clamped = std::clamp(x[i], -bound, bound);
    out[i]               = std::nearbyint(clamped / s) * s;
  }
  return out;
}

CheckpointDictionary::CheckpointDictionary(double tolerance, double bound)
  : tolerance_(tolerance)
  , bound_(bound)
{
  require(tolerance > 0.0, Errc::InvalidArgument, "dictionary tolerance must be positive");
  require(bound > 0.0, Errc::InvalidArgument, "dictionary bound must be positive");
}

CheckpointCode CheckpointDictionary::encode(StateVector const &x)
{
  for (std::size_t i = 0; i < entries_.size(); ++i)
  {
    if (entries_[i].size() == x.size() && distance(entries_[i], x) <= tolerance_)
    {
      return DictIndex{i};
    }
  }
  entries_.push_back(quantize_checkpoint(x, tolerance_, bound_));
  return NewEntry{entries_.back()};
}

StateVector const &CheckpointDictionary::absorb(CheckpointCode const &code)
{
  if (auto const *idx = std::get_if<DictIndex>(&code))
  {
    return entry(idx->index);
  }
  entries_.push_back(std::get<NewEntry>(code).state);
  return entries_.back();
}

StateVector const &CheckpointDictionary::entry(std::uint64_t index) const
{
  if (index >= entries_.size())
  {
    throw Error(Errc::Decode, "dictionary index " + std::to_string(index) + " not present");
  }
  return entries_[index];
}

void CheckpointDictionary::rollback(std::size_t size)
{
  if (size < entries_.size())
  {
    entries_.resize(size);
  }
}

Frame::Frame(std::uint64_t frame_index, CheckpointCode checkpoint, std::uint64_t checkpoint_time)
  : index_(frame_index)
  , checkpoint_(std::move(checkpoint))
  , checkpoint_time_(checkpoint_time)
{}

void Frame::require_open() const
{
  if (sealed_)
  {
    throw Error(Errc::InvalidArgument, "frame " + std::to_string(index_) + " is sealed");
  }
}

void Frame::append(QuantizedUpdate update)
{
  require_open();
  updates_.push_back(std::move(update));
}

void Frame::replace(std::size_t offset, QuantizedUpdate update)
{
  require_open();
  require(offset >= 1 && offset <= updates_.size(), Errc::OutOfRange, "frame offset");
  updates_[offset - 1] = std::move(update);
}

void Frame::truncate(std::size_t keep)
{
  require_open();
  if (keep < updates_.size())
  {
    updates_.resize(keep);
  }
}

std::uint64_t frame_header_bits(CheckpointCode const &code, std::size_t dimension)
{
  std::uint64_t const payload = std::holds_alternative<DictIndex>(code) ? 8 : 8 * dimension;
  return 8 * (1 + 8 + 1 + payload + 8);
}

std::uint64_t frame_bit_length(Frame const &frame, LatticeQuantizer const &q)
{
  return frame_header_bits(frame.checkpoint(), q.dimension()) + frame.size() * update_bit_cost(q);
}

EncodedFrame encode_frame(Frame const &frame, LatticeQuantizer const &q)
{
  if (!frame.sealed())
  {
    throw Error(Errc::Unsealed, "frame " + std::to_string(frame.index()));
  }
  BitWriter w;
  w.put_u8(kFrameMagic);
  w.put_u64_le(frame.index());
  if (auto const *idx = std::get_if<DictIndex>(&frame.checkpoint()))
  {
    w.put_u8(0);
    w.put_u64_le(idx->index);
  }
  else
  {
    StateVector const &state = std::get<NewEntry>(frame.checkpoint()).state;
    check_dimension(state, q.dimension(), "encode_frame checkpoint");
    w.put_u8(1);
    for (double v : state)
    {
      w.put_f64_le(v);
    }
  }
  w.put_u64_le(frame.size());
  for (auto const &u : frame.updates())
  {
    require(u.level == 0, Errc::InvalidArgument, "frames carry level-0 updates; refinements travel as chunks");
    require(u.indices.size() == q.dimension(), Errc::DimensionMismatch, "encode_frame update");
    for (std::int64_t idx : u.indices)
    {
      w.put_signed(idx, q.index_bits());
    }
  }
  EncodedFrame out;
  out.bit_length = w.bit_length();
  out.bytes      = std::move(w).take();
  return out;
}

Frame decode_frame(std::span<std::uint8_t const> bytes, LatticeQuantizer const &q, std::uint64_t checkpoint_time)
{
  BitReader r(bytes);
  if (r.get_u8() != kFrameMagic)
  {
    throw Error(Errc::Decode, "bad frame magic");
  }
  std::uint64_t const index = r.get_u64_le();
  std::uint8_t const  tag   = r.get_u8();
  CheckpointCode      code;
  if (tag == 0)
  {
    code = DictIndex{r.get_u64_le()};
  }
  else if (tag == 1)
  {
    StateVector state(q.dimension());
    for (auto &v : state)
    {
      v = r.get_f64_le();
    }
    code = NewEntry{std::move(state)};
  }
  else
  {
    throw Error(Errc::Decode, "unknown checkpoint tag " + std::to_string(tag));
  }
  std::uint64_t const count = r.get_u64_le();
  if (count > r.remaining() / std::max<std::uint64_t>(1, update_bit_cost(q)))
  {
    throw Error(Errc::Decode, "update count exceeds the payload");
  }
  Frame frame(index, std::move(code), checkpoint_time);
  for (std::uint64_t n = 0; n < count; ++n)
  {
    QuantizedUpdate u;
    u.indices.resize(q.dimension());
    for (auto &idx : u.indices)
    {
      idx = r.get_signed(q.index_bits());
    }
    frame.append(std::move(u));
  }
  if (r.remaining() >= 8)
  {
    throw Error(Errc::Decode, "trailing bytes after frame");
  }
  if (r.get_bits(static_cast<unsigned>(r.remaining())) != 0)
  {
    throw Error(Errc::Decode, "nonzero padding");
  }
  frame.seal();
  return frame;
}

RefinementChunk refine_update(LatticeQuantizer const &q, StateVector const &true_delta,
                              QuantizedUpdate const &current, std::uint64_t frame_index, std::uint64_t update_offset)
{
  check_dimension(true_delta, q.dimension(), "refine_update");
  require(current.level < kMaxRefinementLevel, Errc::OutOfRange, "refinement level exhausted");
  double const bound = std::ldexp(q.max_error(), -static_cast<int>(current.level));
  // tiny relative slack: the base reconstruction itself is rounded
  if (distance(dequantize_update(q, current), true_delta) > bound * (1.0 + 1e-9))
  {
    throw Error(Errc::StaleRefinement, "current update is not within eps / 2^level of the true delta");
  }
  double const    fine = q.step_at(current.level + 1);
  RefinementChunk chunk;
  chunk.frame_index   = frame_index;
  chunk.update_offset = update_offset;
  chunk.level         = current.level + 1;
  chunk.correction.resize(q.dimension());
  for (std::size_t i = 0; i < q.dimension(); ++i)
  {
    std::int64_t const target = to_index(true_delta[i] / fine);
    std::int64_t const c      = target - 2 * current.indices[i];
    if (c < -1 || c > 1)
    {
      throw Error(Errc::StaleRefinement, "coordinate " + std::to_string(i) + " is not on its nearest lattice point");
    }
    chunk.correction[i] = static_cast<std::int8_t>(c);
  }
  return chunk;
}

QuantizedUpdate apply_refinement(QuantizedUpdate const &current, RefinementChunk const &chunk)
{
  require(chunk.level == current.level + 1, Errc::StaleRefinement, "refinement chunk level does not follow");
  require(chunk.correction.size() == current.indices.size(), Errc::DimensionMismatch, "refinement chunk");
  QuantizedUpdate next;
  next.level = chunk.level;
  next.indices.resize(current.indices.size());
  for (std::size_t i = 0; i < current.indices.size(); ++i)
  {
    next.indices[i] = 2 * current.indices[i] + chunk.correction[i];
  }
  return next;
}

std::uint64_t refinement_bit_cost(std::size_t dimension)
{
  return 2 * static_cast<std::uint64_t>(dimension);
}

FrameAccumulator::FrameAccumulator(LatticeQuantizer const &q, StateVector checkpoint)
  : q_(&q)
  , checkpoint_(std::move(checkpoint))
  , fine_sum_(q.dimension(), 0)
{
  check_dimension(checkpoint_, q.dimension(), "frame checkpoint");
}

std::vector<std::int64_t> FrameAccumulator::to_fine(QuantizedUpdate const &u)
{
  require(u.level <= kMaxRefinementLevel, Errc::OutOfRange, "refinement level");
  std::vector<std::int64_t> fine(u.indices.size());
  for (std::size_t i = 0; i < fine.size(); ++i)
  {
    fine[i] = u.indices[i] * (std::int64_t{1} << (kMaxRefinementLevel - u.level));
  }
  return fine;
}

void FrameAccumulator::add(QuantizedUpdate const &u)
{
  auto const fine = to_fine(u);
  require(fine.size() == fine_sum_.size(), Errc::DimensionMismatch, "accumulate update");
  for (std::size_t i = 0; i < fine.size(); ++i)
  {
    fine_sum_[i] += fine[i];
  }
}

void FrameAccumulator::subtract(QuantizedUpdate const &u)
{
  auto const fine = to_fine(u);
  require(fine.size() == fine_sum_.size(), Errc::DimensionMismatch, "accumulate update");
  for (std::size_t i = 0; i < fine.size(); ++i)
  {
    fine_sum_[i] -= fine[i];
  }
}

StateVector FrameAccumulator::state() const
{
  return reconstruct(*q_, checkpoint_, fine_sum_);
}

StateVector FrameAccumulator::reconstruct(LatticeQuantizer const &q, StateVector const &checkpoint,
                                          std::span<std::int64_t const> fine_sum)
{
  require(fine_sum.size() == checkpoint.size(), Errc::DimensionMismatch, "reconstruct");
  double const s = q.step_at(kMaxRefinementLevel);
  StateVector  out(checkpoint.size());
  for (std::size_t i = 0; i < out.size(); ++i)
  {
    out[i] = checkpoint[i] + static_cast<double>(fine_sum[i]) * s;
  }
  return out;
}

std::vector<StateVector> reported_states(Frame const &frame, StateVector const &checkpoint_state,
                                         LatticeQuantizer const &q)
{
  std::vector<StateVector> states;
  states.reserve(frame.size() + 1);
  FrameAccumulator acc(q, checkpoint_state);
  states.push_back(checkpoint_state);
  for (auto const &u : frame.updates())
  {
    acc.add(u);
    states.push_back(acc.state());
  }
  return states;
}

}  // namespace vtrust
