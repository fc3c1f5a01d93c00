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

#include "vtrust/ledger.hpp"

#include "vtrust/bitstream.hpp"
#include "vtrust/error.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <string>

namespace vtrust {

Hash sha256(std::span<std::uint8_t const> bytes)
{
  Hash         out{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), out.data(), &len, EVP_sha256(), nullptr) != 1 || len != out.size())
  {
    throw Error(Errc::Io, "SHA-256 digest failed");
  }
  return out;
}

double verification_bound(double lipschitz, std::uint64_t k, double epsilon)
{
  return (std::pow(lipschitz, static_cast<double>(k)) + 1.0) * static_cast<double>(k) * epsilon;
}

std::uint64_t choose_subsample_period(double lipschitz, double epsilon, double delta_ver, std::uint64_t k_cap)
{
  require(lipschitz >= 0.0 && epsilon > 0.0 && delta_ver > 0.0, Errc::InvalidArgument,
          "subsample period needs L >= 0, eps > 0, delta_ver > 0");
  require(k_cap >= 1, Errc::InvalidArgument, "K cap must be at least 1");
  if (verification_bound(lipschitz, 1, epsilon) > delta_ver)
  {
    throw Error(Errc::Infeasible, "no subsampling period satisfies (L^K+1) K eps <= delta_ver; use a smaller eps");
  }
  // (L^K + 1) K is increasing in K for every L >= 0, so the feasible set is a prefix
  std::uint64_t k = 1;
  while (k < k_cap && verification_bound(lipschitz, k + 1, epsilon) <= delta_ver)
  {
    ++k;
  }
  return k;
}

std::uint64_t ratio_subsample_period(double delta_ver, double delta_val)
{
  require(delta_ver > 0.0 && delta_val > 0.0, Errc::InvalidArgument, "tolerances must be positive");
  return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::floor(delta_ver / delta_val)));
}

std::vector<Audit> subsample_frame(Frame const &frame, std::uint64_t k)
{
  require(frame.sealed(), Errc::Unsealed, "subsample_frame");
  require(k >= 1, Errc::InvalidArgument, "K must be at least 1");
  std::vector<Audit> audits;
  audits.push_back(Audit{frame.checkpoint(), frame.checkpoint_time(), frame.checkpoint_time()});

  auto const &updates = frame.updates();
  for (std::size_t begin = 0; begin < updates.size(); begin += k)
  {
    std::size_t const end   = std::min<std::size_t>(updates.size(), begin + k);
    unsigned          level = 0;
    for (std::size_t i = begin; i < end; ++i)
    {
      level = std::max(level, updates[i].level);
    }
    QuantizedUpdate sum;
    sum.level = level;
    sum.indices.assign(updates[begin].indices.size(), 0);
    for (std::size_t i = begin; i < end; ++i)
    {
      std::int64_t const scale = std::int64_t{1} << (level - updates[i].level);
      for (std::size_t c = 0; c < sum.indices.size(); ++c)
      {
        sum.indices[c] += updates[i].indices[c] * scale;
      }
    }
    audits.push_back(
        Audit{std::move(sum), frame.checkpoint_time() + begin + 1, frame.checkpoint_time() + end});
  }
  return audits;
}

namespace {

unsigned width_for(std::span<std::int64_t const> values)
{
  std::uint64_t span = 0;
  for (std::int64_t v : values)
  {
    span = std::max(span, static_cast<std::uint64_t>(v < 0 ? -(v + 1) : v));
  }
  return std::max(1U, bits_for_count(span + 1) + 1);
}

}  // namespace

std::vector<std::uint8_t> encode_audits(std::span<Audit const> audits, LatticeQuantizer const &q)
{
  BitWriter w;
  w.put_u64_le(q.dimension());
  w.put_u64_le(audits.size());
  for (auto const &audit : audits)
  {
    w.put_u8(audit.is_checkpoint() ? 0 : 1);
    w.put_u64_le(audit.t_start);
    w.put_u64_le(audit.t_end);
    if (auto const *code = std::get_if<CheckpointCode>(&audit.content))
    {
      if (auto const *idx = std::get_if<DictIndex>(code))
      {
        w.put_u8(0);
        w.put_u64_le(idx->index);
      }
      else
      {
        auto const &state = std::get<NewEntry>(*code).state;
        check_dimension(state, q.dimension(), "audit checkpoint");
        w.put_u8(1);
        for (double v : state)
        {
          w.put_f64_le(v);
        }
      }
    }
    else
    {
      auto const &sum = std::get<QuantizedUpdate>(audit.content);
      require(sum.indices.size() == q.dimension(), Errc::DimensionMismatch, "audit update");
      unsigned const width = width_for(sum.indices);
      w.put_u8(static_cast<std::uint8_t>(sum.level));
      w.put_u8(static_cast<std::uint8_t>(width));
      for (std::int64_t v : sum.indices)
      {
        w.put_signed(v, width);
      }
      // keep the next audit byte aligned
      while (w.bit_length() % 8 != 0)
      {
        w.put_bits(0, 1);
      }
    }
  }
  return std::move(w).take();
}

std::vector<Audit> decode_audits(std::span<std::uint8_t const> payload, LatticeQuantizer const &q)
{
  BitReader r(payload);
  if (r.get_u64_le() != q.dimension())
  {
    throw Error(Errc::Decode, "audit payload dimension does not match the configuration");
  }
  std::uint64_t const count = r.get_u64_le();
  if (count > r.remaining() / (8 * 17))
  {
    throw Error(Errc::Decode, "audit count exceeds the payload");
  }
  std::vector<Audit> audits;
  audits.reserve(count);
  for (std::uint64_t n = 0; n < count; ++n)
  {
    Audit              audit;
    std::uint8_t const kind = r.get_u8();
    audit.t_start           = r.get_u64_le();
    audit.t_end             = r.get_u64_le();
    if (audit.t_end < audit.t_start)
    {
      throw Error(Errc::Decode, "audit range is reversed");
    }
    if (kind == 0)
    {
      std::uint8_t const tag = r.get_u8();
      if (tag == 0)
      {
        audit.content = CheckpointCode{DictIndex{r.get_u64_le()}};
      }
      else if (tag == 1)
      {
        StateVector state(q.dimension());
        for (auto &v : state)
        {
          v = r.get_f64_le();
        }
        audit.content = CheckpointCode{NewEntry{std::move(state)}};
      }
      else
      {
        throw Error(Errc::Decode, "unknown checkpoint tag");
      }
    }
    else if (kind == 1)
    {
      QuantizedUpdate sum;
      sum.level            = r.get_u8();
      unsigned const width = r.get_u8();
      if (width == 0 || width > 64 || sum.level > kMaxRefinementLevel)
      {
        throw Error(Errc::Decode, "bad audit width or level");
      }
      sum.indices.resize(q.dimension());
      for (auto &v : sum.indices)
      {
        v = r.get_signed(width);
      }
      while (r.position() % 8 != 0)
      {
        r.get_bits(1);
      }
      audit.content = std::move(sum);
    }
    else
    {
      throw Error(Errc::Decode, "unknown audit kind");
    }
    audits.push_back(std::move(audit));
  }
  if (r.remaining() != 0)
  {
    throw Error(Errc::Decode, "trailing bytes in audit payload");
  }
  return audits;
}

namespace {

void put_le(std::vector<std::uint8_t> &out, std::uint64_t value)
{
  for (int i = 0; i < 8; ++i)
  {
    out.push_back(static_cast<std::uint8_t>(value >> (8 * i)));
  }
}

std::uint64_t get_le(std::span<std::uint8_t const> bytes, std::size_t offset)
{
  std::uint64_t value = 0;
  for (int i = 0; i < 8; ++i)
  {
    value |= static_cast<std::uint64_t>(bytes[offset + static_cast<std::size_t>(i)]) << (8 * i);
  }
  return value;
}

void put_block(std::vector<std::uint8_t> &out, Block const &block)
{
  out.insert(out.end(), block.header.prev_hash.begin(), block.header.prev_hash.end());
  put_le(out, block.header.height);
  put_le(out, block.header.frame_index);
  put_le(out, block.header.payload_length);
  out.insert(out.end(), block.payload.begin(), block.payload.end());
}

}  // namespace

Hash block_hash(Block const &block)
{
  std::vector<std::uint8_t> bytes;
  bytes.reserve(kBlockHeaderBytes + block.payload.size());
  put_block(bytes, block);
  return sha256(bytes);
}

AuditChain AuditChain::from_parts(std::vector<Block> blocks, Hash tip)
{
  AuditChain chain;
  chain.blocks_ = std::move(blocks);
  chain.tip_    = tip;
  return chain;
}

std::uint64_t AuditChain::next_frame_index() const noexcept
{
  return blocks_.empty() ? 0 : blocks_.back().header.frame_index + 1;
}

AuditChain AuditChain::prefix(std::size_t n) const
{
  n = std::min(n, blocks_.size());
  AuditChain out;
  out.blocks_.assign(blocks_.begin(), blocks_.begin() + static_cast<std::ptrdiff_t>(n));
  out.tip_ = n == blocks_.size() ? tip_ : blocks_[n].header.prev_hash;
  return out;
}

Block const &append_block(AuditChain &chain, std::uint64_t frame_index, std::vector<std::uint8_t> payload)
{
  if (frame_index != chain.next_frame_index())
  {
    throw Error(Errc::Ordering, "frame " + std::to_string(frame_index) + " appended, expected " +
                                    std::to_string(chain.next_frame_index()));
  }
  Block block;
  block.header.prev_hash      = chain.tip_;
  block.header.height         = chain.blocks_.size();
  block.header.frame_index    = frame_index;
  block.header.payload_length = payload.size();
  block.payload               = std::move(payload);
  Hash const hash             = block_hash(block);
  if (!chain.blocks_.empty() && block_hash(chain.blocks_.back()) != block.header.prev_hash)
  {
    throw Error(Errc::Ordering, "hash self-check failed before append", chain.blocks_.size() - 1);
  }
  chain.blocks_.push_back(std::move(block));
  chain.tip_ = hash;
  return chain.blocks_.back();
}

IntegrityReport verify_chain_integrity(AuditChain const &chain)
{
  IntegrityReport report;
  auto const     &blocks = chain.blocks();
  Hash const      zero{};
  auto            fail = [&](std::uint64_t height) {
    report.ok               = false;
    report.first_bad_height = height;
    return report;
  };
  if (blocks.empty())
  {
    return chain.tip() == zero ? report : fail(0);
  }
  if (blocks.front().header.prev_hash != zero)
  {
    return fail(0);
  }
  // a change anywhere in block i changes hash(i), which then disagrees with
  // the link stored in block i + 1 (or the tip)
  for (std::size_t i = 0; i < blocks.size(); ++i)
  {
    Block const &b = blocks[i];
    if (b.header.height != i || b.header.payload_length != b.payload.size())
    {
      return fail(i);
    }
    if (i > 0 && b.header.frame_index != blocks[i - 1].header.frame_index + 1)
    {
      return fail(i);
    }
    Hash const &link = i + 1 < blocks.size() ? blocks[i + 1].header.prev_hash : chain.tip();
    if (block_hash(b) != link)
    {
      return fail(i);
    }
  }
  return report;
}

std::vector<std::uint8_t> serialize_chain(AuditChain const &chain)
{
  std::vector<std::uint8_t> out;
  for (auto const &block : chain.blocks())
  {
    put_block(out, block);
  }
  out.insert(out.end(), chain.tip().begin(), chain.tip().end());
  return out;
}

AuditChain parse_chain(std::span<std::uint8_t const> bytes)
{
  std::vector<Block> blocks;
  std::size_t        offset = 0;
  while (bytes.size() - offset > 32)
  {
    std::uint64_t const height = blocks.size();
    if (bytes.size() - offset < kBlockHeaderBytes + 32)
    {
      throw Error(Errc::Decode, "truncated block header", height);
    }
    Block block;
    std::copy_n(bytes.begin() + static_cast<std::ptrdiff_t>(offset), 32, block.header.prev_hash.begin());
    block.header.height         = get_le(bytes, offset + 32);
    block.header.frame_index    = get_le(bytes, offset + 40);
    block.header.payload_length = get_le(bytes, offset + 48);
    offset += kBlockHeaderBytes;
    if (block.header.payload_length > bytes.size() - offset - 32)
    {
      throw Error(Errc::Decode, "payload length runs past the end of the file", height);
    }
    auto const first = bytes.begin() + static_cast<std::ptrdiff_t>(offset);
    block.payload.assign(first, first + static_cast<std::ptrdiff_t>(block.header.payload_length));
    offset += block.header.payload_length;
    blocks.push_back(std::move(block));
  }
  if (bytes.size() - offset != 32)
  {
    throw Error(Errc::Decode, "missing tip hash", blocks.size());
  }
  Hash tip{};
  std::copy_n(bytes.begin() + static_cast<std::ptrdiff_t>(offset), 32, tip.begin());
  return AuditChain::from_parts(std::move(blocks), tip);
}

void write_chain_file(AuditChain const &chain, std::filesystem::path const &path)
{
  auto const    bytes = serialize_chain(chain);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
  {
    throw Error(Errc::Io, "cannot open " + path.string() + " for writing");
  }
  out.write(reinterpret_cast<char const *>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out)
  {
    throw Error(Errc::Io, "short write to " + path.string());
  }
}

AuditChain read_chain_file(std::filesystem::path const &path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
  {
    throw Error(Errc::Io, "cannot open " + path.string());
  }
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_chain(bytes);
}

VerificationReport verify_computation(AuditChain const &chain, AtomicOpSpec const &op,
                                      VerificationSettings const &settings)
{
  require(!op.stochastic(), Errc::InvalidArgument, "audits can only be verified for deterministic computations");
  require(settings.delta_ver > 0.0, Errc::InvalidArgument, "delta_ver must be positive");
  require(settings.dimension == op.dimension(), Errc::DimensionMismatch, "verification dimension differs from the op");

  VerificationReport report;
  report.integrity = verify_chain_integrity(chain);
  if (!report.integrity.ok)
  {
    return report;
  }

  LatticeQuantizer const     q(settings.dimension, settings.epsilon, settings.delta_quant);
  CheckpointDictionary       dictionary(settings.epsilon, settings.state_bound);
  std::optional<StateVector> previous;
  std::uint64_t              previous_time = 0;
  std::optional<FrameAccumulator> acc;

  for (auto const &block : chain.blocks())
  {
    std::vector<Audit> audits;
    try
    {
      audits = decode_audits(block.payload, q);
    }
    catch (Error const &e)
    {
      throw Error(Errc::Decode, std::string("undecodable audit: ") + e.what(), block.header.height);
    }
    for (auto const &audit : audits)
    {
      StateVector recorded;
      if (auto const *code = std::get_if<CheckpointCode>(&audit.content))
      {
        recorded = dictionary.absorb(*code);
        check_dimension(recorded, q.dimension(), "audit checkpoint");
        acc.emplace(q, recorded);
      }
      else
      {
        if (!acc)
        {
          throw Error(Errc::Decode, "cumulative audit before any checkpoint", block.header.height);
        }
        acc->add(std::get<QuantizedUpdate>(audit.content));
        recorded = acc->state();
      }

      if (previous)
      {
        if (audit.t_end <= previous_time)
        {
          throw Error(Errc::Decode, "audit ranges are not increasing", block.header.height);
        }
        std::uint64_t const span       = audit.t_end - previous_time;
        StateVector const   recomputed = iterate_k(op, *previous, span);
        report.recomputations += span;
        AuditDeviation dev;
        dev.height    = block.header.height;
        dev.t_start   = audit.t_start;
        dev.t_end     = audit.t_end;
        dev.span      = span;
        dev.deviation = distance(recomputed, recorded);
        dev.flagged   = dev.deviation > settings.delta_ver;
        report.max_deviation = std::max(report.max_deviation, dev.deviation);
        report.max_span      = std::max(report.max_span, span);
        report.flagged += dev.flagged ? 1U : 0U;
        report.audits.push_back(dev);
      }
      previous      = std::move(recorded);
      previous_time = audit.t_end;
    }
  }
  return report;
}

}  // namespace vtrust
