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

#include "vtrust/bitstream.hpp"

#include "vtrust/error.hpp"

#include <bit>
#include <cstring>

namespace vtrust {

void BitWriter::put_bits(std::uint64_t value, unsigned width)
{
  require(width <= 64, Errc::InvalidArgument, "bit width above 64");
  for (unsigned i = width; i-- > 0;)
  {
    if (bits_ % 8 == 0)
    {
      bytes_.push_back(0);
    }
    if ((value >> i) & 1U)
    {
      bytes_.back() |= static_cast<std::uint8_t>(0x80U >> (bits_ % 8));
    }
    ++bits_;
  }
}

void BitWriter::put_signed(std::int64_t value, unsigned width)
{
  require(width >= 1 && width <= 64, Errc::InvalidArgument, "signed width must be 1..64");
  if (width < 64)
  {
    std::int64_t const lo = -(std::int64_t{1} << (width - 1));
    std::int64_t const hi = (std::int64_t{1} << (width - 1)) - 1;
    require(value >= lo && value <= hi, Errc::OutOfRange, "index does not fit its bit width");
  }
  auto const raw = static_cast<std::uint64_t>(value);
  put_bits(width == 64 ? raw : raw & ((std::uint64_t{1} << width) - 1), width);
}

void BitWriter::put_u64_le(std::uint64_t value)
{
  for (int i = 0; i < 8; ++i)
  {
    put_u8(static_cast<std::uint8_t>(value >> (8 * i)));
  }
}

void BitWriter::put_f64_le(double value)
{
  put_u64_le(std::bit_cast<std::uint64_t>(value));
}

std::uint64_t BitReader::get_bits(unsigned width)
{
  require(width <= 64, Errc::InvalidArgument, "bit width above 64");
  if (remaining() < width)
  {
    throw Error(Errc::Decode, "bitstream truncated");
  }
  std::uint64_t value = 0;
  for (unsigned i = 0; i < width; ++i)
  {
    std::uint8_t const byte = bytes_[pos_ / 8];
    value                   = (value << 1U) | ((byte >> (7 - pos_ % 8)) & 1U);
    ++pos_;
  }
  return value;
}

std::int64_t BitReader::get_signed(unsigned width)
{
  require(width >= 1 && width <= 64, Errc::InvalidArgument, "signed width must be 1..64");
  std::uint64_t const raw = get_bits(width);
  if (width == 64)
  {
    return static_cast<std::int64_t>(raw);
  }
  std::uint64_t const sign = std::uint64_t{1} << (width - 1);
  return static_cast<std::int64_t>((raw ^ sign)) - static_cast<std::int64_t>(sign);
}

std::uint64_t BitReader::get_u64_le()
{
  std::uint64_t value = 0;
  for (int i = 0; i < 8; ++i)
  {
    value |= static_cast<std::uint64_t>(get_u8()) << (8 * i);
  }
  return value;
}

double BitReader::get_f64_le()
{
  return std::bit_cast<double>(get_u64_le());
}

unsigned bits_for_count(std::uint64_t count)
{
  require(count >= 1, Errc::InvalidArgument, "bits_for_count needs count >= 1");
  unsigned w = 0;
  while (w < 64 && (std::uint64_t{1} << w) < count)
  {
    ++w;
  }
  return w;
}

}  // namespace vtrust
