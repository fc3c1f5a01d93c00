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
#include <cstdint>
#include <span>
#include <vector>

namespace vtrust {

/// MSB-first bit packer. Whole-byte writes at a byte boundary keep their
/// byte order, so little-endian headers and packed payloads share one stream.
class BitWriter
{
public:
  void put_bits(std::uint64_t value, unsigned width);
  void put_signed(std::int64_t value, unsigned width);
  void put_u8(std::uint8_t value) { put_bits(value, 8); }
  void put_u64_le(std::uint64_t value);
  void put_f64_le(double value);

  std::uint64_t bit_length() const noexcept { return bits_; }
  /// Bytes with the final partial byte zero-padded.
  std::vector<std::uint8_t> const &bytes() const noexcept { return bytes_; }
  std::vector<std::uint8_t>        take() && { return std::move(bytes_); }

private:
  std::vector<std::uint8_t> bytes_;
  std::uint64_t             bits_ = 0;
};

class BitReader
{
public:
  explicit BitReader(std::span<std::uint8_t const> bytes)
    : bytes_(bytes)
  {}

  std::uint64_t get_bits(unsigned width);
  std::int64_t  get_signed(unsigned width);
  std::uint8_t  get_u8() { return static_cast<std::uint8_t>(get_bits(8)); }
  std::uint64_t get_u64_le();
  double        get_f64_le();

  std::uint64_t position() const noexcept { return pos_; }
  std::uint64_t remaining() const noexcept { return bytes_.size() * 8 - pos_; }

private:
  std::span<std::uint8_t const> bytes_;
  std::uint64_t                 pos_ = 0;
};

/// Smallest w with 2^w >= count (count >= 1).
unsigned bits_for_count(std::uint64_t count);

}  // namespace vtrust
