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

#include "vtrust/protocol.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace vtrust {

enum class Role
{
  Client,
  Endorser,
  Orderer,
  Verifier,
};

inline constexpr std::size_t kRoleCount = 4;
char const                  *to_string(Role role);

enum class MessageKind
{
  FrameReport,
  EndorsementMsg,
  InvalidationNotice,
  RefinementChunkMsg,
  CommitNotice,
};

char const *to_string(MessageKind kind);

inline constexpr std::uint64_t kDefaultMetaBits = 256;

struct Message
{
  MessageKind   kind          = MessageKind::FrameReport;
  Role          sender_role   = Role::Client;
  std::uint64_t sender        = 0;
  Role          receiver_role = Role::Endorser;
  std::uint64_t receiver      = 0;
  std::uint64_t step          = 0;
  /// Per-sender send counter; breaks ties between one sender's messages.
  std::uint64_t sequence     = 0;
  std::uint64_t payload_bits = 0;
  std::uint64_t meta_bits    = 0;

  friend bool operator==(Message const &, Message const &) = default;
};

/// Total delivery order: (step, sender, sequence). FIFO per sender-receiver
/// pair follows because a sender's sequence numbers only grow.
std::vector<Message> dispatch(std::vector<Message> messages);

/// Counters behind every reported cost. All of them only grow.
class CostLedger
{
public:
  void add_evaluations(Role role, std::uint64_t count);
  void add_codec_ops(std::uint64_t count);
  void add_storage(std::uint64_t payload_bits, std::uint64_t meta_bits);
  void add_sent(Message const &m);
  void add_received(Message const &m);
  /// Report bits that ended up in the accepted update stream: frames as
  /// finally endorsed plus one metadata charge per report.
  void add_committed_report(std::uint64_t bits);
  void add_retransmitted(std::uint64_t bits);
  /// Successive-refinement chunks, metadata included.
  void add_refinement(std::uint64_t bits);

  std::uint64_t evaluations(Role role) const noexcept { return evaluations_[static_cast<std::size_t>(role)]; }
  /// f evaluations across every role.
  std::uint64_t comp_atomic_ops() const noexcept;
  std::uint64_t codec_ops() const noexcept { return codec_ops_; }
  /// Atomic ops plus codec operations (quantize, dequantize, dictionary, subsample).
  std::uint64_t comp_total() const noexcept { return comp_atomic_ops() + codec_ops_; }
  std::uint64_t comm_bits() const noexcept { return comm_bits_; }
  std::uint64_t comm_meta_bits() const noexcept { return comm_meta_bits_; }
  std::uint64_t storage_bits() const noexcept { return storage_bits_; }
  std::uint64_t storage_meta_bits() const noexcept { return storage_meta_bits_; }
  std::uint64_t messages() const noexcept { return messages_; }
  std::uint64_t committed_report_bits() const noexcept { return committed_report_bits_; }
  std::uint64_t retransmitted_bits() const noexcept { return retransmitted_bits_; }
  std::uint64_t refinement_bits() const noexcept { return refinement_bits_; }
  std::uint64_t sent_bits(Role role) const noexcept { return sent_[static_cast<std::size_t>(role)]; }
  std::uint64_t received_bits(Role role) const noexcept { return received_[static_cast<std::size_t>(role)]; }
  std::uint64_t messages_of(MessageKind kind) const noexcept { return by_kind_[static_cast<std::size_t>(kind)]; }

  friend bool operator==(CostLedger const &, CostLedger const &) = default;

private:
  std::array<std::uint64_t, kRoleCount> evaluations_{};
  std::array<std::uint64_t, kRoleCount> sent_{};
  std::array<std::uint64_t, kRoleCount> received_{};
  std::array<std::uint64_t, 5>          by_kind_{};
  std::uint64_t                         codec_ops_             = 0;
  std::uint64_t                         comm_bits_             = 0;
  std::uint64_t                         comm_meta_bits_        = 0;
  std::uint64_t                         storage_bits_          = 0;
  std::uint64_t                         storage_meta_bits_     = 0;
  std::uint64_t                         messages_              = 0;
  std::uint64_t                         committed_report_bits_ = 0;
  std::uint64_t                         retransmitted_bits_    = 0;
  std::uint64_t                         refinement_bits_       = 0;
};

/// Immediate-but-ordered message bus. Sends are charged when queued and
/// receipts when delivered, so a flushed network conserves bits.
class Network
{
public:
  Network(CostLedger &ledger, std::uint64_t meta_bits = kDefaultMetaBits, bool keep_trace = false);

  Message const &send(MessageKind kind, Role from_role, std::uint64_t from, Role to_role, std::uint64_t to,
                      std::uint64_t step, std::uint64_t payload_bits);
  /// Delivers everything queued, in dispatch order.
  std::vector<Message> flush();

  std::vector<Message> const &trace() const noexcept { return trace_; }
  std::uint64_t               meta_bits() const noexcept { return meta_bits_; }

private:
  CostLedger                                  *ledger_;
  std::uint64_t                                meta_bits_;
  bool                                         keep_trace_;
  std::vector<Message>                         queue_;
  std::vector<Message>                         trace_;
  std::map<std::uint64_t, std::uint64_t>       sequences_;
};

struct ModeParams
{
  Mode          mode        = Mode::Batch;
  double        endorsers   = 1.0;
  std::uint64_t frame_cap   = 100;
  double        nu          = 1.0;
  std::size_t   dimension   = 1;
  double        state_bound = 1.0e3;
  double        epsilon     = 0.1;
  double        delta_quant = 1.0;
  double        meta_bits   = static_cast<double>(kDefaultMetaBits);

  void validate() const;
};

/// Unit-constant cost formulas per M-bar-iteration window, in bits.
struct PredictedCost
{
  double comm    = 0.0;
  double storage = 0.0;
};

PredictedCost predicted_cost(ModeParams const &params);

struct CostComparison
{
  double measured_comm     = 0.0;
  double measured_storage  = 0.0;
  double predicted_comm    = 0.0;
  double predicted_storage = 0.0;
  double comm_ratio        = 0.0;
  double storage_ratio     = 0.0;
  /// Communication within envelope x prediction. Storage is reported only:
  /// block headers and audit framing are real bytes the formula leaves out.
  bool within_envelope = false;
};

inline constexpr double kCostEnvelope = 4.0;

/// Measured costs scaled to one M-bar window (total * M-bar / T); comm is
/// the committed report stream per endorser copy.
CostComparison measured_vs_predicted(CostLedger const &ledger, ModeParams const &params, std::uint64_t iterations,
                                     double envelope = kCostEnvelope);

}  // namespace vtrust
