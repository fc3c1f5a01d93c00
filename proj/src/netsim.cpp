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

#include "vtrust/netsim.hpp"

#include "vtrust/error.hpp"

#include <algorithm>
#include <cmath>

namespace vtrust {

char const *to_string(Role role)
{
  switch (role)
  {
  case Role::Client:
    return "client";
  case Role::Endorser:
    return "endorser";
  case Role::Orderer:
    return "orderer";
  case Role::Verifier:
    return "verifier";
  }
  return "unknown";
}

char const *to_string(MessageKind kind)
{
  switch (kind)
  {
  case MessageKind::FrameReport:
    return "FrameReport";
  case MessageKind::EndorsementMsg:
    return "EndorsementMsg";
  case MessageKind::InvalidationNotice:
    return "InvalidationNotice";
  case MessageKind::RefinementChunkMsg:
    return "RefinementChunkMsg";
  case MessageKind::CommitNotice:
    return "CommitNotice";
  }
  return "unknown";
}

std::vector<Message> dispatch(std::vector<Message> messages)
{
  std::stable_sort(messages.begin(), messages.end(), [](Message const &a, Message const &b) {
    if (a.step != b.step)
    {
      return a.step < b.step;
    }
    if (a.sender != b.sender)
    {
      return a.sender < b.sender;
    }
    return a.sequence < b.sequence;
  });
  return messages;
}

void CostLedger::add_evaluations(Role role, std::uint64_t count)
{
  evaluations_[static_cast<std::size_t>(role)] += count;
}

void CostLedger::add_codec_ops(std::uint64_t count)
{
  codec_ops_ += count;
}

void CostLedger::add_storage(std::uint64_t payload_bits, std::uint64_t meta_bits)
{
  storage_bits_ += payload_bits;
  storage_meta_bits_ += meta_bits;
}

void CostLedger::add_sent(Message const &m)
{
  comm_bits_ += m.payload_bits;
  comm_meta_bits_ += m.meta_bits;
  sent_[static_cast<std::size_t>(m.sender_role)] += m.payload_bits + m.meta_bits;
  ++by_kind_[static_cast<std::size_t>(m.kind)];
  ++messages_;
}

void CostLedger::add_received(Message const &m)
{
  received_[static_cast<std::size_t>(m.receiver_role)] += m.payload_bits + m.meta_bits;
}

void CostLedger::add_committed_report(std::uint64_t bits)
{
  committed_report_bits_ += bits;
}

void CostLedger::add_retransmitted(std::uint64_t bits)
{
  retransmitted_bits_ += bits;
}

void CostLedger::add_refinement(std::uint64_t bits)
{
  refinement_bits_ += bits;
}

std::uint64_t CostLedger::comp_atomic_ops() const noexcept
{
  std::uint64_t total = 0;
  for (auto v : evaluations_)
  {
    total += v;
  }
  return total;
}

Network::Network(CostLedger &ledger, std::uint64_t meta_bits, bool keep_trace)
  : ledger_(&ledger)
  , meta_bits_(meta_bits)
  , keep_trace_(keep_trace)
{}

Message const &Network::send(MessageKind kind, Role from_role, std::uint64_t from, Role to_role, std::uint64_t to,
                             std::uint64_t step, std::uint64_t payload_bits)
{
  Message m;
  m.kind          = kind;
  m.sender_role   = from_role;
  m.sender        = from;
  m.receiver_role = to_role;
  m.receiver      = to;
  m.step          = step;
  m.payload_bits  = payload_bits;
  m.meta_bits     = meta_bits_;
  // the client and an endorser may share a numeric id, so the key includes the role
  m.sequence = sequences_[from * kRoleCount + static_cast<std::uint64_t>(from_role)]++;
  ledger_->add_sent(m);
  queue_.push_back(m);
  return queue_.back();
}

std::vector<Message> Network::flush()
{
  std::vector<Message> delivered = dispatch(std::move(queue_));
  queue_.clear();
  for (auto const &m : delivered)
  {
    ledger_->add_received(m);
  }
  if (keep_trace_)
  {
    trace_.insert(trace_.end(), delivered.begin(), delivered.end());
  }
  return delivered;
}

void ModeParams::validate() const
{
  require(dimension >= 1, Errc::InvalidArgument, "dimension must be positive");
  require(frame_cap >= 1, Errc::InvalidArgument, "frame cap must be positive");
  require(endorsers >= 1.0, Errc::InvalidArgument, "at least one endorser per frame");
  require(nu > 0.0 && nu <= 1.0, Errc::InvalidArgument, "nu = 1/K must lie in (0, 1]");
  require(epsilon > 0.0 && delta_quant > epsilon && state_bound > delta_quant, Errc::InvalidArgument,
          "need B > Delta_quant > eps > 0");
  require(meta_bits >= 0.0, Errc::InvalidArgument, "metadata bits must be >= 0");
}

PredictedCost predicted_cost(ModeParams const &p)
{
  p.validate();
  double const window = static_cast<double>(p.frame_cap);
  double const d      = static_cast<double>(p.dimension);
  double const raw    = d * std::log2(p.state_bound / p.epsilon);
  double const delta  = d * std::log2(p.delta_quant / p.epsilon);

  PredictedCost cost;
  switch (p.mode)
  {
  case Mode::Transaction:
    cost.comm    = window * raw + window * p.meta_bits;
    cost.storage = cost.comm;
    break;
  case Mode::Streaming:
    cost.comm    = window * delta + raw + window * p.meta_bits;
    cost.storage = cost.comm;
    break;
  case Mode::Batch:
    cost.comm    = window * delta + raw + p.meta_bits;
    cost.storage = p.nu * window * delta + raw + p.meta_bits;
    break;
  }
  return cost;
}

CostComparison measured_vs_predicted(CostLedger const &ledger, ModeParams const &params, std::uint64_t iterations,
                                     double envelope)
{
  require(iterations >= 1, Errc::InvalidArgument, "need at least one iteration");
  PredictedCost const predicted = predicted_cost(params);
  double const        per_window = static_cast<double>(params.frame_cap) / static_cast<double>(iterations);

  CostComparison c;
  c.predicted_comm    = predicted.comm;
  c.predicted_storage = predicted.storage;
  c.measured_comm     = static_cast<double>(ledger.committed_report_bits()) / params.endorsers * per_window;
  c.measured_storage =
      static_cast<double>(ledger.storage_bits() + ledger.storage_meta_bits()) * per_window;
  c.comm_ratio      = c.measured_comm / c.predicted_comm;
  c.storage_ratio   = c.measured_storage / c.predicted_storage;
  c.within_envelope = c.comm_ratio <= envelope;
  return c;
}

}  // namespace vtrust
