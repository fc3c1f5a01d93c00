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

#include "vtrust/session.hpp"

#include "vtrust/error.hpp"

#include <algorithm>
#include <optional>
#include <string>

namespace vtrust {

double ProtocolRun::recomputations_per_iter() const
{
  return iterations == 0 ? 0.0 : static_cast<double>(client_recomputations) / static_cast<double>(iterations);
}

namespace {

constexpr std::uint64_t kClientId         = 0;
constexpr std::uint64_t kNoticeBits       = 128;  // offset + deviation
constexpr std::uint64_t kEndorsementBits  = 64;
constexpr std::uint64_t kCommitNoticeBits = 64;

class Engine
{
public:
  Engine(AtomicOpSpec const &op, StateVector const &x0, ProtocolSettings const &settings)
    : op_(op)
    , x0_(x0)
    , s_(settings)
    , pool_(settings.endorser_pool == 0 ? settings.endorsers : settings.endorser_pool)
    , orderer_id_(pool_ + 1)
    , net_(run_.costs, settings.meta_bits, settings.keep_trace)
  {
    require(s_.endorsers >= 1, Errc::InvalidArgument, "at least one endorser per frame");
    require(pool_ >= s_.endorsers, Errc::InvalidArgument, "endorser pool smaller than the per-frame count");
    require(!(op.stochastic() && s_.recompute_budget == 0), Errc::InvalidArgument,
            "stochastic computations need a finite recompute budget");
    s_.validation.validate(s_.iterations);
    run_.iterations       = s_.iterations;
    run_.subsample_period = s_.validation.mode == Mode::Batch ? s_.subsample_period : 1;
  }

  ProtocolRun run()
  {
    switch (s_.validation.mode)
    {
    case Mode::Batch:
      run_batch();
      break;
    case Mode::Streaming:
      run_streaming();
      break;
    case Mode::Transaction:
      run_transaction();
      break;
    }
    net_.flush();
    run_.trace     = net_.trace();
    run_.conflicts = orderer_ ? orderer_->conflicts() : std::vector<std::uint64_t>{};
    return std::move(run_);
  }

private:
  std::vector<std::uint64_t> endorsers_for(std::uint64_t unit) const
  {
    return assign_endorsers(unit, s_.endorsers, pool_);
  }

  std::vector<Endorsement> validate(std::span<StateVector const> states, std::uint64_t t0,
                                    StateVector const *predecessor, std::size_t start,
                                    std::vector<std::uint64_t> const &ids,
                                    std::function<std::uint64_t(std::uint64_t)> const &attempt)
  {
    std::vector<Endorsement> out;
    EndorserSetup            setup;
    setup.seed    = s_.seed;
    setup.attempt = attempt;
    if (op_.stochastic())
    {
      // the assigned endorsers pool their draws into one mean recomputation
      setup.first_agent = ids.front();
      setup.replicas    = ids.size();
      Endorsement joint = endorse_states(states, t0, predecessor, op_, s_.validation.delta_val, setup, start);
      run_.costs.add_evaluations(Role::Endorser, joint.recompute_count);
      for (auto id : ids)
      {
        out.push_back(joint);
        out.back().endorser_id = id;
      }
      return out;
    }
    for (auto id : ids)
    {
      setup.first_agent = id;
      out.push_back(endorse_states(states, t0, predecessor, op_, s_.validation.delta_val, setup, start));
      run_.costs.add_evaluations(Role::Endorser, out.back().recompute_count);
    }
    return out;
  }

  void report(std::vector<std::uint64_t> const &ids, MessageKind kind, std::uint64_t payload_bits)
  {
    for (auto id : ids)
    {
      net_.send(kind, Role::Client, kClientId, Role::Endorser, id, step_, payload_bits);
    }
    ++step_;
  }

  void notify_invalid(std::vector<std::uint64_t> const &ids)
  {
    for (auto id : ids)
    {
      net_.send(MessageKind::InvalidationNotice, Role::Endorser, id, Role::Client, kClientId, step_, kNoticeBits);
    }
    ++step_;
  }

  void commit(std::uint64_t unit, std::vector<Audit> audits, std::vector<Endorsement> endorsements,
              std::vector<std::uint64_t> const &ids)
  {
    for (auto &e : endorsements)
    {
      e.frame_index = unit;
    }
    for (auto id : ids)
    {
      net_.send(MessageKind::EndorsementMsg, Role::Endorser, id, Role::Orderer, orderer_id_, step_, kEndorsementBits);
    }
    ++step_;
    std::size_t const before = run_.chain.size();
    orderer_->submit(unit, std::move(audits), std::move(endorsements));
    auto const committed = orderer_->commit_ready(run_.chain);
    for (std::size_t h = before; h < run_.chain.size(); ++h)
    {
      run_.costs.add_storage(8 * run_.chain.blocks()[h].payload.size(), 8 * kBlockHeaderBytes);
    }
    if (!committed.empty())
    {
      net_.send(MessageKind::CommitNotice, Role::Orderer, orderer_id_, Role::Client, kClientId, step_,
                kCommitNoticeBits);
      ++step_;
    }
    net_.flush();
  }

  void reject(std::uint64_t unit, std::vector<Endorsement> endorsements, std::uint64_t t)
  {
    for (auto &e : endorsements)
    {
      e.frame_index = unit;
    }
    orderer_->submit(unit, {}, std::move(endorsements));
    orderer_->commit_ready(run_.chain);
    run_.halted_at = t;
    net_.flush();
  }

  void charge_committed(std::uint64_t per_copy_bits)
  {
    run_.costs.add_committed_report(per_copy_bits * s_.endorsers);
  }

  enum class Outcome
  {
    Refined,
    Recomputed,
    Forced,
    Halted,
  };

  Outcome repair(Client &client, Endorsement const &e, std::size_t tail, std::vector<std::uint64_t> const &ids)
  {
    std::size_t const   j = *e.first_bad_offset;
    std::uint64_t const t = client.open_checkpoint_time() + j;
    ++run_.invalidations;
    notify_invalid(ids);

    InvalidationNotice notice;
    notice.frame_index = client.open_frame().index();
    notice.offset      = j;
    notice.t           = t;
    notice.deviation   = e.deviations.back();
    notice.tolerance   = s_.validation.delta_val.at(t);

    RepairCosts costs;
    costs.lipschitz       = s_.validation.lipschitz;
    costs.epsilon         = s_.validation.epsilon;
    costs.level           = j >= 1 ? client.update_level(j) : 0;
    costs.max_level       = s_.max_refinement_level;
    costs.refinement_bits = refinement_bit_cost(op_.dimension());
    costs.recompute_bits =
        static_cast<double>(tail) * static_cast<double>(1 + s_.endorsers) * s_.comp_bits_per_op;
    RepairAction const action = s_.max_refinement_level == 0 ? RepairAction::RecomputeAndResend
                                                             : handle_invalidation(notice, costs);
    if (action == RepairAction::SendRefinement)
    {
      client.refine(j);
      ++run_.refinements;
      report(ids, MessageKind::RefinementChunkMsg, refinement_bit_cost(op_.dimension()));
      run_.costs.add_codec_ops(1 + s_.endorsers);
      run_.costs.add_refinement((refinement_bit_cost(op_.dimension()) + s_.meta_bits) * s_.endorsers);
      return Outcome::Refined;
    }
    if (!op_.stochastic())
    {
      // recomputing a deterministic step reproduces the same report
      return Outcome::Halted;
    }
    if (client.recomputations(t) >= s_.recompute_budget)
    {
      ++run_.forced_accepts;
      return Outcome::Forced;
    }
    client.rewind(j);
    return Outcome::Recomputed;
  }

  static std::vector<StateVector> open_states(Client const &client)
  {
    std::vector<StateVector> states;
    for (std::size_t j = 0; j <= client.open_frame().size(); ++j)
    {
      states.push_back(client.open_state(j));
    }
    return states;
  }

  void run_batch()
  {
    Client client(op_, x0_, s_.validation, s_.iterations, s_.seed);
    LatticeQuantizer const &q     = client.quantizer();
    std::uint64_t const     ubits = update_bit_cost(q);
    orderer_.emplace(q, run_.subsample_period);
    auto const attempt = [&client](std::uint64_t t) { return client.redraws(t); };

    std::uint64_t client_evals = 0;
    while (!client.done())
    {
      while (client.extend())
      {
      }
      std::uint64_t const index = client.open_frame().index();
      auto const          ids   = endorsers_for(index);
      std::uint64_t       coded = client.open_frame().size() + 1;
      report(ids, MessageKind::FrameReport, frame_bit_length(client.open_frame(), q));

      std::size_t              start = 0;
      std::vector<Endorsement> ends;
      for (;;)
      {
        auto const          states = open_states(client);
        std::uint64_t const t0     = client.open_checkpoint_time();
        ends = validate(states, t0, t0 > 0 ? &*client.last_finished_state() : nullptr, start, ids, attempt);
        Endorsement const &e = ends.front();
        if (e.valid)
        {
          break;
        }
        std::size_t const j       = *e.first_bad_offset;
        Outcome const     outcome = repair(client, e, client.open_frame().size() + 1 - j, ids);
        if (outcome == Outcome::Halted)
        {
          run_.client_recomputations = client.total_recomputations();
          run_.costs.add_evaluations(Role::Client, client.evaluations() - client_evals);
          reject(index, ends, t0 + j);
          finish(client);
          return;
        }
        if (outcome == Outcome::Forced)
        {
          start = j + 1;
          continue;
        }
        std::size_t const resend_from = outcome == Outcome::Refined ? j + 1 : j;
        while (client.extend())
        {
        }
        // a redone checkpoint means the whole frame goes again
        std::uint64_t const fresh = client.open_frame().size() + 1 - std::min(resend_from, client.open_frame().size() + 1);
        std::uint64_t const bits  = resend_from == 0 ? frame_bit_length(client.open_frame(), q) : fresh * ubits;
        coded += fresh;
        if (bits > 0)
        {
          report(ids, MessageKind::FrameReport, bits);
          run_.costs.add_retransmitted(bits * s_.endorsers);
        }
        start = j;
      }

      run_.costs.add_evaluations(Role::Client, client.evaluations() - client_evals);
      client_evals       = client.evaluations();
      Frame const frame  = client.finish_frame();
      // client encodes, every endorser decodes, the orderer folds updates into audits
      run_.costs.add_codec_ops(coded * (1 + s_.endorsers) + frame.size());
      charge_committed(frame_bit_length(frame, q) + s_.meta_bits);
      commit(index, subsample_frame(frame, run_.subsample_period), ends, ids);
      ++run_.frames;
    }
    run_.client_recomputations = client.total_recomputations();
    finish(client);
  }

  void run_streaming()
  {
    Client client(op_, x0_, s_.validation, s_.iterations, s_.seed);
    LatticeQuantizer const &q     = client.quantizer();
    std::uint64_t const     ubits = update_bit_cost(q);
    orderer_.emplace(q, 1);
    auto const attempt = [&client](std::uint64_t t) { return client.redraws(t); };

    std::uint64_t unit         = 0;
    std::uint64_t client_evals = 0;
    while (!client.done())
    {
      if (!client.extend())
      {
        client.finish_frame();
        ++run_.frames;
        continue;
      }
      auto const ids           = endorsers_for(unit);
      std::size_t              j        = client.open_frame().size();
      std::uint64_t            bits     = 0;
      bool                     fresh    = true;
      bool                     reopened = false;
      std::vector<Endorsement> ends;
      for (;;)
      {
        if (fresh)
        {
          bits = j == 0 ? frame_header_bits(client.open_frame().checkpoint(), q.dimension()) : ubits;
          report(ids, MessageKind::FrameReport, bits);
          run_.costs.add_codec_ops(1 + s_.endorsers);
          fresh = false;
        }
        std::uint64_t const t0     = client.open_checkpoint_time();
        auto const          states = open_states(client);
        ends = validate(states, t0, t0 > 0 ? &*client.last_finished_state() : nullptr, j, ids, attempt);
        if (ends.front().valid)
        {
          break;
        }
        Outcome const outcome = repair(client, ends.front(), 1, ids);
        if (outcome == Outcome::Halted)
        {
          run_.client_recomputations = client.total_recomputations();
          run_.costs.add_evaluations(Role::Client, client.evaluations() - client_evals);
          reject(unit, ends, t0 + j);
          finish(client);
          return;
        }
        if (outcome == Outcome::Forced)
        {
          for (auto &end : ends)
          {
            end.valid = true;
          }
          break;
        }
        if (outcome == Outcome::Refined)
        {
          // the chunk already carries the correction
          continue;
        }
        run_.costs.add_retransmitted(bits * s_.endorsers);
        if (!client.extend())
        {
          // the redone state no longer fits this frame; it opens the next one
          client.finish_frame();
          ++run_.frames;
          reopened = true;
          break;
        }
        j     = client.open_frame().size();
        fresh = true;
      }
      if (reopened)
      {
        continue;
      }
      charge_committed(bits + s_.meta_bits);

      std::uint64_t const t = client.open_checkpoint_time() + j;
      Audit               audit;
      audit.t_start = t;
      audit.t_end   = t;
      if (j == 0)
      {
        audit.content = client.open_frame().checkpoint();
      }
      else
      {
        audit.content = client.open_frame().updates()[j - 1];
      }
      run_.costs.add_evaluations(Role::Client, client.evaluations() - client_evals);
      client_evals = client.evaluations();
      commit(unit, {std::move(audit)}, ends, ids);
      ++unit;
    }
    run_.client_recomputations = client.total_recomputations();
    finish(client);
  }

  void run_transaction()
  {
    std::size_t const d = op_.dimension();
    LatticeQuantizer const q(d, s_.validation.epsilon, s_.validation.delta_quant);
    orderer_.emplace(q, 1);
    std::uint64_t const raw_bits = 64 * d;

    std::vector<std::uint64_t> redraws(s_.iterations + 1, 0);
    auto const attempt = [&redraws](std::uint64_t t) { return redraws[t]; };

    StateVector current = x0_;
    {
      auto const ids = endorsers_for(0);
      report(ids, MessageKind::FrameReport, raw_bits);
      charge_committed(raw_bits + s_.meta_bits);
      std::vector<Endorsement> ends(ids.size());
      for (std::size_t i = 0; i < ids.size(); ++i)
      {
        ends[i].endorser_id = ids[i];
      }
      commit(0, {Audit{CheckpointCode{NewEntry{current}}, 0, 0}}, ends, ids);
    }
    for (std::uint64_t t = 1; t <= s_.iterations; ++t)
    {
      auto const               ids = endorsers_for(t);
      std::vector<Endorsement> ends;
      std::uint64_t            tries = 0;
      StateVector              next;
      for (;;)
      {
        auto const theta = draw_randomness(op_, DrawKey{s_.seed, kClientAgent, t, redraws[t]});
        next             = step(op_, current, theta);
        run_.costs.add_evaluations(Role::Client, 1);
        if (tries++ > 0)
        {
          ++run_.client_recomputations;
        }
        if (!next.all_finite())
        {
          throw Error(Errc::Diverged, "state became non-finite at iteration " + std::to_string(t), t);
        }
        report(ids, MessageKind::FrameReport, raw_bits);
        std::vector<StateVector> const states{current, next};
        ends = validate(states, t - 1, nullptr, 1, ids, attempt);
        if (ends.front().valid)
        {
          charge_committed(raw_bits + s_.meta_bits);
          break;
        }
        ++run_.invalidations;
        notify_invalid(ids);
        if (!op_.stochastic())
        {
          reject(t, ends, t);
          run_.final_true     = next;
          run_.final_reported = next;
          return;
        }
        if (tries - 1 >= s_.recompute_budget)
        {
          ++run_.forced_accepts;
          for (auto &end : ends)
          {
            end.valid = true;
          }
          charge_committed(raw_bits + s_.meta_bits);
          break;
        }
        run_.costs.add_retransmitted(raw_bits * s_.endorsers);
        ++redraws[t];
      }
      commit(t, {Audit{CheckpointCode{NewEntry{next}}, t, t}}, ends, ids);
      current = std::move(next);
    }
    run_.frames         = s_.iterations + 1;
    run_.final_true     = current;
    run_.final_reported = current;
  }

  void finish(Client const &client)
  {
    run_.final_true         = client.true_state(client.computed_until());
    run_.final_reported     = client.last_finished_state() ? *client.last_finished_state() : x0_;
    run_.dictionary_entries = client.dictionary().size();
  }

  AtomicOpSpec const     &op_;
  StateVector const      &x0_;
  ProtocolSettings        s_;
  std::size_t             pool_;
  std::uint64_t           orderer_id_;
  ProtocolRun             run_;
  Network                 net_;
  std::optional<Orderer>  orderer_;
  std::uint64_t           step_ = 0;
};

}  // namespace

ProtocolRun run_protocol(AtomicOpSpec const &op, StateVector const &x0, ProtocolSettings const &settings)
{
  Engine engine(op, x0, settings);
  return engine.run();
}

}  // namespace vtrust
