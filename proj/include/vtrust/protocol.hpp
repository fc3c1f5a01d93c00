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
#include "vtrust/ledger.hpp"
#include "vtrust/parallel.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace vtrust {

enum class Mode
{
  Transaction,
  Streaming,
  Batch,
};

char const *to_string(Mode mode);
Mode        parse_mode(std::string const &text);

/// Delta_val(t): a constant, or delta_max / ln(t + 1) for t >= 1.
class ToleranceSchedule
{
public:
  static ToleranceSchedule constant(double value);
  static ToleranceSchedule logarithmic(double delta_max);

  /// t = 0 is evaluated as t = 1 so the schedule is always finite.
  double at(std::uint64_t t) const;
  /// Smallest tolerance over iterations 1..horizon.
  double minimum(std::uint64_t horizon) const;
  double scale() const noexcept { return value_; }
  bool   is_constant() const noexcept { return constant_; }

private:
  ToleranceSchedule(double value, bool constant);

  double value_;
  bool   constant_;
};

struct ValidationConfig
{
  ToleranceSchedule delta_val   = ToleranceSchedule::constant(1.0);
  double            delta_ver   = 1.0;
  double            delta_quant = 1.0;
  double            epsilon     = 0.1;
  std::uint64_t     frame_cap   = 100;
  double            lipschitz   = 1.0;
  Mode              mode        = Mode::Batch;
  /// Per-coordinate clamp B of the checkpoint lattice.
  double state_bound = 1.0e6;
  /// Enforce eps <= Delta_val / (L + 1) over the horizon.
  bool strict_soundness = false;

  /// Throws InvalidArgument (or Infeasible for the soundness check).
  void validate(std::uint64_t horizon) const;
};

/// Delta_val / (L + 1): the largest quantizer error an honest client can
/// afford without being invalidated.
double max_quantizer_error(double delta_val, double lipschitz);

/// Builds frames from a trajectory it computes itself. Every state it has
/// computed is kept, so frames can be cut back and re-encoded without
/// evaluating f again; only a rewind discards states.
class Client
{
public:
  Client(AtomicOpSpec const &op, StateVector x0, ValidationConfig const &cfg, std::uint64_t horizon,
         std::uint64_t seed = 0);

  /// Adds the next state to the open frame (opening one if needed). Returns
  /// false once the frame is closed: full, the next update exceeds
  /// Delta_quant, or the horizon is reached.
  bool extend();
  /// Seals and hands over the open frame; the next extend() opens frame n+1.
  Frame finish_frame();
  bool  has_open_frame() const noexcept { return open_.has_value(); }
  /// True when every iteration up to the horizon sits in a finished frame.
  bool done() const noexcept;

  Frame const &open_frame() const;
  /// Reported state at open-frame offset j (0 is the checkpoint).
  StateVector const &open_state(std::size_t offset) const;
  /// delta_n = |X_{T_n + 1} - X_{T_n}| of the open frame, when known.
  std::optional<double> open_first_update() const noexcept { return open_delta_; }
  std::uint64_t         open_checkpoint_time() const;
  /// Last reported state of the most recently finished frame.
  std::optional<StateVector> const &last_finished_state() const noexcept { return last_finished_; }

  /// Discards the open frame from offset j onwards and every computed state
  /// from T_n + j, and bumps the redraw counter of that iteration.
  void rewind(std::size_t offset);
  /// Refines update j one level and re-encodes the states after it from the
  /// stored trajectory. Returns the chunk that was applied.
  RefinementChunk refine(std::size_t offset);
  unsigned        update_level(std::size_t offset) const;

  std::uint64_t horizon() const noexcept { return horizon_; }
  std::uint64_t seed() const noexcept { return seed_; }
  /// Redraw counter of iteration t; it selects the client's draw attempt.
  std::uint64_t redraws(std::uint64_t t) const;
  /// f evaluations at iteration t beyond the first.
  std::uint64_t recomputations(std::uint64_t t) const;
  std::uint64_t total_recomputations() const noexcept { return total_recomputations_; }
  std::uint64_t evaluations() const noexcept { return evaluations_; }
  /// Latest computed true state (X_t of the furthest iteration computed).
  StateVector const &true_state(std::uint64_t t) const;
  std::uint64_t      computed_until() const noexcept { return truths_.size() - 1; }

  LatticeQuantizer const     &quantizer() const noexcept { return q_; }
  CheckpointDictionary const &dictionary() const noexcept { return dictionary_; }

private:
  StateVector const &compute(std::uint64_t t);
  StateVector const &compute_or_initial(std::uint64_t t);
  void               open_new_frame();
  void               reset_accumulator();

  AtomicOpSpec const *op_;
  ValidationConfig    cfg_;
  LatticeQuantizer    q_;
  std::uint64_t       horizon_;
  std::uint64_t       seed_;

  CheckpointDictionary       dictionary_;
  std::vector<StateVector>   truths_;
  std::vector<std::uint64_t> redraws_;
  std::vector<std::uint64_t> computed_count_;
  std::uint64_t              evaluations_           = 0;
  std::uint64_t              total_recomputations_  = 0;

  std::uint64_t                   next_frame_index_ = 0;
  std::uint64_t                   next_t_           = 0;
  std::optional<Frame>            open_;
  std::vector<StateVector>        open_states_;
  std::vector<StateVector>        open_true_deltas_;
  std::optional<FrameAccumulator> open_acc_;
  std::optional<double>           open_delta_;
  std::size_t                     open_dict_size_ = 0;
  bool                            open_closed_    = false;
  std::optional<StateVector>      last_finished_;
};

struct ClientRun
{
  std::vector<Frame>       frames;
  /// X~_0..X~_T and X_0..X_T.
  std::vector<StateVector> reported;
  std::vector<StateVector> truth;
  /// delta_n per frame; empty when the frame never had a successor state.
  std::vector<std::optional<double>> first_update_norms;
  CheckpointDictionary               dictionary{1.0, 1.0};
};

/// Runs T iterations from x0 and frames them. Stochastic ops draw with key
/// (seed, client, t, 0). Throws Diverged with the offending t when a state
/// stops being finite.
ClientRun client_run_frames(AtomicOpSpec const &op, StateVector const &x0, std::uint64_t iterations,
                            ValidationConfig const &cfg, std::uint64_t seed = 0);

/// Who recomputes and with which randomness. For stochastic ops the
/// recomputation is the mean of `replicas` draws from agents first_agent,
/// first_agent + 1, ...
struct EndorserSetup
{
  std::uint64_t first_agent = 1;
  std::size_t   replicas    = 1;
  std::uint64_t seed        = 0;
  /// Draw attempt used for iteration t; defaults to 0.
  std::function<std::uint64_t(std::uint64_t)> attempt;
};

struct Endorsement
{
  std::uint64_t              frame_index = 0;
  bool                       valid       = true;
  std::optional<std::size_t> first_bad_offset;
  bool                       decode_failure = false;
  /// Deviation per checked offset, starting at `start_offset`.
  std::size_t         start_offset = 0;
  std::vector<double> deviations;
  std::uint64_t       endorser_id     = 1;
  std::uint64_t       recompute_count = 0;
};

/// Recomputation of X_t from the previous reported state.
StateVector recompute_state(AtomicOpSpec const &op, StateVector const &previous, std::uint64_t t,
                            EndorserSetup const &setup, std::uint64_t &evaluations);

/// Validates reported[j] (state at t0 + j) for j >= start_offset, stopping at
/// the first deviation above Delta_val(t). reported[0] is checked against
/// f(predecessor) when a predecessor is given, otherwise taken as the anchor.
Endorsement endorse_states(std::span<StateVector const> reported, std::uint64_t t0,
                           StateVector const *predecessor, AtomicOpSpec const &op,
                           ToleranceSchedule const &schedule, EndorserSetup const &setup,
                           std::size_t start_offset = 0);

Endorsement endorse_frame(Frame const &frame, StateVector const &checkpoint_state, StateVector const *predecessor,
                          AtomicOpSpec const &op, LatticeQuantizer const &q, ToleranceSchedule const &schedule,
                          EndorserSetup const &setup);

/// Decodes first; a frame that does not decode is Invalid at offset 0 with
/// the decode flag set. Checkpoint indices resolve against `dictionary`.
Endorsement endorse_encoded_frame(std::span<std::uint8_t const> bytes, std::uint64_t checkpoint_time,
                                  CheckpointDictionary const &dictionary, StateVector const *predecessor,
                                  AtomicOpSpec const &op, LatticeQuantizer const &q,
                                  ToleranceSchedule const &schedule, EndorserSetup const &setup);

/// Every frame of a client run, each anchored on the reported state before
/// it. Frames are independent, so the parallel policy endorses them on
/// worker threads; the result is identical to the serial loop.
std::vector<Endorsement> endorse_frames(ClientRun const &run, AtomicOpSpec const &op, ValidationConfig const &cfg,
                                        EndorserSetup const &setup, ExecPolicy policy = ExecPolicy::Parallel);

struct RandomizedConfig
{
  std::size_t endorsers = 5;
  double      rho       = 0.05;
  double      margin    = 1.0;
  /// Configured lambda~; estimated from the recomputations when absent.
  std::optional<double> lambda;
};

struct RandomizedVerdict
{
  bool          valid     = true;
  double        deviation = 0.0;
  StateVector   mean;
  double        lambda      = 0.0;
  std::uint64_t evaluations = 0;
};

/// X^ = (1/m) sum_i f(prev, theta_i) with theta_i drawn by endorsers
/// first_agent..first_agent + m - 1; valid iff |report - X^| <= margin.
RandomizedVerdict randomized_endorse(StateVector const &report, StateVector const &prev, AtomicOpSpec const &op,
                                     std::size_t m, double margin, std::uint64_t seed, std::uint64_t t,
                                     std::uint64_t attempt = 0, std::uint64_t first_agent = 1);

/// Largest eigenvalue of the sample covariance, by power iteration.
double estimate_covariance_lambda(std::span<StateVector const> samples, std::size_t max_iterations = 50,
                                  double tolerance = 1e-9);

/// 2 d lambda^2 / D^2 * (1 + 1/(m lambda))^2 with D = margin - (L + 1) eps,
/// clamped to [0, 1].
double deviation_probability_bound(std::size_t d, double lambda, double margin, double lipschitz, double epsilon,
                                   std::size_t m);
/// ceil(1 / (sqrt(rho / 2d) D - lambda)). Throws Infeasible when the bracket
/// is not positive.
std::size_t required_endorsers(double rho, std::size_t d, double margin, double lipschitz, double epsilon,
                               double lambda);

struct InvalidationNotice
{
  std::uint64_t frame_index = 0;
  std::size_t   offset      = 0;
  std::uint64_t t           = 0;
  double        deviation   = 0.0;
  double        tolerance   = 0.0;
};

enum class RepairAction
{
  SendRefinement,
  RecomputeAndResend,
};

char const *to_string(RepairAction action);

struct RepairCosts
{
  double        lipschitz = 1.0;
  double        epsilon   = 0.1;
  unsigned      level     = 0;
  unsigned      max_level = kMaxRefinementLevel;
  /// Bits a refinement would add to the report stream.
  std::uint64_t refinement_bits = 0;
  /// Recomputation priced in bits: tail evaluations x comp_bits_per_op.
  double recompute_bits = 0.0;
};

/// Refine when quantization alone can explain the deviation
/// (deviation <= (L + 1) eps / 2^level), a finer level exists, and the
/// refinement is cheaper than recomputing. Checkpoints always recompute.
RepairAction handle_invalidation(InvalidationNotice const &notice, RepairCosts const &costs);

/// min((ln(Delta_quant - eps) - ln delta_n) / ln L, M-bar), for L > 1.
double frame_size_lower_bound(double delta_quant, double epsilon, double first_update, double lipschitz,
                              std::uint64_t frame_cap);

/// Endorser ids (1-based) for a frame: consecutive frames get disjoint
/// blocks of `per_frame` endorsers from a pool of `pool` peers.
std::vector<std::uint64_t> assign_endorsers(std::uint64_t frame_index, std::size_t per_frame, std::size_t pool);

/// Serializes validated units onto the chain in index order. A unit is a
/// frame (subsampled with K) or a caller-built audit list.
class Orderer
{
public:
  Orderer(LatticeQuantizer q, std::uint64_t subsample_period);

  void submit(Frame const &frame, std::vector<Endorsement> endorsements);
  void submit(std::uint64_t index, std::vector<Audit> audits, std::vector<Endorsement> endorsements);

  /// Appends every ready unit whose predecessors are on the chain; returns
  /// the indices committed by this call.
  std::vector<std::uint64_t> commit_ready(AuditChain &chain);

  /// Units held because their endorsers disagree.
  std::vector<std::uint64_t> const &conflicts() const noexcept { return conflicts_; }
  /// Units endorsed invalid; they and everything after them never commit.
  std::vector<std::uint64_t> const &rejected() const noexcept { return rejected_; }
  std::size_t                       pending() const noexcept { return buffer_.size(); }

private:
  struct Unit
  {
    std::vector<Audit>       audits;
    std::vector<Endorsement> endorsements;
  };

  LatticeQuantizer                q_;
  std::uint64_t                   k_;
  std::map<std::uint64_t, Unit>   buffer_;
  std::vector<std::uint64_t>      conflicts_;
  std::vector<std::uint64_t>      rejected_;
};

struct CommitReport
{
  std::vector<std::uint64_t> committed;
  std::vector<std::uint64_t> conflicts;
  std::vector<std::uint64_t> rejected;
};

/// One-shot orderer pass: groups endorsements by frame and commits what it can.
CommitReport orderer_commit(std::span<Endorsement const> endorsements, std::span<Frame const> frames,
                            AuditChain &chain, LatticeQuantizer const &q, std::uint64_t subsample_period);

}  // namespace vtrust
