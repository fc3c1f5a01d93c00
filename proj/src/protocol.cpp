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

#include "vtrust/protocol.hpp"

#include "vtrust/error.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <exception>
#include <mutex>
#include <string>

namespace vtrust {

char const *to_string(Mode mode)
{
  switch (mode)
  {
  case Mode::Transaction:
    return "transaction";
  case Mode::Streaming:
    return "streaming";
  case Mode::Batch:
    return "batch";
  }
  return "unknown";
}

Mode parse_mode(std::string const &text)
{
  if (text == "transaction")
  {
    return Mode::Transaction;
  }
  if (text == "streaming")
  {
    return Mode::Streaming;
  }
  if (text == "batch")
  {
    return Mode::Batch;
  }
  throw Error(Errc::InvalidArgument, "unknown mode '" + text + "'");
}

ToleranceSchedule::ToleranceSchedule(double value, bool constant)
  : value_(value)
  , constant_(constant)
{
  require(value > 0.0 && !std::isnan(value), Errc::InvalidArgument, "tolerance must be positive");
}

ToleranceSchedule ToleranceSchedule::constant(double value)
{
  return ToleranceSchedule(value, true);
}

ToleranceSchedule ToleranceSchedule::logarithmic(double delta_max)
{
  return ToleranceSchedule(delta_max, false);
}

double ToleranceSchedule::at(std::uint64_t t) const
{
  if (constant_)
  {
    return value_;
  }
  return value_ / std::log(static_cast<double>(std::max<std::uint64_t>(t, 1)) + 1.0);
}

double ToleranceSchedule::minimum(std::uint64_t horizon) const
{
  return at(std::max<std::uint64_t>(horizon, 1));
}

void ValidationConfig::validate(std::uint64_t horizon) const
{
  require(epsilon > 0.0 && std::isfinite(epsilon), Errc::InvalidArgument, "epsilon must be positive");
  require(delta_quant > epsilon, Errc::InvalidArgument, "Delta_quant must exceed epsilon");
  require(frame_cap >= 1, Errc::InvalidArgument, "frame cap must be at least 1");
  require(lipschitz >= 0.0 && std::isfinite(lipschitz), Errc::InvalidArgument, "Lipschitz constant must be >= 0");
  require(delta_ver > 0.0, Errc::InvalidArgument, "Delta_ver must be positive");
  require(state_bound > 0.0, Errc::InvalidArgument, "state bound must be positive");
  double const loosest_check = delta_val.minimum(horizon);
  if (loosest_check < delta_ver)
  {
    throw Error(Errc::InvalidArgument, "Delta_val drops below Delta_ver within the horizon");
  }
  if (strict_soundness && epsilon > max_quantizer_error(loosest_check, lipschitz))
  {
    throw Error(Errc::Infeasible, "epsilon exceeds Delta_val / (L + 1); honest reports could be invalidated");
  }
}

double max_quantizer_error(double delta_val, double lipschitz)
{
  require(delta_val > 0.0, Errc::InvalidArgument, "Delta_val must be positive");
  require(lipschitz >= 0.0, Errc::InvalidArgument, "L must be >= 0");
  return delta_val / (lipschitz + 1.0);
}

Client::Client(AtomicOpSpec const &op, StateVector x0, ValidationConfig const &cfg, std::uint64_t horizon,
               std::uint64_t seed)
  : op_(&op)
  , cfg_(cfg)
  , q_(op.dimension(), cfg.epsilon, cfg.delta_quant)
  , horizon_(horizon)
  , seed_(seed)
  , dictionary_(cfg.epsilon, cfg.state_bound)
  , redraws_(horizon + 1, 0)
  , computed_count_(horizon + 1, 0)
{
  check_dimension(x0, op.dimension(), "initial state");
  require(x0.all_finite(), Errc::NonFinite, "initial state");
  require(cfg.frame_cap >= 1, Errc::InvalidArgument, "frame cap must be at least 1");
  truths_.push_back(std::move(x0));
  computed_count_[0] = 1;
}

StateVector const &Client::compute(std::uint64_t t)
{
  if (t < truths_.size())
  {
    return truths_[t];
  }
  require(t == truths_.size() && t >= 1 && t <= horizon_, Errc::OutOfRange, "iteration out of order");
  auto const  theta = draw_randomness(*op_, DrawKey{seed_, kClientAgent, t, redraws_[t]});
  StateVector next  = step(*op_, truths_[t - 1], theta);
  ++evaluations_;
  if (++computed_count_[t] > 1)
  {
    ++total_recomputations_;
  }
  if (!next.all_finite())
  {
    throw Error(Errc::Diverged, "state became non-finite at iteration " + std::to_string(t), t);
  }
  truths_.push_back(std::move(next));
  return truths_.back();
}

void Client::open_new_frame()
{
  std::uint64_t const t = next_t_;
  StateVector const   x = compute_or_initial(t);
  open_dict_size_       = dictionary_.size();
  CheckpointCode code   = dictionary_.encode(x);
  StateVector    checkpoint =
      std::holds_alternative<DictIndex>(code) ? dictionary_.entry(std::get<DictIndex>(code).index)
                                              : std::get<NewEntry>(code).state;
  if (distance(checkpoint, x) > cfg_.epsilon * (1.0 + 1e-12))
  {
    dictionary_.rollback(open_dict_size_);
    throw Error(Errc::OutOfRange, "state at iteration " + std::to_string(t) + " lies outside the checkpoint bound", t);
  }
  open_.emplace(next_frame_index_, std::move(code), t);
  open_states_.assign(1, checkpoint);
  open_true_deltas_.clear();
  open_acc_.emplace(q_, std::move(checkpoint));
  open_delta_.reset();
  open_closed_ = false;
  next_t_      = t + 1;
}

StateVector const &Client::compute_or_initial(std::uint64_t t)
{
  return t == 0 ? truths_[0] : compute(t);
}

bool Client::extend()
{
  if (open_closed_)
  {
    return false;
  }
  if (!open_)
  {
    if (horizon_ == 0 || next_t_ > horizon_)
    {
      return false;
    }
    open_new_frame();
    return true;
  }
  if (next_t_ > horizon_ || open_->size() >= cfg_.frame_cap)
  {
    open_closed_ = true;
    return false;
  }
  std::uint64_t const t = next_t_;
  StateVector const   x = compute(t);
  if (open_->size() == 0 && !open_delta_)
  {
    open_delta_ = distance(x, truths_[open_->checkpoint_time()]);
  }
  StateVector delta = x - open_states_.back();
  if (norm(delta) > cfg_.delta_quant)
  {
    open_closed_ = true;
    return false;
  }
  QuantizedUpdate u = quantize_update(q_, delta);
  open_acc_->add(u);
  open_->append(std::move(u));
  open_states_.push_back(open_acc_->state());
  open_true_deltas_.push_back(std::move(delta));
  next_t_ = t + 1;
  return true;
}

Frame Client::finish_frame()
{
  require(open_.has_value(), Errc::InvalidArgument, "no open frame");
  Frame frame = std::move(*open_);
  frame.seal();
  last_finished_ = open_states_.back();
  ++next_frame_index_;
  open_.reset();
  open_acc_.reset();
  open_states_.clear();
  open_true_deltas_.clear();
  open_delta_.reset();
  open_closed_ = false;
  return frame;
}

bool Client::done() const noexcept
{
  return !open_ && (horizon_ == 0 || next_t_ > horizon_);
}

Frame const &Client::open_frame() const
{
  require(open_.has_value(), Errc::InvalidArgument, "no open frame");
  return *open_;
}

StateVector const &Client::open_state(std::size_t offset) const
{
  require(open_.has_value() && offset < open_states_.size(), Errc::OutOfRange, "open frame offset");
  return open_states_[offset];
}

std::uint64_t Client::open_checkpoint_time() const
{
  return open_frame().checkpoint_time();
}

void Client::reset_accumulator()
{
  open_acc_.emplace(q_, open_states_.front());
  for (auto const &u : open_->updates())
  {
    open_acc_->add(u);
  }
}

void Client::rewind(std::size_t offset)
{
  require(open_.has_value() && offset <= open_->size(), Errc::OutOfRange, "rewind offset");
  std::uint64_t const t = open_->checkpoint_time() + offset;
  require(t >= 1, Errc::InvalidArgument, "the initial state cannot be recomputed");
  truths_.resize(std::min<std::size_t>(truths_.size(), t));
  ++redraws_[t];
  next_t_ = t;
  if (offset == 0)
  {
    dictionary_.rollback(open_dict_size_);
    open_.reset();
    open_acc_.reset();
    open_states_.clear();
    open_true_deltas_.clear();
    open_delta_.reset();
    open_closed_ = false;
    return;
  }
  open_->truncate(offset - 1);
  open_states_.resize(offset);
  open_true_deltas_.resize(offset - 1);
  reset_accumulator();
  if (offset == 1)
  {
    open_delta_.reset();
  }
  open_closed_ = false;
}

RefinementChunk Client::refine(std::size_t offset)
{
  require(open_.has_value() && offset >= 1 && offset <= open_->size(), Errc::OutOfRange, "refine offset");
  QuantizedUpdate const &current = open_->updates()[offset - 1];
  RefinementChunk chunk = refine_update(q_, open_true_deltas_[offset - 1], current, open_->index(), offset);
  QuantizedUpdate refined = apply_refinement(current, chunk);
  open_->truncate(offset);
  open_->replace(offset, std::move(refined));
  open_states_.resize(offset + 1);
  open_true_deltas_.resize(offset);
  reset_accumulator();
  open_states_[offset] = open_acc_->state();
  next_t_              = open_->checkpoint_time() + offset + 1;
  open_closed_         = false;
  return chunk;
}

unsigned Client::update_level(std::size_t offset) const
{
  require(open_.has_value() && offset >= 1 && offset <= open_->size(), Errc::OutOfRange, "update offset");
  return open_->updates()[offset - 1].level;
}

std::uint64_t Client::redraws(std::uint64_t t) const
{
  require(t < redraws_.size(), Errc::OutOfRange, "iteration beyond the horizon");
  return redraws_[t];
}

std::uint64_t Client::recomputations(std::uint64_t t) const
{
  require(t < computed_count_.size(), Errc::OutOfRange, "iteration beyond the horizon");
  return computed_count_[t] > 0 ? computed_count_[t] - 1 : 0;
}

StateVector const &Client::true_state(std::uint64_t t) const
{
  require(t < truths_.size(), Errc::OutOfRange, "state not computed");
  return truths_[t];
}

ClientRun client_run_frames(AtomicOpSpec const &op, StateVector const &x0, std::uint64_t iterations,
                            ValidationConfig const &cfg, std::uint64_t seed)
{
  ClientRun run;
  run.dictionary = CheckpointDictionary(cfg.epsilon, cfg.state_bound);
  if (iterations == 0)
  {
    return run;
  }
  Client client(op, x0, cfg, iterations, seed);
  while (!client.done())
  {
    while (client.extend())
    {
    }
    Frame const &open = client.open_frame();
    for (std::size_t j = 0; j <= open.size(); ++j)
    {
      run.reported.push_back(client.open_state(j));
    }
    run.first_update_norms.push_back(client.open_first_update());
    run.frames.push_back(client.finish_frame());
  }
  for (std::uint64_t t = 0; t <= iterations; ++t)
  {
    run.truth.push_back(client.true_state(t));
  }
  run.dictionary = client.dictionary();
  return run;
}

StateVector recompute_state(AtomicOpSpec const &op, StateVector const &previous, std::uint64_t t,
                            EndorserSetup const &setup, std::uint64_t &evaluations)
{
  if (!op.stochastic())
  {
    ++evaluations;
    return step(op, previous);
  }
  require(setup.replicas >= 1, Errc::InvalidArgument, "at least one replica");
  std::uint64_t const attempt = setup.attempt ? setup.attempt(t) : 0;
  StateVector         sum(op.dimension());
  for (std::size_t i = 0; i < setup.replicas; ++i)
  {
    auto const theta = draw_randomness(op, DrawKey{setup.seed, setup.first_agent + i, t, attempt});
    sum += step(op, previous, theta);
    ++evaluations;
  }
  sum *= 1.0 / static_cast<double>(setup.replicas);
  return sum;
}

Endorsement endorse_states(std::span<StateVector const> reported, std::uint64_t t0, StateVector const *predecessor,
                           AtomicOpSpec const &op, ToleranceSchedule const &schedule, EndorserSetup const &setup,
                           std::size_t start_offset)
{
  Endorsement e;
  e.endorser_id  = setup.first_agent;
  e.start_offset = start_offset;
  std::uint64_t evaluations = 0;
  for (std::size_t j = start_offset; j < reported.size(); ++j)
  {
    StateVector const *base = j == 0 ? predecessor : &reported[j - 1];
    if (base == nullptr)
    {
      e.deviations.push_back(0.0);
      continue;
    }
    std::uint64_t const t         = t0 + j;
    double const        deviation = distance(reported[j], recompute_state(op, *base, t, setup, evaluations));
    e.deviations.push_back(deviation);
    if (deviation > schedule.at(t))
    {
      e.valid            = false;
      e.first_bad_offset = j;
      break;
    }
  }
  e.recompute_count = evaluations;
  return e;
}

Endorsement endorse_frame(Frame const &frame, StateVector const &checkpoint_state, StateVector const *predecessor,
                          AtomicOpSpec const &op, LatticeQuantizer const &q, ToleranceSchedule const &schedule,
                          EndorserSetup const &setup)
{
  auto const  states = reported_states(frame, checkpoint_state, q);
  Endorsement e      = endorse_states(states, frame.checkpoint_time(), predecessor, op, schedule, setup);
  e.frame_index      = frame.index();
  return e;
}

Endorsement endorse_encoded_frame(std::span<std::uint8_t const> bytes, std::uint64_t checkpoint_time,
                                  CheckpointDictionary const &dictionary, StateVector const *predecessor,
                                  AtomicOpSpec const &op, LatticeQuantizer const &q,
                                  ToleranceSchedule const &schedule, EndorserSetup const &setup)
{
  std::optional<Frame> frame;
  StateVector          checkpoint;
  try
  {
    frame.emplace(decode_frame(bytes, q, checkpoint_time));
    if (auto const *idx = std::get_if<DictIndex>(&frame->checkpoint()))
    {
      checkpoint = dictionary.entry(idx->index);
    }
    else
    {
      checkpoint = std::get<NewEntry>(frame->checkpoint()).state;
    }
  }
  catch (Error const &err)
  {
    if (err.code() != Errc::Decode)
    {
      throw;
    }
    Endorsement e;
    e.valid            = false;
    e.first_bad_offset = 0;
    e.decode_failure   = true;
    e.endorser_id      = setup.first_agent;
    return e;
  }
  return endorse_frame(*frame, checkpoint, predecessor, op, q, schedule, setup);
}

std::vector<Endorsement> endorse_frames(ClientRun const &run, AtomicOpSpec const &op, ValidationConfig const &cfg,
                                        EndorserSetup const &setup, ExecPolicy policy)
{
  LatticeQuantizer const   q(op.dimension(), cfg.epsilon, cfg.delta_quant);
  std::vector<Endorsement> out(run.frames.size());
  auto const one = [&](std::size_t i) {
    Frame const      &frame = run.frames[i];
    std::uint64_t const t0  = frame.checkpoint_time();
    StateVector const *pred = t0 > 0 ? &run.reported[t0 - 1] : nullptr;
    out[i] = endorse_frame(frame, run.reported[t0], pred, op, q, cfg.delta_val, setup);
  };

  auto const n = static_cast<std::ptrdiff_t>(run.frames.size());
  if (policy == ExecPolicy::Serial)
  {
    for (std::ptrdiff_t i = 0; i < n; ++i)
    {
      one(static_cast<std::size_t>(i));
    }
    return out;
  }

  std::exception_ptr failure;
  std::mutex         failure_lock;
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i)
  {
    try
    {
      one(static_cast<std::size_t>(i));
    }
    catch (...)
    {
      std::lock_guard<std::mutex> lock(failure_lock);
      if (!failure)
      {
        failure = std::current_exception();
      }
    }
  }
  if (failure)
  {
    std::rethrow_exception(failure);
  }
  return out;
}

RandomizedVerdict randomized_endorse(StateVector const &report, StateVector const &prev, AtomicOpSpec const &op,
                                     std::size_t m, double margin, std::uint64_t seed, std::uint64_t t,
                                     std::uint64_t attempt, std::uint64_t first_agent)
{
  require(m >= 1, Errc::InvalidArgument, "at least one endorser");
  require(margin > 0.0, Errc::InvalidArgument, "margin must be positive");
  check_dimension(report, op.dimension(), "randomized report");
  std::vector<StateVector> samples;
  samples.reserve(m);
  RandomizedVerdict verdict;
  verdict.mean = StateVector(op.dimension());
  for (std::size_t i = 0; i < m; ++i)
  {
    auto const theta = draw_randomness(op, DrawKey{seed, first_agent + i, t, attempt});
    samples.push_back(step(op, prev, theta));
    verdict.mean += samples.back();
    ++verdict.evaluations;
  }
  verdict.mean *= 1.0 / static_cast<double>(m);
  verdict.deviation = distance(report, verdict.mean);
  verdict.valid     = verdict.deviation <= margin;
  verdict.lambda    = estimate_covariance_lambda(samples);
  return verdict;
}

double estimate_covariance_lambda(std::span<StateVector const> samples, std::size_t max_iterations, double tolerance)
{
  if (samples.size() < 2)
  {
    return 0.0;
  }
  std::size_t const d = samples.front().size();
  StateVector       mean(d);
  for (auto const &s : samples)
  {
    check_dimension(s, d, "covariance sample");
    mean += s;
  }
  mean *= 1.0 / static_cast<double>(samples.size());
  std::vector<StateVector> centered;
  centered.reserve(samples.size());
  for (auto const &s : samples)
  {
    centered.push_back(s - mean);
  }
  double const scale = 1.0 / static_cast<double>(samples.size() - 1);
  auto const   apply = [&](StateVector const &v) {
    StateVector out(d);
    for (auto const &c : centered)
    {
      double dot = 0.0;
      for (std::size_t i = 0; i < d; ++i)
      {
        dot += c[i] * v[i];
      }
      for (std::size_t i = 0; i < d; ++i)
      {
        out[i] += scale * dot * c[i];
      }
    }
    return out;
  };

  // start from the widest centered sample: it lies in the data span, so it
  // is not orthogonal to the top eigenvector
  StateVector v = *std::max_element(centered.begin(), centered.end(),
                                    [](auto const &a, auto const &b) { return norm(a) < norm(b); });
  double      len = norm(v);
  if (len == 0.0)
  {
    return 0.0;
  }
  v *= 1.0 / len;
  double lambda = 0.0;
  for (std::size_t it = 0; it < max_iterations; ++it)
  {
    StateVector w    = apply(v);
    double const now = norm(w);
    if (now == 0.0)
    {
      return 0.0;
    }
    w *= 1.0 / now;
    v = std::move(w);
    bool const settled = std::abs(now - lambda) <= tolerance * std::max(1.0, now);
    lambda             = now;
    if (settled)
    {
      break;
    }
  }
  return lambda;
}

namespace {

double randomized_gap(double margin, double lipschitz, double epsilon)
{
  require(lipschitz >= 0.0 && epsilon >= 0.0, Errc::InvalidArgument, "L and eps must be >= 0");
  double const gap = margin - (lipschitz + 1.0) * epsilon;
  if (!(gap > 0.0))
  {
    throw Error(Errc::InvalidArgument, "eps must be below Delta_marg / (L + 1)");
  }
  return gap;
}

}  // namespace

double deviation_probability_bound(std::size_t d, double lambda, double margin, double lipschitz, double epsilon,
                                   std::size_t m)
{
  require(d >= 1 && m >= 1, Errc::InvalidArgument, "d and m must be positive");
  require(lambda > 0.0, Errc::InvalidArgument, "lambda must be positive");
  double const gap    = randomized_gap(margin, lipschitz, epsilon);
  double const factor = 1.0 + 1.0 / (static_cast<double>(m) * lambda);
  double const value  = 2.0 * static_cast<double>(d) * lambda * lambda / (gap * gap) * factor * factor;
  return std::clamp(value, 0.0, 1.0);
}

std::size_t required_endorsers(double rho, std::size_t d, double margin, double lipschitz, double epsilon,
                               double lambda)
{
  require(rho > 0.0 && rho < 1.0, Errc::InvalidArgument, "rho must lie in (0, 1)");
  require(d >= 1, Errc::InvalidArgument, "d must be positive");
  require(lambda >= 0.0, Errc::InvalidArgument, "lambda must be >= 0");
  double const gap = randomized_gap(margin, lipschitz, epsilon);
  if (rho > 2.0 * static_cast<double>(d) / (gap * gap))
  {
    throw Error(Errc::InvalidArgument, "rho exceeds 2d / (Delta_marg - (L + 1) eps)^2");
  }
  double const bracket = std::sqrt(rho / (2.0 * static_cast<double>(d))) * gap - lambda;
  if (!(bracket > 0.0))
  {
    throw Error(Errc::Infeasible, "no endorser count is certified: lambda too large for this margin and rho");
  }
  // a few ulps of slack so an exact integer is not pushed up by rounding
  double const m = std::ceil((1.0 / bracket) * (1.0 - 8.0 * DBL_EPSILON));
  return static_cast<std::size_t>(std::max(1.0, m));
}

char const *to_string(RepairAction action)
{
  return action == RepairAction::SendRefinement ? "send-refinement" : "recompute-and-resend";
}

RepairAction handle_invalidation(InvalidationNotice const &notice, RepairCosts const &costs)
{
  if (notice.offset == 0 || costs.level >= std::min(costs.max_level, kMaxRefinementLevel))
  {
    return RepairAction::RecomputeAndResend;
  }
  double const explainable =
      (costs.lipschitz + 1.0) * std::ldexp(costs.epsilon, -static_cast<int>(costs.level));
  if (notice.deviation <= explainable && static_cast<double>(costs.refinement_bits) < costs.recompute_bits)
  {
    return RepairAction::SendRefinement;
  }
  return RepairAction::RecomputeAndResend;
}

double frame_size_lower_bound(double delta_quant, double epsilon, double first_update, double lipschitz,
                              std::uint64_t frame_cap)
{
  require(lipschitz > 1.0, Errc::InvalidArgument, "the frame-size bound needs L > 1");
  require(delta_quant > epsilon && epsilon > 0.0, Errc::InvalidArgument, "need Delta_quant > eps > 0");
  require(first_update >= 0.0, Errc::InvalidArgument, "first update norm must be >= 0");
  double const cap = static_cast<double>(frame_cap);
  if (first_update == 0.0)
  {
    return cap;
  }
  double const bound = (std::log(delta_quant - epsilon) - std::log(first_update)) / std::log(lipschitz);
  return std::min(bound, cap);
}

std::vector<std::uint64_t> assign_endorsers(std::uint64_t frame_index, std::size_t per_frame, std::size_t pool)
{
  require(per_frame >= 1 && pool >= per_frame, Errc::InvalidArgument, "pool must hold at least one endorser set");
  std::vector<std::uint64_t> ids;
  ids.reserve(per_frame);
  for (std::size_t i = 0; i < per_frame; ++i)
  {
    ids.push_back((frame_index * per_frame + i) % pool + 1);
  }
  return ids;
}

Orderer::Orderer(LatticeQuantizer q, std::uint64_t subsample_period)
  : q_(std::move(q))
  , k_(subsample_period)
{
  require(k_ >= 1, Errc::InvalidArgument, "K must be at least 1");
}

void Orderer::submit(Frame const &frame, std::vector<Endorsement> endorsements)
{
  submit(frame.index(), subsample_frame(frame, k_), std::move(endorsements));
}

void Orderer::submit(std::uint64_t index, std::vector<Audit> audits, std::vector<Endorsement> endorsements)
{
  Unit &unit  = buffer_[index];
  unit.audits = std::move(audits);
  unit.endorsements.insert(unit.endorsements.end(), endorsements.begin(), endorsements.end());
}

std::vector<std::uint64_t> Orderer::commit_ready(AuditChain &chain)
{
  auto const note = [](std::vector<std::uint64_t> &list, std::uint64_t index) {
    if (std::find(list.begin(), list.end(), index) == list.end())
    {
      list.push_back(index);
    }
  };
  for (auto const &[index, unit] : buffer_)
  {
    auto const valid = std::count_if(unit.endorsements.begin(), unit.endorsements.end(),
                                     [](Endorsement const &e) { return e.valid; });
    if (valid > 0 && static_cast<std::size_t>(valid) < unit.endorsements.size())
    {
      note(conflicts_, index);
    }
  }

  std::vector<std::uint64_t> committed;
  for (;;)
  {
    auto it = buffer_.find(chain.next_frame_index());
    if (it == buffer_.end() || it->second.endorsements.empty())
    {
      break;
    }
    auto const &ends      = it->second.endorsements;
    bool const  all_valid = std::all_of(ends.begin(), ends.end(), [](Endorsement const &e) { return e.valid; });
    bool const  none      = std::none_of(ends.begin(), ends.end(), [](Endorsement const &e) { return e.valid; });
    if (!all_valid)
    {
      if (none)
      {
        note(rejected_, it->first);
      }
      break;
    }
    append_block(chain, it->first, encode_audits(it->second.audits, q_));
    committed.push_back(it->first);
    buffer_.erase(it);
  }
  return committed;
}

CommitReport orderer_commit(std::span<Endorsement const> endorsements, std::span<Frame const> frames,
                            AuditChain &chain, LatticeQuantizer const &q, std::uint64_t subsample_period)
{
  Orderer                                         orderer(q, subsample_period);
  std::map<std::uint64_t, std::vector<Endorsement>> grouped;
  for (auto const &e : endorsements)
  {
    grouped[e.frame_index].push_back(e);
  }
  for (auto const &frame : frames)
  {
    auto it = grouped.find(frame.index());
    if (it != grouped.end())
    {
      orderer.submit(frame, it->second);
    }
  }
  CommitReport report;
  report.committed = orderer.commit_ready(chain);
  report.conflicts = orderer.conflicts();
  report.rejected  = orderer.rejected();
  return report;
}

}  // namespace vtrust
