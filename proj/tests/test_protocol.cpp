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

#include "oracles.hpp"

#include "vtrust/error.hpp"
#include "vtrust/protocol.hpp"

#include <doctest.h>

#include <cmath>

using namespace vtrust;

namespace {

AtomicOpSpec scaled_identity(std::size_t d, double scale)
{
  DenseMatrix a = DenseMatrix::identity(d);
  for (auto &v : a.data)
  {
    v *= scale;
  }
  return AtomicOpSpec::affine(a, StateVector(d), std::abs(scale));
}

ValidationConfig basic_config(double eps, double delta_quant, std::uint64_t cap, double lipschitz)
{
  ValidationConfig cfg;
  cfg.delta_val   = ToleranceSchedule::constant(1.0);
  cfg.delta_ver   = 1.0;
  cfg.epsilon     = eps;
  cfg.delta_quant = delta_quant;
  cfg.frame_cap   = cap;
  cfg.lipschitz   = lipschitz;
  return cfg;
}

Frame small_frame(std::uint64_t index, std::uint64_t t0)
{
  Frame f(index, DictIndex{0}, t0);
  f.append(QuantizedUpdate{{1, 0}, 0});
  f.seal();
  return f;
}

Endorsement verdict(std::uint64_t frame, bool valid)
{
  Endorsement e;
  e.frame_index = frame;
  e.valid       = valid;
  if (!valid)
  {
    e.first_bad_offset = 1;
  }
  return e;
}

}  // namespace

TEST_CASE("max_quantizer_error")
{
  CHECK(max_quantizer_error(0.2, 1.0) == doctest::Approx(0.1));
  CHECK(max_quantizer_error(0.7, 0.0) == 0.7);
  CHECK(max_quantizer_error(1.0, 4.0) == doctest::Approx(0.2));
  CHECK_THROWS_AS(max_quantizer_error(0.0, 1.0), Error);
}

TEST_CASE("tolerance schedules")
{
  auto const log = ToleranceSchedule::logarithmic(1.0);
  CHECK(log.at(1) == doctest::Approx(1.0 / std::log(2.0)));
  CHECK(log.at(0) == log.at(1));
  CHECK(log.at(9) == doctest::Approx(1.0 / std::log(10.0)));
  CHECK(log.minimum(100) == doctest::Approx(1.0 / std::log(101.0)));
  auto const flat = ToleranceSchedule::constant(0.3);
  CHECK(flat.at(0) == 0.3);
  CHECK(flat.at(1000) == 0.3);
  CHECK(flat.minimum(50) == 0.3);
}

TEST_CASE("validation config invariants")
{
  auto cfg = basic_config(0.1, 1.0, 10, 1.0);
  CHECK_NOTHROW(cfg.validate(100));
  cfg.delta_ver = 2.0;
  CHECK_THROWS_AS(cfg.validate(100), Error);
  cfg.delta_ver = 1.0;

  cfg.delta_val = ToleranceSchedule::logarithmic(1.0);
  cfg.delta_ver = 1.0 / std::log(101.0);
  CHECK_NOTHROW(cfg.validate(100));
  CHECK_THROWS_AS(cfg.validate(200), Error);

  cfg                  = basic_config(0.6, 1.0, 10, 1.0);
  cfg.strict_soundness = true;
  try
  {
    cfg.validate(10);
    FAIL("expected an error");
  }
  catch (Error const &e)
  {
    CHECK(e.code() == Errc::Infeasible);
  }
  cfg.epsilon = 0.5;
  CHECK_NOTHROW(cfg.validate(10));

  cfg.delta_quant = 0.5;
  CHECK_THROWS_AS(cfg.validate(10), Error);
}

TEST_CASE("client framing: contraction stays in one frame")
{
  auto const op  = scaled_identity(2, 0.5);
  auto const run = client_run_frames(op, StateVector{1, 1}, 50, basic_config(0.01, 10.0, 100, 0.5));
  REQUIRE(run.frames.size() == 1);
  CHECK(run.frames[0].size() == 50);
  CHECK(run.reported.size() == 51);
  CHECK(run.truth.size() == 51);
}

TEST_CASE("client framing: expansion respects the frame-size bound")
{
  DenseMatrix a = DenseMatrix::identity(2);
  for (auto &v : a.data)
  {
    v *= 1.1;
  }
  auto const op  = AtomicOpSpec::affine(a, StateVector(2), 1.1);
  auto const run = client_run_frames(op, StateVector{1, 0}, 100, basic_config(0.01, 1.0, 1000, 1.1));
  REQUIRE(!run.frames.empty());
  REQUIRE(run.first_update_norms[0].has_value());
  CHECK(*run.first_update_norms[0] == doctest::Approx(0.1));
  double const expected = (std::log(0.99) - std::log(0.1)) / std::log(1.1);
  CHECK(expected == doctest::Approx(24.05).epsilon(1e-3));
  CHECK(frame_size_lower_bound(1.0, 0.01, 0.1, 1.1, 1000) == doctest::Approx(expected));
  CHECK(frame_size_lower_bound(1.0, 0.01, 0.1, 1.1, 10) == 10.0);
  CHECK(static_cast<double>(run.frames[0].size()) >= expected);
  CHECK_THROWS_AS(frame_size_lower_bound(1.0, 0.01, 0.1, 1.0, 10), Error);
}

TEST_CASE("client framing: empty horizon and divergence")
{
  auto const op = scaled_identity(2, 0.5);
  CHECK(client_run_frames(op, StateVector{1, 1}, 0, basic_config(0.01, 10.0, 100, 0.5)).frames.empty());

  auto const blowup = scaled_identity(1, 1e200);
  auto       cfg    = basic_config(0.01, 1.0, 5, 1e200);
  cfg.state_bound   = 1e300;
  try
  {
    client_run_frames(blowup, StateVector{1.0}, 10, cfg);
    FAIL("expected an error");
  }
  catch (Error const &e)
  {
    CHECK((e.code() == Errc::Diverged || e.code() == Errc::OutOfRange));
  }
}

TEST_CASE("client framing invariants over random affine ops")
{
  CounterRng rng(12);
  for (int run_no = 0; run_no < 40; ++run_no)
  {
    std::size_t const   d = 1 + rng.below(6);
    std::vector<double> spectrum(d);
    for (auto &s : spectrum)
    {
      s = rng.uniform(0.1, 1.3);
    }
    StateVector offset(d);
    for (std::size_t i = 0; i < d; ++i)
    {
      offset[i] = rng.uniform(-1, 1);
    }
    auto const    op  = AtomicOpSpec::affine_from_spectrum(spectrum, offset, rng());
    double const  eps = rng.uniform(0.001, 0.1);
    auto const    cap = 1 + rng.below(30);
    auto const    T   = 20 + rng.below(60);
    auto          cfg = basic_config(eps, eps * rng.uniform(5, 50), cap, *op.lipschitz());
    cfg.state_bound   = 1e9;
    StateVector x0(d, 1.0);
    auto const  run = client_run_frames(op, x0, T, cfg);

    std::uint64_t expected_t = 0;
    for (auto const &f : run.frames)
    {
      CHECK(f.size() <= cap);
      CHECK(f.sealed());
      CHECK(f.checkpoint_time() == expected_t);
      expected_t = f.checkpoint_time() + f.size() + 1;
    }
    CHECK(expected_t == T + 1);
    for (std::uint64_t t = 0; t <= T; ++t)
    {
      CHECK(oracle::euclid(run.reported[t], run.truth[t]) <= eps);
    }
    for (std::uint64_t t = 1; t <= T; ++t)
    {
      CHECK(oracle::euclid(run.truth[t], step(op, run.truth[t - 1])) == 0.0);
    }
  }
}

TEST_CASE("honest frames are endorsed with deviations within (L+1) eps")
{
  CounterRng rng(77);
  for (int run_no = 0; run_no < 30; ++run_no)
  {
    std::size_t const   d = 2 + rng.below(5);
    std::vector<double> spectrum(d);
    for (auto &s : spectrum)
    {
      s = rng.uniform(0.2, 1.2);
    }
    auto const   op      = AtomicOpSpec::affine_from_spectrum(spectrum, StateVector(d, 0.3), rng());
    double const L       = *op.lipschitz();
    double const val     = rng.uniform(0.05, 0.5);
    auto         cfg     = basic_config(val / (L + 1), 1.0, 10, L);
    cfg.delta_val        = ToleranceSchedule::constant(val);
    cfg.delta_ver        = val;
    cfg.strict_soundness = true;
    cfg.state_bound      = 1e9;
    auto const run       = client_run_frames(op, StateVector(d, 2.0), 60, cfg);
    auto const ends      = endorse_frames(run, op, cfg, EndorserSetup{});
    REQUIRE(ends.size() == run.frames.size());
    for (auto const &e : ends)
    {
      CHECK(e.valid);
      for (double dev : e.deviations)
      {
        CHECK(dev <= (L + 1) * cfg.epsilon);
      }
    }
  }
}

TEST_CASE("an injected error is invalidated at its offset")
{
  auto const   op  = AtomicOpSpec::affine_from_spectrum({0.9, 0.4, 0.2}, StateVector{0.1, 0.2, 0.3}, 5);
  double const L   = 0.9;
  double const val = 0.3;
  double const eps = val / (L + 1);
  auto         cfg = basic_config(eps, 5.0, 50, L);
  cfg.delta_val    = ToleranceSchedule::constant(val);
  cfg.delta_ver    = val;
  auto const run   = client_run_frames(op, StateVector{3, 3, 3}, 30, cfg);

  CounterRng rng(4);
  for (std::size_t j = 1; j <= 30; ++j)
  {
    std::vector<StateVector> reported = run.reported;
    StateVector              dir{rng.normal(), rng.normal(), rng.normal()};
    dir *= (val + L * eps + 1e-6) / norm(dir);
    reported[j] = run.truth[j] + dir;
    auto const e = endorse_states(reported, 0, nullptr, op, cfg.delta_val, EndorserSetup{});
    CHECK_FALSE(e.valid);
    REQUIRE(e.first_bad_offset.has_value());
    CHECK(*e.first_bad_offset <= j);
    CHECK(e.deviations.back() > val);
  }
}

TEST_CASE("endorsement edge cases")
{
  auto const             op = scaled_identity(2, 0.5);
  LatticeQuantizer const q(2, 0.1, 1.0);
  Frame                  empty(0, DictIndex{0}, 0);
  empty.seal();
  auto const e = endorse_frame(empty, StateVector{1, 1}, nullptr, op, q, ToleranceSchedule::constant(0.2),
                               EndorserSetup{});
  CHECK(e.valid);
  CHECK(e.recompute_count == 0);

  CheckpointDictionary       dict(0.1, 100.0);
  std::vector<std::uint8_t> garbage{0x13, 0x37, 0x00};
  auto const bad = endorse_encoded_frame(garbage, 0, dict, nullptr, op, q, ToleranceSchedule::constant(0.2),
                                         EndorserSetup{});
  CHECK_FALSE(bad.valid);
  CHECK(bad.decode_failure);
  REQUIRE(bad.first_bad_offset.has_value());
  CHECK(*bad.first_bad_offset == 0);

  // closed threshold: a deviation equal to Delta_val passes
  auto const               zero = AtomicOpSpec::affine(DenseMatrix(2, 2, 0.0), StateVector(2), 0.0);
  std::vector<StateVector> at_limit{StateVector{5, 5}, StateVector{0.25, 0}};
  CHECK(endorse_states(at_limit, 0, nullptr, zero, ToleranceSchedule::constant(0.25), EndorserSetup{}).valid);
  std::vector<StateVector> over{StateVector{5, 5}, StateVector{std::nextafter(0.25, 1.0), 0}};
  auto const               o = endorse_states(over, 0, nullptr, zero, ToleranceSchedule::constant(0.25), EndorserSetup{});
  CHECK_FALSE(o.valid);
  CHECK(*o.first_bad_offset == 1);
}

TEST_CASE("randomized endorsement")
{
  auto const  det = scaled_identity(2, 0.5);
  StateVector prev{1, 1};
  for (double off : {0.0, 0.1, 0.3})
  {
    StateVector const report = StateVector{0.5 + off, 0.5};
    auto const        r      = randomized_endorse(report, prev, det, 4, 0.2, 1, 5);
    std::vector<StateVector> pair{prev, report};
    auto const e = endorse_states(pair, 4, nullptr, det, ToleranceSchedule::constant(0.2), EndorserSetup{});
    CHECK(r.valid == e.valid);
    CHECK(r.deviation == doctest::Approx(off));
  }

  auto const noisy = AtomicOpSpec::affine(DenseMatrix::identity(2), StateVector(2), 1.0, 1.0);
  auto const r1    = randomized_endorse(StateVector{1, 1}, prev, noisy, 1, 10.0, 3, 7, 2);
  auto const th    = draw_randomness(noisy, DrawKey{3, 1, 7, 2});
  CHECK(r1.mean == step(noisy, prev, th));
  CHECK(r1.evaluations == 1);

  auto const r3 = randomized_endorse(StateVector{1, 1}, prev, noisy, 3, 10.0, 3, 7, 2);
  StateVector mean(2);
  for (std::uint64_t agent = 1; agent <= 3; ++agent)
  {
    mean += step(noisy, prev, draw_randomness(noisy, DrawKey{3, agent, 7, 2}));
  }
  mean *= 1.0 / 3.0;
  CHECK(oracle::euclid(r3.mean, mean) <= 1e-15);
}

TEST_CASE("deviation probability bound and endorser sizing")
{
  CHECK(deviation_probability_bound(2, 1.0, 10.0, 0.0, 0.0, 1) == doctest::Approx(0.16));
  double const limit = 2.0 * 2 * 1.0 / std::pow(10.0 - 2 * 0.5, 2);
  CHECK(deviation_probability_bound(2, 1.0, 10.0, 1.0, 0.5, 1000000) == doctest::Approx(limit).epsilon(1e-5));
  double prev = 1.0;
  for (std::size_t m = 1; m < 50; ++m)
  {
    double const b = deviation_probability_bound(3, 0.7, 12.0, 0.5, 0.1, m);
    CHECK(b < prev);
    prev = b;
  }
  CHECK_THROWS_AS(deviation_probability_bound(2, 1.0, 1.0, 1.0, 0.5, 1), Error);
  CHECK_THROWS_AS(deviation_probability_bound(2, 1.0, 10.0, 0.0, 0.0, 0), Error);

  CHECK(std::sqrt(0.04 / 4) * 10 - 0.5 == doctest::Approx(0.5));
  CHECK(required_endorsers(0.04, 2, 10.0, 0.0, 0.0, 0.5) == 2);
  try
  {
    required_endorsers(0.04, 2, 10.0, 0.0, 0.0, 1.0);
    FAIL("expected an error");
  }
  catch (Error const &e)
  {
    CHECK(e.code() == Errc::Infeasible);
  }

  CounterRng rng(5);
  for (int i = 0; i < 500; ++i)
  {
    double const      rho    = rng.uniform(0.01, 0.5);
    std::size_t const d      = 1 + rng.below(20);
    double const      margin = rng.uniform(1, 50);
    double const      L      = rng.uniform(0, 2);
    double const      eps    = rng.uniform(0, 0.1);
    double const      lambda = rng.uniform(0.01, 3);
    double const      D      = margin - (L + 1) * eps;
    if (rho > 2.0 * static_cast<double>(d) / (D * D))
    {
      CHECK_THROWS_AS(required_endorsers(rho, d, margin, L, eps, lambda), Error);
      continue;
    }
    if (std::sqrt(rho / (2.0 * static_cast<double>(d))) * D - lambda <= 0)
    {
      CHECK_THROWS_AS(required_endorsers(rho, d, margin, L, eps, lambda), Error);
      continue;
    }
    auto const m = required_endorsers(rho, d, margin, L, eps, lambda);
    CHECK(deviation_probability_bound(d, lambda, margin, L, eps, m) <= rho);
    if (m > 1)
    {
      CHECK(deviation_probability_bound(d, lambda, margin, L, eps, m - 1) > rho);
    }
  }
}

TEST_CASE("covariance eigenvalue estimate")
{
  std::vector<StateVector> two{StateVector{0, 0}, StateVector{2, 0}};
  CHECK(estimate_covariance_lambda(two) == doctest::Approx(2.0));

  CounterRng               rng(6);
  std::vector<StateVector> samples;
  for (int i = 0; i < 20000; ++i)
  {
    samples.push_back(StateVector{2.0 * rng.normal(), rng.normal(), 0.5 * rng.normal()});
  }
  CHECK(estimate_covariance_lambda(samples) == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("repair decisions")
{
  RepairCosts costs;
  costs.lipschitz       = 1.0;
  costs.epsilon         = 0.1;
  costs.level           = 0;
  costs.max_level       = 4;
  costs.refinement_bits = 8;
  costs.recompute_bits  = 1000;

  InvalidationNotice n;
  n.offset    = 3;
  n.tolerance = 0.15;
  n.deviation = 0.9 * 2 * 0.1;
  CHECK(handle_invalidation(n, costs) == RepairAction::SendRefinement);

  n.deviation = 10 * n.tolerance;
  CHECK(handle_invalidation(n, costs) == RepairAction::RecomputeAndResend);

  n.deviation = 0.1;
  costs.level = 4;
  CHECK(handle_invalidation(n, costs) == RepairAction::RecomputeAndResend);

  costs.level = 0;
  n.offset    = 0;
  CHECK(handle_invalidation(n, costs) == RepairAction::RecomputeAndResend);

  n.offset             = 2;
  costs.recompute_bits = 4;
  CHECK(handle_invalidation(n, costs) == RepairAction::RecomputeAndResend);
}

TEST_CASE("client refinement moves a report toward the truth")
{
  auto const op  = AtomicOpSpec::affine_from_spectrum({0.8, 0.3}, StateVector{1, -1}, 2);
  auto       cfg = basic_config(0.2, 5.0, 20, 0.8);
  Client     client(op, StateVector{2, 2}, cfg, 10);
  while (client.extend())
  {
  }
  REQUIRE(client.open_frame().size() >= 3);
  double const before = oracle::euclid(client.open_state(2), client.true_state(2));
  auto const   chunk  = client.refine(2);
  CHECK(chunk.level == 1);
  CHECK(client.update_level(2) == 1);
  double const after = oracle::euclid(client.open_state(2), client.true_state(2));
  CHECK(after <= 0.1);
  CHECK(after <= before);
  for (std::size_t j = 0; j <= client.open_frame().size(); ++j)
  {
    CHECK(oracle::euclid(client.open_state(j), client.true_state(j)) <= 0.2);
  }
}

TEST_CASE("endorser assignment uses disjoint consecutive blocks")
{
  CHECK(assign_endorsers(0, 2, 6) == std::vector<std::uint64_t>{1, 2});
  CHECK(assign_endorsers(1, 2, 6) == std::vector<std::uint64_t>{3, 4});
  CHECK(assign_endorsers(2, 2, 6) == std::vector<std::uint64_t>{5, 6});
  CHECK(assign_endorsers(3, 2, 6) == std::vector<std::uint64_t>{1, 2});
  CHECK_THROWS_AS(assign_endorsers(0, 3, 2), Error);
}

TEST_CASE("orderer commits in index order")
{
  LatticeQuantizer const q(2, 0.1, 1.0);
  AuditChain             chain;
  Orderer                orderer(q, 1);
  std::vector<Frame>     frames{small_frame(0, 0), small_frame(1, 2), small_frame(2, 4)};

  orderer.submit(frames[2], {verdict(2, true)});
  CHECK(orderer.commit_ready(chain).empty());
  orderer.submit(frames[0], {verdict(0, true)});
  CHECK(orderer.commit_ready(chain) == std::vector<std::uint64_t>{0});
  orderer.submit(frames[1], {verdict(1, true)});
  CHECK(orderer.commit_ready(chain) == std::vector<std::uint64_t>{1, 2});
  REQUIRE(chain.size() == 3);
  for (std::uint64_t h = 0; h < 3; ++h)
  {
    CHECK(chain.blocks()[h].header.frame_index == h);
    CHECK(chain.blocks()[h].header.height == h);
  }
}

TEST_CASE("orderer stops at an invalid frame and surfaces conflicts")
{
  LatticeQuantizer const   q(2, 0.1, 1.0);
  std::vector<Frame>       frames{small_frame(0, 0), small_frame(1, 2), small_frame(2, 4)};
  std::vector<Endorsement> ends{verdict(0, true), verdict(1, false), verdict(2, true)};
  AuditChain               chain;
  auto const               rep = orderer_commit(ends, frames, chain, q, 1);
  CHECK(rep.committed == std::vector<std::uint64_t>{0});
  CHECK(rep.rejected == std::vector<std::uint64_t>{1});
  CHECK(chain.size() == 1);

  AuditChain empty_chain;
  CHECK(orderer_commit({}, frames, empty_chain, q, 1).committed.empty());
  CHECK(empty_chain.empty());

  std::vector<Endorsement> split{verdict(0, true), verdict(0, false)};
  AuditChain               c2;
  auto const               conflict = orderer_commit(split, frames, c2, q, 1);
  CHECK(conflict.committed.empty());
  CHECK(conflict.conflicts == std::vector<std::uint64_t>{0});
  CHECK(c2.empty());
}

TEST_CASE("parsing modes")
{
  CHECK(parse_mode("batch") == Mode::Batch);
  CHECK(parse_mode("streaming") == Mode::Streaming);
  CHECK(parse_mode("transaction") == Mode::Transaction);
  CHECK_THROWS_AS(parse_mode("bulk"), Error);
  CHECK(std::string(to_string(Mode::Streaming)) == "streaming");
}
