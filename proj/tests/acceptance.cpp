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

// Acceptance checks: one PASS/FAIL line per criterion, exit status = number
// of failed criteria.

#include "oracles.hpp"

#include "vtrust/error.hpp"
#include "vtrust/experiment.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

using namespace vtrust;
namespace fs = std::filesystem;

namespace {

struct Outcome
{
  bool        pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point start)
{
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string fmt(double v)
{
  return format_number(v);
}

std::string slurp(fs::path const &p)
{
  std::ifstream     in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch_dir(std::string const &name)
{
  auto const dir = fs::temp_directory_path() / "vtrust_acceptance" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int run_cli(std::string const &args, fs::path const &log)
{
  std::string const cmd = std::string(VTRUST_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
  int const         rc  = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

StateVector random_state(CounterRng &rng, std::size_t d, double scale)
{
  StateVector v(d);
  for (std::size_t i = 0; i < d; ++i)
  {
    v[i] = scale * rng.uniform(-1.0, 1.0);
  }
  return v;
}

/// Affine map with operator norm exactly `lipschitz`: random rotation times a
/// spectrum whose largest entry is L.
AtomicOpSpec random_affine(CounterRng &rng, std::size_t d, double lipschitz)
{
  std::vector<double> spectrum(d);
  spectrum[0] = lipschitz;
  for (std::size_t i = 1; i < d; ++i)
  {
    spectrum[i] = lipschitz * rng.uniform();
  }
  return AtomicOpSpec::affine_from_spectrum(spectrum, random_state(rng, d, 0.5), rng());
}

/// Iterations that keep |X_t| well inside the state bound for expansive maps.
std::uint64_t horizon_for(double lipschitz, std::uint64_t cap)
{
  if (lipschitz <= 1.0)
  {
    return cap;
  }
  return std::min<std::uint64_t>(cap, static_cast<std::uint64_t>(std::log(1e4) / std::log(lipschitz)));
}

ValidationConfig constant_config(double tol, double eps, double dq, std::uint64_t cap, double lipschitz)
{
  ValidationConfig cfg;
  cfg.delta_val   = ToleranceSchedule::constant(tol);
  cfg.delta_ver   = tol;
  cfg.epsilon     = eps;
  cfg.delta_quant = dq;
  cfg.frame_cap   = cap;
  cfg.lipschitz   = lipschitz;
  cfg.state_bound = 1e6;
  return cfg;
}

// 1. Honest clients with eps = Delta_val / (L + 1) are never invalidated.
Outcome soundness()
{
  auto const    start = std::chrono::steady_clock::now();
  CounterRng    rng(0x51);
  std::size_t   invalid = 0, frames = 0, states = 0;
  double        worst_ratio = 0.0;
  std::size_t const dims[]  = {2, 8, 32};
  for (int run = 0; run < 200; ++run)
  {
    std::size_t const d   = dims[run % 3];
    double const      L   = rng.uniform(0.2, 2.0);
    double const      tol = rng.uniform(0.05, 1.0);
    double const      eps = tol / (L + 1.0);
    auto const        op  = random_affine(rng, d, L);
    auto              cfg = constant_config(tol, eps, std::max(1.0, 4 * eps), 5 + rng.below(26), L);
    cfg.strict_soundness  = true;
    auto const run_frames = client_run_frames(op, random_state(rng, d, 2.0), horizon_for(L, 100), cfg, run);
    auto const ends       = endorse_frames(run_frames, op, cfg, EndorserSetup{});
    for (auto const &e : ends)
    {
      invalid += e.valid ? 0 : 1;
      for (double dev : e.deviations)
      {
        worst_ratio = std::max(worst_ratio, dev / tol);
      }
      states += e.deviations.size();
    }
    frames += ends.size();
  }
  double const elapsed = seconds_since(start);
  return {invalid == 0 && elapsed < 30.0,
          "200 runs, " + std::to_string(frames) + " frames, " + std::to_string(states) +
              " states checked, invalidations " + std::to_string(invalid) + ", max deviation / Delta_val " +
              fmt(worst_ratio) + ", " + fmt(std::round(elapsed * 100) / 100) + " s"};
}

// 2. An error of norm Delta_val + L eps + 1e-6 is caught at or before its offset.
Outcome detection()
{
  CounterRng        rng(0x52);
  std::size_t       detected = 0;
  std::size_t const dims[]   = {2, 8, 32};
  for (int run = 0; run < 200; ++run)
  {
    std::size_t const d   = dims[run % 3];
    double const      L   = rng.uniform(0.2, 2.0);
    double const      tol = rng.uniform(0.05, 1.0);
    double const      eps = tol / (L + 1.0) * rng.uniform(0.1, 1.0);
    auto const        op  = random_affine(rng, d, L);
    auto const        cfg = constant_config(tol, eps, std::max(1.0, 4 * eps), 5 + rng.below(26), L);
    auto const        T   = horizon_for(L, 100);
    auto const        cr  = client_run_frames(op, random_state(rng, d, 2.0), T, cfg, run);

    std::uint64_t const t = 1 + rng.below(T);
    std::size_t         n = 0;
    while (cr.frames[n].last_time() < t)
    {
      ++n;
    }
    Frame const &frame = cr.frames[n];
    auto const   t0    = frame.checkpoint_time();
    std::vector<StateVector> states(cr.reported.begin() + static_cast<std::ptrdiff_t>(t0),
                                    cr.reported.begin() + static_cast<std::ptrdiff_t>(frame.last_time() + 1));
    StateVector dir(d);
    for (std::size_t i = 0; i < d; ++i)
    {
      dir[i] = rng.normal();
    }
    dir *= (tol + L * eps + 1e-6) / norm(dir);
    states[t - t0] = cr.truth[t] + dir;

    StateVector const *pred = t0 > 0 ? &cr.reported[t0 - 1] : nullptr;
    auto const         e    = endorse_states(states, t0, pred, op, cfg.delta_val, EndorserSetup{});
    if (!e.valid && e.first_bad_offset && *e.first_bad_offset <= t - t0)
    {
      ++detected;
    }
  }
  return {detected == 200, std::to_string(detected) + "/200 injected errors detected at or before their offset"};
}

// 3. Quantizer and refinement error bounds.
Outcome quantizer_bound()
{
  CounterRng        rng(0x53);
  std::size_t       points = 0, violations = 0, refine_violations = 0;
  double            worst = 0.0, worst_refined = 0.0;
  std::size_t const dims[] = {1, 2, 3, 8, 32, 128};
  double const      epss[] = {1e-4, 1e-2, 0.1, 1.0};
  for (std::size_t d : dims)
  {
    for (double eps : epss)
    {
      double const           dq = 10.0 * eps;
      LatticeQuantizer const q(d, eps, dq);
      ++points;
      for (int i = 0; i < 10000; ++i)
      {
        StateVector delta(d);
        for (std::size_t k = 0; k < d; ++k)
        {
          delta[k] = rng.normal();
        }
        delta *= dq * std::pow(rng.uniform(), 1.0 / static_cast<double>(d)) / norm(delta);
        auto         u   = quantize_update(q, delta);
        double const err = oracle::euclid(dequantize_update(q, u), delta);
        worst            = std::max(worst, err / eps);
        violations += err <= eps ? 0 : 1;
        for (unsigned r = 1; r <= 6; ++r)
        {
          u                  = apply_refinement(u, refine_update(q, delta, u));
          double const bound = std::ldexp(eps, -static_cast<int>(r));
          double const e_r   = oracle::euclid(dequantize_update(q, u), delta);
          worst_refined      = std::max(worst_refined, e_r / bound);
          refine_violations += e_r <= bound ? 0 : 1;
        }
      }
    }
  }
  return {violations == 0 && refine_violations == 0,
          std::to_string(points) + " (d, eps) points x 1e4 deltas, max error / eps " + fmt(worst) +
              ", max refined error / (eps / 2^r) " + fmt(worst_refined) + " for r <= 6"};
}

// 4. Every sealed frame is at least as long as the frame-size bound.
Outcome frame_size_bound()
{
  CounterRng  rng(0x54);
  std::size_t checked = 0, violations = 0;
  double      min_slack = 1e300;
  for (double L : {1.05, 1.2, 2.0})
  {
    for (int run = 0; run < 30; ++run)
    {
      std::size_t const   d   = 1 + rng.below(8);
      double const        eps = rng.uniform(0.001, 0.05);
      double const        dq  = rng.uniform(0.2, 2.0);
      std::uint64_t const cap = run % 2 == 0 ? 1000 : 5 + rng.below(40);
      auto const          op  = random_affine(rng, d, L);
      auto const          T   = horizon_for(L, 400);
      auto const          cfg = constant_config(1.0, eps, dq, cap, L);
      auto const          cr  = client_run_frames(op, random_state(rng, d, 0.5), T, cfg, run);
      for (std::size_t n = 0; n < cr.frames.size(); ++n)
      {
        if (!cr.first_update_norms[n])
        {
          continue;
        }
        auto const   &f         = cr.frames[n];
        double const  bound     = frame_size_lower_bound(dq, eps, *cr.first_update_norms[n], L, cap);
        double const  remaining = static_cast<double>(T - f.checkpoint_time());
        double const  required  = std::min(bound, remaining);
        double const  length    = static_cast<double>(f.size());
        ++checked;
        violations += length >= required ? 0 : 1;
        min_slack = std::min(min_slack, length - required);
      }
    }
  }
  return {violations == 0 && checked > 0, std::to_string(checked) + " frames for L in {1.05, 1.2, 2}, violations " +
                                              std::to_string(violations) + ", min (M_n - bound) " + fmt(min_slack)};
}

// 5. Verification bound, CLI verify, single-bit mutation detection.
Outcome verification()
{
  CounterRng  rng(0x55);
  std::size_t audits = 0, over_bound = 0, failed = 0, mutations = 0, undetected = 0;
  double      worst_ratio = 0.0;
  for (int run = 0; run < 50; ++run)
  {
    std::size_t const d   = 1 + rng.below(8);
    double const      L   = rng.uniform(0.2, 1.5);
    double const      ver = rng.uniform(0.1, 1.0);
    double const      eps = ver / (L + 1.0) * rng.uniform(0.05, 0.5);
    auto const        op  = random_affine(rng, d, L);

    ProtocolSettings s;
    s.validation                  = constant_config(ver, eps, std::max(1.0, 4 * eps), 5 + rng.below(30), L);
    s.validation.strict_soundness = true;
    s.iterations                  = horizon_for(L, 120);
    s.seed                        = static_cast<std::uint64_t>(run);
    s.subsample_period            = choose_subsample_period(L, eps, ver, 32);
    s.endorsers                   = 2;
    auto const pr                 = run_protocol(op, random_state(rng, d, 3.0), s);

    VerificationSettings vs;
    vs.delta_ver   = ver;
    vs.epsilon     = eps;
    vs.delta_quant = s.validation.delta_quant;
    vs.state_bound = s.validation.state_bound;
    vs.dimension   = d;
    auto const   rep   = verify_computation(pr.chain, op, vs);
    double const bound = verification_bound(L, s.subsample_period, eps);
    failed += rep.passed() && !pr.halted_at ? 0 : 1;
    for (auto const &a : rep.audits)
    {
      ++audits;
      over_bound += a.deviation <= bound ? 0 : 1;
      worst_ratio = std::max(worst_ratio, a.deviation / bound);
    }

    if (run < 4)
    {
      auto const bytes = serialize_chain(pr.chain);
      for (std::size_t bit = 0; bit < bytes.size() * 8; ++bit)
      {
        auto mutated = bytes;
        mutated[bit / 8] ^= static_cast<std::uint8_t>(1U << (bit % 8));
        ++mutations;
        try
        {
          undetected += verify_chain_integrity(parse_chain(mutated)).ok ? 1 : 0;
        }
        catch (Error const &)
        {
          // structurally broken file: detected
        }
      }
    }
  }

  // the shipped affine config through the CLI: run, verify, then a flipped bit
  fs::path const dir    = scratch_dir("verify");
  std::string const cfg = std::string(VTRUST_SOURCE_DIR) + "/configs/affine.yaml";
  int const rc_run      = run_cli("run --config " + cfg + " --out " + dir.string(), dir / "run.log");
  int const rc_ok       = run_cli("verify --chain " + (dir / "chain.bin").string() + " --config " + cfg, dir / "ok.log");
  std::string const ok_log = slurp(dir / "ok.log");

  std::string chain = slurp(dir / "chain.bin");
  chain[chain.size() / 2] ^= 0x04;
  {
    std::ofstream out(dir / "flipped.bin", std::ios::binary);
    out << chain;
  }
  int const rc_bad = run_cli("verify --chain " + (dir / "flipped.bin").string() + " --config " + cfg, dir / "bad.log");
  std::string const bad_log = slurp(dir / "bad.log");
  bool const cli_ok = rc_run == 0 && rc_ok == 0 && ok_log.find("result: PASS") != std::string::npos && rc_bad == 1 &&
                      bad_log.find("FAIL") != std::string::npos;

  return {failed == 0 && over_bound == 0 && undetected == 0 && cli_ok,
          "50 runs, " + std::to_string(audits) + " audits, max deviation / (L^K+1)K eps " + fmt(worst_ratio) +
              ", failed runs " + std::to_string(failed) + "; " + std::to_string(mutations) +
              " single-bit mutations, undetected " + std::to_string(undetected) + "; CLI verify " +
              (cli_ok ? "PASS on honest chain, FAIL on flipped chain" : "did not behave as expected")};
}

// 6. Monte-Carlo invalidation rate against the randomized bound, and the
// endorser-count formula against the bound.
Outcome randomized_bound()
{
  double const     sigma  = 1.0;
  double const     lambda = sigma * sigma;  // covariance of x + theta is sigma^2 I
  std::size_t const d     = 2;
  auto const op = AtomicOpSpec::affine(DenseMatrix::identity(d), StateVector(d), 1.0, sigma);

  bool               ok = true;
  std::ostringstream detail;
  int const          trials = 10000;
  for (double margin : {3.0, 4.0, 6.0})
  {
    for (std::size_t m : {1U, 5U, 20U})
    {
      std::size_t invalid = 0;
      for (int i = 0; i < trials; ++i)
      {
        auto const t      = static_cast<std::uint64_t>(i + 1);
        StateVector const prev(d);
        StateVector const report = step(op, prev, draw_randomness(op, DrawKey{61, kClientAgent, t, 0}));
        invalid += randomized_endorse(report, prev, op, m, margin, 61, t).valid ? 0 : 1;
      }
      double const rate  = static_cast<double>(invalid) / trials;
      double const bound = deviation_probability_bound(d, lambda, margin, 1.0, 0.0, m);
      double const slack = 3.0 * std::sqrt(bound * (1.0 - bound) / trials);
      ok                 = ok && rate <= bound + slack;
      detail << " D=" << fmt(margin) << ",m=" << m << ": " << fmt(rate) << "<=" << fmt(std::round(bound * 1e4) / 1e4);
    }
  }

  // lambda~ estimated from endorser recomputations, for comparison
  std::vector<StateVector> samples;
  for (std::uint64_t agent = 1; agent <= 5000; ++agent)
  {
    samples.push_back(step(op, StateVector(d), draw_randomness(op, DrawKey{62, agent, 1, 0})));
  }
  double const lambda_est = estimate_covariance_lambda(samples);

  std::size_t feasible = 0, discrepancies = 0;
  for (double rho : {0.01, 0.05, 0.1, 0.3})
  {
    for (std::size_t dim : {1U, 2U, 8U, 32U})
    {
      for (double margin : {2.0, 5.0, 10.0, 50.0})
      {
        for (double L : {0.0, 0.5, 1.0, 2.0})
        {
          for (double eps : {0.0, 0.01, 0.1})
          {
            for (double lam : {0.01, 0.1, 0.5, 1.0, 2.0})
            {
              double const D = margin - (L + 1) * eps;
              if (rho > 2.0 * static_cast<double>(dim) / (D * D) ||
                  std::sqrt(rho / (2.0 * static_cast<double>(dim))) * D - lam <= 0.0)
              {
                continue;
              }
              ++feasible;
              auto const m = required_endorsers(rho, dim, margin, L, eps, lam);
              // a few ulps of slack: at exact-integer ties the bound equals rho in exact arithmetic
              bool const certifies = deviation_probability_bound(dim, lam, margin, L, eps, m) <= rho * (1 + 1e-12);
              bool const minimal   = m == 1 || deviation_probability_bound(dim, lam, margin, L, eps, m - 1) > rho;
              discrepancies += certifies && minimal ? 0 : 1;
            }
          }
        }
      }
    }
  }
  ok = ok && discrepancies == 0 && feasible > 0;
  return {ok, "rates vs bound:" + detail.str() + "; lambda estimate " + fmt(std::round(lambda_est * 1e3) / 1e3) +
                  " (analytic 1); required_endorsers on " + std::to_string(feasible) +
                  " feasible grid points, discrepancies " + std::to_string(discrepancies)};
}

// 7. Mode cost ordering on identical trajectories, batch comm within 4x.
Outcome cost_ordering()
{
  bool               ok = true;
  std::ostringstream detail;
  auto const check_modes = [&](RunConfig cfg, Scenario scenario, double tol, std::string const &label) {
    std::vector<CostRow>     rows;
    std::vector<StateVector> finals;
    std::uint64_t            invalidations = 0;
    for (Mode mode : {Mode::Transaction, Mode::Streaming, Mode::Batch})
    {
      cfg.mode       = mode;
      auto const res = run_experiment(cfg, scenario, tol, cfg.seed);
      rows.push_back(cost_row(res));
      finals.push_back(res.run.final_true);
      invalidations += res.run.invalidations;
    }
    bool const identical = invalidations == 0 && finals[0] == finals[1] && finals[1] == finals[2];
    bool const storage   = rows[0].storage_bits_per_dim > rows[1].storage_bits_per_dim &&
                         rows[1].storage_bits_per_dim > rows[2].storage_bits_per_dim;
    bool const comm = rows[0].comm_bits_per_dim > rows[1].comm_bits_per_dim &&
                      rows[1].comm_bits_per_dim > rows[2].comm_bits_per_dim;
    bool const comp = rows[2].comp_ops_per_iter >= rows[1].comp_ops_per_iter &&
                      rows[1].comp_ops_per_iter >= rows[0].comp_ops_per_iter;
    ok = ok && identical && storage && comm && comp;
    detail << ' ' << label << " storage " << fmt(std::round(rows[0].storage_bits_per_dim)) << ">"
           << fmt(std::round(rows[1].storage_bits_per_dim)) << ">" << fmt(std::round(rows[2].storage_bits_per_dim))
           << " comm " << fmt(std::round(rows[0].comm_bits_per_dim * 10) / 10) << ">"
           << fmt(std::round(rows[1].comm_bits_per_dim * 10) / 10) << ">"
           << fmt(std::round(rows[2].comm_bits_per_dim * 10) / 10) << (identical ? "" : " (trajectories differ)")
           << (storage && comm && comp ? "" : " (ORDER BROKEN)") << ';';
  };

  auto const affine = load_config(fs::path(VTRUST_SOURCE_DIR) / "configs" / "affine.yaml");
  check_modes(affine, affine.scenario.kind, affine.validation.delta_max, "affine");
  auto const classifier = load_config(fs::path(VTRUST_SOURCE_DIR) / "configs" / "classifier.yaml");
  double const loose    = classifier.sweep.tolerances.back();
  for (Scenario s : {Scenario::Base, Scenario::CoarseCompression, Scenario::LargeFrames})
  {
    check_modes(classifier, s, loose, std::string("classifier/") + to_string(s));
  }

  RunConfig batch = classifier;
  batch.mode      = Mode::Batch;
  auto const base = run_experiment(batch, Scenario::Base, batch.validation.delta_max, batch.seed);
  auto const cmp  = measured_vs_predicted(base.run.costs, mode_params(base.resolved), base.run.iterations);
  auto const aff  = run_experiment(affine, affine.scenario.kind, affine.validation.delta_max, affine.seed);
  auto const cmp2 = measured_vs_predicted(aff.run.costs, mode_params(aff.resolved), aff.run.iterations);
  ok              = ok && cmp.comm_ratio <= 4.0 && cmp2.comm_ratio <= 4.0;
  detail << " batch comm / prediction: classifier base " << fmt(std::round(cmp.comm_ratio * 1000) / 1000)
         << ", affine " << fmt(std::round(cmp2.comm_ratio * 1000) / 1000);
  return {ok, detail.str()};
}

// 8. Tolerance sweep trends on the shipped classifier config.
Outcome sweep_trends()
{
  auto const cfg   = load_config(fs::path(VTRUST_SOURCE_DIR) / "configs" / "classifier.yaml");
  auto const start = std::chrono::steady_clock::now();
  auto const res   = run_sweep(cfg, cfg.sweep.tolerances);
  double const elapsed = seconds_since(start);

  std::size_t const n      = cfg.sweep.tolerances.size();
  std::size_t const middle = n / 2;
  double const      budget = static_cast<double>(cfg.validation.recompute_budget);
  auto const row = [&](Scenario s, std::size_t i) -> CostRow const & {
    for (auto const &r : res.costs)
    {
      if (r.scenario == s && r.tolerance == cfg.sweep.tolerances[i])
      {
        return r;
      }
    }
    throw Error(Errc::InvalidArgument, "missing sweep row");
  };
  Scenario const all[] = {Scenario::Base, Scenario::CoarseCompression, Scenario::LargeFrames};

  bool monotone = true;
  for (Scenario s : all)
  {
    for (std::size_t i = 0; i + 1 < n; ++i)
    {
      monotone = monotone && row(s, i + 1).recomputations_per_iter <= row(s, i).recomputations_per_iter;
    }
  }
  auto const spread = [&](std::size_t i) {
    double lo = 1e300, hi = -1e300;
    for (Scenario s : all)
    {
      lo = std::min(lo, row(s, i).recomputations_per_iter);
      hi = std::max(hi, row(s, i).recomputations_per_iter);
    }
    return hi - lo;
  };
  bool const converge = spread(0) <= 0.05 * budget && spread(n - 1) <= 0.05 * budget;

  auto const &b = row(Scenario::Base, middle);
  auto const &c = row(Scenario::CoarseCompression, middle);
  auto const &l = row(Scenario::LargeFrames, middle);
  bool const coarse = c.recomputations_per_iter > b.recomputations_per_iter && c.comm_bits_per_dim < b.comm_bits_per_dim;
  bool const large  = l.comm_bits_per_dim < b.comm_bits_per_dim;

  double validated = -1.0, vanilla = -1.0;
  for (auto const &p : res.precision)
  {
    if (p.validated && p.tolerance && *p.tolerance == cfg.sweep.tolerances[middle] &&
        p.batch_size == cfg.computation.batch_size)
    {
      validated = p.accuracy;
    }
    if (!p.validated && p.batch_size == cfg.computation.batch_size)
    {
      vanilla = p.accuracy;
    }
  }
  bool const precision = validated >= 0.0 && vanilla >= 0.0 && validated >= vanilla;
  bool const fast      = elapsed < 600.0;

  auto const r3 = [](double v) { return fmt(std::round(v * 1000) / 1000); };
  std::ostringstream detail;
  detail << "(a) monotone " << (monotone ? "yes" : "no") << ", spread at extremes " << r3(spread(0)) << " / "
         << r3(spread(n - 1)) << " (limit " << r3(0.05 * budget) << "); (b) at tol " << fmt(cfg.sweep.tolerances[middle])
         << " coarse recomp " << r3(c.recomputations_per_iter) << " > base " << r3(b.recomputations_per_iter)
         << ", comm " << r3(c.comm_bits_per_dim) << " < " << r3(b.comm_bits_per_dim) << "; (c) large comm "
         << r3(l.comm_bits_per_dim) << " < " << r3(b.comm_bits_per_dim) << "; (d) validated acc " << r3(validated)
         << " >= vanilla " << r3(vanilla) << "; " << fmt(std::round(elapsed * 10) / 10) << " s";
  return {monotone && converge && coarse && large && precision && fast, detail.str()};
}

// 9. Identical config and seed give byte-identical artifacts.
Outcome determinism()
{
  std::string const cls = std::string(VTRUST_SOURCE_DIR) + "/configs/classifier.yaml";
  std::string const aff = std::string(VTRUST_SOURCE_DIR) + "/configs/affine.yaml";
  bool              ok  = true;
  std::size_t       compared = 0;
  auto const        compare = [&](fs::path const &a, fs::path const &b, std::vector<std::string> const &files) {
    for (auto const &f : files)
    {
      std::string const x = slurp(a / f);
      ok                  = ok && !x.empty() && x == slurp(b / f);
      ++compared;
    }
  };
  for (auto const &[label, cfg] : {std::pair{"classifier", cls}, std::pair{"affine", aff}})
  {
    fs::path const a = scratch_dir(std::string("det_") + label + "_a");
    fs::path const b = scratch_dir(std::string("det_") + label + "_b");
    ok = ok && run_cli("run --config " + cfg + " --out " + a.string(), a / "log") == 0;
    ok = ok && run_cli("run --config " + cfg + " --out " + b.string(), b / "log") == 0;
    compare(a, b, {"chain.bin", "costs.csv", "precision.csv"});
  }
  fs::path const a = scratch_dir("det_sweep_a");
  fs::path const b = scratch_dir("det_sweep_b");
  ok = ok && run_cli("sweep --config " + cls + " --tolerances 0.1,1,10 --out " + a.string(), a / "log") == 0;
  ok = ok && run_cli("sweep --config " + cls + " --tolerances 0.1,1,10 --out " + b.string(), b / "log") == 0;
  compare(a, b, {"costs.csv", "precision.csv"});
  return {ok, std::to_string(compared) + " artifacts from repeated run/sweep invocations compared byte for byte"};
}

}  // namespace

int main()
{
  struct Criterion
  {
    int                      id;
    char const              *name;
    std::function<Outcome()> check;
  };
  std::vector<Criterion> const criteria{
      {1, "honest soundness", soundness},
      {2, "error detection", detection},
      {3, "quantizer bound", quantizer_bound},
      {4, "frame-size bound", frame_size_bound},
      {5, "verification bound", verification},
      {6, "randomized validation bound", randomized_bound},
      {7, "mode cost ordering", cost_ordering},
      {8, "tolerance sweep trends", sweep_trends},
      {9, "determinism", determinism},
  };
  int failed = 0;
  for (auto const &c : criteria)
  {
    Outcome out;
    try
    {
      out = c.check();
    }
    catch (std::exception const &e)
    {
      out = {false, std::string("threw: ") + e.what()};
    }
    failed += out.pass ? 0 : 1;
    std::cout << "criterion " << c.id << " (" << c.name << "): " << (out.pass ? "PASS" : "FAIL") << " | "
              << out.detail << std::endl;
  }
  return failed;
}
