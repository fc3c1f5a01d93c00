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

#include "vtrust/experiment.hpp"

#include "vtrust/error.hpp"

#include <charconv>
#include <cmath>
#include <exception>
#include <fstream>
#include <sstream>

namespace vtrust {

std::string format_number(double value)
{
  if (std::isinf(value))
  {
    return value > 0 ? "inf" : "-inf";
  }
  if (std::isnan(value))
  {
    return "nan";
  }
  char buf[64];
  auto const res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

AtomicOpSpec build_op(ComputationConfig const &cfg, std::uint64_t seed, std::shared_ptr<Dataset const> *data_out)
{
  switch (cfg.kind)
  {
  case OpKind::AffineContraction:
  {
    StateVector offset = cfg.offset.empty() ? StateVector(cfg.spectrum.size()) : StateVector(cfg.offset);
    return AtomicOpSpec::affine_from_spectrum(cfg.spectrum, std::move(offset), cfg.rotation_seed,
                                              cfg.noise_sigma);
  }
  case OpKind::QuadraticGradientDescent:
    return AtomicOpSpec::quadratic_from_spectrum(cfg.spectrum, cfg.rate, cfg.rotation_seed);
  case OpKind::MiniBatchSGDClassifier:
  {
    auto data = std::make_shared<Dataset const>(make_two_gaussians(cfg.dataset, seed));
    if (data_out != nullptr)
    {
      *data_out = data;
    }
    return AtomicOpSpec::classifier(std::move(data), cfg.batch_size, cfg.rate, cfg.l2);
  }
  }
  throw Error(Errc::InvalidArgument, "unknown computation kind");
}

StateVector initial_state(ComputationConfig const &cfg, std::size_t dimension)
{
  if (cfg.initial_state.empty())
  {
    return StateVector(dimension);
  }
  StateVector x(cfg.initial_state);
  check_dimension(x, dimension, "computation.initial_state");
  return x;
}

namespace {

double scenario_epsilon(ScenarioConfig const &s, Scenario scenario)
{
  switch (scenario)
  {
  case Scenario::Base:
  case Scenario::LargeFrames:
    return s.epsilon_ratio * s.reference_delta_max;
  case Scenario::CoarseCompression:
    return s.coarse_epsilon_ratio * s.reference_delta_max;
  case Scenario::Custom:
    return s.epsilon;
  }
  return s.epsilon;
}

std::uint64_t scenario_frame_cap(ScenarioConfig const &s, Scenario scenario, std::uint64_t iterations)
{
  auto const fraction = [iterations](double f) {
    return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(f * static_cast<double>(iterations))));
  };
  switch (scenario)
  {
  case Scenario::Base:
  case Scenario::CoarseCompression:
    return fraction(s.frame_fraction);
  case Scenario::LargeFrames:
    return fraction(s.large_frame_fraction);
  case Scenario::Custom:
    return s.frame_cap;
  }
  return s.frame_cap;
}

// Runs body(i) for i in [0, n). Each index writes only its own slot, so
// the outcome does not depend on scheduling; the first exception (lowest
// index) is rethrown after the loop.
template <typename Body>
void for_each_index(std::size_t n, ExecPolicy policy, Body &&body)
{
  if (policy == ExecPolicy::Serial)
  {
    for (std::size_t i = 0; i < n; ++i)
    {
      body(i);
    }
    return;
  }
  std::vector<std::exception_ptr> errors(n);
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < n; ++i)
  {
    try
    {
      body(i);
    }
    catch (...)
    {
      errors[i] = std::current_exception();
    }
  }
  for (auto const &e : errors)
  {
    if (e)
    {
      std::rethrow_exception(e);
    }
  }
}

}  // namespace

ResolvedRun resolve_run(RunConfig const &cfg, Scenario scenario, double tolerance, std::uint64_t seed)
{
  cfg.validate();
  require(tolerance > 0.0 && std::isfinite(tolerance), Errc::InvalidArgument, "tolerance must be positive");
  std::shared_ptr<Dataset const> data;
  AtomicOpSpec                   op = build_op(cfg.computation, seed, &data);
  ResolvedRun r{op, initial_state(cfg.computation, op.dimension()), ProtocolSettings{}, data};
  r.scenario  = scenario;
  r.tolerance = tolerance;

  if (cfg.computation.lipschitz)
  {
    r.lipschitz = *cfg.computation.lipschitz;
  }
  else if (r.op.lipschitz())
  {
    r.lipschitz = *r.op.lipschitz();
  }
  else
  {
    r.lipschitz = estimate_lipschitz(r.op, cfg.computation.lipschitz_samples, cfg.computation.lipschitz_radius,
                                     mix64(seed ^ 0x4C495053ULL));
    r.lipschitz_estimated = true;
  }
  r.op.set_lipschitz(r.lipschitz);

  auto &s       = r.settings;
  s.iterations  = cfg.iterations;
  s.seed        = seed;
  auto &v       = s.validation;
  v.delta_val   = cfg.validation.logarithmic ? ToleranceSchedule::logarithmic(tolerance)
                                             : ToleranceSchedule::constant(tolerance);
  v.delta_ver   = cfg.validation.delta_ver.value_or(v.delta_val.minimum(cfg.iterations));
  v.epsilon     = scenario_epsilon(cfg.scenario, scenario);
  v.delta_quant = cfg.validation.delta_quant;
  v.frame_cap   = scenario_frame_cap(cfg.scenario, scenario, cfg.iterations);
  v.lipschitz   = r.lipschitz;
  v.mode        = cfg.mode;
  v.state_bound = cfg.validation.state_bound;
  v.strict_soundness = cfg.validation.strict_soundness;
  require(v.delta_quant > v.epsilon, Errc::InvalidArgument,
          "validation.delta_quant must exceed the scenario eps (" + format_number(v.epsilon) + ")");
  v.validate(cfg.iterations);

  switch (cfg.validation.subsample)
  {
  case SubsampleRule::Theorem:
    s.subsample_period = choose_subsample_period(r.lipschitz, v.epsilon, v.delta_ver, cfg.validation.k_cap);
    break;
  case SubsampleRule::Ratio:
    s.subsample_period = std::min(cfg.validation.k_cap,
                                  ratio_subsample_period(v.delta_ver, v.delta_val.minimum(cfg.iterations)));
    break;
  case SubsampleRule::Fixed:
    s.subsample_period = cfg.validation.subsample_period;
    break;
  }

  s.endorsers            = cfg.randomized.endorsers;
  s.endorser_pool        = cfg.randomized.pool;
  s.meta_bits            = cfg.costs.meta_bits;
  s.recompute_budget     = cfg.validation.recompute_budget;
  s.max_refinement_level = cfg.validation.max_refinement_level;
  s.comp_bits_per_op     = cfg.costs.comp_bits_per_op;
  s.keep_trace           = cfg.output.keep_trace;
  return r;
}

VerificationSettings verification_settings(ResolvedRun const &r)
{
  VerificationSettings vs;
  vs.delta_ver   = r.settings.validation.delta_ver;
  vs.epsilon     = r.settings.validation.epsilon;
  vs.delta_quant = r.settings.validation.delta_quant;
  vs.state_bound = r.settings.validation.state_bound;
  vs.dimension   = r.op.dimension();
  return vs;
}

ModeParams mode_params(ResolvedRun const &r)
{
  ModeParams p;
  p.mode        = r.settings.validation.mode;
  p.endorsers   = static_cast<double>(r.settings.endorsers);
  p.frame_cap   = r.settings.validation.frame_cap;
  p.nu          = 1.0 / static_cast<double>(r.settings.subsample_period);
  p.dimension   = r.op.dimension();
  p.state_bound = r.settings.validation.state_bound;
  p.epsilon     = r.settings.validation.epsilon;
  p.delta_quant = r.settings.validation.delta_quant;
  p.meta_bits   = static_cast<double>(r.settings.meta_bits);
  return p;
}

ExperimentResult run_experiment(RunConfig const &cfg, Scenario scenario, double tolerance, std::uint64_t seed)
{
  ResolvedRun resolved = resolve_run(cfg, scenario, tolerance, seed);
  ProtocolRun run      = run_protocol(resolved.op, resolved.x0, resolved.settings);
  ExperimentResult out{std::move(resolved), std::move(run), std::nullopt};
  if (out.resolved.data)
  {
    out.accuracy = test_accuracy(*out.resolved.data, out.run.final_true);
  }
  return out;
}

CostRow cost_row(ExperimentResult const &result)
{
  auto const   &ledger = result.run.costs;
  double const  t      = static_cast<double>(result.run.iterations);
  double const  d      = static_cast<double>(result.resolved.op.dimension());
  double const  e      = static_cast<double>(result.resolved.settings.endorsers);
  CostRow       row;
  row.mode                    = result.resolved.settings.validation.mode;
  row.scenario                = result.resolved.scenario;
  row.tolerance               = result.resolved.tolerance;
  row.comp_ops_per_iter       = static_cast<double>(ledger.comp_total()) / t;
  row.comm_bits_per_dim       = static_cast<double>(ledger.committed_report_bits()) / e / (t * d);
  row.storage_bits_per_dim    = static_cast<double>(ledger.storage_bits() + ledger.storage_meta_bits()) / (t * d);
  row.recomputations_per_iter = result.run.recomputations_per_iter();
  return row;
}

StateVector vanilla_sgd(AtomicOpSpec const &op, StateVector x, std::uint64_t iterations, std::uint64_t seed)
{
  for (std::uint64_t t = 1; t <= iterations; ++t)
  {
    x = step(op, x, draw_randomness(op, DrawKey{seed, kClientAgent, t, 0}));
  }
  return x;
}

namespace {

struct Job
{
  Scenario      scenario;
  double        tolerance;
  std::uint64_t seed;
};

struct JobOutcome
{
  CostRow               row;
  std::optional<double> accuracy;
};

std::vector<PrecisionRow> vanilla_rows(RunConfig const &cfg, ExecPolicy policy)
{
  if (cfg.computation.kind != OpKind::MiniBatchSGDClassifier)
  {
    return {};
  }
  auto const         &batches = cfg.sweep.vanilla_batches;
  std::size_t const   seeds   = cfg.sweep.seeds;
  std::vector<double> acc(batches.size() * seeds);
  for_each_index(acc.size(), policy, [&](std::size_t i) {
    ComputationConfig c = cfg.computation;
    c.batch_size        = batches[i / seeds];
    std::uint64_t const seed = cfg.seed + i % seeds;
    std::shared_ptr<Dataset const> data;
    AtomicOpSpec const             op = build_op(c, seed, &data);
    acc[i] = test_accuracy(*data, vanilla_sgd(op, initial_state(c, op.dimension()), cfg.iterations, seed));
  });
  std::vector<PrecisionRow> rows;
  for (std::size_t b = 0; b < batches.size(); ++b)
  {
    PrecisionRow row;
    row.validated  = false;
    row.batch_size = batches[b];
    row.seeds      = seeds;
    for (std::size_t k = 0; k < seeds; ++k)
    {
      row.accuracy += acc[b * seeds + k];
    }
    row.accuracy /= static_cast<double>(seeds);
    rows.push_back(row);
  }
  return rows;
}

SweepResult sweep_impl(RunConfig const &cfg, std::vector<Scenario> const &scenarios,
                       std::vector<double> const &tolerances, ExecPolicy policy)
{
  require(!tolerances.empty(), Errc::InvalidArgument, "sweep needs at least one tolerance");
  std::size_t const seeds = cfg.sweep.seeds;
  std::vector<Job>  jobs;
  for (auto scenario : scenarios)
  {
    for (double tol : tolerances)
    {
      for (std::size_t k = 0; k < seeds; ++k)
      {
        jobs.push_back({scenario, tol, cfg.seed + k});
      }
    }
  }
  // resolve everything up front so an infeasible point fails before any run
  for (auto scenario : scenarios)
  {
    for (double tol : tolerances)
    {
      resolve_run(cfg, scenario, tol, cfg.seed);
    }
  }

  std::vector<JobOutcome> outcomes(jobs.size());
  for_each_index(jobs.size(), policy, [&](std::size_t i) {
    auto const result = run_experiment(cfg, jobs[i].scenario, jobs[i].tolerance, jobs[i].seed);
    outcomes[i]       = {cost_row(result), result.accuracy};
  });

  SweepResult out;
  for (std::size_t g = 0; g < jobs.size(); g += seeds)
  {
    CostRow mean   = outcomes[g].row;
    mean.comp_ops_per_iter = mean.comm_bits_per_dim = mean.storage_bits_per_dim = mean.recomputations_per_iter = 0.0;
    double accuracy = 0.0;
    for (std::size_t k = 0; k < seeds; ++k)
    {
      auto const &row = outcomes[g + k].row;
      mean.comp_ops_per_iter += row.comp_ops_per_iter;
      mean.comm_bits_per_dim += row.comm_bits_per_dim;
      mean.storage_bits_per_dim += row.storage_bits_per_dim;
      mean.recomputations_per_iter += row.recomputations_per_iter;
      accuracy += outcomes[g + k].accuracy.value_or(0.0);
      out.per_seed.push_back(row);
    }
    double const n = static_cast<double>(seeds);
    mean.comp_ops_per_iter /= n;
    mean.comm_bits_per_dim /= n;
    mean.storage_bits_per_dim /= n;
    mean.recomputations_per_iter /= n;
    out.costs.push_back(mean);
    if (jobs[g].scenario == Scenario::Base && outcomes[g].accuracy)
    {
      PrecisionRow p;
      p.validated  = true;
      p.batch_size = cfg.computation.batch_size;
      p.tolerance  = jobs[g].tolerance;
      p.accuracy   = accuracy / n;
      p.seeds      = seeds;
      out.precision.push_back(p);
    }
  }
  auto vanilla = vanilla_rows(cfg, policy);
  out.precision.insert(out.precision.end(), vanilla.begin(), vanilla.end());
  return out;
}

}  // namespace

SweepResult run_sweep(RunConfig const &cfg, std::vector<double> const &tolerances, ExecPolicy policy)
{
  return sweep_impl(cfg, cfg.sweep.scenarios, tolerances, policy);
}

std::vector<PrecisionRow> precision_vs_trust(RunConfig const &cfg, std::vector<double> const &tolerances,
                                             ExecPolicy policy)
{
  require(cfg.computation.kind == OpKind::MiniBatchSGDClassifier, Errc::InvalidArgument,
          "precision runs need the classifier computation");
  return sweep_impl(cfg, {Scenario::Base}, tolerances, policy).precision;
}

void write_text(std::string const &text, std::filesystem::path const &path)
{
  if (path.has_parent_path())
  {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), Errc::Io, "cannot write " + path.string());
  out << text;
  require(static_cast<bool>(out), Errc::Io, "write failed for " + path.string());
}

void write_costs_csv(std::vector<CostRow> const &rows, std::filesystem::path const &path)
{
  std::ostringstream out;
  out << "mode,scenario,tolerance,comp_ops_per_iter,comm_bits_per_dim,storage_bits_per_dim,recomputations_per_iter\n";
  for (auto const &r : rows)
  {
    out << to_string(r.mode) << ',' << to_string(r.scenario) << ',' << format_number(r.tolerance) << ','
        << format_number(r.comp_ops_per_iter) << ',' << format_number(r.comm_bits_per_dim) << ','
        << format_number(r.storage_bits_per_dim) << ',' << format_number(r.recomputations_per_iter) << '\n';
  }
  write_text(out.str(), path);
}

void write_precision_csv(std::vector<PrecisionRow> const &rows, std::filesystem::path const &path)
{
  std::ostringstream out;
  out << "kind,batch_size,tolerance,accuracy,seeds\n";
  for (auto const &r : rows)
  {
    // a vanilla baseline is the tolerance -> infinity limit
    out << (r.validated ? "validated" : "vanilla") << ',' << r.batch_size << ','
        << (r.tolerance ? format_number(*r.tolerance) : std::string("inf")) << ',' << format_number(r.accuracy)
        << ',' << r.seeds << '\n';
  }
  write_text(out.str(), path);
}

namespace {

void describe_config(std::ostringstream &out, RunConfig const &cfg, ResolvedRun const &r)
{
  auto const &c = cfg.computation;
  auto const &v = r.settings.validation;
  out << "computation: " << to_string(c.kind) << '\n';
  out << "dimension: " << r.op.dimension() << '\n';
  out << "lipschitz: " << format_number(r.lipschitz)
      << (r.lipschitz_estimated ? " (estimated, " + std::to_string(c.lipschitz_samples) + " pairs in radius " +
                                      format_number(c.lipschitz_radius) + ")"
                                : std::string(" (configured)"))
      << '\n';
  if (c.kind == OpKind::MiniBatchSGDClassifier)
  {
    out << "dataset: two gaussians, " << c.dataset.train_size << " train / " << c.dataset.test_size << " test, "
        << c.dataset.features << " features, separation " << format_number(c.dataset.class_separation)
        << ", outliers " << format_number(c.dataset.outlier_fraction) << " x "
        << format_number(c.dataset.outlier_scale) << '\n';
    out << "learning_rate: " << format_number(c.rate) << '\n';
    out << "batch_size: " << c.batch_size << '\n';
  }
  out << "iterations: " << cfg.iterations << '\n';
  out << "mode: " << to_string(v.mode) << '\n';
  out << "scenario: " << to_string(r.scenario) << '\n';
  if (v.delta_val.is_constant())
  {
    out << "tolerance_schedule: constant " << format_number(v.delta_val.scale()) << '\n';
  }
  else
  {
    out << "tolerance_schedule: delta_max / ln(t + 1), natural log, t >= 1, delta_max = "
        << format_number(v.delta_val.scale()) << '\n';
  }
  out << "delta_ver: " << format_number(v.delta_ver) << '\n';
  out << "epsilon: " << format_number(v.epsilon) << '\n';
  out << "delta_quant: " << format_number(v.delta_quant) << '\n';
  out << "state_bound: " << format_number(v.state_bound) << '\n';
  out << "frame_cap: " << v.frame_cap << '\n';
  out << "subsample_period: " << r.settings.subsample_period << '\n';
  out << "endorsers: " << r.settings.endorsers << '\n';
  out << "recompute_budget: " << r.settings.recompute_budget << '\n';
  out << "max_refinement_level: " << r.settings.max_refinement_level << '\n';
  out << "meta_bits: " << r.settings.meta_bits << '\n';
  out << "comp_bits_per_op: " << format_number(r.settings.comp_bits_per_op) << '\n';
}

std::string hex(Hash const &h)
{
  static char const digits[] = "0123456789abcdef";
  std::string       s;
  for (auto b : h)
  {
    s += digits[b >> 4];
    s += digits[b & 15];
  }
  return s;
}

}  // namespace

std::string run_summary(RunConfig const &cfg, ExperimentResult const &result)
{
  std::ostringstream out;
  auto const        &r   = result.resolved;
  auto const        &run = result.run;
  auto const        &l   = run.costs;
  out << "[config]\n";
  out << "seed: " << r.settings.seed << '\n';
  describe_config(out, cfg, r);

  out << "\n[run]\n";
  out << "frames: " << run.frames << '\n';
  out << "chain_blocks: " << run.chain.size() << '\n';
  out << "chain_tip: " << hex(run.chain.tip()) << '\n';
  out << "invalidations: " << run.invalidations << '\n';
  out << "refinements: " << run.refinements << '\n';
  out << "forced_accepts: " << run.forced_accepts << '\n';
  out << "client_recomputations: " << run.client_recomputations << '\n';
  out << "recomputations_per_iter: " << format_number(run.recomputations_per_iter()) << '\n';
  out << "dictionary_entries: " << run.dictionary_entries << '\n';
  out << "conflicts: " << run.conflicts.size() << '\n';
  if (run.halted_at)
  {
    out << "halted_at: " << *run.halted_at << '\n';
  }
  if (result.accuracy)
  {
    out << "test_accuracy: " << format_number(*result.accuracy) << '\n';
  }

  out << "\n[costs]\n";
  for (auto role : {Role::Client, Role::Endorser, Role::Orderer, Role::Verifier})
  {
    out << "evaluations_" << to_string(role) << ": " << l.evaluations(role) << '\n';
  }
  out << "codec_ops: " << l.codec_ops() << '\n';
  out << "comm_bits: " << l.comm_bits() << '\n';
  out << "comm_meta_bits: " << l.comm_meta_bits() << '\n';
  out << "committed_report_bits: " << l.committed_report_bits() << '\n';
  out << "retransmitted_bits: " << l.retransmitted_bits() << '\n';
  out << "refinement_bits: " << l.refinement_bits() << '\n';
  out << "storage_bits: " << l.storage_bits() << '\n';
  out << "storage_meta_bits: " << l.storage_meta_bits() << '\n';
  out << "messages: " << l.messages() << '\n';

  CostComparison const cmp = measured_vs_predicted(l, mode_params(r), run.iterations);
  out << "\n[cost model, per frame-cap window]\n";
  out << "predicted_comm: " << format_number(cmp.predicted_comm) << '\n';
  out << "measured_comm: " << format_number(cmp.measured_comm) << '\n';
  out << "comm_ratio: " << format_number(cmp.comm_ratio) << '\n';
  out << "predicted_storage: " << format_number(cmp.predicted_storage) << '\n';
  out << "measured_storage: " << format_number(cmp.measured_storage) << '\n';
  out << "storage_ratio: " << format_number(cmp.storage_ratio) << '\n';
  out << "comm_within_envelope: " << (cmp.within_envelope ? "yes" : "no") << '\n';

  if (!r.op.stochastic())
  {
    VerificationReport const rep = verify_computation(run.chain, r.op, verification_settings(r));
    double const bound = verification_bound(r.lipschitz, rep.max_span == 0 ? 1 : rep.max_span,
                                            r.settings.validation.epsilon);
    out << "\n[verification]\n";
    out << "result: " << (rep.passed() ? "PASS" : "FAIL") << '\n';
    out << "audits: " << rep.audits.size() << '\n';
    out << "max_deviation: " << format_number(rep.max_deviation) << '\n';
    out << "deviation_bound: " << format_number(bound) << '\n';
    out << "flagged: " << rep.flagged << '\n';
  }
  return out.str();
}

std::string sweep_summary(RunConfig const &cfg, SweepResult const &result, std::vector<double> const &tolerances)
{
  std::ostringstream out;
  out << "[sweep]\n";
  out << "seeds: " << cfg.sweep.seeds << " (from " << cfg.seed << ")\n";
  out << "tolerances:";
  for (double t : tolerances)
  {
    out << ' ' << format_number(t);
  }
  out << '\n';
  out << "scenarios:";
  for (auto s : cfg.sweep.scenarios)
  {
    out << ' ' << to_string(s);
  }
  out << '\n';
  out << "reference_delta_max: " << format_number(cfg.scenario.reference_delta_max) << '\n';
  out << "runs: " << result.per_seed.size() << '\n';

  // per-scenario settings at the reference tolerance
  for (auto s : cfg.sweep.scenarios)
  {
    out << "\n[" << to_string(s) << "]\n";
    describe_config(out, cfg, resolve_run(cfg, s, cfg.scenario.reference_delta_max, cfg.seed));
  }
  return out.str();
}

}  // namespace vtrust
