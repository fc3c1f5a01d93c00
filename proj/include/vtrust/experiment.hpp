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

#include "vtrust/session.hpp"

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace vtrust {

enum class Scenario
{
  Base,
  CoarseCompression,
  LargeFrames,
  Custom,
};

char const *to_string(Scenario scenario);
Scenario    parse_scenario(std::string const &text);

enum class SubsampleRule
{
  Theorem,  // largest K with (L^K + 1) K eps <= Delta_ver
  Ratio,    // floor(Delta_ver / Delta_val)
  Fixed,
};

struct ComputationConfig
{
  OpKind kind = OpKind::MiniBatchSGDClassifier;
  /// Singular values (affine) or eigenvalues of Q (quadratic); sets d.
  std::vector<double> spectrum;
  std::vector<double> offset;
  std::uint64_t       rotation_seed = 1;
  double              noise_sigma   = 0.0;
  double              rate          = 0.1;
  std::size_t         batch_size    = 10;
  double              l2            = 0.0;
  DatasetParams       dataset;
  /// Estimated with estimate_lipschitz when absent.
  std::optional<double> lipschitz;
  std::size_t           lipschitz_samples = 2000;
  double                lipschitz_radius  = 1.0;
  /// Zeros when empty.
  std::vector<double> initial_state;
};

struct ValidationSection
{
  bool                  logarithmic = true;
  double                delta_max   = 1.0;
  std::optional<double> delta_ver;
  double                delta_quant      = 1.0;
  double                state_bound      = 1.0e6;
  bool                  strict_soundness = false;
  SubsampleRule         subsample        = SubsampleRule::Theorem;
  std::uint64_t         subsample_period = 1;
  std::uint64_t         k_cap            = 64;
  std::uint64_t         recompute_budget = 20;
  unsigned              max_refinement_level = 2;
};

struct ScenarioConfig
{
  Scenario kind = Scenario::Base;
  /// Scenario eps is a ratio of this Delta_max, so it stays fixed while a
  /// sweep varies the tolerance.
  double reference_delta_max  = 1.0;
  double epsilon_ratio        = 0.1;
  double coarse_epsilon_ratio = 2.0;
  double frame_fraction       = 0.1;
  double large_frame_fraction = 0.2;
  /// Custom scenario only.
  double        epsilon   = 0.01;
  std::uint64_t frame_cap = 10;
};

struct RandomizedSection
{
  std::size_t           endorsers = 5;
  std::size_t           pool      = 0;
  double                rho       = 0.05;
  std::optional<double> margin;
  std::optional<double> lambda;
};

struct CostsSection
{
  std::uint64_t meta_bits        = kDefaultMetaBits;
  double        comp_bits_per_op = 64.0;
};

struct SweepSection
{
  std::vector<double>      tolerances;
  std::size_t              seeds = 10;
  std::vector<Scenario>    scenarios{Scenario::Base, Scenario::CoarseCompression, Scenario::LargeFrames};
  std::vector<std::size_t> vanilla_batches{10, 30, 50};
};

struct OutputSection
{
  std::filesystem::path dir        = "out";
  bool                  keep_trace = false;
};

struct RunConfig
{
  ComputationConfig computation;
  std::uint64_t     iterations = 300;
  std::uint64_t     seed       = 0;
  Mode              mode       = Mode::Batch;
  ValidationSection validation;
  ScenarioConfig    scenario;
  RandomizedSection randomized;
  CostsSection      costs;
  SweepSection      sweep;
  OutputSection     output;

  /// Throws InvalidArgument naming the offending key.
  void validate() const;
};

RunConfig parse_config(std::string const &yaml_text);
RunConfig load_config(std::filesystem::path const &path);

/// Everything a single run needs, resolved from the config before any
/// protocol work starts.
struct ResolvedRun
{
  AtomicOpSpec                   op;
  StateVector                    x0;
  ProtocolSettings               settings;
  std::shared_ptr<Dataset const> data;
  double                         lipschitz           = 1.0;
  bool                           lipschitz_estimated = false;
  Scenario                       scenario            = Scenario::Base;
  double                         tolerance           = 1.0;
};

AtomicOpSpec build_op(ComputationConfig const &cfg, std::uint64_t seed, std::shared_ptr<Dataset const> *data_out = nullptr);
StateVector  initial_state(ComputationConfig const &cfg, std::size_t dimension);

/// Throws Infeasible (no K, strict soundness) before the protocol runs.
ResolvedRun resolve_run(RunConfig const &cfg, Scenario scenario, double tolerance, std::uint64_t seed);

VerificationSettings verification_settings(ResolvedRun const &resolved);
ModeParams           mode_params(ResolvedRun const &resolved);

struct ExperimentResult
{
  ResolvedRun           resolved;
  ProtocolRun           run;
  std::optional<double> accuracy;
};

ExperimentResult run_experiment(RunConfig const &cfg, Scenario scenario, double tolerance, std::uint64_t seed);

struct CostRow
{
  Mode     mode      = Mode::Batch;
  Scenario scenario  = Scenario::Base;
  double   tolerance = 0.0;
  double   comp_ops_per_iter       = 0.0;
  double   comm_bits_per_dim       = 0.0;
  double   storage_bits_per_dim    = 0.0;
  double   recomputations_per_iter = 0.0;
};

/// Per-iteration and per-dimension figures straight from the run's ledger.
CostRow cost_row(ExperimentResult const &result);

struct PrecisionRow
{
  bool        validated  = true;
  std::size_t batch_size = 10;
  /// Delta_max of the validated run; absent for vanilla baselines.
  std::optional<double> tolerance;
  double                accuracy = 0.0;
  std::size_t           seeds    = 1;
};

/// Plain SGD with the client's first draws, no validation.
StateVector vanilla_sgd(AtomicOpSpec const &op, StateVector x0, std::uint64_t iterations, std::uint64_t seed);

struct SweepResult
{
  /// Seed-averaged, ordered by scenario then tolerance.
  std::vector<CostRow>      costs;
  std::vector<PrecisionRow> precision;
  /// Every individual run, in (scenario, tolerance, seed) order.
  std::vector<CostRow> per_seed;
};

/// Scenarios x tolerances x seeds (cfg.seed, cfg.seed + 1, ...). Runs are
/// independent; the parallel policy spreads them over threads and the
/// result matches the serial loop exactly.
SweepResult run_sweep(RunConfig const &cfg, std::vector<double> const &tolerances,
                      ExecPolicy policy = ExecPolicy::Parallel);

/// Validated accuracy per tolerance (Base scenario, configured batch) and
/// vanilla baselines per batch size, averaged over seeds.
std::vector<PrecisionRow> precision_vs_trust(RunConfig const &cfg, std::vector<double> const &tolerances,
                                             ExecPolicy policy = ExecPolicy::Parallel);

void write_costs_csv(std::vector<CostRow> const &rows, std::filesystem::path const &path);
void write_precision_csv(std::vector<PrecisionRow> const &rows, std::filesystem::path const &path);
std::string run_summary(RunConfig const &cfg, ExperimentResult const &result);
std::string sweep_summary(RunConfig const &cfg, SweepResult const &result, std::vector<double> const &tolerances);
void        write_text(std::string const &text, std::filesystem::path const &path);

/// Shortest round-trip decimal form, locale independent.
std::string format_number(double value);

}  // namespace vtrust
