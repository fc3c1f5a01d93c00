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

// vtrust: run a protocol experiment, sweep tolerances, or verify a chain file.

#include "vtrust/error.hpp"
#include "vtrust/experiment.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <sstream>

using namespace vtrust;

namespace {

std::vector<double> parse_tolerances(std::string const &text)
{
  std::vector<double> out;
  std::stringstream   in(text);
  std::string         item;
  while (std::getline(in, item, ','))
  {
    try
    {
      std::size_t used  = 0;
      double      value = std::stod(item, &used);
      require(used == item.size(), Errc::InvalidArgument, "bad tolerance '" + item + "'");
      out.push_back(value);
    }
    catch (std::logic_error const &)
    {
      throw Error(Errc::InvalidArgument, "bad tolerance '" + item + "'");
    }
  }
  return out;
}

int cmd_run(std::string const &config_path, std::string const &out_dir, std::string const &mode,
            std::optional<std::uint64_t> seed)
{
  RunConfig cfg = load_config(config_path);
  if (!mode.empty())
  {
    cfg.mode = parse_mode(mode);
  }
  if (seed)
  {
    cfg.seed = *seed;
  }
  std::filesystem::path const dir(out_dir);
  std::filesystem::create_directories(dir);
  auto const result = run_experiment(cfg, cfg.scenario.kind, cfg.validation.delta_max, cfg.seed);

  write_chain_file(result.run.chain, dir / "chain.bin");
  write_costs_csv({cost_row(result)}, dir / "costs.csv");

  std::vector<PrecisionRow> precision;
  if (result.accuracy)
  {
    PrecisionRow validated;
    validated.batch_size = cfg.computation.batch_size;
    validated.tolerance  = cfg.validation.delta_max;
    validated.accuracy   = *result.accuracy;
    precision.push_back(validated);
    for (auto batch : cfg.sweep.vanilla_batches)
    {
      ComputationConfig c = cfg.computation;
      c.batch_size        = batch;
      std::shared_ptr<Dataset const> data;
      AtomicOpSpec const             op = build_op(c, cfg.seed, &data);
      PrecisionRow                   row;
      row.validated  = false;
      row.batch_size = batch;
      row.accuracy = test_accuracy(*data, vanilla_sgd(op, initial_state(c, op.dimension()), cfg.iterations, cfg.seed));
      precision.push_back(row);
    }
  }
  write_precision_csv(precision, dir / "precision.csv");
  std::string const summary = run_summary(cfg, result);
  write_text(summary, dir / "summary.txt");
  std::cout << summary;
  return 0;
}

int cmd_sweep(std::string const &config_path, std::string const &out_dir, std::string const &tolerances)
{
  RunConfig const     cfg  = load_config(config_path);
  std::vector<double> grid = tolerances.empty() ? cfg.sweep.tolerances : parse_tolerances(tolerances);
  require(!grid.empty(), Errc::InvalidArgument, "no tolerances given (--tolerances or sweep.tolerances)");
  std::filesystem::path const dir(out_dir);

  SweepResult const result = run_sweep(cfg, grid);
  write_costs_csv(result.costs, dir / "costs.csv");
  write_precision_csv(result.precision, dir / "precision.csv");
  write_text(sweep_summary(cfg, result, grid), dir / "summary.txt");
  for (auto const &row : result.costs)
  {
    std::cout << to_string(row.scenario) << " tol=" << format_number(row.tolerance)
              << " recomputations/iter=" << format_number(row.recomputations_per_iter)
              << " comm bits/dim=" << format_number(row.comm_bits_per_dim) << '\n';
  }
  return 0;
}

int cmd_verify(std::string const &chain_path, std::string const &config_path)
{
  RunConfig const cfg = load_config(config_path);
  AuditChain      chain;
  try
  {
    chain = read_chain_file(chain_path);
  }
  catch (Error const &e)
  {
    if (e.code() != Errc::Decode)
    {
      throw;
    }
    std::cout << "integrity: FAIL (corrupt file, first bad height " << e.at().value_or(0) << ")\n";
    return 1;
  }
  IntegrityReport const integrity = verify_chain_integrity(chain);
  if (!integrity.ok)
  {
    std::cout << "integrity: FAIL (first bad height " << integrity.first_bad_height.value_or(0) << ")\n";
    return 1;
  }
  std::cout << "integrity: ok (" << chain.size() << " blocks)\n";

  ResolvedRun const resolved = resolve_run(cfg, cfg.scenario.kind, cfg.validation.delta_max, cfg.seed);
  if (resolved.op.stochastic())
  {
    std::cout << "computation: stochastic, audits are not replayable; integrity only\n";
    std::cout << "result: PASS\n";
    return 0;
  }
  VerificationReport const rep = verify_computation(chain, resolved.op, verification_settings(resolved));
  double const bound = verification_bound(resolved.lipschitz, std::max<std::uint64_t>(1, rep.max_span),
                                          resolved.settings.validation.epsilon);
  std::cout << "audits: " << rep.audits.size() << '\n';
  std::cout << "max_deviation: " << format_number(rep.max_deviation) << '\n';
  std::cout << "deviation_bound: " << format_number(bound) << '\n';
  std::cout << "delta_ver: " << format_number(resolved.settings.validation.delta_ver) << '\n';
  std::cout << "flagged: " << rep.flagged << '\n';
  for (auto const &a : rep.audits)
  {
    if (a.flagged)
    {
      std::cout << "  flagged audit at height " << a.height << ", t " << a.t_start << ".." << a.t_end
                << ", deviation " << format_number(a.deviation) << '\n';
    }
  }
  std::cout << "result: " << (rep.passed() ? "PASS" : "FAIL") << '\n';
  return rep.passed() ? 0 : 1;
}

}  // namespace

int main(int argc, char **argv)
{
  CLI::App app{"Trusted iterative computation: protocol runs, sweeps and chain verification"};
  app.require_subcommand(1);

  std::string                  config, out, mode, chain, tolerances;
  std::optional<std::uint64_t> seed;

  auto *run = app.add_subcommand("run", "run one experiment and write chain.bin, costs.csv, precision.csv, summary.txt");
  run->add_option("--config", config, "run configuration (YAML)")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out, "output directory")->required();
  run->add_option("--mode", mode, "transaction, streaming or batch")
      ->check(CLI::IsMember({"transaction", "streaming", "batch"}));
  run->add_option("--seed", seed, "override the config seed");

  auto *sweep = app.add_subcommand("sweep", "tolerance sweep over scenarios and seeds");
  sweep->add_option("--config", config, "run configuration (YAML)")->required()->check(CLI::ExistingFile);
  sweep->add_option("--tolerances", tolerances, "comma-separated Delta_max values");
  sweep->add_option("--out", out, "output directory")->required();

  auto *verify = app.add_subcommand("verify", "check chain integrity and replay its audits");
  verify->add_option("--chain", chain, "chain file")->required()->check(CLI::ExistingFile);
  verify->add_option("--config", config, "configuration the chain was produced with")
      ->required()
      ->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try
  {
    if (*run)
    {
      return cmd_run(config, out, mode, seed);
    }
    if (*sweep)
    {
      return cmd_sweep(config, out, tolerances);
    }
    return cmd_verify(chain, config);
  }
  catch (Error const &e)
  {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  catch (std::exception const &e)
  {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
