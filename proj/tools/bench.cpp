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

// Times each OpenMP kernel against its serial reference and checks the two
// produce the same result. Usage: vtrust_bench [repeats]

#include "vtrust/experiment.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>

using namespace vtrust;

namespace {

double time_best(int repeats, std::function<void()> const &fn)
{
  double best = 1e300;
  for (int i = 0; i < repeats; ++i)
  {
    auto const start = std::chrono::steady_clock::now();
    fn();
    best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
  }
  return best;
}

void report(char const *name, double serial, double parallel, bool same)
{
  std::printf("%-20s serial %9.4f s  parallel %9.4f s  speedup %5.2fx  %s\n", name, serial, parallel,
              serial / parallel, same ? "identical" : "MISMATCH");
}

}  // namespace

int main(int argc, char **argv)
{
  int const repeats = argc > 1 ? std::atoi(argv[1]) : 3;
  std::printf("threads: %d, best of %d\n", worker_threads(), repeats);
  bool all_same = true;

  {
    auto const op = AtomicOpSpec::affine_from_spectrum({1.5, 0.7, 0.2, 0.1, 0.05, 0.01, 0.3, 0.9}, StateVector(8, 0.3), 3);
    double a = 0.0, b = 0.0;
    double const ts = time_best(repeats, [&] { a = estimate_lipschitz(op, 200000, 2.0, 11, ExecPolicy::Serial); });
    double const tp = time_best(repeats, [&] { b = estimate_lipschitz(op, 200000, 2.0, 11, ExecPolicy::Parallel); });
    report("estimate_lipschitz", ts, tp, a == b);
    all_same = all_same && a == b;
  }

  {
    auto const       op = AtomicOpSpec::affine_from_spectrum(std::vector<double>(32, 1.0), StateVector(32), 4);
    ValidationConfig cfg;
    cfg.delta_val   = ToleranceSchedule::constant(0.05);
    cfg.delta_ver   = 0.05;
    cfg.epsilon     = 0.04;
    cfg.delta_quant = 40.0;
    cfg.frame_cap   = 16;
    cfg.lipschitz   = 1.0;
    auto const run  = client_run_frames(op, StateVector(32, 3.0), 20000, cfg);
    std::vector<Endorsement> a, b;
    double const ts = time_best(repeats, [&] { a = endorse_frames(run, op, cfg, EndorserSetup{}, ExecPolicy::Serial); });
    double const tp = time_best(repeats, [&] { b = endorse_frames(run, op, cfg, EndorserSetup{}, ExecPolicy::Parallel); });
    bool same = a.size() == b.size();
    for (std::size_t i = 0; same && i < a.size(); ++i)
    {
      same = a[i].valid == b[i].valid && a[i].deviations == b[i].deviations;
    }
    report("endorse_frames", ts, tp, same);
    all_same = all_same && same;
  }

  {
    auto const cfg = load_config(std::string(VTRUST_SOURCE_DIR) + "/configs/classifier.yaml");
    SweepResult a, b;
    double const ts = time_best(1, [&] { a = run_sweep(cfg, cfg.sweep.tolerances, ExecPolicy::Serial); });
    double const tp = time_best(1, [&] { b = run_sweep(cfg, cfg.sweep.tolerances, ExecPolicy::Parallel); });
    bool same = a.per_seed.size() == b.per_seed.size();
    for (std::size_t i = 0; same && i < a.per_seed.size(); ++i)
    {
      same = a.per_seed[i].comm_bits_per_dim == b.per_seed[i].comm_bits_per_dim &&
             a.per_seed[i].recomputations_per_iter == b.per_seed[i].recomputations_per_iter;
    }
    report("run_sweep", ts, tp, same);
    all_same = all_same && same;
  }
  return all_same ? 0 : 1;
}
