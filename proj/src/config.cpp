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

#include "vtrust/error.hpp"
#include "vtrust/experiment.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace vtrust {

char const *to_string(Scenario scenario)
{
  switch (scenario)
  {
  case Scenario::Base:
    return "base";
  case Scenario::CoarseCompression:
    return "coarse";
  case Scenario::LargeFrames:
    return "large_frames";
  case Scenario::Custom:
    return "custom";
  }
  return "unknown";
}

Scenario parse_scenario(std::string const &text)
{
  if (text == "base")
  {
    return Scenario::Base;
  }
  if (text == "coarse" || text == "coarse_compression")
  {
    return Scenario::CoarseCompression;
  }
  if (text == "large_frames" || text == "large")
  {
    return Scenario::LargeFrames;
  }
  if (text == "custom")
  {
    return Scenario::Custom;
  }
  throw Error(Errc::InvalidArgument, "unknown scenario '" + text + "'");
}

namespace {

// Rejects keys the section does not know, so a typo cannot silently fall
// back to a default.
void check_keys(YAML::Node const &node, std::string const &section, std::set<std::string> const &known)
{
  if (!node)
  {
    return;
  }
  require(node.IsMap(), Errc::InvalidArgument, "section '" + section + "' must be a mapping");
  for (auto const &kv : node)
  {
    auto const key = kv.first.as<std::string>();
    require(known.count(key) == 1, Errc::InvalidArgument,
            "unknown key '" + key + "' in " + (section.empty() ? std::string("top level") : section));
  }
}

template <typename T>
void read(YAML::Node const &node, char const *key, T &out)
{
  if (node && node[key])
  {
    try
    {
      out = node[key].as<T>();
    }
    catch (YAML::Exception const &)
    {
      throw Error(Errc::InvalidArgument, std::string("bad value for '") + key + "'");
    }
  }
}

template <typename T>
void read(YAML::Node const &node, char const *key, std::optional<T> &out)
{
  if (node && node[key] && !node[key].IsNull())
  {
    T value{};
    read(node, key, value);
    out = value;
  }
}

OpKind parse_kind(std::string const &text)
{
  if (text == "affine")
  {
    return OpKind::AffineContraction;
  }
  if (text == "quadratic")
  {
    return OpKind::QuadraticGradientDescent;
  }
  if (text == "classifier")
  {
    return OpKind::MiniBatchSGDClassifier;
  }
  throw Error(Errc::InvalidArgument, "unknown computation kind '" + text + "'");
}

void parse_computation(YAML::Node const &node, ComputationConfig &c)
{
  check_keys(node, "computation",
             {"kind", "spectrum", "offset", "rotation_seed", "noise_sigma", "rate", "batch_size", "l2", "lipschitz",
              "lipschitz_samples", "lipschitz_radius", "initial_state", "dataset"});
  if (!node)
  {
    return;
  }
  std::string kind = "classifier";
  read(node, "kind", kind);
  c.kind = parse_kind(kind);
  read(node, "spectrum", c.spectrum);
  read(node, "offset", c.offset);
  read(node, "rotation_seed", c.rotation_seed);
  read(node, "noise_sigma", c.noise_sigma);
  read(node, "rate", c.rate);
  read(node, "batch_size", c.batch_size);
  read(node, "l2", c.l2);
  read(node, "lipschitz", c.lipschitz);
  read(node, "lipschitz_samples", c.lipschitz_samples);
  read(node, "lipschitz_radius", c.lipschitz_radius);
  read(node, "initial_state", c.initial_state);

  YAML::Node const data = node["dataset"];
  check_keys(data, "computation.dataset",
             {"features", "train_size", "test_size", "class_separation", "outlier_fraction", "outlier_scale"});
  read(data, "features", c.dataset.features);
  read(data, "train_size", c.dataset.train_size);
  read(data, "test_size", c.dataset.test_size);
  read(data, "class_separation", c.dataset.class_separation);
  read(data, "outlier_fraction", c.dataset.outlier_fraction);
  read(data, "outlier_scale", c.dataset.outlier_scale);
}

void parse_validation(YAML::Node const &node, ValidationSection &v)
{
  check_keys(node, "validation",
             {"schedule", "delta_max", "delta_ver", "delta_quant", "state_bound", "strict_soundness", "subsample",
              "k_cap", "recompute_budget", "max_refinement_level"});
  if (!node)
  {
    return;
  }
  std::string schedule = v.logarithmic ? "logarithmic" : "constant";
  read(node, "schedule", schedule);
  require(schedule == "logarithmic" || schedule == "constant", Errc::InvalidArgument,
          "validation.schedule must be 'logarithmic' or 'constant'");
  v.logarithmic = schedule == "logarithmic";
  read(node, "delta_max", v.delta_max);
  read(node, "delta_ver", v.delta_ver);
  read(node, "delta_quant", v.delta_quant);
  read(node, "state_bound", v.state_bound);
  read(node, "strict_soundness", v.strict_soundness);
  read(node, "k_cap", v.k_cap);
  read(node, "recompute_budget", v.recompute_budget);
  read(node, "max_refinement_level", v.max_refinement_level);
  if (node["subsample"])
  {
    auto const text = node["subsample"].as<std::string>();
    if (text == "theorem")
    {
      v.subsample = SubsampleRule::Theorem;
    }
    else if (text == "ratio")
    {
      v.subsample = SubsampleRule::Ratio;
    }
    else
    {
      v.subsample = SubsampleRule::Fixed;
      read(node, "subsample", v.subsample_period);
    }
  }
}

void parse_scenario_section(YAML::Node const &node, ScenarioConfig &s)
{
  check_keys(node, "scenario",
             {"kind", "reference_delta_max", "epsilon_ratio", "coarse_epsilon_ratio", "frame_fraction",
              "large_frame_fraction", "epsilon", "frame_cap"});
  if (!node)
  {
    return;
  }
  std::string kind = to_string(s.kind);
  read(node, "kind", kind);
  s.kind = parse_scenario(kind);
  read(node, "reference_delta_max", s.reference_delta_max);
  read(node, "epsilon_ratio", s.epsilon_ratio);
  read(node, "coarse_epsilon_ratio", s.coarse_epsilon_ratio);
  read(node, "frame_fraction", s.frame_fraction);
  read(node, "large_frame_fraction", s.large_frame_fraction);
  read(node, "epsilon", s.epsilon);
  read(node, "frame_cap", s.frame_cap);
}

}  // namespace

RunConfig parse_config(std::string const &yaml_text)
{
  YAML::Node root;
  try
  {
    root = YAML::Load(yaml_text);
  }
  catch (YAML::Exception const &e)
  {
    throw Error(Errc::InvalidArgument, std::string("config is not valid YAML: ") + e.what());
  }
  RunConfig cfg;
  if (!root || root.IsNull())
  {
    cfg.validate();
    return cfg;
  }
  check_keys(root, "",
             {"seed", "iterations", "mode", "computation", "validation", "scenario", "randomized", "costs", "sweep",
              "output"});
  read(root, "seed", cfg.seed);
  read(root, "iterations", cfg.iterations);
  if (root["mode"])
  {
    cfg.mode = parse_mode(root["mode"].as<std::string>());
  }
  parse_computation(root["computation"], cfg.computation);
  parse_validation(root["validation"], cfg.validation);
  parse_scenario_section(root["scenario"], cfg.scenario);

  YAML::Node const r = root["randomized"];
  check_keys(r, "randomized", {"endorsers", "pool", "rho", "margin", "lambda"});
  read(r, "endorsers", cfg.randomized.endorsers);
  read(r, "pool", cfg.randomized.pool);
  read(r, "rho", cfg.randomized.rho);
  read(r, "margin", cfg.randomized.margin);
  read(r, "lambda", cfg.randomized.lambda);

  YAML::Node const c = root["costs"];
  check_keys(c, "costs", {"meta_bits", "comp_bits_per_op"});
  read(c, "meta_bits", cfg.costs.meta_bits);
  read(c, "comp_bits_per_op", cfg.costs.comp_bits_per_op);

  YAML::Node const s = root["sweep"];
  check_keys(s, "sweep", {"tolerances", "seeds", "scenarios", "vanilla_batches"});
  read(s, "tolerances", cfg.sweep.tolerances);
  read(s, "seeds", cfg.sweep.seeds);
  read(s, "vanilla_batches", cfg.sweep.vanilla_batches);
  if (s && s["scenarios"])
  {
    cfg.sweep.scenarios.clear();
    for (auto const &item : s["scenarios"])
    {
      cfg.sweep.scenarios.push_back(parse_scenario(item.as<std::string>()));
    }
  }

  YAML::Node const o = root["output"];
  check_keys(o, "output", {"dir", "keep_trace"});
  std::string dir = cfg.output.dir.string();
  read(o, "dir", dir);
  cfg.output.dir = dir;
  read(o, "keep_trace", cfg.output.keep_trace);

  cfg.validate();
  return cfg;
}

RunConfig load_config(std::filesystem::path const &path)
{
  std::ifstream in(path);
  require(static_cast<bool>(in), Errc::Io, "cannot open config " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

void RunConfig::validate() const
{
  auto const &c = computation;
  require(iterations >= 1, Errc::InvalidArgument, "iterations must be positive");
  if (c.kind == OpKind::MiniBatchSGDClassifier)
  {
    require(c.batch_size >= 1 && c.batch_size <= c.dataset.train_size, Errc::InvalidArgument,
            "computation.batch_size must lie in [1, train_size]");
    require(c.dataset.features >= 1, Errc::InvalidArgument, "computation.dataset.features must be positive");
  }
  else
  {
    require(!c.spectrum.empty(), Errc::InvalidArgument, "computation.spectrum is required for affine and quadratic");
    require(c.offset.empty() || c.offset.size() == c.spectrum.size(), Errc::InvalidArgument,
            "computation.offset must match the spectrum length");
  }
  require(c.rate > 0.0, Errc::InvalidArgument, "computation.rate must be positive");
  require(!c.lipschitz || *c.lipschitz >= 0.0, Errc::InvalidArgument, "computation.lipschitz must be >= 0");
  require(c.lipschitz_samples >= 1 && c.lipschitz_radius > 0.0, Errc::InvalidArgument,
          "Lipschitz estimation needs samples >= 1 and radius > 0");

  auto const &v = validation;
  require(v.delta_max > 0.0 && std::isfinite(v.delta_max), Errc::InvalidArgument,
          "validation.delta_max must be positive");
  require(!v.delta_ver || *v.delta_ver > 0.0, Errc::InvalidArgument, "validation.delta_ver must be positive");
  require(v.delta_quant > 0.0, Errc::InvalidArgument, "validation.delta_quant must be positive");
  require(v.k_cap >= 1, Errc::InvalidArgument, "validation.k_cap must be positive");
  require(v.subsample != SubsampleRule::Fixed || v.subsample_period >= 1, Errc::InvalidArgument,
          "validation.subsample must be theorem, ratio or a positive integer");

  auto const &s = scenario;
  require(s.reference_delta_max > 0.0, Errc::InvalidArgument, "scenario.reference_delta_max must be positive");
  require(s.epsilon_ratio > 0.0 && s.epsilon_ratio <= 1.0, Errc::InvalidArgument,
          "scenario.epsilon_ratio must lie in (0, 1] (Base needs eps <= Delta_max)");
  require(s.coarse_epsilon_ratio >= 1.0, Errc::InvalidArgument,
          "scenario.coarse_epsilon_ratio must be >= 1 (coarse needs eps >= Delta_max)");
  require(s.frame_fraction > 0.0 && s.frame_fraction <= 1.0 && s.large_frame_fraction > 0.0 &&
              s.large_frame_fraction <= 1.0,
          Errc::InvalidArgument, "scenario frame fractions must lie in (0, 1]");
  require(s.epsilon > 0.0 && s.frame_cap >= 1, Errc::InvalidArgument,
          "scenario.epsilon and scenario.frame_cap must be positive");

  require(randomized.endorsers >= 1, Errc::InvalidArgument, "randomized.endorsers must be >= 1");
  require(randomized.pool == 0 || randomized.pool >= randomized.endorsers, Errc::InvalidArgument,
          "randomized.pool must be 0 or >= endorsers");
  require(randomized.rho > 0.0 && randomized.rho < 1.0, Errc::InvalidArgument, "randomized.rho must lie in (0, 1)");
  require(costs.comp_bits_per_op >= 0.0, Errc::InvalidArgument, "costs.comp_bits_per_op must be >= 0");

  require(sweep.seeds >= 1, Errc::InvalidArgument, "sweep.seeds must be positive");
  for (double tol : sweep.tolerances)
  {
    require(tol > 0.0 && std::isfinite(tol), Errc::InvalidArgument, "sweep tolerances must be positive");
  }
  for (auto b : sweep.vanilla_batches)
  {
    require(b >= 1, Errc::InvalidArgument, "sweep.vanilla_batches entries must be positive");
  }
}

}  // namespace vtrust
