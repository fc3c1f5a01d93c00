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

#include "vtrust/parallel.hpp"
#include "vtrust/rng.hpp"
#include "vtrust/state.hpp"

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <variant>
#include <vector>

namespace vtrust {

/// Row-major dense matrix; only what the builtin computations need.
struct DenseMatrix
{
  std::size_t         rows = 0;
  std::size_t         cols = 0;
  std::vector<double> data;

  DenseMatrix() = default;
  DenseMatrix(std::size_t r, std::size_t c, double fill = 0.0);

  static DenseMatrix identity(std::size_t n);
  static DenseMatrix diagonal(std::span<double const> diag);
  /// Haar-distributed orthogonal matrix (QR of a Gaussian matrix, sign-fixed).
  static DenseMatrix random_orthogonal(std::size_t n, std::uint64_t seed);

  double &operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double  operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  StateVector apply(StateVector const &x) const;
  DenseMatrix transposed() const;
};

DenseMatrix operator*(DenseMatrix const &a, DenseMatrix const &b);

/// Largest singular value by power iteration on A^T A.
double spectral_norm(DenseMatrix const &a, std::size_t max_iterations = 1000, double tolerance = 1e-13);

/// Seeded two-Gaussian binary classification data. Training rows may include
/// label-flipped, scaled outliers; the test split never does.
struct Dataset
{
  std::size_t         features = 0;
  std::vector<double> train_x;
  std::vector<int>    train_y;
  std::vector<double> test_x;
  std::vector<int>    test_y;

  std::size_t train_size() const { return train_y.size(); }
  std::size_t test_size() const { return test_y.size(); }
};

struct DatasetParams
{
  std::size_t features         = 20;
  std::size_t train_size       = 2000;
  std::size_t test_size        = 500;
  double      class_separation = 1.0;
  double      outlier_fraction = 0.0;
  double      outlier_scale    = 1.0;
};

Dataset make_two_gaussians(DatasetParams const &params, std::uint64_t seed);

/// Fraction of test rows classified correctly by logistic weights (bias last).
double test_accuracy(Dataset const &data, StateVector const &weights);

enum class OpKind
{
  AffineContraction,
  QuadraticGradientDescent,
  MiniBatchSGDClassifier,
};

char const *to_string(OpKind kind);

/// x -> A x + b (+ theta when noise_sigma > 0, theta ~ N(0, sigma^2 I)).
struct AffineParams
{
  DenseMatrix a;
  StateVector offset;
  double      noise_sigma = 0.0;
};

/// Gradient descent on 0.5 x^T Q x: x -> x - rate * Q x.
struct QuadraticParams
{
  DenseMatrix q;
  double      rate = 0.1;
};

/// One mini-batch SGD step of L2-regularised logistic regression. theta
/// carries the batch row indices.
struct ClassifierParams
{
  std::shared_ptr<Dataset const> data;
  std::size_t                    batch_size = 10;
  double                         rate       = 0.1;
  double                         l2         = 0.0;
};

/// External randomness for one evaluation, regenerable from its key.
struct RandomDraw
{
  std::vector<double> values;
  DrawKey             key;
};

class AtomicOpSpec
{
public:
  using Params = std::variant<AffineParams, QuadraticParams, ClassifierParams>;

  static AtomicOpSpec affine(DenseMatrix a, StateVector offset, std::optional<double> lipschitz,
                             double noise_sigma = 0.0);
  /// A = U diag(singular_values), U Haar-orthogonal, so L = max |sigma_i| exactly.
  static AtomicOpSpec affine_from_spectrum(std::vector<double> const &singular_values, StateVector offset,
                                           std::uint64_t rotation_seed, double noise_sigma = 0.0);
  static AtomicOpSpec quadratic(DenseMatrix q, double rate);
  /// Q = U diag(eigenvalues) U^T, so L = max |1 - rate * lambda_i| exactly.
  static AtomicOpSpec quadratic_from_spectrum(std::vector<double> const &eigenvalues, double rate,
                                              std::uint64_t rotation_seed);
  static AtomicOpSpec classifier(std::shared_ptr<Dataset const> data, std::size_t batch_size, double rate,
                                 double l2 = 0.0);

  OpKind      kind() const noexcept;
  std::size_t dimension() const noexcept { return dimension_; }
  /// Length of theta; zero for deterministic ops.
  std::size_t draw_dimension() const noexcept;
  bool        stochastic() const noexcept { return draw_dimension() > 0; }

  std::optional<double> lipschitz() const noexcept { return lipschitz_; }
  void                  set_lipschitz(double value);
  /// Throws InvalidArgument when no constant has been set or estimated yet.
  double required_lipschitz() const;

  Params const &params() const noexcept { return params_; }

  /// Optional instrumentation: when attached, every evaluation bumps the counter.
  void attach_probe(std::shared_ptr<std::atomic<std::uint64_t>> probe) { probe_ = std::move(probe); }
  void count_evaluation() const;

private:
  AtomicOpSpec(Params params, std::size_t dimension, std::optional<double> lipschitz);

  Params                                      params_;
  std::size_t                                 dimension_ = 0;
  std::optional<double>                       lipschitz_;
  std::shared_ptr<std::atomic<std::uint64_t>> probe_;
};

/// Regenerates theta for `key`; nullopt for deterministic ops.
std::optional<RandomDraw> draw_randomness(AtomicOpSpec const &op, DrawKey const &key);

StateVector step(AtomicOpSpec const &op, StateVector const &x, RandomDraw const *theta = nullptr);
inline StateVector step(AtomicOpSpec const &op, StateVector const &x, std::optional<RandomDraw> const &theta)
{
  return step(op, x, theta ? &*theta : nullptr);
}

/// f applied k times; `thetas` must hold k draws for stochastic ops.
StateVector iterate_k(AtomicOpSpec const &op, StateVector const &x, std::size_t k,
                      std::span<RandomDraw const> thetas = {});

/// Max of |f(x1) - f(x2)| / |x1 - x2| over pairs sampled uniformly in the
/// ball of `radius` around the origin. Stochastic ops share one draw per pair.
double estimate_lipschitz(AtomicOpSpec const &op, std::size_t sample_count, double radius, std::uint64_t seed,
                          ExecPolicy policy = ExecPolicy::Parallel);

/// Uniform point in the ball of `radius` in R^dim.
StateVector sample_ball(CounterRng &rng, std::size_t dim, double radius);

}  // namespace vtrust
