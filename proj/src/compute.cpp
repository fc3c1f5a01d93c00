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

#include "vtrust/compute.hpp"

#include "vtrust/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace vtrust {

DenseMatrix::DenseMatrix(std::size_t r, std::size_t c, double fill)
  : rows(r)
  , cols(c)
  , data(r * c, fill)
{}

DenseMatrix DenseMatrix::identity(std::size_t n)
{
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i)
  {
    m(i, i) = 1.0;
  }
  return m;
}

DenseMatrix DenseMatrix::diagonal(std::span<double const> diag)
{
  DenseMatrix m(diag.size(), diag.size());
  for (std::size_t i = 0; i < diag.size(); ++i)
  {
    m(i, i) = diag[i];
  }
  return m;
}

DenseMatrix DenseMatrix::random_orthogonal(std::size_t n, std::uint64_t seed)
{
  CounterRng  rng(DrawKey{seed, 0xA5A5ULL, n, 0});
  DenseMatrix q(n, n);
  for (auto &v : q.data)
  {
    v = rng.normal();
  }
  // modified Gram-Schmidt over columns; R has a positive diagonal so the
  // result is Haar distributed
  for (std::size_t c = 0; c < n; ++c)
  {
    for (std::size_t prev = 0; prev < c; ++prev)
    {
      double dot = 0.0;
      for (std::size_t r = 0; r < n; ++r)
      {
        dot += q(r, c) * q(r, prev);
      }
      for (std::size_t r = 0; r < n; ++r)
      {
        q(r, c) -= dot * q(r, prev);
      }
    }
    double len = 0.0;
    for (std::size_t r = 0; r < n; ++r)
    {
      len += q(r, c) * q(r, c);
    }
    len = std::sqrt(len);
    for (std::size_t r = 0; r < n; ++r)
    {
      q(r, c) /= len;
    }
  }
  return q;
}

StateVector DenseMatrix::apply(StateVector const &x) const
{
  check_dimension(x, cols, "matrix apply");
  StateVector out(rows);
  for (std::size_t r = 0; r < rows; ++r)
  {
    double acc = 0.0;
    for (std::size_t c = 0; c < cols; ++c)
    {
      acc += (*this)(r, c) * x[c];
    }
    out[r] = acc;
  }
  return out;
}

DenseMatrix DenseMatrix::transposed() const
{
  DenseMatrix t(cols, rows);
  for (std::size_t r = 0; r < rows; ++r)
  {
    for (std::size_t c = 0; c < cols; ++c)
    {
      t(c, r) = (*this)(r, c);
    }
  }
  return t;
}

DenseMatrix operator*(DenseMatrix const &a, DenseMatrix const &b)
{
  if (a.cols != b.rows)
  {
    throw Error(Errc::DimensionMismatch, "matrix product");
  }
  DenseMatrix out(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i)
  {
    for (std::size_t k = 0; k < a.cols; ++k)
    {
      double const aik = a(i, k);
      for (std::size_t j = 0; j < b.cols; ++j)
      {
        out(i, j) += aik * b(k, j);
      }
    }
  }
  return out;
}

double spectral_norm(DenseMatrix const &a, std::size_t max_iterations, double tolerance)
{
  if (a.rows == 0 || a.cols == 0)
  {
    return 0.0;
  }
  DenseMatrix const at = a.transposed();
  StateVector       v(a.cols, 1.0 / std::sqrt(static_cast<double>(a.cols)));
  double            sigma = 0.0;
  for (std::size_t it = 0; it < max_iterations; ++it)
  {
    StateVector w   = at.apply(a.apply(v));
    double const ln = norm(w);
    if (ln == 0.0)
    {
      return 0.0;
    }
    w *= 1.0 / ln;
    double const next = std::sqrt(ln);
    v                 = std::move(w);
    if (std::abs(next - sigma) <= tolerance * next)
    {
      sigma = next;
      break;
    }
    sigma = next;
  }
  return sigma;
}

Dataset make_two_gaussians(DatasetParams const &params, std::uint64_t seed)
{
  require(params.features > 0, Errc::InvalidArgument, "dataset needs at least one feature");
  require(params.outlier_fraction >= 0.0 && params.outlier_fraction < 1.0, Errc::InvalidArgument,
          "outlier fraction must lie in [0, 1)");

  Dataset data;
  data.features = params.features;

  CounterRng          rng(DrawKey{seed, 0xDA7AULL, 0, 0});
  std::vector<double> direction(params.features);
  for (auto &v : direction)
  {
    v = rng.normal();
  }
  double const len = norm(direction);
  for (auto &v : direction)
  {
    v *= 0.5 * params.class_separation / len;
  }

  auto fill = [&](std::size_t count, std::vector<double> &xs, std::vector<int> &ys, bool allow_outliers) {
    xs.resize(count * params.features);
    ys.resize(count);
    for (std::size_t i = 0; i < count; ++i)
    {
      int const    label = rng.uniform() < 0.5 ? 0 : 1;
      double const sign  = label == 1 ? 1.0 : -1.0;
      for (std::size_t j = 0; j < params.features; ++j)
      {
        xs[i * params.features + j] = sign * direction[j] + rng.normal();
      }
      ys[i] = label;
      if (allow_outliers && rng.uniform() < params.outlier_fraction)
      {
        for (std::size_t j = 0; j < params.features; ++j)
        {
          xs[i * params.features + j] *= params.outlier_scale;
        }
        ys[i] = 1 - label;
      }
    }
  };
  fill(params.train_size, data.train_x, data.train_y, true);
  fill(params.test_size, data.test_x, data.test_y, false);
  return data;
}

namespace {

double logistic(double z)
{
  if (z >= 0.0)
  {
    return 1.0 / (1.0 + std::exp(-z));
  }
  double const e = std::exp(z);
  return e / (1.0 + e);
}

double linear_score(std::span<double const> row, StateVector const &w)
{
  double z = w[row.size()];
  for (std::size_t j = 0; j < row.size(); ++j)
  {
    z += w[j] * row[j];
  }
  return z;
}

}  // namespace

double test_accuracy(Dataset const &data, StateVector const &weights)
{
  check_dimension(weights, data.features + 1, "test_accuracy");
  if (data.test_size() == 0)
  {
    return 0.0;
  }
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.test_size(); ++i)
  {
    std::span<double const> row(data.test_x.data() + i * data.features, data.features);
    int const               predicted = linear_score(row, weights) >= 0.0 ? 1 : 0;
    correct += predicted == data.test_y[i] ? 1U : 0U;
  }
  return static_cast<double>(correct) / static_cast<double>(data.test_size());
}

char const *to_string(OpKind kind)
{
  switch (kind)
  {
  case OpKind::AffineContraction:
    return "affine";
  case OpKind::QuadraticGradientDescent:
    return "quadratic";
  case OpKind::MiniBatchSGDClassifier:
    return "classifier";
  }
  return "unknown";
}

AtomicOpSpec::AtomicOpSpec(Params params, std::size_t dimension, std::optional<double> lipschitz)
  : params_(std::move(params))
  , dimension_(dimension)
{
  if (lipschitz)
  {
    set_lipschitz(*lipschitz);
  }
}

AtomicOpSpec AtomicOpSpec::affine(DenseMatrix a, StateVector offset, std::optional<double> lipschitz,
                                  double noise_sigma)
{
  require(a.rows == a.cols, Errc::DimensionMismatch, "affine map needs a square matrix");
  check_dimension(offset, a.rows, "affine offset");
  require(noise_sigma >= 0.0, Errc::InvalidArgument, "noise sigma must be nonnegative");
  if (!lipschitz)
  {
    lipschitz = spectral_norm(a);
  }
  std::size_t const d = a.rows;
  return AtomicOpSpec(AffineParams{std::move(a), std::move(offset), noise_sigma}, d, lipschitz);
}

AtomicOpSpec AtomicOpSpec::affine_from_spectrum(std::vector<double> const &singular_values, StateVector offset,
                                                std::uint64_t rotation_seed, double noise_sigma)
{
  require(!singular_values.empty(), Errc::InvalidArgument, "empty spectrum");
  double l = 0.0;
  for (double s : singular_values)
  {
    l = std::max(l, std::abs(s));
  }
  DenseMatrix const rotation = DenseMatrix::random_orthogonal(singular_values.size(), rotation_seed);
  return affine(rotation * DenseMatrix::diagonal(singular_values), std::move(offset), l, noise_sigma);
}

AtomicOpSpec AtomicOpSpec::quadratic(DenseMatrix q, double rate)
{
  require(q.rows == q.cols, Errc::DimensionMismatch, "quadratic needs a square matrix");
  require(rate > 0.0, Errc::InvalidArgument, "rate must be positive");
  DenseMatrix update = DenseMatrix::identity(q.rows);
  for (std::size_t i = 0; i < update.data.size(); ++i)
  {
    update.data[i] -= rate * q.data[i];
  }
  double const      l = spectral_norm(update);
  std::size_t const d = q.rows;
  return AtomicOpSpec(QuadraticParams{std::move(q), rate}, d, l);
}

AtomicOpSpec AtomicOpSpec::quadratic_from_spectrum(std::vector<double> const &eigenvalues, double rate,
                                                   std::uint64_t rotation_seed)
{
  require(!eigenvalues.empty(), Errc::InvalidArgument, "empty spectrum");
  require(rate > 0.0, Errc::InvalidArgument, "rate must be positive");
  double l = 0.0;
  for (double lambda : eigenvalues)
  {
    l = std::max(l, std::abs(1.0 - rate * lambda));
  }
  DenseMatrix const u = DenseMatrix::random_orthogonal(eigenvalues.size(), rotation_seed);
  DenseMatrix       q = u * DenseMatrix::diagonal(eigenvalues) * u.transposed();
  std::size_t const d = q.rows;
  return AtomicOpSpec(QuadraticParams{std::move(q), rate}, d, l);
}

AtomicOpSpec AtomicOpSpec::classifier(std::shared_ptr<Dataset const> data, std::size_t batch_size, double rate,
                                      double l2)
{
  require(data != nullptr && data->train_size() > 0, Errc::InvalidArgument, "classifier needs training data");
  require(batch_size > 0, Errc::InvalidArgument, "batch size must be positive");
  require(rate > 0.0, Errc::InvalidArgument, "rate must be positive");
  require(l2 >= 0.0, Errc::InvalidArgument, "l2 must be nonnegative");
  std::size_t const d = data->features + 1;
  return AtomicOpSpec(ClassifierParams{std::move(data), batch_size, rate, l2}, d, std::nullopt);
}

OpKind AtomicOpSpec::kind() const noexcept
{
  switch (params_.index())
  {
  case 0:
    return OpKind::AffineContraction;
  case 1:
    return OpKind::QuadraticGradientDescent;
  default:
    return OpKind::MiniBatchSGDClassifier;
  }
}

std::size_t AtomicOpSpec::draw_dimension() const noexcept
{
  if (auto const *affine = std::get_if<AffineParams>(&params_))
  {
    return affine->noise_sigma > 0.0 ? dimension_ : 0;
  }
  if (auto const *clf = std::get_if<ClassifierParams>(&params_))
  {
    return clf->batch_size;
  }
  return 0;
}

void AtomicOpSpec::set_lipschitz(double value)
{
  require(std::isfinite(value) && value >= 0.0, Errc::InvalidArgument, "Lipschitz constant must be finite and >= 0");
  lipschitz_ = value;
}

double AtomicOpSpec::required_lipschitz() const
{
  if (!lipschitz_)
  {
    throw Error(Errc::InvalidArgument, "Lipschitz constant not set; call estimate_lipschitz first");
  }
  return *lipschitz_;
}

void AtomicOpSpec::count_evaluation() const
{
  if (probe_)
  {
    probe_->fetch_add(1, std::memory_order_relaxed);
  }
}

std::optional<RandomDraw> draw_randomness(AtomicOpSpec const &op, DrawKey const &key)
{
  if (!op.stochastic())
  {
    return std::nullopt;
  }
  CounterRng rng(key);
  RandomDraw draw;
  draw.key = key;
  draw.values.resize(op.draw_dimension());
  if (auto const *affine = std::get_if<AffineParams>(&op.params()))
  {
    for (auto &v : draw.values)
    {
      v = affine->noise_sigma * rng.normal();
    }
  }
  else if (auto const *clf = std::get_if<ClassifierParams>(&op.params()))
  {
    for (auto &v : draw.values)
    {
      v = static_cast<double>(rng.below(clf->data->train_size()));
    }
  }
  return draw;
}

namespace {

StateVector classifier_step(ClassifierParams const &p, StateVector const &w, RandomDraw const &theta)
{
  std::size_t const features = p.data->features;
  StateVector       grad(features + 1);
  for (double idx : theta.values)
  {
    auto const row_index = static_cast<std::size_t>(idx);
    if (idx < 0.0 || row_index >= p.data->train_size() || static_cast<double>(row_index) != idx)
    {
      throw Error(Errc::OutOfRange, "batch index outside the training set");
    }
    std::span<double const> row(p.data->train_x.data() + row_index * features, features);
    double const            residual = logistic(linear_score(row, w)) - p.data->train_y[row_index];
    for (std::size_t j = 0; j < features; ++j)
    {
      grad[j] += residual * row[j];
    }
    grad[features] += residual;
  }
  double const inv_batch = 1.0 / static_cast<double>(theta.values.size());
  StateVector  out       = w;
  for (std::size_t j = 0; j <= features; ++j)
  {
    out[j] -= p.rate * (grad[j] * inv_batch + p.l2 * w[j]);
  }
  return out;
}

}  // namespace

StateVector step(AtomicOpSpec const &op, StateVector const &x, RandomDraw const *theta)
{
  check_dimension(x, op.dimension(), "step");
  if (!x.all_finite())
  {
    throw Error(Errc::NonFinite, "step input contains NaN or inf");
  }
  if (op.stochastic() != (theta != nullptr))
  {
    throw Error(Errc::InvalidArgument, op.stochastic() ? "stochastic op needs a random draw"
                                                       : "deterministic op takes no random draw");
  }
  if (theta != nullptr && theta->values.size() != op.draw_dimension())
  {
    throw Error(Errc::DimensionMismatch, "random draw has the wrong length");
  }
  op.count_evaluation();

  return std::visit(
      [&](auto const &p) -> StateVector {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, AffineParams>)
        {
          StateVector out = p.a.apply(x);
          out += p.offset;
          if (theta != nullptr)
          {
            for (std::size_t i = 0; i < out.size(); ++i)
            {
              out[i] += theta->values[i];
            }
          }
          return out;
        }
        else if constexpr (std::is_same_v<T, QuadraticParams>)
        {
          StateVector const grad = p.q.apply(x);
          StateVector       out  = x;
          for (std::size_t i = 0; i < out.size(); ++i)
          {
            out[i] -= p.rate * grad[i];
          }
          return out;
        }
        else
        {
          return classifier_step(p, x, *theta);
        }
      },
      op.params());
}

StateVector iterate_k(AtomicOpSpec const &op, StateVector const &x, std::size_t k, std::span<RandomDraw const> thetas)
{
  require(k >= 1, Errc::InvalidArgument, "iterate_k needs k >= 1");
  if (op.stochastic())
  {
    require(thetas.size() == k, Errc::InvalidArgument, "iterate_k needs one draw per step");
  }
  StateVector current = x;
  for (std::size_t i = 0; i < k; ++i)
  {
    current = step(op, current, op.stochastic() ? &thetas[i] : nullptr);
  }
  return current;
}

StateVector sample_ball(CounterRng &rng, std::size_t dim, double radius)
{
  StateVector v(dim);
  double      len = 0.0;
  while (len == 0.0)
  {
    for (auto &x : v)
    {
      x = rng.normal();
    }
    len = norm(v);
  }
  double const r = radius * std::pow(rng.uniform(), 1.0 / static_cast<double>(dim));
  v *= r / len;
  return v;
}

namespace {

double sampled_ratio(AtomicOpSpec const &op, std::size_t i, double radius, std::uint64_t seed)
{
  CounterRng        rng(DrawKey{seed, 0x11F5ULL, i, 0});
  StateVector const x1 = sample_ball(rng, op.dimension(), radius);
  StateVector const x2 = sample_ball(rng, op.dimension(), radius);
  double const      dx = distance(x1, x2);
  if (dx == 0.0)
  {
    return 0.0;
  }
  auto const theta = draw_randomness(op, DrawKey{seed, 0x11F5ULL, i, 1});
  return distance(step(op, x1, theta), step(op, x2, theta)) / dx;
}

}  // namespace

double estimate_lipschitz(AtomicOpSpec const &op, std::size_t sample_count, double radius, std::uint64_t seed,
                          ExecPolicy policy)
{
  require(sample_count > 0, Errc::InvalidArgument, "sample_count must be positive");
  require(radius > 0.0, Errc::InvalidArgument, "radius must be positive");
  auto const n    = static_cast<std::ptrdiff_t>(sample_count);
  double     best = 0.0;
  if (policy == ExecPolicy::Serial)
  {
    for (std::ptrdiff_t i = 0; i < n; ++i)
    {
      best = std::max(best, sampled_ratio(op, static_cast<std::size_t>(i), radius, seed));
    }
    return best;
  }
#pragma omp parallel for reduction(max : best) schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i)
  {
    best = std::max(best, sampled_ratio(op, static_cast<std::size_t>(i), radius, seed));
  }
  return best;
}

}  // namespace vtrust
