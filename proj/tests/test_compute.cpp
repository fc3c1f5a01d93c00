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

#include "vtrust/compute.hpp"
#include "vtrust/error.hpp"

#include <doctest.h>

#include <cmath>
#include <cstring>

using namespace vtrust;

namespace {

AtomicOpSpec scaled_identity(std::size_t d, double scale, StateVector offset = {})
{
  if (offset.empty())
  {
    offset = StateVector(d);
  }
  DenseMatrix a = DenseMatrix::identity(d);
  for (auto &v : a.data)
  {
    v *= scale;
  }
  return AtomicOpSpec::affine(a, offset, std::abs(scale));
}

std::vector<std::vector<double>> rows_of(DenseMatrix const &m)
{
  std::vector<std::vector<double>> out(m.rows, std::vector<double>(m.cols));
  for (std::size_t r = 0; r < m.rows; ++r)
  {
    for (std::size_t c = 0; c < m.cols; ++c)
    {
      out[r][c] = m(r, c);
    }
  }
  return out;
}

bool bit_identical(StateVector const &a, StateVector const &b)
{
  return a.size() == b.size() && std::memcmp(a.values().data(), b.values().data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

TEST_CASE("step evaluates the builtin maps")
{
  auto const half = scaled_identity(2, 0.5);
  CHECK(step(half, StateVector{1, 1}) == StateVector{0.5, 0.5});

  auto const shifted = scaled_identity(2, 0.5, StateVector{1, 0});
  CHECK(step(shifted, StateVector{1, 1}) == StateVector{1.5, 0.5});

  auto const quad = AtomicOpSpec::quadratic(DenseMatrix::identity(2), 0.1);
  auto const y    = step(quad, StateVector{2, 0});
  CHECK(y[0] == doctest::Approx(1.8).epsilon(1e-15));
  CHECK(y[1] == 0.0);
}

TEST_CASE("affine step matches a plain matrix-vector product")
{
  StateVector const offset{0.3, -0.1, 0.2};
  auto const        op = AtomicOpSpec::affine_from_spectrum({0.9, 0.5, 0.1}, offset, 7);
  auto const       &a  = std::get<AffineParams>(op.params()).a;
  CounterRng        rng(11);
  for (int i = 0; i < 50; ++i)
  {
    std::vector<double> x{rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2)};
    auto                expect = oracle::matvec(rows_of(a), x);
    for (std::size_t k = 0; k < 3; ++k)
    {
      expect[k] += offset[k];
    }
    auto const got = step(op, StateVector(x));
    CHECK(oracle::euclid(got.values(), expect) <= 1e-14);
  }
}

TEST_CASE("step rejects bad input")
{
  auto const op = scaled_identity(2, 0.5);
  CHECK_THROWS_AS(step(op, StateVector{1, 2, 3}), Error);
  try
  {
    step(op, StateVector{std::nan(""), 0});
    FAIL("expected an error");
  }
  catch (Error const &e)
  {
    CHECK(e.code() == Errc::NonFinite);
  }
  auto const noisy = AtomicOpSpec::affine(DenseMatrix::identity(2), StateVector(2), 1.0, 0.5);
  CHECK_THROWS_AS(step(noisy, StateVector{1, 1}), Error);
}

TEST_CASE("iterate_k composes step")
{
  auto const half = scaled_identity(2, 0.5);
  CHECK(iterate_k(half, StateVector{1, 1}, 3) == StateVector{0.125, 0.125});
  CHECK_THROWS_AS(iterate_k(half, StateVector{1, 1}, 0), Error);

  auto const op = AtomicOpSpec::affine_from_spectrum({1.3, 0.7, 0.2, 0.05}, StateVector{1, 0, -1, 2}, 3);
  CounterRng rng(5);
  for (int i = 0; i < 100; ++i)
  {
    StateVector x{rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5)};
    CHECK(bit_identical(iterate_k(op, x, 1), step(op, x)));
    CHECK(bit_identical(iterate_k(op, x, 2), step(op, step(op, x))));
  }
}

TEST_CASE("iterate_k with draws matches nested stochastic steps")
{
  auto const op = AtomicOpSpec::affine(DenseMatrix::identity(3), StateVector(3), 1.0, 0.2);
  std::vector<RandomDraw> draws;
  for (std::uint64_t t = 1; t <= 3; ++t)
  {
    draws.push_back(*draw_randomness(op, DrawKey{9, kClientAgent, t, 0}));
  }
  StateVector x{1, 2, 3};
  StateVector nested = x;
  for (auto const &d : draws)
  {
    nested = step(op, nested, &d);
  }
  CHECK(bit_identical(iterate_k(op, x, 3, draws), nested));
  CHECK_THROWS_AS(iterate_k(op, x, 3, std::span<RandomDraw const>(draws).first(2)), Error);
}

TEST_CASE("estimate_lipschitz on maps with known norms")
{
  auto const half = scaled_identity(3, 0.5);
  double     est  = estimate_lipschitz(half, 10000, 1.0, 1);
  CHECK(est <= 0.5);
  CHECK(est >= 0.45);

  auto const zero = AtomicOpSpec::affine(DenseMatrix(2, 2, 0.0), StateVector(2), 0.0);
  CHECK(estimate_lipschitz(zero, 1000, 1.0, 2) == 0.0);

  std::vector<double> const diag{0.2, 0.9};
  auto const                op = AtomicOpSpec::affine(DenseMatrix::diagonal(diag), StateVector(2), 0.9);
  est                          = estimate_lipschitz(op, 10000, 1.0, 3);
  CHECK(est > 0.8);
  CHECK(est <= 0.9);

  CHECK_THROWS_AS(estimate_lipschitz(op, 0, 1.0, 3), Error);
  CHECK_THROWS_AS(estimate_lipschitz(op, 10, 0.0, 3), Error);
}

TEST_CASE("builtin ops respect their analytic Lipschitz constant")
{
  // Entries of the rotated matrices carry rounding, so the product can exceed
  // the exact bound by a few ulps of the result.
  auto const slack = [](double bound) { return bound * (1.0 + 64 * std::numeric_limits<double>::epsilon()); };

  std::vector<AtomicOpSpec> ops{
      scaled_identity(4, 0.5),
      AtomicOpSpec::affine_from_spectrum({1.7, 0.4, 0.3, 0.1}, StateVector{1, 1, 1, 1}, 21),
      AtomicOpSpec::quadratic_from_spectrum({1.0, 4.0, 9.0, 0.5}, 0.1, 22),
      AtomicOpSpec::affine_from_spectrum({0.8, 0.6, 0.2, 0.1}, StateVector(4), 23, 0.3),
  };
  CHECK(*ops[2].lipschitz() == doctest::Approx(0.95).epsilon(1e-12));
  for (auto const &op : ops)
  {
    double const L = op.required_lipschitz();
    CounterRng   rng(99);
    int          violations = 0;
    for (int i = 0; i < 10000; ++i)
    {
      StateVector const x1 = sample_ball(rng, 4, 10.0);
      StateVector const x2 = sample_ball(rng, 4, 10.0);
      auto const        th = draw_randomness(op, DrawKey{1, 0, static_cast<std::uint64_t>(i), 0});
      double const      lhs = oracle::euclid(step(op, x1, th), step(op, x2, th));
      if (lhs > slack(L * oracle::euclid(x1, x2)))
      {
        ++violations;
      }
    }
    CHECK(violations == 0);
  }
}

TEST_CASE("step is pure and the classifier is deterministic per draw")
{
  DatasetParams p;
  p.features   = 5;
  p.train_size = 200;
  p.test_size  = 50;
  auto data    = std::make_shared<Dataset const>(make_two_gaussians(p, 4));
  auto const op = AtomicOpSpec::classifier(data, 10, 0.1, 0.01);
  CHECK(op.dimension() == 6);
  CHECK(op.stochastic());

  auto const  th = draw_randomness(op, DrawKey{1, 0, 5, 0});
  StateVector x(6, 0.1);
  auto const  a = step(op, x, th);
  auto const  b = step(op, x, th);
  CHECK(bit_identical(a, b));

  auto const th2 = draw_randomness(op, DrawKey{1, 0, 5, 0});
  CHECK(th->values == th2->values);
  CHECK(bit_identical(step(op, x, th2), a));
  auto const other = draw_randomness(op, DrawKey{1, 1, 5, 0});
  CHECK(other->values != th->values);
}

TEST_CASE("dataset and accuracy")
{
  DatasetParams p;
  p.features         = 3;
  p.train_size       = 100;
  p.test_size        = 40;
  p.class_separation = 4.0;
  auto const a       = make_two_gaussians(p, 1);
  auto const b       = make_two_gaussians(p, 1);
  CHECK(a.train_x == b.train_x);
  CHECK(a.test_y == b.test_y);
  CHECK(a.train_size() == 100);
  CHECK(a.test_size() == 40);

  // Hand-counted accuracy of a fixed separator on the test split.
  StateVector w{1.0, 0.0, 0.0, 0.0};
  std::size_t correct = 0;
  for (std::size_t i = 0; i < a.test_size(); ++i)
  {
    int const predicted = a.test_x[i * 3] >= 0.0 ? 1 : 0;
    correct += predicted == a.test_y[i] ? 1 : 0;
  }
  CHECK(test_accuracy(a, w) == doctest::Approx(static_cast<double>(correct) / 40.0));
}

TEST_CASE("counter rng regenerates streams from the key")
{
  CounterRng a(DrawKey{3, 1, 7, 0});
  CounterRng b(DrawKey{3, 1, 7, 0});
  CounterRng c(DrawKey{3, 1, 7, 1});
  for (int i = 0; i < 100; ++i)
  {
    auto const x = a();
    CHECK(x == b());
    CHECK(x != c());
  }
  CounterRng u(1);
  double     lo = 1.0, hi = 0.0, sum = 0.0;
  for (int i = 0; i < 100000; ++i)
  {
    double const v = u.uniform();
    lo             = std::min(lo, v);
    hi             = std::max(hi, v);
    sum += v;
  }
  CHECK(lo >= 0.0);
  CHECK(hi < 1.0);
  CHECK(sum / 100000 == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("random orthogonal matrices are orthogonal")
{
  auto const q = DenseMatrix::random_orthogonal(5, 8);
  auto const p = q.transposed() * q;
  for (std::size_t r = 0; r < 5; ++r)
  {
    for (std::size_t c = 0; c < 5; ++c)
    {
      CHECK(p(r, c) == doctest::Approx(r == c ? 1.0 : 0.0).epsilon(1e-12).scale(1.0));
    }
  }
  std::vector<double> const diag{3.0, 1.0, 0.5};
  CHECK(spectral_norm(DenseMatrix::diagonal(diag)) == doctest::Approx(3.0));
}
