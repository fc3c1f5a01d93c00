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

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace vtrust {

/// A point in R^d. Dimension is fixed at construction.
class StateVector
{
public:
  StateVector() = default;
  explicit StateVector(std::size_t dim, double fill = 0.0);
  StateVector(std::initializer_list<double> values);
  explicit StateVector(std::vector<double> values);

  std::size_t size() const noexcept { return values_.size(); }
  bool        empty() const noexcept { return values_.empty(); }

  double &operator[](std::size_t i) { return values_[i]; }
  double  operator[](std::size_t i) const { return values_[i]; }

  std::span<double const> span() const noexcept { return values_; }
  std::span<double>       span() noexcept { return values_; }
  std::vector<double> const &values() const noexcept { return values_; }

  auto begin() const noexcept { return values_.begin(); }
  auto end() const noexcept { return values_.end(); }
  auto begin() noexcept { return values_.begin(); }
  auto end() noexcept { return values_.end(); }

  bool all_finite() const noexcept;

  StateVector &operator+=(StateVector const &other);
  StateVector &operator-=(StateVector const &other);
  StateVector &operator*=(double scale);

  friend bool operator==(StateVector const &, StateVector const &) = default;

private:
  std::vector<double> values_;
};

StateVector operator+(StateVector lhs, StateVector const &rhs);
StateVector operator-(StateVector lhs, StateVector const &rhs);
StateVector operator*(double scale, StateVector v);

double norm(std::span<double const> v);
inline double norm(StateVector const &v) { return norm(v.span()); }
double distance(StateVector const &a, StateVector const &b);

/// Throws DimensionMismatch unless both vectors have `expected` entries.
void check_dimension(StateVector const &v, std::size_t expected, char const *what);

}  // namespace vtrust
