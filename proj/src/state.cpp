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

#include "vtrust/state.hpp"

#include "vtrust/error.hpp"

#include <cmath>
#include <string>

namespace vtrust {

StateVector::StateVector(std::size_t dim, double fill)
  : values_(dim, fill)
{}

StateVector::StateVector(std::initializer_list<double> values)
  : values_(values)
{}

StateVector::StateVector(std::vector<double> values)
  : values_(std::move(values))
{}

bool StateVector::all_finite() const noexcept
{
  for (double v : values_)
  {
    if (!std::isfinite(v))
    {
      return false;
    }
  }
  return true;
}

StateVector &StateVector::operator+=(StateVector const &other)
{
  check_dimension(other, size(), "operator+=");
  for (std::size_t i = 0; i < values_.size(); ++i)
  {
    values_[i] += other.values_[i];
  }
  return *this;
}

StateVector &StateVector::operator-=(StateVector const &other)
{
  check_dimension(other, size(), "operator-=");
  for (std::size_t i = 0; i < values_.size(); ++i)
  {
    values_[i] -= other.values_[i];
  }
  return *this;
}

StateVector &StateVector::operator*=(double scale)
{
  for (double &v : values_)
  {
    v *= scale;
  }
  return *this;
}

StateVector operator+(StateVector lhs, StateVector const &rhs)
{
  lhs += rhs;
  return lhs;
}

StateVector operator-(StateVector lhs, StateVector const &rhs)
{
  lhs -= rhs;
  return lhs;
}

StateVector operator*(double scale, StateVector v)
{
  v *= scale;
  return v;
}

double norm(std::span<double const> v)
{
  double sum = 0.0;
  for (double x : v)
  {
    sum += x * x;
  }
  return std::sqrt(sum);
}

double distance(StateVector const &a, StateVector const &b)
{
  check_dimension(b, a.size(), "distance");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
  {
    double const diff = a[i] - b[i];
    sum += diff * diff;
  }
  return std::sqrt(sum);
}

void check_dimension(StateVector const &v, std::size_t expected, char const *what)
{
  if (v.size() != expected)
  {
    throw Error(Errc::DimensionMismatch, std::string(what) + ": expected " + std::to_string(expected) +
                                             " entries, got " + std::to_string(v.size()));
  }
}

}  // namespace vtrust
