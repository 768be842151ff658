#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "bed/errors.hpp"

namespace bed {

// Dense column-major matrices/vectors templated on scalar. Training runs in
// float, gradient verification in double; every numeric routine below is
// instantiated for both.
template <class S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <class S>
using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;

using MatF = Mat<float>;
using VecF = Vec<float>;
using MatD = Mat<double>;
using VecD = Vec<double>;

// A canonical <subject, relation, object> triple over KB identifiers.
struct Triple {
  std::string h, r, t;

  friend bool operator==(const Triple&, const Triple&) = default;
  friend auto operator<=>(const Triple&, const Triple&) = default;
};

template <class S>
bool all_finite(const Mat<S>& m) {
  return m.allFinite();
}

template <class S>
void require_finite(const Mat<S>& m, const std::string& what) {
  if (!m.allFinite()) {
    throw NumericError("non-finite values in " + what);
  }
}

}  // namespace bed
