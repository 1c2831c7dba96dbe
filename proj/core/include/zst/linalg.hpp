// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <vector>

#include "zst/tensor.hpp"

namespace zst {

struct SymmetricEigen {
  std::vector<double> values;  // descending
  Tensor vectors;              // column j pairs with values[j]; orthonormal columns
};

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Throws ContractError if the input is not symmetric within 1e-9.
SymmetricEigen sym_eig(const Tensor& matrix);

/// Sample covariance (divided by row count) of the rows of `data` around `mean`.
Tensor covariance(const Tensor& data, std::span<const double> mean);
std::vector<double> column_mean(const Tensor& data);

}  // namespace zst
