// SPDX-License-Identifier: Apache-2.0
#include "zst/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "zst/error.hpp"

namespace zst {
namespace {

constexpr int kMaxSweeps = 100;

void rotate(std::vector<double>& a, std::vector<double>& v, std::size_t n, std::size_t p, std::size_t q) {
  const double apq = a[p * n + q];
  const double app = a[p * n + p];
  const double aqq = a[q * n + q];
  const double theta = (aqq - app) / (2.0 * apq);
  const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
  const double c = 1.0 / std::sqrt(t * t + 1.0);
  const double s = t * c;

  for (std::size_t k = 0; k < n; ++k) {
    const double akp = a[k * n + p];
    const double akq = a[k * n + q];
    a[k * n + p] = c * akp - s * akq;
    a[k * n + q] = s * akp + c * akq;
  }
  for (std::size_t k = 0; k < n; ++k) {
    const double apk = a[p * n + k];
    const double aqk = a[q * n + k];
    a[p * n + k] = c * apk - s * aqk;
    a[q * n + k] = s * apk + c * aqk;
  }
  a[p * n + q] = 0.0;
  a[q * n + p] = 0.0;

  for (std::size_t k = 0; k < n; ++k) {
    const double vkp = v[k * n + p];
    const double vkq = v[k * n + q];
    v[k * n + p] = c * vkp - s * vkq;
    v[k * n + q] = s * vkp + c * vkq;
  }
}

}  // namespace

SymmetricEigen sym_eig(const Tensor& matrix) {
  if (matrix.rank() != 2 || matrix.rows() != matrix.cols()) {
    throw DimensionError("sym_eig: matrix must be square, got " + shape_string(matrix.shape()));
  }
  const std::size_t n = matrix.rows();
  double scale = 1.0;
  for (double x : matrix.data()) scale = std::max(scale, std::abs(x));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (std::abs(matrix(i, j) - matrix(j, i)) > 1e-9 * scale) {
        throw ContractError("sym_eig: matrix is not symmetric at (" + std::to_string(i) + ", " + std::to_string(j) +
                            ")");
      }

  std::vector<double> a(matrix.data().begin(), matrix.data().end());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) a[i * n + j] = a[j * n + i] = 0.5 * (a[i * n + j] + a[j * n + i]);
  std::vector<double> v(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) v[i * n + i] = 1.0;

  double total = 0.0;
  for (double x : a) total += x * x;

  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a[p * n + q] * a[p * n + q];
    if (off <= 1e-32 * total || off == 0.0) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a[p * n + q];
        if (apq == 0.0) continue;
        // negligible next to both diagonal entries: drop instead of rotating
        const double g = 1e-18 * (std::abs(a[p * n + p]) + std::abs(a[q * n + q]));
        if (std::abs(apq) < g) {
          a[p * n + q] = a[q * n + p] = 0.0;
          continue;
        }
        rotate(a, v, n, p, q);
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return a[x * n + x] > a[y * n + y]; });

  SymmetricEigen out;
  out.vectors = Tensor({n, n});
  for (std::size_t j = 0; j < n; ++j) {
    out.values.push_back(a[order[j] * n + order[j]]);
    for (std::size_t i = 0; i < n; ++i) out.vectors(i, j) = v[i * n + order[j]];
  }
  return out;
}

std::vector<double> column_mean(const Tensor& data) {
  std::vector<double> mean(data.cols(), 0.0);
  for (std::size_t i = 0; i < data.rows(); ++i) {
    auto r = data.row(i);
    for (std::size_t j = 0; j < mean.size(); ++j) mean[j] += r[j];
  }
  for (double& m : mean) m /= static_cast<double>(data.rows());
  return mean;
}

Tensor covariance(const Tensor& data, std::span<const double> mean) {
  const std::size_t n = data.rows(), d = data.cols();
  if (mean.size() != d) throw DimensionError("covariance: mean length mismatch");
  Tensor cov({d, d});
  std::vector<double> centered(d);
  for (std::size_t i = 0; i < n; ++i) {
    auto r = data.row(i);
    for (std::size_t j = 0; j < d; ++j) centered[j] = r[j] - mean[j];
    for (std::size_t p = 0; p < d; ++p) {
      const double cp = centered[p];
      double* row = &cov(p, 0);
      for (std::size_t q = p; q < d; ++q) row[q] += cp * centered[q];
    }
  }
  for (std::size_t p = 0; p < d; ++p)
    for (std::size_t q = p; q < d; ++q) {
      cov(p, q) /= static_cast<double>(n);
      cov(q, p) = cov(p, q);
    }
  return cov;
}

}  // namespace zst
