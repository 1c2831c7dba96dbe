// SPDX-License-Identifier: Apache-2.0
#include "zst/embeddings.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <unordered_map>
#include <unordered_set>

#include "zst/error.hpp"
#include "zst/linalg.hpp"

namespace zst {

namespace fs = std::filesystem;

namespace {

bool parse_size(std::string_view s, std::size_t& out) {
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && p == s.data() + s.size();
}

bool parse_double(std::string_view s, double& out) {
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && p == s.data() + s.size() && std::isfinite(out);
}

}  // namespace

EmbeddingTable load_vec(const fs::path& path, VecLoadReport* report) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open embedding file " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw FormatError(path.string() + ": missing \"N D\" header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const Tokens header = split_whitespace(line);
  std::size_t n = 0, d = 0;
  if (header.size() != 2 || !parse_size(header[0], n) || !parse_size(header[1], d) || n == 0 || d == 0) {
    throw FormatError(path.string() + ":1: invalid header '" + line + "', expected \"N D\"");
  }

  VecLoadReport local;
  EmbeddingTable table;
  std::vector<double> values;
  values.reserve(n * d);
  std::unordered_set<std::string> seen;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    // words may not contain spaces, but trailing blanks are common
    const Tokens fields = split_whitespace(line);
    if (fields.empty()) {
      ++local.malformed;
      continue;
    }
    if (fields.size() != d + 1) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": expected " + std::to_string(d) +
                        " values, found " + std::to_string(fields.size() - 1));
    }
    std::vector<double> row(d);
    bool ok = true;
    for (std::size_t j = 0; j < d && ok; ++j) ok = parse_double(fields[j + 1], row[j]);
    if (!ok) {
      ++local.malformed;
      continue;
    }
    if (!seen.insert(fields[0]).second) {
      ++local.duplicates;
      continue;
    }
    table.words.push_back(fields[0]);
    values.insert(values.end(), row.begin(), row.end());
  }
  if (table.words.size() + local.duplicates + local.malformed < n) {
    throw FormatError(path.string() + ": header announces " + std::to_string(n) + " rows, file has " +
                      std::to_string(table.words.size() + local.duplicates + local.malformed));
  }
  if (table.words.empty()) throw FormatError(path.string() + ": no usable vectors");
  table.matrix = Tensor({table.words.size(), d}, std::move(values));
  if (report) *report = local;
  return table;
}

void save_vec(const EmbeddingTable& table, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << table.word_count() << ' ' << table.dim() << '\n';
  char buf[32];
  for (std::size_t i = 0; i < table.word_count(); ++i) {
    out << table.words[i];
    for (double v : table.matrix.row(i)) {
      std::snprintf(buf, sizeof buf, " %.6g", v);
      out << buf;
    }
    out << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

double cosine_similarity(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw DimensionError("cosine_similarity: dimensions " + std::to_string(x.size()) + " and " +
                         std::to_string(y.size()));
  }
  const double nx = l2_norm(x);
  const double ny = l2_norm(y);
  if (nx == 0.0 || ny == 0.0) throw ContractError("cosine_similarity: undefined for a zero vector");
  return std::clamp(dot(x, y) / (nx * ny), -1.0, 1.0);
}

Tensor remove_dominant_components(const Tensor& data, std::size_t count) {
  const std::size_t d = data.cols();
  const auto mean = column_mean(data);
  Tensor x = data;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto r = x.row(i);
    for (std::size_t j = 0; j < d; ++j) r[j] -= mean[j];
  }
  if (count == 0) return x;
  if (count > d) throw ContractError("cannot remove more principal components than dimensions");
  const auto eig = sym_eig(covariance(x, std::vector<double>(d, 0.0)));
  std::vector<double> proj(count);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto r = x.row(i);
    for (std::size_t c = 0; c < count; ++c) {
      double s = 0.0;
      for (std::size_t j = 0; j < d; ++j) s += r[j] * eig.vectors(j, c);
      proj[c] = s;
    }
    for (std::size_t c = 0; c < count; ++c)
      for (std::size_t j = 0; j < d; ++j) r[j] -= proj[c] * eig.vectors(j, c);
  }
  return x;
}

PcaProjection pca_project(const Tensor& data, std::size_t target_dim) {
  const std::size_t d = data.cols();
  if (target_dim < 1 || target_dim > d) {
    throw ContractError("pca_project: target dimension " + std::to_string(target_dim) + " outside [1, " +
                        std::to_string(d) + "]");
  }
  const auto mean = column_mean(data);
  const auto eig = sym_eig(covariance(data, mean));
  PcaProjection out;
  out.eigenvalues = eig.values;
  out.projected = Tensor({data.rows(), target_dim});
  std::vector<double> centered(d);
  for (std::size_t i = 0; i < data.rows(); ++i) {
    auto r = data.row(i);
    for (std::size_t j = 0; j < d; ++j) centered[j] = r[j] - mean[j];
    auto o = out.projected.row(i);
    for (std::size_t j = 0; j < d; ++j) {
      const double cj = centered[j];
      const double* vrow = eig.vectors.row(j).data();
      for (std::size_t c = 0; c < target_dim; ++c) o[c] += cj * vrow[c];
    }
  }
  for (std::size_t i = 0; i < out.projected.rows(); ++i)
    for (double v : out.projected.row(i)) out.retained_variance += v * v;
  out.retained_variance /= static_cast<double>(data.rows());
  return out;
}

EmbeddingTable compress(const EmbeddingTable& table, const CompressOptions& options) {
  const std::size_t d = table.dim();
  const std::size_t target = options.target_dim == 0 ? d / 2 : options.target_dim;
  if (target < 1 || target > d) {
    throw ContractError("compress: target dimension " + std::to_string(target) + " outside [1, " +
                        std::to_string(d) + "]");
  }
  auto components = [&](std::size_t dim) {
    return options.removed_components != 0 ? options.removed_components : (dim + 99) / 100;
  };
  Tensor x = table.matrix;
  if (options.post_process) x = remove_dominant_components(x, components(d));
  x = pca_project(x, target).projected;
  if (options.post_process) x = remove_dominant_components(x, components(target));
  return EmbeddingTable{table.words, std::move(x)};
}

Tensor build_matrix(const Vocabulary& vocab, const EmbeddingTable& table, std::size_t dim, std::uint64_t seed) {
  if (dim != table.dim()) {
    throw ContractError("build_matrix: requested dimension " + std::to_string(dim) + " but table has " +
                        std::to_string(table.dim()));
  }
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < table.words.size(); ++i) index.emplace(table.words[i], i);

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(-0.1, 0.1);
  Tensor m({vocab.size(), dim});
  for (std::size_t id = 1; id < vocab.size(); ++id) {
    auto row = m.row(id);
    auto it = index.find(vocab.tokens()[id]);
    if (it != index.end()) {
      auto src = table.matrix.row(it->second);
      std::copy(src.begin(), src.end(), row.begin());
    } else {
      for (double& v : row) v = uniform(rng);
    }
  }
  return m;
}

}  // namespace zst
