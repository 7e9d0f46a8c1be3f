// Brute-force reference implementations used by the unit tests.
#pragma once

#include "escgnn/geometry.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <utility>
#include <vector>

namespace oracle {

inline Eigen::MatrixXd gaussian_points(std::uint64_t seed, int n, int d) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd p(n, d);
  for (int i = 0; i < n; ++i)
    for (int c = 0; c < d; ++c) p(i, c) = normal(rng) * (1.0 - 0.2 * c);
  return p;
}

inline Eigen::MatrixXd gaussian_matrix(std::uint64_t seed, int rows, int cols) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = normal(rng);
  return m;
}

// Union of every node's k nearest neighbors (ties to the lower index).
inline std::set<std::pair<int, int>> knn_edges(const Eigen::MatrixXd& p, int k) {
  const int n = static_cast<int>(p.rows());
  std::set<std::pair<int, int>> edges;
  for (int i = 0; i < n; ++i) {
    std::vector<int> order;
    for (int j = 0; j < n; ++j)
      if (j != i) order.push_back(j);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return (p.row(a) - p.row(i)).squaredNorm() < (p.row(b) - p.row(i)).squaredNorm();
    });
    for (int r = 0; r < k; ++r) {
      edges.insert({std::min(i, order[r]), std::max(i, order[r])});
    }
  }
  return edges;
}

inline Eigen::MatrixXd weighted_adjacency(const escgnn::GeometricGraph& g) {
  const int n = g.num_nodes();
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (const auto& nb : g.adjacency[i]) a(i, nb.index) = nb.weight;
  return a;
}

// (I + D^{-1} A) / 2
inline Eigen::MatrixXd lazy_walk(const escgnn::GeometricGraph& g) {
  const Eigen::MatrixXd a = weighted_adjacency(g);
  const Eigen::VectorXd deg = a.rowwise().sum();
  const int n = g.num_nodes();
  return 0.5 * (Eigen::MatrixXd::Identity(n, n) + deg.cwiseInverse().asDiagonal() * a);
}

inline Eigen::MatrixXd power(const Eigen::MatrixXd& m, int t) {
  Eigen::MatrixXd r = Eigen::MatrixXd::Identity(m.rows(), m.cols());
  for (int s = 0; s < t; ++s) r = m * r;
  return r;
}

// Dense filters of a bank: bands then the low-pass.
inline std::vector<Eigen::MatrixXd> filters(const Eigen::MatrixXd& op, const std::vector<int>& scales) {
  std::vector<Eigen::MatrixXd> out;
  for (std::size_t b = 0; b + 1 < scales.size(); ++b)
    out.push_back(power(op, scales[b]) - power(op, scales[b + 1]));
  out.push_back(power(op, scales.back()));
  return out;
}

// n x d rows to a node-major nd vector, and back.
inline Eigen::VectorXd flatten(const Eigen::MatrixXd& rows) {
  Eigen::VectorXd v(rows.size());
  for (Eigen::Index i = 0; i < rows.rows(); ++i)
    for (Eigen::Index c = 0; c < rows.cols(); ++c) v[i * rows.cols() + c] = rows(i, c);
  return v;
}

inline Eigen::MatrixXd unflatten(const Eigen::VectorXd& v, int d) {
  Eigen::MatrixXd rows(v.size() / d, d);
  for (Eigen::Index i = 0; i < rows.rows(); ++i)
    for (int c = 0; c < d; ++c) rows(i, c) = v[i * d + c];
  return rows;
}

}  // namespace oracle
