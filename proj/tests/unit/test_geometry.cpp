#include "escgnn/error.hpp"
#include "escgnn/geometry.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace escgnn;

TEST(Geometry, KnnMatchesBruteForce) {
  const Eigen::MatrixXd p = oracle::gaussian_points(11, 60, 3);
  const GeometricGraph g = build_knn_graph(p, 5);
  const auto expected = oracle::knn_edges(p, 5);
  std::set<std::pair<int, int>> got;
  for (int i = 0; i < g.num_nodes(); ++i) {
    for (std::size_t r = 0; r < g.adjacency[i].size(); ++r) {
      const int j = g.adjacency[i][r].index;
      if (r > 0) EXPECT_LT(g.adjacency[i][r - 1].index, j);
      EXPECT_TRUE(g.has_edge(j, i));
      got.insert({std::min(i, j), std::max(i, j)});
    }
  }
  EXPECT_EQ(got, expected);
  EXPECT_EQ(g.num_edges(), static_cast<std::int64_t>(expected.size()));
  EXPECT_TRUE(g.is_connected());
}

TEST(Geometry, DegreeFloorAddsNearestNonNeighbors) {
  // A chain under k = 1 leaves both ends at degree 1 < d = 2.
  Eigen::MatrixXd p(4, 2);
  p << 0, 0, 1, 0.01, 2.1, 0, 3.3, 0.02;
  const GeometricGraph g = build_knn_graph(p, 1);
  for (int i = 0; i < 4; ++i) EXPECT_GE(g.degree(i), 2);
  EXPECT_TRUE(g.has_edge(0, 2));
  EXPECT_TRUE(g.has_edge(3, 1));
  EXPECT_EQ(g.num_edges(), 5);
}

TEST(Geometry, KernelWeights) {
  const Eigen::MatrixXd p = oracle::gaussian_points(3, 20, 3);
  const GeometricGraph g = kernel_weights(build_knn_graph(p, 4), ExplicitEpsilon{0.7});
  for (int i = 0; i < g.num_nodes(); ++i) {
    for (const auto& nb : g.adjacency[i]) {
      const double d2 = (p.row(i) - p.row(nb.index)).squaredNorm();
      EXPECT_DOUBLE_EQ(nb.weight, std::exp(-d2 / 0.7));
    }
  }
  EXPECT_THROW(kernel_weights(build_knn_graph(p, 4), ExplicitEpsilon{0.0}), Error);
}

TEST(Geometry, MeanNeighborScale) {
  const Eigen::MatrixXd p = oracle::gaussian_points(5, 15, 3);
  const GeometricGraph g = build_knn_graph(p, 3);
  double total = 0.0;
  for (int i = 0; i < g.num_nodes(); ++i) {
    double s = 0.0;
    for (const auto& nb : g.adjacency[i]) s += (p.row(i) - p.row(nb.index)).norm();
    total += s / g.degree(i);
  }
  const double mean = total / g.num_nodes();
  std::vector<GeometricGraph> gs{g};
  EXPECT_NEAR(mean_neighbor_distance_sq(gs), mean * mean, 1e-12);
}

TEST(Geometry, RotationValidation) {
  Eigen::MatrixXd reflect = Eigen::MatrixXd::Identity(3, 3);
  reflect(2, 2) = -1;
  EXPECT_THROW(Rotation{reflect}, Error);
  EXPECT_THROW(Rotation{2.0 * Eigen::MatrixXd::Identity(3, 3)}, Error);
  const Rotation r = random_rotation(9, 3);
  EXPECT_NEAR((r.matrix().transpose() * r.matrix() - Eigen::MatrixXd::Identity(3, 3)).norm(), 0, 1e-12);
  EXPECT_NEAR(r.matrix().determinant(), 1.0, 1e-12);
  const Eigen::MatrixXd z = Rotation::about_z(M_PI / 2).matrix();
  EXPECT_NEAR(z(1, 0), 1.0, 1e-15);
  EXPECT_NEAR(z(0, 1), -1.0, 1e-15);
}

TEST(Geometry, RotateGraphKeepsEdgesAndWeights) {
  const Eigen::MatrixXd p = oracle::gaussian_points(8, 24, 3);
  GeometricGraph g = kernel_weights(build_knn_graph(p, 5), MeanNeighborSq{});
  g.vector_signals.push_back(p);
  const Rotation r = random_rotation(4, 3);
  const GeometricGraph h = rotate_graph(g, r);
  EXPECT_EQ(h.adjacency, g.adjacency);
  EXPECT_NEAR((h.coords - p * r.matrix().transpose()).norm(), 0, 1e-12);
  EXPECT_NEAR((h.vector_signals[0] - h.coords).norm(), 0, 1e-12);
  // Rebuilding from rotated points yields the same graph up to rounding.
  const GeometricGraph rebuilt = kernel_weights(build_knn_graph(h.coords, 5), MeanNeighborSq{});
  for (int i = 0; i < g.num_nodes(); ++i) {
    ASSERT_EQ(rebuilt.adjacency[i].size(), g.adjacency[i].size());
    for (std::size_t r2 = 0; r2 < g.adjacency[i].size(); ++r2) {
      EXPECT_EQ(rebuilt.adjacency[i][r2].index, g.adjacency[i][r2].index);
      EXPECT_NEAR(rebuilt.adjacency[i][r2].weight, g.adjacency[i][r2].weight, 1e-12);
    }
  }
}

TEST(Geometry, DiracPlacement) {
  const Eigen::MatrixXd p = oracle::gaussian_points(21, 30, 3);
  const GeometricGraph g = build_knn_graph(p, 5);
  const Eigen::RowVectorXd c = p.colwise().mean();
  Eigen::Index near = 0, far = 0;
  (p.rowwise() - c).rowwise().squaredNorm().minCoeff(&near);
  (p.rowwise() - c).rowwise().squaredNorm().maxCoeff(&far);
  const DiracPlacement d = place_dirac_signals(g);
  EXPECT_EQ(d.nearest, near);
  EXPECT_EQ(d.farthest, far);
  const Eigen::MatrixXd s = dirac_signals(g);
  EXPECT_EQ(s.rows(), 30);
  EXPECT_EQ(s.cols(), 2);
  EXPECT_DOUBLE_EQ(s.sum(), 2.0);
  EXPECT_DOUBLE_EQ(s(near, 0), 1.0);
  EXPECT_DOUBLE_EQ(s(far, 1), 1.0);
}

TEST(Geometry, Diameter) {
  Eigen::MatrixXd cube(8, 3);
  for (int i = 0; i < 8; ++i) cube.row(i) << (i & 1), (i >> 1) & 1, (i >> 2) & 1;
  EXPECT_DOUBLE_EQ(point_cloud_diameter(cube), std::sqrt(3.0));
}
