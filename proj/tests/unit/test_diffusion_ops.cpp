#include "escgnn/diffusion_ops.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

using namespace escgnn;

namespace {

GeometricGraph weighted_graph(std::uint64_t seed, int n, int k = 5) {
  return kernel_weights(build_knn_graph(oracle::gaussian_points(seed, n, 3), k), MeanNeighborSq{});
}

}  // namespace

TEST(DiffusionOps, LazyWalkMatchesDenseFormula) {
  const GeometricGraph g = weighted_graph(1, 30);
  const SparseOperator p = build_lazy_walk(g);
  EXPECT_TRUE(p.row_stochastic);
  const Eigen::MatrixXd dense = dense_materialize(p);
  EXPECT_NEAR((dense - oracle::lazy_walk(g)).cwiseAbs().maxCoeff(), 0.0, 1e-15);
  EXPECT_NEAR((dense.rowwise().sum().array() - 1.0).abs().maxCoeff(), 0.0, 1e-14);
  for (int i = 0; i < p.n; ++i) {
    for (int r = p.row_ptr[i] + 1; r < p.row_ptr[i + 1]; ++r) EXPECT_LT(p.col_idx[r - 1], p.col_idx[r]);
  }
}

TEST(DiffusionOps, ApplyPowerMatchesDensePower) {
  const GeometricGraph g = weighted_graph(2, 25);
  const SparseOperator p = build_lazy_walk(g);
  const Eigen::MatrixXd x = oracle::gaussian_matrix(3, 25, 4);
  const Eigen::MatrixXd y = apply_power(p, x, 7);
  EXPECT_NEAR((y - oracle::power(oracle::lazy_walk(g), 7) * x).cwiseAbs().maxCoeff(), 0, 1e-13);
  EXPECT_THROW(apply_power(p, oracle::gaussian_matrix(3, 24, 1), 1), Error);
  EXPECT_THROW(apply_power(p, x, -1), Error);
}

TEST(DiffusionOps, FramesMatchSvdOfWeightedOffsets) {
  const GeometricGraph g = weighted_graph(4, 40);
  const LocalFrameSet frames = build_local_frames(g, {.canonicalize_signs = false});
  for (int i = 0; i < g.num_nodes(); ++i) {
    Eigen::MatrixXd b(3, g.degree(i));
    for (int r = 0; r < g.degree(i); ++r) {
      const auto& nb = g.adjacency[i][r];
      b.col(r) = std::sqrt(nb.weight) * (g.coords.row(nb.index) - g.coords.row(i)).transpose();
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(b, Eigen::ComputeFullU);
    const LocalFrame& f = frames.frames[i];
    EXPECT_NEAR((f.singular_values - svd.singularValues()).norm(), 0, 1e-10 * svd.singularValues()[0]);
    EXPECT_NEAR((f.basis.transpose() * f.basis - Eigen::MatrixXd::Identity(3, 3)).norm(), 0, 1e-12);
    if (f.flagged()) continue;
    for (int k = 0; k < 3; ++k) EXPECT_NEAR(std::abs(f.basis.col(k).dot(svd.matrixU().col(k))), 1.0, 1e-8);
  }
}

TEST(DiffusionOps, SignCanonicalizationMakesThirdMomentsNonnegative) {
  const GeometricGraph g = weighted_graph(5, 40);
  const LocalFrameSet frames = build_local_frames(g);
  for (int i = 0; i < g.num_nodes(); ++i) {
    const LocalFrame& f = frames.frames[i];
    for (int k = 0; k < 3; ++k) {
      if (f.signs[k] == SignProvenance::FallbackFlagged) continue;
      double m3 = 0.0;
      for (const auto& nb : g.adjacency[i]) {
        m3 += nb.weight * std::pow((g.coords.row(nb.index) - g.coords.row(i)).dot(f.basis.col(k)), 3);
      }
      EXPECT_GE(m3, 0.0);
    }
  }
}

TEST(DiffusionOps, FramesRotateCovariantly) {
  const GeometricGraph g = weighted_graph(6, 40);
  const Rotation r = random_rotation(7, 3);
  const LocalFrameSet a = build_local_frames(g);
  const LocalFrameSet b = build_local_frames(rotate_graph(g, r));
  for (int i = 0; i < g.num_nodes(); ++i) {
    if (a.frames[i].flagged()) continue;
    EXPECT_NEAR((b.frames[i].basis - r.matrix() * a.frames[i].basis).norm(), 0, 1e-9);
  }
}

TEST(DiffusionOps, VectorDiffusionBlocks) {
  const GeometricGraph g = weighted_graph(8, 20);
  const SparseOperator p = build_lazy_walk(g);
  const LocalFrameSet frames = build_local_frames(g);
  const BlockSparseOperator q = build_vector_diffusion(p, frames);
  const Eigen::MatrixXd dense = dense_materialize(q);
  const Eigen::MatrixXd pd = oracle::lazy_walk(g);
  for (int i = 0; i < 20; ++i) {
    for (int j = 0; j < 20; ++j) {
      const Eigen::MatrixXd expected =
          pd(i, j) * frames.frames[i].basis * frames.frames[j].basis.transpose();
      EXPECT_NEAR((dense.block(3 * i, 3 * j, 3, 3) - expected).cwiseAbs().maxCoeff(), 0, 1e-15);
    }
  }
  // apply agrees with the dense matrix
  const Eigen::MatrixXd x = oracle::gaussian_matrix(9, 60, 2);
  EXPECT_NEAR((q.apply(x) - dense * x).cwiseAbs().maxCoeff(), 0, 1e-14);
  // round trip through block_sparsify
  const BlockSparseOperator back = block_sparsify(dense, p, 3);
  EXPECT_EQ(back.col_idx, q.col_idx);
  EXPECT_EQ(back.blocks, q.blocks);
}

TEST(DiffusionOps, IdentityFramesGiveKroneckerProduct) {
  const GeometricGraph g = weighted_graph(10, 12);
  const SparseOperator p = build_lazy_walk(g);
  const BlockSparseOperator q = build_vector_diffusion(p, LocalFrameSet::identity(12, 3));
  const Eigen::MatrixXd pd = dense_materialize(p);
  Eigen::MatrixXd kron = Eigen::MatrixXd::Zero(36, 36);
  for (int i = 0; i < 12; ++i)
    for (int j = 0; j < 12; ++j) kron.block(3 * i, 3 * j, 3, 3) = pd(i, j) * Eigen::MatrixXd::Identity(3, 3);
  EXPECT_EQ(dense_materialize(q), kron);
}

TEST(DiffusionOps, RankDeficientNeighborhoodThrows) {
  // Collinear points in R^3.
  Eigen::MatrixXd p(10, 3);
  for (int i = 0; i < 10; ++i) p.row(i) << i, 2.0 * i, 0.0;
  const GeometricGraph g = build_knn_graph(p, 4);
  try {
    build_local_frames(g);
    FAIL() << "expected RankDeficientFrame";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::RankDeficientFrame);
  }
}
