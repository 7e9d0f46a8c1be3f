#include "escgnn/scattering.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace escgnn;

TEST(Scattering, PathEnumeration) {
  const auto paths = scattering_paths(3);
  ASSERT_EQ(static_cast<int>(paths.size()), 1 + 4 + 6);
  EXPECT_EQ(paths[0].order, 0);
  EXPECT_EQ(paths[4].indices, std::vector<int>{3});
  EXPECT_TRUE(paths[4].low_pass);
  EXPECT_EQ(paths[5].indices, (std::vector<int>{0, 0}));
  EXPECT_EQ(paths[10].indices, (std::vector<int>{2, 2}));
  for (int b = 1; b < 8; ++b) {
    EXPECT_EQ(order2_path_count(b), static_cast<int>(scattering_paths(b).size()));
  }
  ScatteringConfig strict;
  strict.include_diagonal = false;
  EXPECT_EQ(scattering_paths(3, strict).size(), 1u + 4u + 3u);
}

TEST(Scattering, ScalarCoefficientsMatchDenseCascade) {
  const GeometricGraph g =
      kernel_weights(build_knn_graph(oracle::gaussian_points(1, 20, 3), 5), MeanNeighborSq{});
  const SparseOperator p = build_lazy_walk(g);
  const WaveletBank bank = dyadic_scales(2);
  const Eigen::MatrixXd x = oracle::gaussian_matrix(2, 20, 2);
  const auto filt = oracle::filters(dense_materialize(p), bank.scales);
  const int nb = bank.num_bands();
  for (ScalarActivation act : {ScalarActivation::Identity, ScalarActivation::Abs, ScalarActivation::Tanh}) {
    auto sigma = [act](Eigen::MatrixXd m) {
      return m.unaryExpr([act](double v) {
        return act == ScalarActivation::Identity ? v : act == ScalarActivation::Abs ? std::abs(v) : std::tanh(v);
      }).eval();
    };
    const ScatteringTensor t = scalar_scattering(p, bank, x, {}, act);
    for (std::size_t s = 0; s < t.paths.size(); ++s) {
      const ScatteringPath& path = t.paths[s];
      Eigen::MatrixXd want = x;
      if (path.order == 1) want = sigma(filt[path.indices[0]] * x);
      if (path.order == 2) want = sigma(filt[path.indices[1]] * sigma(filt[path.indices[0]] * x));
      for (int i = 0; i < 20; ++i)
        for (int f = 0; f < 2; ++f) EXPECT_NEAR(t.values(i, f, s), want(i, f), 1e-13) << path.label();
    }
    EXPECT_EQ(static_cast<int>(t.paths.size()), order2_path_count(nb));
  }
}

TEST(Scattering, RadialActivation) {
  Eigen::VectorXd w(3);
  w << 3, 0, 4;
  const Eigen::VectorXd y = radial_activation(w, RadialFn::Tanh);
  EXPECT_NEAR(y.norm(), std::tanh(5.0), 1e-15);
  EXPECT_NEAR(y.normalized().dot(w.normalized()), 1.0, 1e-15);
  EXPECT_EQ(radial_activation(Eigen::VectorXd::Zero(3), RadialFn::Tanh), Eigen::VectorXd::Zero(3));
  EXPECT_EQ(radial_activation(w, RadialFn::Identity), w);
}

TEST(Scattering, Moments) {
  ScatteringTensor t;
  t.values = Tensor3(2, 1, 2);
  t.values(0, 0, 0) = 1;
  t.values(1, 0, 0) = -2;
  t.values(0, 0, 1) = 3;
  t.values(1, 0, 1) = 0.5;
  t.paths = {ScatteringPath{}, ScatteringPath{1, {0}, false}};
  const Eigen::VectorXd m = scattering_moments(t, {1, 2});
  ASSERT_EQ(m.size(), 4);
  EXPECT_DOUBLE_EQ(m[0], 3.0);    // path 0, q = 1
  EXPECT_DOUBLE_EQ(m[1], 5.0);    // path 0, q = 2
  EXPECT_DOUBLE_EQ(m[2], 3.5);
  EXPECT_DOUBLE_EQ(m[3], 9.25);
}

TEST(Scattering, VectorInvariantsHandExample) {
  // Path 0 - 1 - 2.
  GeometricGraph g;
  g.coords = Eigen::MatrixXd::Zero(3, 2);
  g.adjacency = {{{1, 1.0}}, {{0, 1.0}, {2, 1.0}}, {{1, 1.0}}};
  Tensor3 w(3, 2, 1);
  w(0, 0, 0) = 1;                  // (1, 0)
  w(1, 0, 0) = 1, w(1, 1, 0) = 1;  // (1, 1)
  w(2, 1, 0) = -2;                 // (0, -2)
  const Tensor3 inv = vector_invariants(w, g);
  const double r = 1.0 / std::sqrt(2.0);
  EXPECT_NEAR(inv(0, 0, 0), 1.0, 1e-15);
  EXPECT_NEAR(inv(1, 0, 0), std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(inv(0, 1, 0), r, 1e-15);
  EXPECT_NEAR(inv(0, 2, 0), r, 1e-15);
  EXPECT_NEAR(inv(1, 1, 0), 0.5 * (r - r), 1e-15);
  EXPECT_NEAR(inv(1, 2, 0), r, 1e-15);
  EXPECT_NEAR(inv(2, 1, 0), -r, 1e-15);
}

TEST(Scattering, VectorInvariantsBackwardMatchesFiniteDifferences) {
  const GeometricGraph g = build_knn_graph(oracle::gaussian_points(3, 12, 3), 4);
  Tensor3 w(12, 3, 2);
  const Eigen::MatrixXd r = oracle::gaussian_matrix(4, static_cast<int>(w.size()), 1);
  for (std::size_t i = 0; i < w.size(); ++i) w.data()[i] = r(i, 0);
  Tensor3 gout(12, 3, 2);
  const Eigen::MatrixXd rg = oracle::gaussian_matrix(5, static_cast<int>(gout.size()), 1);
  for (std::size_t i = 0; i < gout.size(); ++i) gout.data()[i] = rg(i, 0);
  auto loss = [&](const Tensor3& x) {
    const Tensor3 y = vector_invariants(x, g);
    double s = 0;
    for (std::size_t i = 0; i < y.size(); ++i) s += y.data()[i] * gout.data()[i];
    return s;
  };
  const Tensor3 grad = vector_invariants_backward(w, g, gout);
  const double h = 1e-6;
  for (std::size_t i = 0; i < w.size(); ++i) {
    Tensor3 a = w, b = w;
    a.data()[i] += h;
    b.data()[i] -= h;
    EXPECT_NEAR(grad.data()[i], (loss(a) - loss(b)) / (2 * h), 1e-6);
  }
}
