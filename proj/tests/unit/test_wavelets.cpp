#include "escgnn/wavelets.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

using namespace escgnn;

namespace {

struct Fixture {
  GeometricGraph g;
  SparseOperator p;
  BlockSparseOperator q;
};

Fixture make(std::uint64_t seed, int n) {
  Fixture f;
  f.g = kernel_weights(build_knn_graph(oracle::gaussian_points(seed, n, 3), 5), MeanNeighborSq{});
  f.p = build_lazy_walk(f.g);
  f.q = build_vector_diffusion(f.p, build_local_frames(f.g));
  return f;
}

}  // namespace

TEST(Wavelets, DyadicScales) {
  EXPECT_EQ(dyadic_scales(3).scales, (std::vector<int>{0, 1, 2, 4, 8}));
  EXPECT_EQ(dyadic_scales(3).num_bands(), 4);
  EXPECT_EQ(dyadic_scales(0).scales, (std::vector<int>{0, 1}));
}

TEST(Wavelets, BankValidation) {
  EXPECT_THROW(WaveletBank::custom({1, 2, 4}), Error);
  EXPECT_THROW(WaveletBank::custom({0, 2, 2}), Error);
  EXPECT_THROW(WaveletBank::custom({0}), Error);
  EXPECT_NO_THROW(WaveletBank::custom({0, 3, 5}));
}

TEST(Wavelets, TransformMatchesDenseFilters) {
  const Fixture f = make(1, 24);
  const Eigen::MatrixXd x = oracle::gaussian_matrix(2, 24, 3);
  const WaveletBank bank = WaveletBank::custom({0, 1, 3, 6});
  const auto got = wavelet_transform(f.p, bank, x);
  const auto want = oracle::filters(dense_materialize(f.p), bank.scales);
  ASSERT_EQ(got.size(), want.size());
  for (std::size_t b = 0; b < got.size(); ++b) {
    EXPECT_NEAR((got[b] - want[b] * x).cwiseAbs().maxCoeff(), 0, 1e-13) << "filter " << b;
  }
  const Eigen::MatrixXd w = oracle::gaussian_matrix(3, 72, 1);
  const auto got_q = wavelet_transform(f.q, bank, w);
  const auto want_q = oracle::filters(dense_materialize(f.q), bank.scales);
  for (std::size_t b = 0; b < got_q.size(); ++b) {
    EXPECT_NEAR((got_q[b] - want_q[b] * w).cwiseAbs().maxCoeff(), 0, 1e-13) << "filter " << b;
  }
}

TEST(Wavelets, QuantileCrossingsHandExample) {
  // c = 8,4,2,1,0: progress 0, .5, .75, .875, 1
  const std::vector<double> decay{8, 4, 2, 1, 0};
  EXPECT_EQ(quantile_crossings(decay, {0.25, 0.5, 0.8}), (std::vector<int>{1, 1, 3}));
  EXPECT_TRUE(quantile_crossings({1, 1, 1}, {0.5}).empty());
}

TEST(Wavelets, MergeUsesMedianRoundedHalfUp) {
  InfoGainOptions o;
  o.t_max = 16;
  o.quantiles = {0.25, 0.5, 0.75};
  // medians: {2,3} -> 3 (2.5 up), {4,9} -> 7 (6.5 up), {10,12} -> 11
  const WaveletBank b = merge_infogain_scales({{2, 4, 10}, {3, 9, 12}}, o);
  EXPECT_EQ(b.scales, (std::vector<int>{0, 1, 3, 7, 11, 16}));
  EXPECT_EQ(b.mode, BankMode::InfoGain);
  EXPECT_THROW(merge_infogain_scales({}, o), Error);
  o.quantiles = {0.5, 0.25};
  EXPECT_THROW(merge_infogain_scales({{1, 2}}, o), Error);
}

TEST(Wavelets, InfoGainMatchesDenseDecay) {
  const Fixture f = make(4, 30);
  const Eigen::MatrixXd x = dirac_signals(f.g);
  InfoGainOptions o;
  const Eigen::MatrixXd pd = dense_materialize(f.p);
  std::vector<std::vector<int>> crossings;
  for (int c = 0; c < x.cols(); ++c) {
    const Eigen::VectorXd limit = oracle::power(pd, o.t_max) * x.col(c);
    std::vector<double> decay;
    for (int t = 0; t <= o.t_max; ++t) decay.push_back((oracle::power(pd, t) * x.col(c) - limit).lpNorm<1>());
    crossings.push_back(quantile_crossings(decay, o.quantiles));
  }
  const WaveletBank b = infogain_scales(f.p, x, o);
  EXPECT_EQ(b, merge_infogain_scales(crossings, o));
  EXPECT_EQ(b.scales.front(), 0);
  EXPECT_EQ(b.scales[1], 1);
  EXPECT_EQ(b.scales.back(), 16);
}

TEST(Wavelets, StationarySignalsAreRejected) {
  const Fixture f = make(5, 20);
  try {
    infogain_scales(f.p, Eigen::MatrixXd::Ones(20, 2));
    FAIL() << "expected AllSignalsFlat";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::AllSignalsFlat);
  }
}

TEST(Wavelets, FrameBoundsOnSmallGraph) {
  const Fixture f = make(6, 16);
  const double bound = degree_ratio(f.g);
  for (const WaveletBank& bank : {dyadic_scales(3), WaveletBank::custom({0, 1, 2, 6, 16})}) {
    const auto rp = verify_frame_bounds(f.p, bank, bound, 200, 1);
    EXPECT_TRUE(rp.upper_bound_holds());
    EXPECT_GT(rp.frame_operator_min_eig, 0.0);
    const auto rq = verify_frame_bounds(f.q, bank, bound, 200, 2);
    EXPECT_TRUE(rq.upper_bound_holds());
    EXPECT_GT(rq.frame_operator_min_eig, 0.0);
  }
}
