#include "lqframes/frames.hpp"
#include "lqframes/random.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <vector>

using namespace lqframes;

namespace {

MatrixXd e1e2e1() {
  MatrixXd d(2, 3);
  d << 1, 0, 1,
       0, 1, 0;
  return d;
}

}  // namespace

TEST(FrameBounds, Identity) {
  const auto b = frame_bounds(MatrixXd::Identity(4, 4));
  EXPECT_NEAR(b.lower, 1.0, 1e-14);
  EXPECT_NEAR(b.upper, 1.0, 1e-14);
}

TEST(FrameBounds, RepeatedColumn) {
  const auto b = frame_bounds(e1e2e1());
  EXPECT_NEAR(b.lower, 1.0, 1e-14);
  EXPECT_NEAR(b.upper, 2.0, 1e-14);
}

TEST(FrameBounds, RejectsRankDeficient) {
  MatrixXd d(2, 3);
  d << 1, 2, 3,
       2, 4, 6;
  try {
    frame_bounds(d);
    FAIL() << "expected NotAFrame";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NotAFrame);
  }
}

TEST(FrameBounds, SamplingInvariant) {
  const Frame f{e1e2e1()};
  Rng rng(7);
  for (int i = 0; i < 1000; ++i) {
    VectorXd x = gaussian_vector(2, rng);
    x.normalize();
    const double e = f.analyze(x).squaredNorm();
    EXPECT_GE(e, f.lower_bound() - 1e-9);
    EXPECT_LE(e, f.upper_bound() + 1e-9);
  }
  const Frame g = random_tight_frame(6, 9, 3);
  for (int i = 0; i < 1000; ++i) {
    VectorXd x = gaussian_vector(6, rng);
    x.normalize();
    EXPECT_NEAR(g.analyze(x).squaredNorm(), 1.0, 1e-9);
  }
}

TEST(CanonicalDual, TightFrameIsItsOwnDual) {
  const Frame f = random_tight_frame(5, 8, 11);
  EXPECT_LT((canonical_dual(f).matrix() - f.matrix()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(CanonicalDual, RepeatedColumnScalesRows) {
  const Frame dual = canonical_dual(Frame(e1e2e1()));
  MatrixXd expected = e1e2e1();
  expected.row(0) /= 2.0;
  EXPECT_LT((dual.matrix() - expected).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_NEAR(dual.lower_bound(), 0.5, 1e-14);
  EXPECT_NEAR(dual.upper_bound(), 1.0, 1e-14);
}

TEST(CanonicalDual, ReproducingIdentityAndInvolution) {
  Rng rng(5);
  const Frame f(gaussian_matrix(4, 7, rng));
  const Frame dual = canonical_dual(f);
  EXPECT_LT((dual.matrix() * f.matrix().transpose() - MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff(),
            1e-10);
  EXPECT_NEAR(dual.lower_bound(), 1.0 / f.upper_bound(), 1e-10);
  EXPECT_NEAR(dual.upper_bound(), 1.0 / f.lower_bound(), 1e-10);
  EXPECT_LT((canonical_dual(dual).matrix() - f.matrix()).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(CanonicalDual, IllConditionedCap) {
  MatrixXd d(2, 2);
  d << 1, 0,
       0, 1e-4;
  EXPECT_NO_THROW(canonical_dual(Frame(d)));
  try {
    canonical_dual(Frame(d), 1e6);
    FAIL() << "expected IllConditioned";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::IllConditioned);
  }
}

TEST(RandomTightFrame, SquareIsOrthogonal) {
  const Frame f = random_tight_frame(2, 2, 1);
  EXPECT_LT((f.matrix().transpose() * f.matrix() - MatrixXd::Identity(2, 2)).norm(), 1e-12);
}

TEST(RandomTightFrame, FigureOneSize) {
  const Frame f = random_tight_frame(100, 110, 2024);
  EXPECT_NEAR(f.lower_bound(), 1.0, 1e-10);
  EXPECT_NEAR(f.upper_bound(), 1.0, 1e-10);
  EXPECT_TRUE(f.is_tight());
}

TEST(RandomTightFrame, Deterministic) {
  EXPECT_EQ(random_tight_frame(7, 12, 99).matrix(), random_tight_frame(7, 12, 99).matrix());
  EXPECT_NE(random_tight_frame(7, 12, 99).matrix(), random_tight_frame(7, 12, 100).matrix());
}

TEST(RandomTightFrame, RejectsWideAmbient) {
  try {
    random_tight_frame(5, 4, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvalidDimensions);
  }
}

TEST(MutualCoherence, IdenticalBases) {
  const std::vector<MatrixXd> d{MatrixXd::Identity(4, 4), MatrixXd::Identity(4, 4)};
  EXPECT_DOUBLE_EQ(mutual_coherence(std::span<const MatrixXd>(d)), 1.0);
}

TEST(MutualCoherence, SpikesAndHadamard) {
  for (Index n : {4, 16, 32}) {
    const std::vector<Frame> d{identity_frame(n), hadamard_frame(n)};
    EXPECT_NEAR(mutual_coherence(std::span<const Frame>(d)), 1.0 / std::sqrt(double(n)), 1e-14);
  }
}

TEST(MutualCoherence, AllPairsAndSymmetry) {
  Rng rng(3);
  auto unit_cols = [&](Index cols) {
    MatrixXd m = gaussian_matrix(5, cols, rng);
    m.colwise().normalize();
    return m;
  };
  std::vector<MatrixXd> d{unit_cols(6), unit_cols(7), unit_cols(5)};
  // brute force over every pair and column pair
  double brute = 0.0;
  for (std::size_t k = 0; k < d.size(); ++k)
    for (std::size_t l = 0; l < d.size(); ++l)
      if (k != l) brute = std::max(brute, (d[k].transpose() * d[l]).cwiseAbs().maxCoeff());
  EXPECT_DOUBLE_EQ(mutual_coherence(std::span<const MatrixXd>(d)), brute);

  std::vector<MatrixXd> rev(d.rbegin(), d.rend());
  EXPECT_DOUBLE_EQ(mutual_coherence(std::span<const MatrixXd>(rev)), brute);
  std::vector<MatrixXd> perm = d;
  perm[0] = d[0](Eigen::all, std::vector<Index>{5, 3, 1, 0, 2, 4});
  EXPECT_DOUBLE_EQ(mutual_coherence(std::span<const MatrixXd>(perm)),
                   mutual_coherence(std::span<const MatrixXd>(d)));
}

TEST(MutualCoherence, MismatchedAmbient) {
  const std::vector<MatrixXd> d{MatrixXd::Identity(3, 3), MatrixXd::Identity(4, 4)};
  try {
    mutual_coherence(std::span<const MatrixXd>(d));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvalidDimensions);
  }
}

TEST(HardThreshold, KeepsLargest) {
  VectorXd x(3);
  x << 3, -1, 2;
  const auto a = hard_threshold(x, 2);
  EXPECT_EQ(a.support, (std::vector<Index>{0, 2}));
  EXPECT_DOUBLE_EQ(a.residual_q_norm, 1.0);
  EXPECT_EQ(a.dense(3), (VectorXd(3) << 3, 0, 2).finished());
}

TEST(HardThreshold, FullSupportHasNoResidual) {
  VectorXd x(4);
  x << 1, -2, 3, 0.5;
  EXPECT_EQ(hard_threshold(x, 4, 0.5).residual_q_norm, 0.0);
}

TEST(HardThreshold, TiesGoToLowerIndex) {
  const auto a = hard_threshold(VectorXd::Ones(3), 1);
  EXPECT_EQ(a.support, (std::vector<Index>{0}));
}

TEST(HardThreshold, ResidualNonIncreasingInS) {
  Rng rng(17);
  const VectorXd x = gaussian_vector(12, rng);
  for (double q : {0.3, 0.7, 1.0}) {
    double prev = std::numeric_limits<double>::infinity();
    for (Index s = 0; s <= 12; ++s) {
      const double r = hard_threshold(x, s, q).residual_q_norm;
      EXPECT_LE(r, prev);
      prev = r;
    }
  }
}

TEST(CosparseSignal, IdentityGivesSparseSignal) {
  const auto sig = cosparse_signal(identity_frame(10), 3, 5);
  EXPECT_EQ((sig.signal.array().abs() > 1e-10).count(), 3);
  EXPECT_NEAR(sig.signal.norm(), 1.0, 1e-12);
}

TEST(CosparseSignal, FigureOneSize) {
  const Frame f = random_tight_frame(100, 110, 1);
  const auto sig = cosparse_signal(f, 25, 2);
  EXPECT_LE((sig.coefficients.array().abs() > 1e-10).count(), 25);
  EXPECT_LE(hard_threshold(sig.coefficients, 25, 2.0).residual_q_norm, 1e-10);
  EXPECT_EQ(sig.signal, cosparse_signal(f, 25, 2).signal);
}

TEST(CosparseSignal, GenericFrameTooSparse) {
  const Frame f = random_tight_frame(8, 10, 1);
  try {
    cosparse_signal(f, 1, 2, 4);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::GenerationFailed);
  }
}

TEST(PlantedInstance, ExactCosparsityAndTightness) {
  const auto inst = planted_cosparse_instance(64, 80, 8, 42);
  EXPECT_TRUE(inst.frame.is_tight(1e-10));
  EXPECT_NEAR(inst.frame.lower_bound(), 1.0, 1e-10);
  EXPECT_EQ((inst.signal.coefficients.array().abs() > 1e-10).count(), 8);
  EXPECT_NEAR(inst.signal.signal.norm(), 1.0, 1e-12);
}
