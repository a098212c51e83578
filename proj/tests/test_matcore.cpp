#include <cmath>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "pinch/matcore.hpp"
#include "pinch/random.hpp"

using namespace pinch;

namespace {

const GenMat kSwap{{0, 1}, {1, 0}};
const GenMat kFlip{{1, 0}, {0, -1}};

} // namespace

TEST(Commutator, SelfCommutatorVanishes) {
  Rng rng(7);
  const GenMat x = random_genmat(4, 4, rng);
  EXPECT_EQ(commutator(x, x), GenMat(4, 4));
}

TEST(Commutator, HandComputedPair) {
  EXPECT_EQ(commutator(kSwap, kFlip), (GenMat{{0, -2}, {2, 0}}));
}

TEST(Commutator, IdentityCommutes) {
  Rng rng(8);
  const GenMat y = random_genmat(3, 3, rng);
  EXPECT_EQ(commutator(GenMat::identity(3), y), GenMat(3, 3));
}

TEST(Commutator, RejectsMismatchedShapes) {
  EXPECT_THROW(commutator(GenMat(2, 2), GenMat(3, 3)), ShapeError);
  EXPECT_THROW(commutator(GenMat(2, 3), GenMat(2, 3)), ShapeError);
}

TEST(Commutator, AntisymmetricInArgumentsAndForSymmetricInputs) {
  for (std::uint64_t s = 0; s < 200; ++s) {
    Rng rng(sample_seed(11, s));
    const SymMat a = random_symmat(4, rng), b = random_symmat(4, rng);
    const GenMat ab = commutator(a, b), ba = commutator(b, a);
    EXPECT_EQ(ab, -ba);
    EXPECT_EQ(ab, -ab.transpose());
  }
}

TEST(Commutator, MatchesNaiveLoops) {
  for (std::uint64_t s = 0; s < 100; ++s) {
    Rng rng(sample_seed(12, s));
    const GenMat a = random_genmat(5, 5, rng), b = random_genmat(5, 5, rng);
    const auto ref = oracle::commutator(oracle::to_table(a), oracle::to_table(b));
    const GenMat c = commutator(a, b);
    for (std::size_t i = 0; i < 5; ++i)
      for (std::size_t j = 0; j < 5; ++j)
        EXPECT_NEAR(c(i, j), ref[i][j], 1e-13);
  }
}

TEST(Frobenius, Examples) {
  EXPECT_DOUBLE_EQ(frob_inner(GenMat::identity(3), GenMat::identity(3)), 3.0);
  EXPECT_DOUBLE_EQ(frob_inner(kSwap, kFlip), 0.0);
  const GenMat c{{0, -2}, {2, 0}};
  EXPECT_DOUBLE_EQ(frob_inner(c, c), 8.0);
  EXPECT_THROW(frob_inner(GenMat(2, 2), GenMat(2, 3)), ShapeError);
}

TEST(Frobenius, InnerIsTraceOfXYTranspose) {
  Rng rng(13);
  const GenMat x = random_genmat(3, 4, rng), y = random_genmat(3, 4, rng);
  const GenMat p = x * y.transpose();
  EXPECT_NEAR(frob_inner(x, y), p(0, 0) + p(1, 1) + p(2, 2), 1e-13);
}

TEST(SymMat, ConstructionSymmetrizesExactly) {
  Rng rng(14);
  const SymMat s(random_genmat(5, 5, rng));
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 5; ++j)
      EXPECT_EQ(s(i, j), s(j, i));
}

TEST(Gram, Examples) {
  EXPECT_EQ(gram(ShapeOperatorSet::zeros(3, 2)).mat(), GenMat(2, 2));
  const ShapeOperatorSet cl({SymMat::diagonal({1.0, -1.0})});
  EXPECT_DOUBLE_EQ(gram(cl)(0, 0), 2.0);
  const Spectrum sp = lambda_spectrum(gram(oracle::veronese_ops()));
  EXPECT_NEAR(sp.values[0], 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(sp.values[1], 2.0 / 3.0, 1e-15);
}

TEST(Gram, TraceEqualsTotalSAndIsPsd) {
  for (std::uint64_t s = 0; s < 500; ++s) {
    Rng rng(sample_seed(15, s));
    const auto ops = random_ops(uniform_index(rng, 1, 5), uniform_index(rng, 1, 6), rng);
    const SymMat g = gram(ops);
    EXPECT_NEAR(g.trace(), total_S(ops), 1e-12 * (1.0 + total_S(ops)));
    const Spectrum sp = lambda_spectrum(g);
    EXPECT_GE(sp.values.back(), -1e-10 * (1.0 + frob_norm(g)));
  }
}

TEST(Spectrum, Examples) {
  EXPECT_EQ(lambda_spectrum(SymMat::identity(3)).values, (std::vector<double>{1, 1, 1}));
  EXPECT_EQ(lambda_spectrum(SymMat::diagonal({2, 0})).values, (std::vector<double>{2, 0}));
  // S^1 x S^1 x S^2 (n = 4): block values (sqrt2, -sqrt2, 0) and (-1, -1, 1) solve
  // W W^T = G = [[3,-1,-1],[-1,3,-1],[-1,-1,1]] by hand.
  const double r2 = std::sqrt(2.0);
  const ShapeOperatorSet prod({SymMat::diagonal({r2, -r2, 0, 0}), SymMat::diagonal({-1, -1, 1, 1})});
  const Spectrum sp = lambda_spectrum(gram(prod));
  EXPECT_NEAR(sp.values[0], 4.0, 1e-14);
  EXPECT_NEAR(sp.values[1], 4.0, 1e-14);
}

TEST(Spectrum, DescendingAndMatchesClosedForm2x2) {
  for (std::uint64_t s = 0; s < 500; ++s) {
    Rng rng(sample_seed(16, s));
    const SymMat g = random_symmat(2, rng);
    const Spectrum sp = lambda_spectrum(g);
    EXPECT_GE(sp.values[0], sp.values[1]);
    EXPECT_NEAR(sp.values[0], oracle::largest_eig2(g(0, 0), g(0, 1), g(1, 1)), 1e-13);
  }
}

TEST(Spectrum, ReconstructionWithinEigTol) {
  for (std::uint64_t s = 0; s < 200; ++s) {
    Rng rng(sample_seed(17, s));
    const std::size_t n = uniform_index(rng, 1, 8);
    const SymMat g = random_symmat(n, rng);
    const EigenDecomposition e = jacobi_eigen(g);
    GenMat lam(n, n);
    for (std::size_t k = 0; k < n; ++k)
      lam(k, k) = e.values[k];
    const GenMat rec = e.vectors * lam * e.vectors.transpose();
    EXPECT_LE(frob_norm(rec - g.mat()), 1e-12 * (1.0 + frob_norm(g)));
    EXPECT_LE(orthogonality_defect(e.vectors), 1e-12);
    for (std::size_t k = 1; k < n; ++k)
      EXPECT_GE(e.values[k - 1], e.values[k]);
  }
}

TEST(Spectrum, ClipsRoundoffNegatives) {
  const Spectrum sp = lambda_spectrum(SymMat::diagonal({1.0, -1e-14}));
  EXPECT_EQ(sp.values.back(), 0.0);
  const Spectrum keep = lambda_spectrum(SymMat::diagonal({1.0, -1e-3}));
  EXPECT_EQ(keep.values.back(), -1e-3);
}

TEST(TotalS, Examples) {
  EXPECT_EQ(total_S(ShapeOperatorSet::zeros(3, 2)), 0.0);
  for (std::size_t n = 2; n <= 5; ++n)
    for (std::size_t k = 1; k < n; ++k) {
      const double nd = static_cast<double>(n), kd = static_cast<double>(k);
      std::vector<double> d(k, std::sqrt((nd - kd) / kd));
      d.insert(d.end(), n - k, -std::sqrt(kd / (nd - kd)));
      EXPECT_NEAR(total_S(ShapeOperatorSet({SymMat::diagonal(d)})), nd, 1e-13);
    }
}

TEST(RhoPerp0, Examples) {
  Rng rng(18);
  EXPECT_EQ(rho_perp0(ShapeOperatorSet({random_symmat(4, rng)})), 0.0);
  EXPECT_DOUBLE_EQ(rho_perp0(ShapeOperatorSet({SymMat(kSwap), SymMat(kFlip)})), 16.0);
  EXPECT_NEAR(rho_perp0(oracle::veronese_ops()), 16.0 / 9.0, 1e-14);
}

TEST(RhoPerp0, MatchesNaiveDoubleLoop) {
  for (std::uint64_t s = 0; s < 500; ++s) {
    Rng rng(sample_seed(19, s));
    const auto ops = random_ops(uniform_index(rng, 1, 5), uniform_index(rng, 1, 4), rng);
    const double ref = oracle::rho_perp0(ops);
    EXPECT_NEAR(rho_perp0(ops), ref, 1e-12 * (1.0 + ref));
  }
}

TEST(RhoPerp, ExamplesAndErrors) {
  EXPECT_EQ(rho_perp(ShapeOperatorSet::zeros(3, 2), 3), 0.0);
  EXPECT_NEAR(rho_perp(oracle::veronese_ops(), 2), 2.0 / 3.0, 1e-15);
  EXPECT_THROW(rho_perp(ShapeOperatorSet::zeros(1, 2), 1), DomainError);
}

TEST(RhoPerp, ScalesQuadratically) {
  Rng rng(20);
  const auto ops = random_ops(4, 3, rng);
  for (double t : {0.5, 2.0, 3.7})
    EXPECT_NEAR(rho_perp(ops.scaled(t), 4), t * t * rho_perp(ops, 4), 1e-12 * t * t * rho_perp(ops, 4));
}

TEST(RotateNormal, ExamplesAndErrors) {
  Rng rng(21);
  const auto ops = random_ops(3, 3, rng);
  EXPECT_EQ(rotate_normal(ops, GenMat::identity(3)), ops);
  const GenMat perm{{0, 0, 1}, {1, 0, 0}, {0, 1, 0}};
  const auto p = rotate_normal(ops, perm);
  // B^beta = sum_alpha perm(alpha, beta) A^alpha: beta=0 picks alpha=1.
  EXPECT_EQ(p[0], ops[1]);
  EXPECT_EQ(p[1], ops[2]);
  EXPECT_EQ(p[2], ops[0]);
  const GenMat o = random_orthogonal(3, rng);
  const double before = rho_perp0(ops), after = rho_perp0(rotate_normal(ops, o));
  EXPECT_LE(std::abs(before - after), 1e-10 * (1.0 + before));
  EXPECT_THROW(rotate_normal(ops, GenMat{{1, 0.1, 0}, {0, 1, 0}, {0, 0, 1}}), PreconditionError);
  EXPECT_THROW(rotate_normal(ops, GenMat::identity(2)), ShapeError);
}

TEST(RotateTangent, ExamplesAndErrors) {
  Rng rng(22);
  const auto ops = random_ops(3, 2, rng);
  EXPECT_EQ(rotate_tangent(ops, GenMat::identity(3)), ops);
  const auto flipped = rotate_tangent(ops, GenMat{{1, 0, 0}, {0, 1, 0}, {0, 0, -1}});
  EXPECT_EQ(gram(flipped).mat(), gram(ops).mat());
  const GenMat q = random_orthogonal(3, rng);
  const SymMat g0 = gram(ops), g1 = gram(rotate_tangent(ops, q));
  for (std::size_t a = 0; a < 2; ++a)
    for (std::size_t b = 0; b < 2; ++b)
      EXPECT_LE(std::abs(g0(a, b) - g1(a, b)), 1e-10 * (1.0 + frob_norm(g0)));
  EXPECT_THROW(rotate_tangent(ops, GenMat{{2, 0, 0}, {0, 1, 0}, {0, 0, 1}}), PreconditionError);
}

TEST(Property, FrameInvarianceOver1000Rotations) {
  for (std::uint64_t s = 0; s < 1000; ++s) {
    Rng rng(sample_seed(23, s));
    const std::size_t n = uniform_index(rng, 2, 5), m = uniform_index(rng, 1, 4);
    const auto ops = random_ops(n, m, rng);
    const auto rot = rotate_tangent(rotate_normal(ops, random_orthogonal(m, rng)), random_orthogonal(n, rng));
    auto rel = [](double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(a)); };
    EXPECT_LE(rel(total_S(ops), total_S(rot)), 1e-10);
    EXPECT_LE(rel(rho_perp0(ops), rho_perp0(rot)), 1e-10);
    const auto s0 = lambda_spectrum(gram(ops)).values, s1 = lambda_spectrum(gram(rot)).values;
    for (std::size_t k = 0; k < m; ++k)
      EXPECT_LE(rel(s0[k], s1[k]), 1e-10);
  }
}

TEST(Property, GramNormBoundedByLambda1TimesS) {
  for (std::uint64_t s = 0; s < 100000; ++s) {
    Rng rng(sample_seed(24, s));
    const auto ops = random_ops(uniform_index(rng, 1, 5), uniform_index(rng, 1, 4), rng);
    const SymMat g = gram(ops);
    const double lhs = frob_norm2(g), rhs = lambda_spectrum(g).largest() * total_S(ops);
    ASSERT_LE(lhs, rhs * (1.0 + 1e-12)) << "seed index " << s;
  }
}

TEST(ShapeOperatorSet, RejectsMixedDimensionsAndChecksMinimality) {
  EXPECT_THROW(ShapeOperatorSet({SymMat::identity(2), SymMat::identity(3)}), ShapeError);
  EXPECT_THROW(ShapeOperatorSet(std::vector<SymMat>{}), ShapeError);
  ShapeOperatorSet ok({SymMat::diagonal({1, -1})});
  EXPECT_NO_THROW(ok.mark_minimal(1e-12));
  EXPECT_TRUE(ok.minimal());
  ShapeOperatorSet bad({SymMat::diagonal({1, 0})});
  EXPECT_THROW(bad.mark_minimal(1e-12), PreconditionError);
}
