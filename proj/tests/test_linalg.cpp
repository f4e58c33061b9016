#include <gtest/gtest.h>

#include <numbers>

#include "oracles.hpp"

using namespace dod;

TEST(GInner, CanonicalVectorsAreOrthogonal) {
  EXPECT_DOUBLE_EQ(g_inner(Vector{1, 0}, Vector{0, 1}, GramMatrix::identity(2)), 0.0);
}

TEST(GInner, DiagonalWeightsHandExpansion) {
  EXPECT_DOUBLE_EQ(g_inner(Vector{1, 2}, Vector{3, 1}, GramMatrix::diagonal({2, 1})), 8.0);
}

TEST(GInner, DimensionMismatchThrows) {
  EXPECT_THROW(g_inner(Vector{1, 2, 3}, Vector{1, 2}, GramMatrix::identity(2)), DimensionMismatch);
}

TEST(GNorm, HandValues) {
  EXPECT_DOUBLE_EQ(g_norm(Vector{3, 4}, GramMatrix::identity(2)), 5.0);
  EXPECT_DOUBLE_EQ(g_norm(Vector{0, 0, 0}, GramMatrix::identity(3)), 0.0);
  EXPECT_NEAR(g_norm(Vector{1, 1}, GramMatrix::diagonal({4, 9})), std::sqrt(13.0), 1e-15);
}

TEST(GNorm, IdentityEqualsEuclidean) {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 20; ++t) {
    const Vector u = oracle::random_vector(17, rng);
    double s = 0.0;
    for (double x : u) s += x * x;
    EXPECT_NEAR(g_norm(u, GramMatrix::identity(17)), std::sqrt(s), 1e-14);
  }
}

TEST(GInner, SymmetricAndDenseMatchesOracle) {
  std::mt19937_64 rng(2);
  const Matrix b = oracle::random_matrix(6, 6, rng);
  Matrix spd = oracle::naive_mul(oracle::naive_t(b), b);
  for (std::size_t i = 0; i < 6; ++i) spd(i, i) += 1.0;
  const GramMatrix g = GramMatrix::dense(spd);
  const Vector u = oracle::random_vector(6, rng), v = oracle::random_vector(6, rng);
  double ref = 0.0;
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 6; ++j) ref += u[i] * spd(i, j) * v[j];
  EXPECT_NEAR(g_inner(u, v, g), ref, 1e-12);
  EXPECT_NEAR(g_inner(u, v, g), g_inner(v, u, g), 1e-12);
  EXPECT_GE(g_inner(u, u, g), 0.0);
}

TEST(GramMatrix, RejectsNonPositive) {
  EXPECT_THROW(GramMatrix::diagonal({1.0, 0.0}), Error);
  EXPECT_THROW(GramMatrix::dense(Matrix::from_rows({{1, 2}, {2, 1}})), Error);  // indefinite
  EXPECT_THROW(GramMatrix::dense(Matrix::from_rows({{1, 0.5}, {0, 1}})), Error);  // asymmetric
}

TEST(MatrixOps, MatmulMatchesNaive) {
  std::mt19937_64 rng(3);
  const Matrix a = oracle::random_matrix(5, 4, rng), b = oracle::random_matrix(4, 3, rng);
  EXPECT_LT(oracle::max_abs_diff(matmul(a, b), oracle::naive_mul(a, b)), 1e-14);
  const Matrix c = oracle::random_matrix(5, 3, rng);
  EXPECT_LT(oracle::max_abs_diff(matmul_tn(a, c), oracle::naive_mul(oracle::naive_t(a), c)), 1e-14);
  EXPECT_THROW(matmul(a, a), DimensionMismatch);
}

TEST(Orth, OrthonormalInputUnchanged) {
  const Matrix w = Matrix::identity(3).col_block(0, 2);
  EXPECT_LT(oracle::max_abs_diff(orth(w, GramMatrix::identity(3), OrthMode::GramSchmidt), w), 1e-15);
  EXPECT_LT(oracle::max_abs_diff(orth(w, GramMatrix::identity(3), OrthMode::HouseholderQR), w), 1e-15);
}

TEST(Orth, ColumnRescaling) {
  const Matrix w = Matrix::from_rows({{2, 0}, {0, 3}, {0, 0}});
  const Matrix expect = Matrix::from_rows({{1, 0}, {0, 1}, {0, 0}});
  EXPECT_LT(oracle::max_abs_diff(orth(w, OrthMode::GramSchmidt), expect), 1e-15);
  EXPECT_LT(oracle::max_abs_diff(orth(w, OrthMode::HouseholderQR), expect), 1e-15);
}

TEST(Orth, WeightedProjectorMatchesNormalEquations) {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 10; ++t) {
    const Matrix w = oracle::random_matrix(6, 3, rng);
    const GramMatrix g = oracle::random_diag_gram(6, rng);
    const Matrix v = orth(w, g, OrthMode::GramSchmidt);
    EXPECT_LT(orthonormality_defect(v, g), 1e-10);
    const Matrix gd = oracle::dense_of(g);
    EXPECT_LT(oracle::max_abs_diff(oracle::basis_projector(v, gd), oracle::normal_eq_projector(w, gd)), 1e-10);
  }
}

TEST(Orth, BothModesGiveSameProjector) {
  std::mt19937_64 rng(5);
  const Matrix id = Matrix::identity(30);
  for (int t = 0; t < 10; ++t) {
    const Matrix w = oracle::random_matrix(30, 5, rng);
    const Matrix a = orth(w, OrthMode::GramSchmidt);
    const Matrix b = orth(w, OrthMode::HouseholderQR);
    EXPECT_LT(orthonormality_defect(a, GramMatrix::identity(30)), 1e-10);
    EXPECT_LT(orthonormality_defect(b, GramMatrix::identity(30)), 1e-10);
    EXPECT_LT(oracle::max_abs_diff(oracle::basis_projector(a, id), oracle::basis_projector(b, id)), 1e-8);
  }
}

TEST(Orth, IllConditionedStillOrthonormal) {
  // condition number ~1e5
  std::mt19937_64 rng(6);
  Matrix w = oracle::random_matrix(20, 4, rng);
  for (std::size_t i = 0; i < 20; ++i) w(i, 3) = w(i, 2) + 1e-5 * w(i, 3);
  const GramMatrix g = oracle::random_diag_gram(20, rng);
  EXPECT_LT(orthonormality_defect(orth(w, g), g), 1e-10);
}

TEST(Orth, RankDeficientReportsColumn) {
  const Matrix w = Matrix::from_rows({{1, 2, 0}, {1, 2, 1}, {0, 0, 1}, {0, 0, 0}});
  try {
    orth(w, GramMatrix::identity(4));
    FAIL() << "expected RankDeficient";
  } catch (const RankDeficient& e) {
    EXPECT_EQ(e.column(), 1u);
  }
  EXPECT_THROW(orth(w, OrthMode::HouseholderQR), RankDeficient);
}

TEST(Orth, HouseholderRejectsWeightedGram) {
  EXPECT_THROW(orth(Matrix::identity(3), GramMatrix::diagonal({1, 2, 3}), OrthMode::HouseholderQR), ConfigError);
}

TEST(Orth, ModeNames) {
  EXPECT_EQ(orth_mode_from_string(to_string(OrthMode::GramSchmidt)), OrthMode::GramSchmidt);
  EXPECT_EQ(orth_mode_from_string(to_string(OrthMode::HouseholderQR)), OrthMode::HouseholderQR);
  EXPECT_THROW(orth_mode_from_string("svd"), ConfigError);
}

TEST(SymEig, Diagonal) {
  const SymEig e = sym_eig(Matrix::from_rows({{1, 0, 0}, {0, 5, 0}, {0, 0, 3}}));
  ASSERT_EQ(e.values.size(), 3u);
  EXPECT_DOUBLE_EQ(e.values[0], 5.0);
  EXPECT_DOUBLE_EQ(e.values[1], 3.0);
  EXPECT_DOUBLE_EQ(e.values[2], 1.0);
}

TEST(SymEig, TwoByTwoClosedForm) {
  const SymEig e = sym_eig(Matrix::from_rows({{2, 1}, {1, 2}}));
  EXPECT_NEAR(e.values[0], 3.0, 1e-14);
  EXPECT_NEAR(e.values[1], 1.0, 1e-14);
  const double r = 1.0 / std::sqrt(2.0);
  EXPECT_NEAR(std::abs(e.vectors(0, 0)), r, 1e-14);
  EXPECT_NEAR(e.vectors(0, 0) * e.vectors(1, 0), 0.5, 1e-14);   // ±[1, 1]/√2
  EXPECT_NEAR(e.vectors(0, 1) * e.vectors(1, 1), -0.5, 1e-14);  // ±[1, −1]/√2
}

TEST(SymEig, ConstructedSpectrum) {
  std::mt19937_64 rng(7);
  for (int t = 0; t < 5; ++t) {
    const std::size_t n = 12;
    // random orthogonal Q from QR of a random matrix
    const Matrix q = orth(oracle::random_matrix(n, n, rng), OrthMode::HouseholderQR);
    Vector d(n);
    for (std::size_t i = 0; i < n; ++i) d[i] = 10.0 - static_cast<double>(i) * 1.5;  // includes negatives
    Matrix dq(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) dq(i, j) = d[i] * q(j, i);
    const Matrix m = oracle::naive_mul(q, dq);  // Q D Qᵀ
    const SymEig e = sym_eig(m);
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(e.values[i], d[i], 1e-9);
    // reconstruction and orthonormality
    Matrix lam(n, n);
    for (std::size_t i = 0; i < n; ++i) lam(i, i) = e.values[i];
    const Matrix rec = oracle::naive_mul(e.vectors, oracle::naive_mul(lam, oracle::naive_t(e.vectors)));
    EXPECT_LT(frobenius_norm(rec - m), 1e-8 * frobenius_norm(m));
    EXPECT_LT(orthonormality_defect(e.vectors, GramMatrix::identity(n)), 1e-10);
    for (std::size_t i = 0; i < n; ++i) {
      const Vector mx = matvec(m, e.vectors.col(i));
      Vector r(n);
      for (std::size_t k = 0; k < n; ++k) r[k] = mx[k] - e.values[i] * e.vectors(k, i);
      EXPECT_LT(norm2(r), 1e-8 * frobenius_norm(m));
    }
  }
}

TEST(SymEig, RejectsAsymmetric) {
  EXPECT_THROW(sym_eig(Matrix::from_rows({{1, 2}, {0, 1}})), NonSymmetric);
  EXPECT_NO_THROW(sym_eig(Matrix::from_rows({{1, 2}, {2 + 1e-13, 1}})));
}

TEST(SingularValues, HandCases) {
  const Vector one = singular_values(Matrix::identity(4));
  for (double s : one) EXPECT_NEAR(s, 1.0, 1e-14);
  const Vector s = singular_values(Matrix::from_rows({{0, 2}, {1, 0}}));
  EXPECT_NEAR(s[0], 2.0, 1e-14);
  EXPECT_NEAR(s[1], 1.0, 1e-14);
  for (double z : singular_values(Matrix(3, 2))) EXPECT_EQ(z, 0.0);
}

TEST(SingularValues, OrthonormalColumnsAllOne) {
  std::mt19937_64 rng(8);
  const Matrix q = orth(oracle::random_matrix(15, 4, rng));
  for (double s : singular_values(q)) EXPECT_NEAR(s, 1.0, 1e-10);
}

TEST(SingularValues, RotationTimesScaling) {
  // [[cos, −sin], [sin, cos]] · diag(3, 0.5) has singular values 3, 0.5
  const double c = std::cos(0.7), s = std::sin(0.7);
  const Matrix m = Matrix::from_rows({{3 * c, -0.5 * s}, {3 * s, 0.5 * c}});
  const Vector sv = singular_values(m);
  EXPECT_NEAR(sv[0], 3.0, 1e-13);
  EXPECT_NEAR(sv[1], 0.5, 1e-13);
  // wide input: same values
  const Vector wt = singular_values(m.transposed());
  EXPECT_NEAR(wt[0], 3.0, 1e-13);
}
