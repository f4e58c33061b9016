#include <gtest/gtest.h>

#include <numbers>

#include "oracles.hpp"

using namespace dod;

namespace {

Matrix rotation_family(double mu) {
  return Matrix::from_rows({{std::cos(mu), -std::sin(mu)}, {std::sin(mu), std::cos(mu)}, {0, 0}});
}

Matrix line(double x, double y, double z) { return Matrix::from_rows({{x}, {y}, {z}}); }

}  // namespace

TEST(GrassmannDistance, RotationFamilyIsConstantSubspace) {
  for (int k = 0; k < 20; ++k) {
    const double mu = -3.0 + 0.31 * k;
    EXPECT_LT(grassmann_distance(rotation_family(mu), rotation_family(0.0)), 1e-10);
  }
}

TEST(GrassmannDistance, OrthogonalLines) {
  EXPECT_NEAR(grassmann_distance(line(1, 0, 0), line(0, 1, 0)), 1.0, 1e-12);
}

TEST(GrassmannDistance, AngleFamily) {
  for (double th : {0.3, -0.7, 1.2, 2.5}) {
    EXPECT_NEAR(grassmann_distance(line(1, 0, 0), line(std::cos(th), std::sin(th), 0)), std::abs(std::sin(th)), 1e-10);
  }
}

TEST(GrassmannDistance, MetricProperties) {
  std::mt19937_64 rng(21);
  for (int t = 0; t < 20; ++t) {
    const Matrix v = oracle::random_matrix(8, 3, rng), w = oracle::random_matrix(8, 3, rng);
    const double d = grassmann_distance(v, w);
    EXPECT_GE(d, 0.0);
    EXPECT_LE(d, 1.0);
    EXPECT_NEAR(d, grassmann_distance(w, v), 1e-10);
    EXPECT_EQ(grassmann_distance(v, v), 0.0);
    EXPECT_LT(grassmann_distance(v, matmul(v, Matrix::from_rows({{2, 1, 0}, {0, 1, 0}, {1, 0, -1}}))), 1e-12);
    const Matrix r = oracle::random_matrix(3, 3, rng);
    EXPECT_NEAR(grassmann_distance(matmul(v, r), w), d, 1e-9);
  }
}

TEST(GrassmannDistance, MatchesMaxMinDefinition) {
  // Oracle: largest distance from a unit vector of W to span(V), found by
  // sampling directions of a 2D subspace densely.
  std::mt19937_64 rng(22);
  const Matrix v = orth(oracle::random_matrix(5, 2, rng));
  const Matrix w = orth(oracle::random_matrix(5, 2, rng));
  const Matrix id = Matrix::identity(5);
  const Matrix pv = oracle::basis_projector(v, id);
  double worst = 0.0;
  for (int k = 0; k < 20000; ++k) {
    const double a = std::numbers::pi * k / 20000.0;
    Vector x(5);
    for (std::size_t i = 0; i < 5; ++i) x[i] = std::cos(a) * w(i, 0) + std::sin(a) * w(i, 1);
    worst = std::max(worst, norm2(subtract(x, matvec(pv, x))));
  }
  EXPECT_NEAR(grassmann_distance(v, w), worst, 1e-6);
}

TEST(Adaptivity, ConstantModelScoresZero) {
  const Matrix fixed = Matrix::from_rows({{1, 0}, {0, 1}, {0, 0}, {0, 0}});
  const auto rep = adaptivity_score([&](const Vector&) { return fixed; },
                                    [](Rng& r) { return Vector{uniform(r, 0, 1)}; }, 500, 3);
  EXPECT_EQ(rep.score, 0.0);
  EXPECT_EQ(rep.n_pairs, 500u);
}

TEST(Adaptivity, RotationFamilyScoresZero) {
  const auto rep = adaptivity_score([](const Vector& mu) { return rotation_family(mu[0]); },
                                    [](Rng& r) { return Vector{uniform(r, -3, 3)}; }, 200, 4);
  EXPECT_LT(rep.score, 1e-7);
}

TEST(Adaptivity, TwoClusterConvergesToRootHalf) {
  const auto inner = [](const Vector& mu) { return mu[0] < 0.5 ? line(1, 0, 0) : line(0, 1, 0); };
  const auto sampler = [](Rng& r) { return Vector{uniform(r, 0, 1)}; };
  const auto rep = adaptivity_score(inner, sampler, 10000, 5);
  // score² estimates P(different clusters) = 1/2
  EXPECT_LT(std::abs(rep.score * rep.score - 0.5), 3.0 * rep.standard_error);
  EXPECT_GT(rep.standard_error, 0.0);
}

TEST(Adaptivity, SingletonParameterSetScoresZero) {
  std::mt19937_64 rng(23);
  const Matrix a = oracle::random_matrix(6, 2, rng), b = oracle::random_matrix(6, 2, rng);
  const auto inner = [&](const Vector& mu) { return a + mu[0] * b; };
  const auto rep = adaptivity_score(inner, [](Rng&) { return Vector{0.4}; }, 50, 6);
  EXPECT_EQ(rep.score, 0.0);
}

TEST(Adaptivity, DeterministicPerSeed) {
  const auto inner = [](const Vector& mu) { return line(std::cos(mu[0]), std::sin(mu[0]), 0.1); };
  const auto sampler = [](Rng& r) { return Vector{uniform(r, 0, 3)}; };
  const auto a = adaptivity_score(inner, sampler, 300, 9);
  const auto b = adaptivity_score(inner, sampler, 300, 9);
  const auto c = adaptivity_score(inner, sampler, 300, 10);
  EXPECT_EQ(a.score, b.score);
  EXPECT_NE(a.score, c.score);
  EXPECT_THROW(adaptivity_score(inner, sampler, 0, 1), ConfigError);
}

TEST(RequiredPairs, Formula) {
  EXPECT_EQ(required_pairs(0.25, 0.1), 10000u);
  EXPECT_EQ(required_pairs(0.01, 0.1), 250000u);
  EXPECT_EQ(required_pairs(0.5, 1.0), 1u);
  EXPECT_EQ(required_pairs(0.3, 0.5), 14u);  // 1/(0.3·0.0625·4) = 13.33
  EXPECT_THROW(required_pairs(0.0, 0.1), ConfigError);
  EXPECT_THROW(required_pairs(1.0, 0.1), ConfigError);
  EXPECT_THROW(required_pairs(0.1, 0.0), ConfigError);
  EXPECT_THROW(required_pairs(0.1, 1.5), ConfigError);
}
