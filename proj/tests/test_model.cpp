#include <gtest/gtest.h>

#include "oracles.hpp"

using namespace dod;

namespace {

SnapshotSet make_set(Matrix u, Matrix mu, std::shared_ptr<const GramMatrix> g) {
  SnapshotSet s;
  s.u = std::move(u);
  s.mu = std::move(mu);
  s.nu = Matrix(s.u.cols(), 0);
  s.g = std::move(g);
  return s;
}

struct Fixture {
  SnapshotSet snaps;
  AmbientBasis ambient;
};

/// Random data of full rank in 16 dofs, ambient of dimension n_a.
Fixture random_fixture(std::size_t n_a, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const auto g = std::make_shared<const GramMatrix>(oracle::random_diag_gram(16, rng));
  Fixture f;
  f.snaps = make_set(oracle::random_matrix(16, 12, rng), oracle::random_matrix(12, 2, rng), g);
  f.ambient = build_ambient(f.snaps, n_a);
  return f;
}

DodArch small_arch() {
  DodArch a;
  a.seed_hidden = {6};
  a.latent = 5;
  a.root_hidden = {7};
  return a;
}

/// Pre-ORTH stack, but with `mix` applied on the right.
Matrix mixed_basis(const DodModel& m, const Vector& mu, const Matrix& mix, OrthMode mode) {
  return matmul(m.ambient.a, orth(matmul(eval_stack(m, mu), mix), mode));
}

}  // namespace

TEST(EvalInner, OrthonormalColumns) {
  const Fixture f = random_fixture(6, 51);
  const DodModel m = make_dod(f.ambient, 2, 3, small_arch(), 1);
  std::mt19937_64 rng(52);
  for (int t = 0; t < 20; ++t) {
    const Matrix q = eval_inner(m, oracle::random_vector(2, rng));
    EXPECT_LT(orthonormality_defect(q, GramMatrix::identity(6)), 1e-10);
    EXPECT_EQ(q.rows(), 6u);
    EXPECT_EQ(q.cols(), 3u);
  }
}

TEST(EvalInner, ConstantSeedGivesConstantSubspace) {
  const Fixture f = random_fixture(6, 53);
  DodModel m = make_dod(f.ambient, 2, 2, small_arch(), 2);
  std::vector<double> p(m.seed.param_count(), 0.0);
  // last dense layer: biases all 0.7, everything else zero
  const auto& layers = m.seed.layers();
  for (auto it = layers.rbegin(); it != layers.rend(); ++it)
    if (const auto* d = std::get_if<nn::Dense>(&*it)) {
      for (std::size_t o = 0; o < d->out; ++o) p[d->offset + d->weight_count() + o] = 0.7;
      break;
    }
  m.seed.set_params(p);
  const Matrix a = eval_inner(m, Vector{0.1, -0.4});
  const Matrix b = eval_inner(m, Vector{0.9, 0.3});
  EXPECT_EQ(a, b);
  EXPECT_EQ(grassmann_distance(a, b), 0.0);
}

TEST(EvalInner, ProjectorMatchesNormalEquations) {
  const Fixture f = random_fixture(7, 54);
  const DodModel m = make_dod(f.ambient, 2, 3, small_arch(), 3);
  std::mt19937_64 rng(55);
  const Matrix id = Matrix::identity(7);
  for (int t = 0; t < 10; ++t) {
    const Vector mu = oracle::random_vector(2, rng);
    const Matrix q = eval_inner(m, mu);
    const Matrix w = eval_stack(m, mu);
    EXPECT_LT(oracle::max_abs_diff(oracle::basis_projector(q, id), oracle::normal_eq_projector(w, id)), 1e-8);
  }
}

TEST(EvalInner, DimensionGuard) {
  const Fixture f = random_fixture(6, 56);
  const DodModel m = make_dod(f.ambient, 2, 2, small_arch(), 4);
  EXPECT_THROW(eval_inner(m, Vector{0.1}), DimensionMismatch);
  EXPECT_THROW(make_dod(f.ambient, 2, 7, small_arch(), 4), ConfigError);
  EXPECT_THROW(make_dod(f.ambient, 2, 0, small_arch(), 4), ConfigError);
}

TEST(EvalBasis, IdentityAmbientEqualsInner) {
  std::mt19937_64 rng(57);
  AmbientBasis amb;
  amb.a = Matrix::identity(5);
  amb.g = std::make_shared<const GramMatrix>(GramMatrix::identity(5));
  const DodModel m = make_dod(amb, 1, 2, small_arch(), 5);
  const Vector mu{0.3};
  EXPECT_LT(oracle::max_abs_diff(eval_basis(m, mu), eval_inner(m, mu)), 1e-15);
}

TEST(EvalBasis, GOrthonormalFor100Parameters) {
  const Fixture f = random_fixture(8, 58);
  const DodModel m = make_dod(f.ambient, 2, 3, small_arch(), 6);
  std::mt19937_64 rng(59);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const Matrix v = eval_basis(m, oracle::random_vector(2, rng, -2, 2));
    // oracle: explicit VᵀGV with the dense Gram
    const Matrix vtgv = oracle::naive_mul(oracle::naive_t(v), oracle::naive_mul(oracle::dense_of(*f.snaps.g), v));
    worst = std::max(worst, frobenius_norm(vtgv - Matrix::identity(3)));
  }
  EXPECT_LT(worst, 1e-8);
}

TEST(DodProject, FirstColumnAndOrthogonalComplement) {
  const Fixture f = random_fixture(6, 60);
  const DodModel m = make_dod(f.ambient, 2, 2, small_arch(), 7);
  const Vector mu{0.2, -0.1};
  const Matrix v = eval_basis(m, mu);
  const Projection p = dod_project(m, mu, v.col(0));
  EXPECT_NEAR(p.coefficients[0], 1.0, 1e-12);
  EXPECT_NEAR(p.coefficients[1], 0.0, 1e-12);
  EXPECT_LT(oracle::rel_error(p.reconstruction, v.col_vec(0)), 1e-12);

  std::mt19937_64 rng(61);
  Vector u = oracle::random_vector(16, rng);
  u = subtract(u, project_onto(v, *f.snaps.g, u));
  for (double c : dod_project(m, mu, u).coefficients) EXPECT_NEAR(c, 0.0, 1e-12);
  EXPECT_THROW(dod_project(m, mu, Vector(15)), DimensionMismatch);
}

TEST(DodProject, InSpanIdempotentAndPythagoras) {
  const Fixture f = random_fixture(8, 62);
  const DodModel m = make_dod(f.ambient, 2, 3, small_arch(), 8);
  const Matrix gd = oracle::dense_of(*f.snaps.g);
  std::mt19937_64 rng(63);
  for (int t = 0; t < 10; ++t) {
    const Vector mu = oracle::random_vector(2, rng);
    const Matrix v = eval_basis(m, mu);
    const Vector in_span = matvec(v, oracle::random_vector(3, rng));
    EXPECT_LT(oracle::rel_error(dod_project(m, mu, in_span).reconstruction, in_span), 1e-8);

    const Vector u = oracle::random_vector(16, rng);
    const Projection p = dod_project(m, mu, u);
    const Vector r = subtract(u, p.reconstruction);
    const double lhs = oracle::g_norm_sq(u, gd);
    EXPECT_NEAR(lhs, oracle::g_norm_sq(r, gd) + dot(p.coefficients, p.coefficients), 1e-9 * lhs);
    // residual is G-orthogonal to every basis column
    for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(g_inner(r, v.col(j), *f.snaps.g), 0.0, 1e-8);
  }
}

TEST(DodProject, OrthSwapInvariance) {
  const Fixture f = random_fixture(8, 64);
  const DodModel m = make_dod(f.ambient, 2, 3, small_arch(), 9);
  std::mt19937_64 rng(65);
  for (int t = 0; t < 20; ++t) {
    const Vector mu = oracle::random_vector(2, rng);
    const Vector u = oracle::random_vector(16, rng);
    const Projection gs = dod_project(m, mu, u, OrthMode::GramSchmidt);
    const Projection qr = dod_project(m, mu, u, OrthMode::HouseholderQR);
    EXPECT_LT(oracle::rel_error(gs.reconstruction, qr.reconstruction), 1e-8);
  }
}

TEST(DodProject, InvariantUnderInvertibleMixing) {
  const Fixture f = random_fixture(8, 66);
  const DodModel m = make_dod(f.ambient, 2, 3, small_arch(), 10);
  std::mt19937_64 rng(67);
  for (int t = 0; t < 10; ++t) {
    Matrix mix = oracle::random_matrix(3, 3, rng);
    for (std::size_t i = 0; i < 3; ++i) mix(i, i) += 2.0;  // keep it well conditioned
    const Vector mu = oracle::random_vector(2, rng);
    const Vector u = oracle::random_vector(16, rng);
    const Vector base = dod_project(m, mu, u).reconstruction;
    for (OrthMode mode : {OrthMode::GramSchmidt, OrthMode::HouseholderQR}) {
      const Matrix v = mixed_basis(m, mu, mix, mode);
      EXPECT_LT(oracle::rel_error(project_onto(v, *f.snaps.g, u), base), 1e-8);
    }
  }
}

TEST(Losses, ConstantGapAcrossModels) {
  const Fixture f = random_fixture(6, 68);
  const double c_a = ambient_residual_energy(f.ambient, f.snaps);
  // oracle for c_A: direct (1/N) Σ ‖u − A AᵀG u‖²_G with a dense Gram
  const Matrix gd = oracle::dense_of(*f.snaps.g);
  const Matrix pa = oracle::basis_projector(f.ambient.a, gd);
  double want = 0.0;
  for (std::size_t i = 0; i < f.snaps.count(); ++i) {
    const Vector u = f.snaps.u.col_vec(i);
    want += oracle::g_norm_sq(subtract(u, matvec(pa, u)), gd);
  }
  want /= static_cast<double>(f.snaps.count());
  EXPECT_NEAR(c_a, want, 1e-10 * (1 + want));

  double lo = 1e300, hi = -1e300;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const DodModel m = make_dod(f.ambient, 2, 1 + s % 4, small_arch(), 100 + s);
    const double gap = loss_full(m, f.snaps) - loss_ambient(m, f.snaps);
    lo = std::min(lo, gap);
    hi = std::max(hi, gap);
  }
  EXPECT_LT(hi - lo, 1e-9 * (1 + c_a));
  EXPECT_NEAR(lo, c_a, 1e-9 * (1 + c_a));
}

TEST(Losses, InsideAmbientSpanTheyAgree) {
  std::mt19937_64 rng(69);
  const auto g = std::make_shared<const GramMatrix>(oracle::random_diag_gram(16, rng));
  const Matrix basis = oracle::random_matrix(16, 4, rng);
  const SnapshotSet s = make_set(oracle::naive_mul(basis, oracle::random_matrix(4, 10, rng)),
                                 oracle::random_matrix(10, 1, rng), g);
  const AmbientBasis a = build_ambient(s, 4);
  const DodModel m = make_dod(a, 1, 2, small_arch(), 11);
  EXPECT_NEAR(loss_full(m, s), loss_ambient(m, s), 1e-9);
}

TEST(Losses, PerfectModelOnRankNData) {
  // Data spans exactly n = N_A dimensions, so any non-degenerate model is perfect.
  std::mt19937_64 rng(70);
  const auto g = std::make_shared<const GramMatrix>(oracle::random_diag_gram(12, rng));
  const SnapshotSet s = make_set(oracle::naive_mul(oracle::random_matrix(12, 2, rng), oracle::random_matrix(2, 8, rng)),
                                 oracle::random_matrix(8, 1, rng), g);
  const AmbientBasis a = build_ambient(s, 2);
  const DodModel m = make_dod(a, 1, 2, small_arch(), 12);
  EXPECT_LT(loss_full(m, s), 1e-12);
  EXPECT_LT(loss_ambient(m, s), 1e-12);
}

TEST(Gradient, MatchesFiniteDifferences) {
  const Fixture f = random_fixture(5, 71);
  DodModel m = make_dod(f.ambient, 2, 2, small_arch(), 13);
  const Matrix coords = ambient_project(m.ambient, f.snaps.u);
  auto nets = m.nets();
  std::vector<Vector> grads = nn::zero_grads(nets);
  loss_ambient_with_grad(m, f.snaps.mu, coords, grads);
  for (std::size_t k = 0; k < nets.size(); ++k) {
    const Vector p0(nets[k]->params().begin(), nets[k]->params().end());
    const Vector fd = oracle::fd_gradient(
        [&](const Vector& p) {
          DodModel copy = m;
          copy.nets()[k]->set_params(p);
          return loss_ambient(copy, f.snaps.mu, coords);
        },
        p0, 1e-6);
    for (std::size_t i = 0; i < p0.size(); ++i) EXPECT_NEAR(grads[k][i], fd[i], 1e-6 * (1 + std::abs(fd[i])));
  }
}

TEST(TrainDod, ConstantSubspaceIsLearned) {
  std::mt19937_64 rng(72);
  const auto g = std::make_shared<const GramMatrix>(oracle::random_diag_gram(14, rng));
  const Matrix fixed = oracle::random_matrix(14, 2, rng);
  const Matrix extra = oracle::random_matrix(14, 2, rng);
  // Ambient space of dimension 4 from a wider set; training data only uses
  // the fixed 2-dimensional subspace, whatever μ is.
  Matrix wide(14, 40);
  const Matrix cw = oracle::random_matrix(4, 40, rng);
  for (std::size_t j = 0; j < 40; ++j)
    for (std::size_t i = 0; i < 14; ++i)
      wide(i, j) = fixed(i, 0) * cw(0, j) + fixed(i, 1) * cw(1, j) + extra(i, 0) * cw(2, j) + extra(i, 1) * cw(3, j);
  const AmbientBasis amb = build_ambient(make_set(wide, Matrix(40, 1), g), 4);
  const SnapshotSet train = make_set(oracle::naive_mul(fixed, oracle::random_matrix(2, 40, rng)),
                                     oracle::random_matrix(40, 1, rng), g);

  DodArch arch;
  arch.seed_hidden = {8};
  arch.latent = 4;
  const DodModel m0 = make_dod(amb, 1, 2, arch, 14);
  const double initial = loss_ambient(m0, train);
  TrainConfig cfg;
  cfg.epochs = 3000;
  cfg.learning_rate = 5e-3;
  cfg.batch_size = 8;
  cfg.lr_decay = 0.998;
  cfg.validation_fraction = 0.0;
  const DodTrainResult r = train_dod(m0, train, cfg);
  const double final_loss = loss_ambient(r.model, train);
  EXPECT_LT(final_loss, 1e-6 * (initial + 1.0)) << "initial " << initial;
  EXPECT_LT(r.history.train_loss.back(), r.history.train_loss.front());
}

TEST(TrainDod, ModalProblemCloseToAmbient) {
  const SyntheticProblem p = make_problem(ProblemKind::ModalSuperposition);
  const Dataset d = sample_dataset(p, 300, 100, 7);
  const AmbientBasis amb = build_ambient(d.train, 8);
  const DodModel m0 = make_dod(amb, p.theta_box.dim(), 2, preset("compact").dod, 1);
  TrainConfig cfg;
  cfg.epochs = 300;
  cfg.batch_size = 16;
  cfg.learning_rate = 3e-3;
  cfg.lr_decay = 0.995;
  cfg.seed = 1;
  const DodModel m = train_dod(m0, d.train, cfg).model;

  Matrix rec(d.test.dof(), d.test.count());
  for (std::size_t i = 0; i < d.test.count(); ++i) rec.set_col(i, dod_project(m, d.test.mu_of(i), d.test.u.col(i)).reconstruction);
  const double dod_err = mrpe(rec, d.test.u, *d.test.g);
  const double amb_err = mrpe(project_stack(amb.a, *amb.g, d.test.u), d.test.u, *d.test.g);
  EXPECT_LT(dod_err, 2.0 * amb_err) << "dod " << dod_err << " ambient " << amb_err;
}

TEST(TrainDod, EmptySetIsRejected) {
  const Fixture f = random_fixture(4, 73);
  const DodModel m = make_dod(f.ambient, 2, 2, small_arch(), 15);
  const SnapshotSet empty = make_set(Matrix(16, 0), Matrix(0, 2), f.snaps.g);
  EXPECT_THROW(train_dod(m, empty, TrainConfig{}), ConfigError);
}

TEST(TrainDod, DeterministicPerSeed) {
  const Fixture f = random_fixture(5, 74);
  const DodModel m = make_dod(f.ambient, 2, 2, small_arch(), 16);
  TrainConfig cfg;
  cfg.epochs = 5;
  cfg.seed = 3;
  const DodModel a = train_dod(m, f.snaps, cfg).model;
  const DodModel b = train_dod(m, f.snaps, cfg).model;
  EXPECT_TRUE(a.seed == b.seed);
  for (std::size_t k = 0; k < a.n(); ++k) EXPECT_TRUE(a.roots[k] == b.roots[k]);
}
