// Small end-to-end run on the 1D modal superposition problem: sample data,
// build the ambient basis, train a rank-2 DOD, then a DOD-NN on top of it.

#include <cstdio>

#include "dod.hpp"

int main() {
  using namespace dod;

  const SyntheticProblem problem = make_problem(ProblemKind::ModalSuperposition);
  const Dataset data = sample_dataset(problem, 200, 50, 3);

  const AmbientBasis ambient = build_ambient(data.train, 8);
  const AmbientBasis pod2 = build_ambient(data.train, 2);

  TrainConfig cfg;
  cfg.epochs = 150;
  cfg.batch_size = 16;
  cfg.learning_rate = 3e-3;
  cfg.lr_decay = 0.99;
  cfg.seed = 1;

  const Preset arch = preset("compact");
  const DodTrainResult dod = train_dod(make_dod(ambient, 1, 2, arch.dod, 1), data.train, cfg);

  const SnapshotSet& test = data.test;
  Matrix rec(test.dof(), test.count());
  for (std::size_t i = 0; i < test.count(); ++i)
    rec.set_col(i, dod_project(dod.model, test.mu_of(i), test.u.col(i)).reconstruction);

  std::printf("test MRPE  POD rank 2: %.4f  ambient (N_A=8): %.4f  DOD n=2: %.4f\n",
              mrpe(pod_reconstruct(pod2, test.u), test.u, *test.g),
              mrpe(pod_reconstruct(ambient, test.u), test.u, *test.g), mrpe(rec, test.u, *test.g));

  const AdaptivityReport adapt = adaptivity_score([&](const Vector& mu) { return eval_inner(dod.model, mu); },
                                                  [&](Rng& r) { return problem.theta_box.sample(r); }, 2000, 0);
  std::printf("adaptivity %.3f +- %.3f\n", adapt.score, adapt.standard_error);

  const CoeffTrainResult rom = train_coefficients(dod.model, data.train, arch.coeff, cfg, 2);
  const ErrorDecomposition e = error_decomposition(rom.model, test);
  std::printf("DOD-NN test MRE %.4f  (ambient^2 %.2e, dod^2 %.2e, coeff^2 %.2e)\n", mre(rom.model, test), e.ambient_sq,
              e.dod_sq, e.coeff_sq);
  return 0;
}
