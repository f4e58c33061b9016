// Command-line driver: data generation, training, scoring, evaluation, reports.
//
// Exit codes: 0 success, 2 IO/format/CRC, 3 dimension mismatch,
// 4 training or numerical failure, 5 configuration error.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include "dod.hpp"

namespace fs = std::filesystem;
using dod::io::json;

namespace {

constexpr int kExitIo = 2;
constexpr int kExitDim = 3;
constexpr int kExitTraining = 4;
constexpr int kExitConfig = 5;

int exit_code(const dod::Error& e) {
  switch (e.kind()) {
    case dod::ErrorKind::Io:
    case dod::ErrorKind::Format:
      return kExitIo;
    case dod::ErrorKind::Dimension:
      return kExitDim;
    case dod::ErrorKind::Numerical:
    case dod::ErrorKind::Training:
      return kExitTraining;
    case dod::ErrorKind::Config:
      return kExitConfig;
  }
  return 1;
}

std::string num(double x) { return dod::io::fmt_double(x); }

// --- problem and data loading ---------------------------------------------

dod::SyntheticProblem load_problem_arg(const std::string& arg) {
  if (fs::exists(arg)) return dod::io::read_problem(arg);
  return dod::make_problem(dod::problem_kind_from_string(arg));
}

/// Problem for a data file: explicit --problem, else problem.json next to the data.
dod::SyntheticProblem problem_for_data(const std::string& data, const std::string& problem_arg) {
  if (!fs::exists(data)) throw dod::IoError("cannot open '" + data + "'");
  if (!problem_arg.empty()) return load_problem_arg(problem_arg);
  const fs::path sibling = fs::path(data).parent_path() / "problem.json";
  if (!fs::exists(sibling))
    throw dod::ConfigError("no problem definition for '" + data + "': pass --problem or place problem.json beside it");
  return dod::io::read_problem(sibling);
}

dod::SnapshotSet load_data(const std::string& path, const dod::SyntheticProblem& p) {
  dod::SnapshotSet s = dod::io::read_snapshots(path);
  if (s.dof() != p.dof())
    throw dod::DimensionMismatch("'" + path + "' has N_h=" + std::to_string(s.dof()) + " but the problem grid has " +
                                 std::to_string(p.dof()) + " points");
  if (s.mu_dim() != p.theta_box.dim() || s.nu_dim() != p.theta_prime_box.dim())
    throw dod::DimensionMismatch("'" + path + "' parameter dimensions differ from the problem");
  s.g = p.g;
  return s;
}

/// Attach a model's Gram matrix to raw snapshots.
dod::SnapshotSet load_data(const std::string& path, std::shared_ptr<const dod::GramMatrix> g) {
  dod::SnapshotSet s = dod::io::read_snapshots(path);
  if (s.dof() != g->dim())
    throw dod::DimensionMismatch("'" + path + "' has N_h=" + std::to_string(s.dof()) + " but the model expects " +
                                 std::to_string(g->dim()));
  s.g = std::move(g);
  return s;
}

dod::SyntheticProblem problem_from_header(const dod::io::ModelFile& m) {
  if (!m.header.contains("problem")) throw dod::ConfigError("model header carries no problem definition");
  return dod::io::problem_from_json(m.header["problem"]);
}

// --- architecture arguments ---------------------------------------------

std::vector<std::size_t> sizes(const json& j, const char* key, std::vector<std::size_t> fallback) {
  return j.contains(key) ? j[key].get<std::vector<std::size_t>>() : fallback;
}

/// Preset name or JSON file (keys override the "compact" preset).
dod::Preset load_arch(const std::string& arg) {
  if (!fs::exists(arg)) return dod::preset(arg);
  const auto bytes = dod::io::read_file(arg);
  json j;
  try {
    j = json::parse(bytes.begin(), bytes.end());
  } catch (const json::exception& e) {
    throw dod::FormatError(arg + ": malformed JSON: " + e.what());
  }
  try {
    dod::Preset p = dod::preset(j.value("base", std::string("compact")));
    p.name = j.value("name", arg);
    if (j.contains("dod")) {
      const json& d = j["dod"];
      p.dod.seed_feature_rotsym = d.value("seed_feature_rotsym", p.dod.seed_feature_rotsym);
      p.dod.seed_hidden = sizes(d, "seed_hidden", p.dod.seed_hidden);
      p.dod.latent = d.value("latent", p.dod.latent);
      p.dod.root_hidden = sizes(d, "root_hidden", p.dod.root_hidden);
      p.dod.slope = d.value("slope", p.dod.slope);
    }
    if (j.contains("coeff")) {
      const json& c = j["coeff"];
      p.coeff.m = c.value("m", p.coeff.m);
      p.coeff.phi1_feature_rotsym = c.value("phi1_feature_rotsym", p.coeff.phi1_feature_rotsym);
      p.coeff.phi1_hidden = sizes(c, "phi1_hidden", p.coeff.phi1_hidden);
      p.coeff.phi2_hidden = sizes(c, "phi2_hidden", p.coeff.phi2_hidden);
    }
    if (j.contains("bench1")) p.bench1.hidden = sizes(j["bench1"], "hidden", p.bench1.hidden);
    if (j.contains("bench2")) {
      p.bench2.m = j["bench2"].value("m", p.bench2.m);
      p.bench2.phi1_hidden = sizes(j["bench2"], "phi1_hidden", p.bench2.phi1_hidden);
      p.bench2.phi2_hidden = sizes(j["bench2"], "phi2_hidden", p.bench2.phi2_hidden);
    }
    if (j.contains("ae")) {
      p.ae.encoder_hidden = sizes(j["ae"], "encoder_hidden", p.ae.encoder_hidden);
      p.ae.decoder_hidden = sizes(j["ae"], "decoder_hidden", p.ae.decoder_hidden);
    }
    return p;
  } catch (const json::exception& e) {
    throw dod::ConfigError(arg + ": " + e.what());
  }
}

struct TrainArgs {
  std::size_t epochs = 200;
  double lr = 1e-3;
  std::size_t batch = 0;
  std::uint64_t seed = 0;
  double lr_decay = 1.0;

  dod::TrainConfig config() const {
    dod::TrainConfig c;
    c.epochs = epochs;
    c.learning_rate = lr;
    c.batch_size = batch;
    c.seed = seed;
    c.lr_decay = lr_decay;
    return c;
  }

  void add_to(CLI::App* app) {
    app->add_option("--epochs", epochs, "training epochs")->check(CLI::PositiveNumber);
    app->add_option("--lr", lr, "Adam learning rate");
    app->add_option("--batch", batch, "mini-batch size (0 = full batch)");
    app->add_option("--seed", seed, "RNG seed");
    app->add_option("--lr-decay", lr_decay, "per-epoch learning-rate factor");
  }
};

json training_meta(const TrainArgs& a, const dod::TrainHistory& h) {
  return {{"epochs", a.epochs},
          {"learning_rate", a.lr},
          {"batch_size", a.batch},
          {"seed", a.seed},
          {"lr_decay", a.lr_decay},
          {"best_epoch", h.best_epoch},
          {"skipped_steps", h.skipped_steps},
          {"n_train", h.n_train},
          {"n_val", h.n_val},
          {"final_train_loss", h.train_loss.empty() ? 0.0 : h.train_loss.back()}};
}

void write_loss_csv(const fs::path& path, const dod::TrainHistory& h) {
  dod::io::CsvTable t({"epoch", "train_loss", "val_loss"});
  for (std::size_t e = 0; e < h.train_loss.size(); ++e)
    t.add_row({std::to_string(e), num(h.train_loss[e]), e < h.val_loss.size() ? num(h.val_loss[e]) : ""});
  t.write(path);
}

// --- evaluation -----------------------------------------------------------

const std::vector<std::string> kEvalColumns = {"model", "type", "n", "samples", "metric", "value", "param_count",
                                               "ambient_sq", "dod_sq", "coeff_sq", "total_sq", "identity_residual"};

/// One evaluation row for any model type, in kEvalColumns order.
std::vector<std::string> evaluate_model(const std::string& model_path, const std::string& data_path) {
  const dod::io::ModelFile m = dod::io::read_model(model_path);
  const std::string type = dod::io::model_type(m);
  const std::string name = fs::path(model_path).filename().string();
  std::vector<std::string> row(kEvalColumns.size());
  row[0] = name;
  row[1] = type;
  if (type == "ambient" || type == "pod") {
    const dod::AmbientBasis a = dod::io::decode_basis(m);
    const dod::SnapshotSet s = load_data(data_path, a.g);
    row[2] = std::to_string(a.dim());
    row[4] = "mrpe";
    row[5] = num(dod::mrpe(dod::pod_reconstruct(a, s.u), s.u, *s.g));
    row[6] = "0";
  } else if (type == "dod") {
    const dod::DodModel d = dod::io::decode_dod(m);
    const dod::SnapshotSet s = load_data(data_path, d.ambient.g);
    dod::Matrix rec(s.dof(), s.count());
    for (std::size_t i = 0; i < s.count(); ++i) rec.set_col(i, dod::dod_project(d, s.mu_of(i), s.u.col(i)).reconstruction);
    row[2] = std::to_string(d.n());
    row[4] = "mrpe";
    row[5] = num(dod::mrpe(rec, s.u, *s.g));
    row[6] = std::to_string(d.param_count());
  } else if (type == "dodnn") {
    const dod::DodNnModel x = dod::io::decode_dodnn(m);
    const dod::SnapshotSet s = load_data(data_path, x.dod.ambient.g);
    const dod::ErrorDecomposition e = dod::error_decomposition(x, s);
    if (!(e.identity_residual <= 1e-9 * std::max(1.0, e.total_sq)))
      throw dod::Error(dod::ErrorKind::Numerical, "error decomposition identity violated: residual " +
                                                      num(e.identity_residual) + " for total " + num(e.total_sq));
    row[2] = std::to_string(x.dod.n());
    row[4] = "mre";
    row[5] = num(dod::mre(x, s));
    row[6] = std::to_string(x.param_count());
    row[7] = num(e.ambient_sq);
    row[8] = num(e.dod_sq);
    row[9] = num(e.coeff_sq);
    row[10] = num(e.total_sq);
    row[11] = num(e.identity_residual);
  } else if (type == "benchmark") {
    const dod::BenchmarkModel b = dod::io::decode_benchmark(m);
    const dod::SnapshotSet s = load_data(data_path, b.ambient.g);
    row[1] = std::string("benchmark-") + dod::to_string(b.kind);
    row[2] = std::to_string(b.ambient.dim());
    row[4] = "mre";
    row[5] = num(dod::mre(b, s));
    row[6] = std::to_string(b.param_count());
  } else if (type == "cpod") {
    const dod::ClusteredPod c = dod::io::decode_cpod(m);
    const dod::SnapshotSet s = load_data(data_path, c.g);
    row[1] = "cpod-c" + std::to_string(c.clusters());
    row[2] = std::to_string(c.n());
    row[4] = "mrpe";
    row[5] = num(dod::mrpe(dod::clustered_reconstruct(c, s.u), s.u, *s.g));
    row[6] = "0";
  } else if (type == "ae") {
    const dod::PodAutoencoder a = dod::io::decode_ae(m);
    const dod::SnapshotSet s = load_data(data_path, a.ambient.g);
    row[2] = std::to_string(a.latent());
    row[4] = "mrpe";
    row[5] = num(dod::mrpe(dod::ae_reconstruct(a, s.u), s.u, *s.g));
    row[6] = std::to_string(a.param_count());
  } else {
    throw dod::FormatError("unknown model type '" + type + "'");
  }
  row[3] = std::to_string(dod::io::read_snapshots(data_path).count());
  return row;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deep orthogonal decomposition toolkit"};
  app.require_subcommand(1);

  // generate
  std::string gen_problem = "modal_superposition", gen_out;
  std::size_t gen_train = 200, gen_test = 100;
  std::uint64_t gen_seed = 0;
  auto* gen = app.add_subcommand("generate", "sample train/test snapshot files");
  gen->add_option("--problem", gen_problem, "problem JSON file or kind name");
  gen->add_option("--train", gen_train, "training samples")->check(CLI::PositiveNumber);
  gen->add_option("--test", gen_test, "test samples")->check(CLI::PositiveNumber);
  gen->add_option("--seed", gen_seed, "RNG seed");
  gen->add_option("--out", gen_out, "output directory")->required();

  // ambient
  std::string amb_data, amb_out, amb_problem, amb_na = "rank";
  auto* amb = app.add_subcommand("ambient", "build the ambient POD basis");
  amb->add_option("--data", amb_data, "training snapshot file")->required();
  amb->add_option("--na", amb_na, "ambient dimension or 'rank'");
  amb->add_option("--problem", amb_problem, "problem JSON (default: problem.json beside the data)");
  amb->add_option("--out", amb_out, "output model file")->required();

  // train-dod
  std::string td_data, td_ambient, td_arch = "compact", td_out, td_loss, td_orth = "householder_qr";
  std::size_t td_n = 2;
  TrainArgs td_args;
  auto* td = app.add_subcommand("train-dod", "train the DOD inner module");
  td->add_option("--data", td_data, "training snapshot file")->required();
  td->add_option("--ambient", td_ambient, "ambient model file")->required();
  td->add_option("--arch", td_arch, "architecture preset or JSON file");
  td->add_option("--n", td_n, "reduced dimension")->check(CLI::PositiveNumber);
  td->add_option("--orth", td_orth, "inference ORTH: householder_qr | gram_schmidt");
  td->add_option("--out", td_out, "output model file")->required();
  td->add_option("--loss-csv", td_loss, "loss history CSV (default: <out>.loss.csv)");
  td_args.add_to(td);

  // score
  std::string sc_model;
  std::size_t sc_pairs = 10000;
  std::uint64_t sc_seed = 0;
  double sc_delta = 0.05, sc_eps = 0.1;
  auto* sc = app.add_subcommand("score", "Monte Carlo adaptivity score of a DOD");
  sc->add_option("--model", sc_model, "dod or dodnn model file")->required();
  sc->add_option("--pairs", sc_pairs, "number of parameter pairs")->check(CLI::PositiveNumber);
  sc->add_option("--seed", sc_seed, "RNG seed");
  sc->add_option("--delta", sc_delta, "failure probability for required_pairs");
  sc->add_option("--epsilon", sc_eps, "tolerance for required_pairs");

  // train-rom
  std::string tr_dod, tr_data, tr_out, tr_arch = "compact", tr_kind = "dodnn", tr_loss;
  std::size_t tr_m = 0;
  bool tr_parity = false;
  TrainArgs tr_args;
  auto* tr = app.add_subcommand("train-rom", "train DOD-NN coefficients or a POD-NN benchmark");
  tr->add_option("--dod", tr_dod, "dod model (dodnn) or any model carrying an ambient basis (benchmarks)")->required();
  tr->add_option("--data", tr_data, "training snapshot file")->required();
  tr->add_option("--kind", tr_kind, "dodnn | bench1 | bench2");
  tr->add_option("--m", tr_m, "segregation width (0 = preset)");
  tr->add_option("--arch", tr_arch, "architecture preset or JSON file");
  tr->add_flag("--parity", tr_parity, "size benchmark widths to the DOD-NN parameter count of --arch");
  tr->add_option("--out", tr_out, "output model file")->required();
  tr->add_option("--loss-csv", tr_loss, "loss history CSV (default: <out>.loss.csv)");
  tr_args.add_to(tr);

  // baseline
  std::string bl_method, bl_data, bl_test, bl_ambient, bl_out, bl_report, bl_arch = "compact", bl_problem;
  std::size_t bl_n = 2, bl_c = 2;
  TrainArgs bl_args;
  auto* bl = app.add_subcommand("baseline", "fit a comparison method");
  bl->add_option("--method", bl_method, "pod | cpod | ae")->required()->check(CLI::IsMember({"pod", "cpod", "ae"}));
  bl->add_option("--data", bl_data, "training snapshot file")->required();
  bl->add_option("--test", bl_test, "test snapshot file (default: test.dodm beside the data if present)");
  bl->add_option("--n", bl_n, "rank / latent dimension")->check(CLI::PositiveNumber);
  bl->add_option("--c", bl_c, "clusters (cpod)")->check(CLI::PositiveNumber);
  bl->add_option("--ambient", bl_ambient, "ambient model (ae)");
  bl->add_option("--arch", bl_arch, "architecture preset or JSON file (ae)");
  bl->add_option("--problem", bl_problem, "problem JSON (default: problem.json beside the data)");
  bl->add_option("--out", bl_out, "output model file");
  bl->add_option("--report", bl_report, "MRPE CSV (default: stdout)");
  bl_args.add_to(bl);

  // eval
  std::string ev_model, ev_data, ev_report;
  auto* ev = app.add_subcommand("eval", "test errors and error decomposition");
  ev->add_option("--model", ev_model, "any model file")->required();
  ev->add_option("--data", ev_data, "test snapshot file")->required();
  ev->add_option("--report", ev_report, "CSV report (default: stdout)");

  // compare
  std::string cmp_dir, cmp_out, cmp_data;
  auto* cmp = app.add_subcommand("compare", "collate every model in a run directory");
  cmp->add_option("--dir", cmp_dir, "run directory")->required();
  cmp->add_option("--data", cmp_data, "test snapshot file (default: <dir>/test.dodm)");
  cmp->add_option("--out", cmp_out, "output CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    if (*gen) {
      const dod::SyntheticProblem p = load_problem_arg(gen_problem);
      const dod::Dataset d = dod::sample_dataset(p, gen_train, gen_test, gen_seed);
      fs::create_directories(gen_out);
      dod::io::write_snapshots(fs::path(gen_out) / "train.dodm", d.train);
      dod::io::write_snapshots(fs::path(gen_out) / "test.dodm", d.test);
      dod::io::write_text_atomic(fs::path(gen_out) / "problem.json", dod::io::problem_to_json(p).dump(2) + "\n");
      std::cout << "wrote " << gen_train << " train / " << gen_test << " test snapshots (N_h=" << p.dof() << ") to "
                << gen_out << "\n";
    } else if (*amb) {
      const dod::SyntheticProblem p = problem_for_data(amb_data, amb_problem);
      const dod::SnapshotSet s = load_data(amb_data, p);
      std::size_t na = 0;
      if (amb_na == "rank") {
        na = dod::numerical_rank(s);
      } else {
        try {
          na = std::stoul(amb_na);
        } catch (const std::exception&) {
          throw dod::ConfigError("--na must be a positive integer or 'rank'");
        }
      }
      const dod::AmbientBasis a = dod::build_ambient(s, na);
      double retained = 0.0;
      for (double l : a.retained_eigenvalues) retained += l;
      dod::io::write_model(amb_out, dod::io::encode_basis(a, "ambient", {{"problem", dod::io::problem_to_json(p)},
                                                                            {"data", amb_data}}));
      std::cout << "n_a=" << na << " retained_energy=" << num(retained) << " discarded_energy=" << num(a.discarded_energy)
                << "\n";
    } else if (*td) {
      const dod::io::ModelFile am = dod::io::read_model(td_ambient);
      const dod::AmbientBasis a = dod::io::decode_basis(am);
      const dod::SyntheticProblem p = problem_from_header(am);
      const dod::SnapshotSet s = load_data(td_data, p);
      const dod::Preset pr = load_arch(td_arch);
      dod::DodModel model = dod::make_dod(a, s.mu_dim(), td_n, pr.dod, td_args.seed);
      model.orth_mode = dod::orth_mode_from_string(td_orth);
      const dod::DodTrainResult r = dod::train_dod(std::move(model), s, td_args.config());
      dod::io::write_model(td_out, dod::io::encode_dod(r.model, {{"problem", am.header["problem"]},
                                                                {"arch", pr.name},
                                                                {"training", training_meta(td_args, r.history)}}));
      write_loss_csv(td_loss.empty() ? td_out + ".loss.csv" : td_loss, r.history);
      std::cout << "initial_loss=" << num(r.history.train_loss.front()) << " final_loss=" << num(r.history.train_loss.back())
                << " best_epoch=" << r.history.best_epoch << "\n";
    } else if (*sc) {
      const dod::io::ModelFile m = dod::io::read_model(sc_model);
      const std::string type = dod::io::model_type(m);
      if (type != "dod" && type != "dodnn") throw dod::ConfigError("score needs a dod or dodnn model, got '" + type + "'");
      const dod::DodModel d = dod::io::decode_dod(m);
      const dod::SyntheticProblem p = problem_from_header(m);
      const dod::AdaptivityReport rep = dod::adaptivity_score(
          [&](const dod::Vector& mu) { return dod::eval_inner(d, mu); },
          [&](dod::Rng& rng) { return p.theta_box.sample(rng); }, sc_pairs, sc_seed);
      std::cout << "adaptivity=" << num(rep.score) << " standard_error=" << num(rep.standard_error)
                << " pairs=" << rep.n_pairs << " required_pairs(delta=" << num(sc_delta) << ",epsilon=" << num(sc_eps)
                << ")=" << dod::required_pairs(sc_delta, sc_eps) << "\n";
    } else if (*tr) {
      const dod::io::ModelFile src = dod::io::read_model(tr_dod);
      const dod::SyntheticProblem p = problem_from_header(src);
      const dod::SnapshotSet s = load_data(tr_data, p);
      dod::Preset pr = load_arch(tr_arch);
      json meta = {{"problem", src.header["problem"]}, {"arch", pr.name}};
      dod::TrainHistory hist;
      if (tr_kind == "dodnn") {
        if (dod::io::model_type(src) != "dod") throw dod::ConfigError("train-rom --kind dodnn needs a dod model");
        const dod::DodModel d = dod::io::decode_dod(src);
        if (tr_m) pr.coeff.m = tr_m;
        const dod::CoeffTrainResult r = dod::train_coefficients(d, s, pr.coeff, tr_args.config(), tr_args.seed);
        hist = r.history;
        meta["training"] = training_meta(tr_args, hist);
        meta["coeff_rmse"] = r.coeff_rmse;
        dod::io::write_model(tr_out, dod::io::encode_dodnn(r.model, meta));
        std::cout << "coeff_rmse=" << num(r.coeff_rmse) << " params=" << r.model.param_count() << "\n";
      } else if (tr_kind == "bench1" || tr_kind == "bench2") {
        const std::string st = dod::io::model_type(src);
        const dod::AmbientBasis a = st == "dod" ? dod::io::decode_dod(src).ambient : dod::io::decode_basis(src);
        if (tr_parity) {
          const std::size_t n = st == "dod" ? dod::io::decode_dod(src).n() : 2;
          pr = dod::with_benchmark_parity(pr, {s.mu_dim(), s.nu_dim(), a.dim(), n});
        }
        if (tr_m) pr.bench2.m = tr_m;
        const auto kind = tr_kind == "bench1" ? dod::BenchmarkKind::Monolithic : dod::BenchmarkKind::Segregated;
        const dod::BenchmarkTrainResult r =
            dod::train_benchmark(kind, a, s, pr.bench1, pr.bench2, tr_args.config(), tr_args.seed);
        hist = r.history;
        meta["training"] = training_meta(tr_args, hist);
        dod::io::write_model(tr_out, dod::io::encode_benchmark(r.model, meta));
        std::cout << "final_loss=" << num(hist.train_loss.back()) << " params=" << r.model.param_count() << "\n";
      } else {
        throw dod::ConfigError("--kind must be dodnn, bench1 or bench2");
      }
      write_loss_csv(tr_loss.empty() ? tr_out + ".loss.csv" : tr_loss, hist);
    } else if (*bl) {
      const dod::SyntheticProblem p = problem_for_data(bl_data, bl_problem);
      const dod::SnapshotSet train = load_data(bl_data, p);
      std::string test_path = bl_test;
      if (test_path.empty()) {
        const fs::path sib = fs::path(bl_data).parent_path() / "test.dodm";
        if (fs::exists(sib) && fs::path(bl_data).filename() != "test.dodm") test_path = sib.string();
      }
      std::optional<dod::SnapshotSet> test;
      if (!test_path.empty()) test = load_data(test_path, p);
      const json meta = {{"problem", dod::io::problem_to_json(p)}, {"method", bl_method}};
      std::function<dod::Matrix(const dod::Matrix&)> recon;
      std::optional<dod::io::ModelFile> out_model;
      if (bl_method == "pod") {
        const dod::AmbientBasis pod = dod::build_ambient(train, bl_n);
        recon = [pod](const dod::Matrix& u) { return dod::pod_reconstruct(pod, u); };
        out_model = dod::io::encode_basis(pod, "pod", meta);
      } else if (bl_method == "cpod") {
        const dod::ClusteredPod c = dod::fit_clustered_pod(train, bl_c, bl_n, bl_args.seed);
        recon = [c](const dod::Matrix& u) { return dod::clustered_reconstruct(c, u); };
        out_model = dod::io::encode_cpod(c, meta);
      } else {
        if (bl_ambient.empty()) throw dod::ConfigError("baseline --method ae needs --ambient");
        const dod::AmbientBasis a = dod::io::decode_basis(dod::io::read_model(bl_ambient));
        const dod::Preset pr = load_arch(bl_arch);
        const dod::AeTrainResult r = dod::fit_autoencoder(train, a, bl_n, pr.ae, bl_args.config(), bl_args.seed);
        recon = [ae = r.model](const dod::Matrix& u) { return dod::ae_reconstruct(ae, u); };
        json m2 = meta;
        m2["training"] = training_meta(bl_args, r.history);
        out_model = dod::io::encode_ae(r.model, m2);
      }
      if (!bl_out.empty()) dod::io::write_model(bl_out, *out_model);
      dod::io::CsvTable t({"method", "n", "c", "split", "samples", "mrpe"});
      const std::string c = bl_method == "cpod" ? std::to_string(bl_c) : "";
      t.add_row({bl_method, std::to_string(bl_n), c, "train", std::to_string(train.count()),
                 num(dod::mrpe(recon(train.u), train.u, *train.g))});
      if (test)
        t.add_row({bl_method, std::to_string(bl_n), c, "test", std::to_string(test->count()),
                   num(dod::mrpe(recon(test->u), test->u, *test->g))});
      if (bl_report.empty()) std::cout << t.str();
      else t.write(bl_report);
    } else if (*ev) {
      dod::io::CsvTable t(kEvalColumns);
      t.add_row(evaluate_model(ev_model, ev_data));
      if (ev_report.empty()) std::cout << t.str();
      else t.write(ev_report);
    } else if (*cmp) {
      const fs::path dir(cmp_dir);
      const std::string data = cmp_data.empty() ? (dir / "test.dodm").string() : cmp_data;
      std::vector<fs::path> models;
      for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".dod") models.push_back(e.path());
      std::sort(models.begin(), models.end());
      std::vector<std::vector<std::string>> rows;
      for (const fs::path& mp : models) {
        if (dod::io::model_type(dod::io::read_model(mp)) == "ambient") continue;
        rows.push_back(evaluate_model(mp.string(), data));
      }
      std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
        if (a[1] != b[1]) return a[1] < b[1];
        return std::stoul(a[2]) < std::stoul(b[2]);
      });
      dod::io::CsvTable t({"method", "n", "metric", "test_error", "param_count", "model"});
      for (const auto& r : rows) t.add_row({r[1], r[2], r[4], r[5], r[6], r[0]});
      t.write(cmp_out);
      std::cout << "collated " << rows.size() << " models into " << cmp_out << "\n";
    }
  } catch (const dod::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
