#pragma once

#include <string>
#include <vector>

#include "dod/baselines.hpp"
#include "dod/model.hpp"
#include "dod/rom.hpp"

/** @file Named architecture presets for every trainable component. */

namespace dod {

struct Preset {
  std::string name;
  DodArch dod;
  SegArch coeff;   // DOD-NN φ
  MonoArch bench1; // POD-NN, stacked input
  SegArch bench2;  // POD-NN, segregated with n := N_A
  AeArch ae;
};

inline std::vector<std::string> preset_names() { return {"eikonal-style", "nstokes-style", "compact"}; }

inline Preset preset(const std::string& name) {
  Preset p;
  p.name = name;
  if (name == "eikonal-style") {
    p.dod = DodArch{name, false, {500}, 50, {100}, 0.1};
    p.coeff = SegArch{5, false, {40}, {40}, true, 0.1};
    p.bench1 = MonoArch{false, {200, 200}, 0.1};
    p.bench2 = SegArch{25, false, {10}, {10}, true, 0.1};
    p.ae = AeArch{{}, true, {100, 100}, 0.1, false};
  } else if (name == "nstokes-style") {
    p.dod = DodArch{name, true, {4}, 50, {50}, 0.1};
    p.coeff = SegArch{25, true, {4, 50}, {50}, true, 0.1};
    p.bench1 = MonoArch{true, {170, 170}, 0.1};
    p.bench2 = SegArch{5, true, {30}, {30}, true, 0.1};
    p.ae = AeArch{{}, true, {1000}, 0.1, false};
  } else if (name == "compact") {
    p.dod = DodArch{name, false, {32}, 16, {32}, 0.1};
    p.coeff = SegArch{5, false, {40}, {40}, true, 0.1};
    p.bench1 = MonoArch{false, {32, 32}, 0.1};
    p.bench2 = SegArch{5, false, {16}, {16}, true, 0.1};
    p.ae = AeArch{{}, true, {32, 32}, 0.1, false};
  } else {
    throw ConfigError("unknown architecture preset '" + name + "'");
  }
  return p;
}

/// Dimensions needed to count parameters before any model exists.
struct ProblemDims {
  std::size_t p = 1;        // μ
  std::size_t p_prime = 2;  // ν
  std::size_t n_a = 10;
  std::size_t n = 2;
};

inline std::size_t feature_width(bool rotsym, std::size_t in) { return rotsym ? in + 1 : in; }

inline std::size_t dod_param_count(const DodArch& a, const ProblemDims& d) {
  return mlp_param_count(feature_width(a.seed_feature_rotsym, d.p), a.seed_hidden, a.latent) +
         d.n * mlp_param_count(a.latent, a.root_hidden, d.n_a);
}

inline std::size_t seg_param_count(const SegArch& a, std::size_t p, std::size_t p_prime, std::size_t n) {
  return mlp_param_count(feature_width(a.phi1_feature_rotsym, p), a.phi1_hidden, a.m * n) +
         mlp_param_count(p_prime, a.phi2_hidden, a.m * n);
}

inline std::size_t mono_param_count(const MonoArch& a, std::size_t in, std::size_t out) {
  return mlp_param_count(feature_width(a.feature_rotsym, in), a.hidden, out);
}

inline std::size_t dodnn_param_count(const Preset& pr, const ProblemDims& d) {
  return dod_param_count(pr.dod, d) + seg_param_count(pr.coeff, d.p, d.p_prime, d.n);
}

/// Rescale every benchmark hidden layer to one common width so that each
/// benchmark's parameter count is as close as possible to the DOD-NN total.
inline Preset with_benchmark_parity(Preset pr, const ProblemDims& d) {
  const std::size_t target = dodnn_param_count(pr, d);
  const std::size_t depth1 = std::max<std::size_t>(1, pr.bench1.hidden.size());
  const auto count1 = [&](std::size_t w) {
    MonoArch a = pr.bench1;
    a.hidden.assign(depth1, w);
    return mono_param_count(a, d.p + d.p_prime, d.n_a);
  };
  pr.bench1.hidden.assign(depth1, match_width(target, count1));

  const auto count2 = [&](std::size_t w) {
    SegArch a = pr.bench2;
    if (a.phi1_hidden.empty()) a.phi1_hidden = {w};
    if (a.phi2_hidden.empty()) a.phi2_hidden = {w};
    a.phi1_hidden.back() = w;
    a.phi2_hidden.back() = w;
    return seg_param_count(a, d.p, d.p_prime, d.n_a);
  };
  const std::size_t w2 = match_width(target, count2);
  if (pr.bench2.phi1_hidden.empty()) pr.bench2.phi1_hidden = {w2};
  if (pr.bench2.phi2_hidden.empty()) pr.bench2.phi2_hidden = {w2};
  pr.bench2.phi1_hidden.back() = w2;
  pr.bench2.phi2_hidden.back() = w2;
  return pr;
}

}  // namespace dod
