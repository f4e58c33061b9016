#pragma once

#include <zlib.h>

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dod/baselines.hpp"
#include "dod/model.hpp"
#include "dod/problems.hpp"
#include "dod/rom.hpp"

/** @file Binary snapshot/model files, problem JSON, CSV reports. */

namespace dod::io {

using json = nlohmann::json;

inline constexpr char kSnapshotMagic[4] = {'D', 'O', 'D', 'M'};
inline constexpr char kModelMagic[4] = {'D', 'O', 'D', 'F'};
inline constexpr std::uint16_t kVersion = 1;

inline std::uint32_t crc32_bytes(const std::uint8_t* data, std::size_t n, std::uint32_t crc = 0) {
  uLong c = crc;
  while (n > 0) {
    const uInt chunk = static_cast<uInt>(std::min<std::size_t>(n, 1u << 30));
    c = ::crc32(c, data, chunk);
    data += chunk;
    n -= chunk;
  }
  return static_cast<std::uint32_t>(c);
}

// ---------------------------------------------------------------------------
// Little-endian byte buffers

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    buf_.insert(buf_.end(), b, b + n);
  }
  template <class T>
  void uint(T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double x) { uint(std::bit_cast<std::uint64_t>(x)); }
  void f64s(std::span<const double> xs) {
    for (double x : xs) f64(x);
  }
  std::size_t size() const noexcept { return buf_.size(); }
  const std::vector<std::uint8_t>& buffer() const noexcept { return buf_; }

 private:
  std::vector<std::uint8_t> buf_;
};

class Reader {
 public:
  Reader(const std::vector<std::uint8_t>& buf, std::string what) : buf_(buf), what_(std::move(what)) {}

  void need(std::size_t n) const {
    if (pos_ + n > buf_.size() || pos_ + n < pos_) throw FormatError(what_ + ": truncated file");
  }
  const std::uint8_t* bytes(std::size_t n) {
    need(n);
    const std::uint8_t* p = buf_.data() + pos_;
    pos_ += n;
    return p;
  }
  template <class T>
  T uint() {
    const std::uint8_t* p = bytes(sizeof(T));
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(static_cast<T>(p[i]) << (8 * i));
    return v;
  }
  double f64() { return std::bit_cast<double>(uint<std::uint64_t>()); }
  Vector f64s(std::size_t n) {
    if (n > remaining() / 8) throw FormatError(what_ + ": declared sizes exceed the file length");
    Vector v(n);
    for (double& x : v) x = f64();
    return v;
  }
  std::size_t pos() const noexcept { return pos_; }
  std::size_t remaining() const noexcept { return buf_.size() - pos_; }

 private:
  const std::vector<std::uint8_t>& buf_;
  std::string what_;
  std::size_t pos_ = 0;
};

inline std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::vector<std::uint8_t> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failure on '" + path.string() + "'");
  return buf;
}

/// Write to a sibling temporary, then rename over `path`.
inline void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> data) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot create '" + tmp.string() + "'");
    out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
    if (!out) throw IoError("write failure on '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw IoError("cannot rename onto '" + path.string() + "': " + ec.message());
  }
}

inline void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
  write_file_atomic(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

// ---------------------------------------------------------------------------
// SnapshotFile

inline std::vector<std::uint8_t> encode_snapshots(const SnapshotSet& s) {
  detail::require_dims(s.mu.rows() == s.count() && s.nu.rows() == s.count(), "encode_snapshots: inconsistent counts");
  Writer w;
  w.bytes(kSnapshotMagic, 4);
  w.uint<std::uint16_t>(kVersion);
  w.uint<std::uint64_t>(s.dof());
  w.uint<std::uint64_t>(s.count());
  w.uint<std::uint64_t>(s.mu_dim());
  w.uint<std::uint64_t>(s.nu_dim());
  const std::size_t start = w.size();
  w.f64s(s.mu.data());
  w.f64s(s.nu.data());
  w.f64s(s.u.data());
  const std::uint32_t crc = crc32_bytes(w.buffer().data() + start, w.size() - start);
  w.uint<std::uint32_t>(crc);
  return w.buffer();
}

/// Decoded snapshots carry no Gram matrix; attach one before use.
inline SnapshotSet decode_snapshots(const std::vector<std::uint8_t>& buf) {
  Reader r(buf, "snapshot file");
  if (std::memcmp(r.bytes(4), kSnapshotMagic, 4) != 0) throw FormatError("snapshot file: bad magic");
  const auto version = r.uint<std::uint16_t>();
  if (version != kVersion) throw FormatError("snapshot file: unsupported version " + std::to_string(version));
  const auto nh = r.uint<std::uint64_t>();
  const auto ns = r.uint<std::uint64_t>();
  const auto p = r.uint<std::uint64_t>();
  const auto pp = r.uint<std::uint64_t>();
  const auto mul = [](std::uint64_t a, std::uint64_t b) {
    if (a != 0 && b > std::numeric_limits<std::uint64_t>::max() / a) throw FormatError("snapshot file: counts overflow");
    return a * b;
  };
  const std::uint64_t n_values = mul(ns, p) + mul(ns, pp) + mul(nh, ns);
  if (r.remaining() != mul(n_values, 8) + 4)
    throw FormatError("snapshot file: declared counts do not match the payload length");
  const std::size_t start = r.pos();
  SnapshotSet s;
  s.mu = Matrix(ns, p, r.f64s(ns * p));
  s.nu = Matrix(ns, pp, r.f64s(ns * pp));
  s.u = Matrix(nh, ns, r.f64s(nh * ns));
  const std::uint32_t expect = crc32_bytes(buf.data() + start, r.pos() - start);
  if (r.uint<std::uint32_t>() != expect) throw FormatError("snapshot file: CRC mismatch (corrupted payload)");
  return s;
}

inline void write_snapshots(const std::filesystem::path& path, const SnapshotSet& s) {
  write_file_atomic(path, encode_snapshots(s));
}

inline SnapshotSet read_snapshots(const std::filesystem::path& path) {
  try {
    return decode_snapshots(read_file(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// ModelFile: JSON header + f64 blob with a declared layout

struct ModelFile {
  json header = json::object();
  Vector blob;
};

inline std::vector<std::uint8_t> encode_model(const ModelFile& m) {
  const std::string h = m.header.dump();
  Writer w;
  w.bytes(kModelMagic, 4);
  w.uint<std::uint16_t>(kVersion);
  w.uint<std::uint64_t>(h.size());
  const std::size_t start = w.size();
  w.bytes(h.data(), h.size());
  w.uint<std::uint64_t>(m.blob.size());
  w.f64s(m.blob);
  const std::uint32_t crc = crc32_bytes(w.buffer().data() + start, w.size() - start);
  w.uint<std::uint32_t>(crc);
  return w.buffer();
}

inline ModelFile decode_model(const std::vector<std::uint8_t>& buf) {
  Reader r(buf, "model file");
  if (std::memcmp(r.bytes(4), kModelMagic, 4) != 0) throw FormatError("model file: bad magic");
  const auto version = r.uint<std::uint16_t>();
  if (version != kVersion) throw FormatError("model file: unsupported version " + std::to_string(version));
  const auto hlen = r.uint<std::uint64_t>();
  if (hlen > r.remaining()) throw FormatError("model file: header length exceeds the file");
  const std::size_t start = r.pos();
  const auto* hp = reinterpret_cast<const char*>(r.bytes(hlen));
  const std::string text(hp, hlen);
  const auto count = r.uint<std::uint64_t>();
  if (count > r.remaining() / 8 || r.remaining() != count * 8 + 4)
    throw FormatError("model file: blob length does not match the declared count");
  ModelFile m;
  m.blob = r.f64s(count);
  const std::uint32_t expect = crc32_bytes(buf.data() + start, r.pos() - start);
  if (r.uint<std::uint32_t>() != expect) throw FormatError("model file: CRC mismatch (corrupted content)");
  try {
    m.header = json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(std::string("model file: malformed header: ") + e.what());
  }
  if (!m.header.is_object() || !m.header.contains("type")) throw FormatError("model file: header lacks a type");
  return m;
}

inline void write_model(const std::filesystem::path& path, const ModelFile& m) { write_file_atomic(path, encode_model(m)); }

inline ModelFile read_model(const std::filesystem::path& path) {
  try {
    return decode_model(read_file(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

/// Appends named f64 segments and records their placement in "blob_layout".
class BlobBuilder {
 public:
  explicit BlobBuilder(ModelFile& m) : m_(m) {
    if (!m_.header.contains("blob_layout")) m_.header["blob_layout"] = json::array();
  }
  void add(const std::string& name, std::span<const double> values, std::vector<std::size_t> shape = {}) {
    if (shape.empty()) shape = {values.size()};
    m_.header["blob_layout"].push_back(
        {{"name", name}, {"offset", m_.blob.size()}, {"count", values.size()}, {"shape", shape}});
    m_.blob.insert(m_.blob.end(), values.begin(), values.end());
  }

 private:
  ModelFile& m_;
};

/// Reads a named segment, checking its declared count against the blob.
inline Vector blob_segment(const ModelFile& m, const std::string& name, std::size_t expected_count) {
  if (!m.header.contains("blob_layout")) throw FormatError("model file: missing blob_layout");
  for (const json& e : m.header["blob_layout"]) {
    if (e.value("name", "") != name) continue;
    const std::size_t off = e.at("offset").get<std::size_t>();
    const std::size_t cnt = e.at("count").get<std::size_t>();
    if (cnt != expected_count)
      throw DimensionMismatch("model file: segment '" + name + "' holds " + std::to_string(cnt) + " values, header implies " +
                              std::to_string(expected_count));
    if (off > m.blob.size() || cnt > m.blob.size() - off)
      throw FormatError("model file: segment '" + name + "' lies outside the blob");
    return Vector(m.blob.begin() + static_cast<std::ptrdiff_t>(off),
                  m.blob.begin() + static_cast<std::ptrdiff_t>(off + cnt));
  }
  throw FormatError("model file: missing segment '" + name + "'");
}

// ---------------------------------------------------------------------------
// Problem JSON

inline json box_to_json(const ParameterBox& b) {
  json a = json::array();
  for (const auto& [lo, hi] : b.bounds) a.push_back({lo, hi});
  return a;
}

inline ParameterBox box_from_json(const json& j) {
  ParameterBox b;
  for (const json& e : j) {
    if (!e.is_array() || e.size() != 2) throw ConfigError("parameter box entries must be [lo, hi]");
    b.bounds.emplace_back(e[0].get<double>(), e[1].get<double>());
  }
  b.validate();
  return b;
}

inline json problem_to_json(const SyntheticProblem& p) {
  json ext = json::array();
  for (const auto& [lo, hi] : p.grid.extent) ext.push_back({lo, hi});
  return {{"kind", to_string(p.kind)},
          {"grid", {{"points", p.grid.points}, {"extent", ext}}},
          {"theta_box", box_to_json(p.theta_box)},
          {"theta_prime_box", box_to_json(p.theta_prime_box)},
          {"gram", "trapezoid"}};
}

/// Missing "grid" / box entries fall back to the defaults of `kind`.
inline SyntheticProblem problem_from_json(const json& j) {
  try {
    const ProblemKind kind = problem_kind_from_string(j.at("kind").get<std::string>());
    GridSpec grid;
    if (j.contains("grid")) {
      const json& g = j["grid"];
      grid.points = g.at("points").get<std::vector<std::size_t>>();
      grid.extent.clear();
      if (g.contains("extent")) {
        for (const json& e : g["extent"]) grid.extent.emplace_back(e.at(0).get<double>(), e.at(1).get<double>());
      } else {
        grid.extent.assign(grid.points.size(), {0.0, 1.0});
      }
    }
    if (j.contains("gram") && j["gram"] != "trapezoid") throw ConfigError("problem: only the trapezoid Gram matrix is supported");
    SyntheticProblem p = make_problem(kind, grid);
    if (j.contains("theta_box")) p.theta_box = box_from_json(j["theta_box"]);
    if (j.contains("theta_prime_box")) p.theta_prime_box = box_from_json(j["theta_prime_box"]);
    p.validate();
    return p;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("problem JSON: ") + e.what());
  }
}

inline SyntheticProblem read_problem(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  json j;
  try {
    j = json::parse(bytes.begin(), bytes.end());
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": malformed JSON: " + e.what());
  }
  return problem_from_json(j);
}

// ---------------------------------------------------------------------------
// Component encoders

inline json layers_to_json(const nn::DenseNet& net) {
  json a = json::array();
  for (const nn::Layer& l : net.layers()) {
    std::visit(
        [&](const auto& x) {
          using T = std::decay_t<decltype(x)>;
          if constexpr (std::is_same_v<T, nn::Dense>) a.push_back({{"type", "dense"}, {"in", x.in}, {"out", x.out}});
          else if constexpr (std::is_same_v<T, nn::LeakyRelu>) a.push_back({{"type", "leaky_relu"}, {"slope", x.slope}});
          else if constexpr (std::is_same_v<T, nn::Feature>) a.push_back({{"type", "feature"}, {"id", nn::to_string(x.id)}});
          else if constexpr (std::is_same_v<T, nn::Clamp>) a.push_back({{"type", "clamp"}});
          else a.push_back({{"type", "reshape"}, {"rows", x.rows}, {"cols", x.cols}});
        },
        l);
  }
  return a;
}

inline void put_net(ModelFile& m, BlobBuilder& b, const std::string& name, const nn::DenseNet& net) {
  m.header["nets"][name] = {{"input_dim", net.input_dim()}, {"layers", layers_to_json(net)}};
  b.add("net." + name, net.params());
}

inline nn::DenseNet get_net(const ModelFile& m, const std::string& name) {
  try {
    const json& j = m.header.at("nets").at(name);
    nn::DenseNet net(j.at("input_dim").get<std::size_t>());
    for (const json& l : j.at("layers")) {
      const std::string t = l.at("type");
      if (t == "dense") {
        detail::require_dims(l.at("in").get<std::size_t>() == net.output_dim(), "model file: dense layer input mismatch");
        net.dense(l.at("out").get<std::size_t>());
      } else if (t == "leaky_relu") {
        net.leaky_relu(l.at("slope").get<double>());
      } else if (t == "feature") {
        net.feature(nn::feature_map_from_string(l.at("id").get<std::string>()));
      } else if (t == "clamp") {
        net.clamp();
      } else if (t == "reshape") {
        net.reshape(l.at("rows").get<std::size_t>(), l.at("cols").get<std::size_t>());
      } else {
        throw FormatError("model file: unknown layer type '" + t + "'");
      }
    }
    net.set_params(blob_segment(m, "net." + name, net.param_count()));
    return net;
  } catch (const json::exception& e) {
    throw FormatError("model file: bad network '" + name + "': " + e.what());
  }
}

inline void put_gram(ModelFile& m, BlobBuilder& b, const std::string& name, const GramMatrix& g) {
  const char* kind = g.kind() == GramMatrix::Kind::Identity ? "identity"
                     : g.kind() == GramMatrix::Kind::Diagonal ? "diagonal"
                                                              : "dense";
  m.header["grams"][name] = {{"kind", kind}, {"dim", g.dim()}};
  if (g.kind() == GramMatrix::Kind::Diagonal) b.add("gram." + name, g.weights());
  if (g.kind() == GramMatrix::Kind::Dense) b.add("gram." + name, g.dense_matrix().data(), {g.dim(), g.dim()});
}

inline std::shared_ptr<const GramMatrix> get_gram(const ModelFile& m, const std::string& name) {
  const json& j = m.header.at("grams").at(name);
  const std::string kind = j.at("kind");
  const std::size_t dim = j.at("dim").get<std::size_t>();
  if (kind == "identity") return std::make_shared<const GramMatrix>(GramMatrix::identity(dim));
  if (kind == "diagonal") return std::make_shared<const GramMatrix>(GramMatrix::diagonal(blob_segment(m, "gram." + name, dim)));
  if (kind == "dense")
    return std::make_shared<const GramMatrix>(GramMatrix::dense(Matrix(dim, dim, blob_segment(m, "gram." + name, dim * dim))));
  throw FormatError("model file: unknown Gram kind '" + kind + "'");
}

inline void put_ambient(ModelFile& m, BlobBuilder& b, const std::string& name, const AmbientBasis& a) {
  m.header["bases"][name] = {{"n_h", a.dof()}, {"n_a", a.dim()}, {"discarded_energy", a.discarded_energy}};
  b.add("basis." + name, a.a.data(), {a.dof(), a.dim()});
  b.add("eigenvalues." + name, a.retained_eigenvalues);
}

inline AmbientBasis get_ambient(const ModelFile& m, const std::string& name,
                                std::shared_ptr<const GramMatrix> g) {
  const json& j = m.header.at("bases").at(name);
  const std::size_t nh = j.at("n_h").get<std::size_t>();
  const std::size_t na = j.at("n_a").get<std::size_t>();
  detail::require_dims(g && g->dim() == nh, "model file: Gram dimension differs from basis rows");
  AmbientBasis a;
  a.a = Matrix(nh, na, blob_segment(m, "basis." + name, nh * na));
  a.g = std::move(g);
  a.retained_eigenvalues = blob_segment(m, "eigenvalues." + name, na);
  a.discarded_energy = j.at("discarded_energy").get<double>();
  return a;
}

inline void put_seg(ModelFile& m, BlobBuilder& b, const std::string& name, const SegregatedNet& s) {
  m.header["segregated"][name] = {{"m", s.m}, {"n", s.n}};
  put_net(m, b, name + ".phi1", s.phi1);
  put_net(m, b, name + ".phi2", s.phi2);
}

inline SegregatedNet get_seg(const ModelFile& m, const std::string& name) {
  SegregatedNet s;
  const json& j = m.header.at("segregated").at(name);
  s.m = j.at("m").get<std::size_t>();
  s.n = j.at("n").get<std::size_t>();
  s.phi1 = get_net(m, name + ".phi1");
  s.phi2 = get_net(m, name + ".phi2");
  s.validate();
  return s;
}

/// Model type tags stored under header["type"].
inline std::string model_type(const ModelFile& m) { return m.header.at("type").get<std::string>(); }

inline ModelFile start_model(const std::string& type, const json& meta) {
  ModelFile m;
  m.header = meta.is_object() ? meta : json::object();
  m.header["type"] = type;
  m.header["format"] = "dod-model";
  return m;
}

/// "ambient" or "pod": a single G-orthonormal basis.
inline ModelFile encode_basis(const AmbientBasis& a, const std::string& type = "ambient", const json& meta = {}) {
  ModelFile m = start_model(type, meta);
  BlobBuilder b(m);
  put_gram(m, b, "g", *a.g);
  put_ambient(m, b, "ambient", a);
  return m;
}

inline AmbientBasis decode_basis(const ModelFile& m) {
  try {
    return get_ambient(m, "ambient", get_gram(m, "g"));
  } catch (const json::exception& e) {
    throw FormatError(std::string("model file: ") + e.what());
  }
}

inline void put_dod(ModelFile& m, BlobBuilder& b, const DodModel& d) {
  put_gram(m, b, "g", *d.ambient.g);
  put_ambient(m, b, "ambient", d.ambient);
  m.header["dod"] = {{"n", d.n()}, {"orth_mode", to_string(d.orth_mode)}, {"mu_dim", d.mu_dim()}};
  put_net(m, b, "seed", d.seed);
  for (std::size_t k = 0; k < d.n(); ++k) put_net(m, b, "root." + std::to_string(k), d.roots[k]);
}

inline DodModel get_dod(const ModelFile& m) {
  DodModel d;
  d.ambient = get_ambient(m, "ambient", get_gram(m, "g"));
  const json& j = m.header.at("dod");
  d.orth_mode = orth_mode_from_string(j.at("orth_mode").get<std::string>());
  d.seed = get_net(m, "seed");
  const std::size_t n = j.at("n").get<std::size_t>();
  for (std::size_t k = 0; k < n; ++k) d.roots.push_back(get_net(m, "root." + std::to_string(k)));
  d.validate();
  return d;
}

inline ModelFile encode_dod(const DodModel& d, const json& meta = {}) {
  ModelFile m = start_model("dod", meta);
  BlobBuilder b(m);
  put_dod(m, b, d);
  return m;
}

inline DodModel decode_dod(const ModelFile& m) {
  try {
    return get_dod(m);
  } catch (const json::exception& e) {
    throw FormatError(std::string("model file: ") + e.what());
  }
}

inline ModelFile encode_dodnn(const DodNnModel& x, const json& meta = {}) {
  ModelFile m = start_model("dodnn", meta);
  BlobBuilder b(m);
  put_dod(m, b, x.dod);
  m.header["coeff_orth"] = to_string(x.coeff_orth);
  put_seg(m, b, "phi", x.phi);
  return m;
}

inline DodNnModel decode_dodnn(const ModelFile& m) {
  try {
    DodNnModel x;
    x.dod = get_dod(m);
    x.coeff_orth = orth_mode_from_string(m.header.at("coeff_orth").get<std::string>());
    x.phi = get_seg(m, "phi");
    x.validate();
    return x;
  } catch (const json::exception& e) {
    throw FormatError(std::string("model file: ") + e.what());
  }
}

inline ModelFile encode_benchmark(const BenchmarkModel& x, const json& meta = {}) {
  ModelFile m = start_model("benchmark", meta);
  BlobBuilder b(m);
  put_gram(m, b, "g", *x.ambient.g);
  put_ambient(m, b, "ambient", x.ambient);
  m.header["variant"] = to_string(x.kind);
  if (x.kind == BenchmarkKind::Monolithic) put_net(m, b, "mono", x.mono);
  else put_seg(m, b, "seg", x.seg);
  return m;
}

inline BenchmarkModel decode_benchmark(const ModelFile& m) {
  try {
    BenchmarkModel x;
    x.ambient = get_ambient(m, "ambient", get_gram(m, "g"));
    x.kind = benchmark_kind_from_string(m.header.at("variant").get<std::string>());
    if (x.kind == BenchmarkKind::Monolithic) x.mono = get_net(m, "mono");
    else x.seg = get_seg(m, "seg");
    return x;
  } catch (const json::exception& e) {
    throw FormatError(std::string("model file: ") + e.what());
  }
}

inline ModelFile encode_cpod(const ClusteredPod& x, const json& meta = {}) {
  ModelFile m = start_model("cpod", meta);
  BlobBuilder b(m);
  put_gram(m, b, "g", *x.g);
  m.header["clusters"] = x.clusters();
  for (std::size_t k = 0; k < x.clusters(); ++k) {
    put_ambient(m, b, "cluster." + std::to_string(k), x.bases[k]);
    b.add("centroid." + std::to_string(k), x.centroids[k]);
  }
  Vector labels(x.labels.begin(), x.labels.end());
  b.add("labels", labels);
  m.header["n_labels"] = x.labels.size();
  return m;
}

inline ClusteredPod decode_cpod(const ModelFile& m) {
  try {
    ClusteredPod x;
    x.g = get_gram(m, "g");
    const std::size_t c = m.header.at("clusters").get<std::size_t>();
    for (std::size_t k = 0; k < c; ++k) {
      x.bases.push_back(get_ambient(m, "cluster." + std::to_string(k), x.g));
      x.centroids.push_back(blob_segment(m, "centroid." + std::to_string(k), x.g->dim()));
    }
    for (double l : blob_segment(m, "labels", m.header.at("n_labels").get<std::size_t>()))
      x.labels.push_back(static_cast<std::size_t>(l));
    return x;
  } catch (const json::exception& e) {
    throw FormatError(std::string("model file: ") + e.what());
  }
}

inline ModelFile encode_ae(const PodAutoencoder& x, const json& meta = {}) {
  ModelFile m = start_model("ae", meta);
  BlobBuilder b(m);
  put_gram(m, b, "g", *x.ambient.g);
  put_ambient(m, b, "ambient", x.ambient);
  put_net(m, b, "encoder", x.encoder);
  put_net(m, b, "decoder", x.decoder);
  return m;
}

inline PodAutoencoder decode_ae(const ModelFile& m) {
  try {
    PodAutoencoder x;
    x.ambient = get_ambient(m, "ambient", get_gram(m, "g"));
    x.encoder = get_net(m, "encoder");
    x.decoder = get_net(m, "decoder");
    detail::require_dims(x.encoder.input_dim() == x.ambient.dim() && x.decoder.output_dim() == x.ambient.dim(),
                         "model file: autoencoder dims differ from N_A");
    return x;
  } catch (const json::exception& e) {
    throw FormatError(std::string("model file: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// CSV

/// Shortest text that parses back to the same double.
inline std::string fmt_double(double x) {
  char buf[32];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, x);
    if (std::strtod(buf, nullptr) == x) break;
  }
  return buf;
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  void add_row(std::vector<std::string> row) {
    detail::require_dims(row.size() == header_.size(), "CsvTable: row width differs from header");
    rows_.push_back(std::move(row));
  }

  const std::vector<std::string>& header() const noexcept { return header_; }
  const std::vector<std::vector<std::string>>& rows() const noexcept { return rows_; }

  std::string str() const {
    std::string out;
    const auto line = [&](const std::vector<std::string>& r) {
      for (std::size_t i = 0; i < r.size(); ++i) {
        if (i) out += ',';
        out += csv_field(r[i]);
      }
      out += "\r\n";
    };
    line(header_);
    for (const auto& r : rows_) line(r);
    return out;
  }

  void write(const std::filesystem::path& path) const { write_text_atomic(path, str()); }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

/// Parses CSV written by CsvTable (quoted fields, CRLF or LF line ends).
inline std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false, any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
      any = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
      any = true;
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      if (any || !field.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
      }
      row.clear();
      field.clear();
      any = false;
    } else {
      field += c;
      any = true;
    }
  }
  if (any || !field.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace dod::io
