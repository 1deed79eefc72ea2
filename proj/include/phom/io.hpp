#pragma once

// Binary field, conductance and label files. Each file is one ASCII header
// line followed by little-endian 64-bit values in the lattice layout (e_1
// fastest); edge and vector fields store their d direction arrays in order.
//
//   PHFIELD v1 d=<d> m=<m> kind=<scalar|edge|vector>
//   PHCOND v1 d=<d> m=<m> law=<bernoulli|uniform> p=<p> lambda_ell=<L> seed=<s>
//   PHLBL v1 d=<d> m=<m> maximal=<id> crossing=<0|1> components=<n>

#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "phom/cluster_labels.hpp"
#include "phom/errors.hpp"
#include "phom/lattice.hpp"
#include "phom/percolation.hpp"

namespace phom {

namespace detail {
template <class T>
void put_le(std::ostream& os, T v) {
  static_assert(sizeof(T) == 8);
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  unsigned char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(bits >> (8 * i));
  os.write(reinterpret_cast<const char*>(buf), 8);
}

template <class T>
T get_le(std::istream& is) {
  unsigned char buf[8];
  if (!is.read(reinterpret_cast<char*>(buf), 8)) throw FormatError("truncated payload");
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  T v;
  std::memcpy(&v, &bits, 8);
  return v;
}

/// Shortest round-trip decimal form of a double.
inline std::string exact(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

struct Header {
  std::string magic;
  std::map<std::string, std::string> kv;

  const std::string& at(const std::string& k) const {
    auto it = kv.find(k);
    if (it == kv.end()) throw FormatError("header is missing '" + k + "'");
    return it->second;
  }
  int integer(const std::string& k) const {
    try {
      return std::stoi(at(k));
    } catch (const std::logic_error&) {
      throw FormatError("bad integer for '" + k + "'");
    }
  }
};

inline Header read_header(std::istream& is, const std::string& magic) {
  std::string line;
  if (!std::getline(is, line)) throw FormatError("empty file");
  std::istringstream ls(line);
  Header h;
  std::string version;
  ls >> h.magic >> version;
  if (h.magic != magic || version != "v1") throw FormatError("expected '" + magic + " v1' header");
  std::string tok;
  while (ls >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) throw FormatError("malformed header token '" + tok + "'");
    h.kv[tok.substr(0, eq)] = tok.substr(eq + 1);
  }
  return h;
}

inline CubeDomain header_domain(const Header& h) {
  try {
    return CubeDomain(h.integer("d"), h.integer("m"));
  } catch (const InvalidArgument& e) {
    throw FormatError(e.what());
  }
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open '" + path + "' for writing");
  return os;
}

inline std::ifstream open_in(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open '" + path + "'");
  return is;
}

inline void expect_end(std::istream& is) {
  if (is.peek() != std::char_traits<char>::eof()) throw FormatError("trailing bytes after payload");
}
}  // namespace detail

enum class FieldKind { scalar, edge, vector };

inline void write_field(std::ostream& os, const ScalarField& u) {
  os << "PHFIELD v1 d=" << u.domain.dim() << " m=" << u.domain.level() << " kind=scalar\n";
  for (double v : u.values) detail::put_le(os, v);
}

inline void write_field(std::ostream& os, const EdgeField& f) {
  os << "PHFIELD v1 d=" << f.domain.dim() << " m=" << f.domain.level() << " kind=edge\n";
  for (int j = 0; j < f.domain.dim(); ++j)
    for (double v : f.dir[j]) detail::put_le(os, v);
}

inline void write_field(std::ostream& os, const VectorField& f) {
  os << "PHFIELD v1 d=" << f.domain.dim() << " m=" << f.domain.level() << " kind=vector\n";
  for (int j = 0; j < f.domain.dim(); ++j)
    for (double v : f.comp[j]) detail::put_le(os, v);
}

/// The kind recorded in a field file's header.
inline FieldKind field_kind(const std::string& path) {
  auto is = detail::open_in(path);
  const auto h = detail::read_header(is, "PHFIELD");
  const std::string& k = h.at("kind");
  if (k == "scalar") return FieldKind::scalar;
  if (k == "edge") return FieldKind::edge;
  if (k == "vector") return FieldKind::vector;
  throw FormatError("unknown field kind '" + k + "'");
}

inline ScalarField read_scalar_field(std::istream& is) {
  const auto h = detail::read_header(is, "PHFIELD");
  if (h.at("kind") != "scalar") throw FormatError("expected a scalar field");
  ScalarField u(detail::header_domain(h));
  for (auto& v : u.values) v = detail::get_le<double>(is);
  detail::expect_end(is);
  return u;
}

inline std::array<std::vector<double>, kMaxDim> read_directional(std::istream& is, const std::string& kind,
                                                                 CubeDomain& dom) {
  const auto h = detail::read_header(is, "PHFIELD");
  if (h.at("kind") != kind) throw FormatError("expected a " + kind + " field");
  dom = detail::header_domain(h);
  std::array<std::vector<double>, kMaxDim> out;
  for (int j = 0; j < dom.dim(); ++j) {
    out[j].resize(dom.size());
    for (auto& v : out[j]) v = detail::get_le<double>(is);
  }
  detail::expect_end(is);
  return out;
}

inline EdgeField read_edge_field(std::istream& is) {
  EdgeField f;
  f.dir = read_directional(is, "edge", f.domain);
  return f;
}

inline VectorField read_vector_field(std::istream& is) {
  VectorField f;
  f.comp = read_directional(is, "vector", f.domain);
  return f;
}

inline void write_conductance(std::ostream& os, const ConductanceField& a) {
  os << "PHCOND v1 d=" << a.domain.dim() << " m=" << a.domain.level() << " law=" << to_string(a.law.kind)
     << " p=" << detail::exact(a.law.p_open) << " lambda_ell=" << detail::exact(a.law.lambda_ell) << " seed=" << a.seed
     << "\n";
  for (int j = 0; j < a.domain.dim(); ++j)
    for (double v : a.values[j]) detail::put_le(os, v);
}

inline ConductanceField read_conductance(std::istream& is) {
  const auto h = detail::read_header(is, "PHCOND");
  ConductanceField a(detail::header_domain(h), 0.0);
  try {
    a.law.kind = parse_law(h.at("law"));
    a.law.p_open = std::stod(h.at("p"));
    a.law.lambda_ell = std::stod(h.at("lambda_ell"));
    a.seed = std::stoull(h.at("seed"));
  } catch (const InvalidArgument& e) {
    throw FormatError(e.what());
  } catch (const std::logic_error&) {
    throw FormatError("bad numeric value in PHCOND header");
  }
  for (int j = 0; j < a.domain.dim(); ++j)
    for (auto& v : a.values[j]) {
      v = detail::get_le<double>(is);
      if (!(v == 0.0 || (v > 0.0 && v <= 1.0))) throw FormatError("conductance outside {0} u (0, 1]");
    }
  detail::expect_end(is);
  return a;
}

inline void write_labels(std::ostream& os, const ClusterLabels& l) {
  os << "PHLBL v1 d=" << l.domain.dim() << " m=" << l.domain.level() << " maximal=" << l.maximal_id
     << " crossing=" << (l.maximal_is_crossing ? 1 : 0) << " components=" << l.component_count << "\n";
  for (std::int64_t v : l.label) detail::put_le(os, v);
}

inline ClusterLabels read_labels(std::istream& is) {
  const auto h = detail::read_header(is, "PHLBL");
  ClusterLabels l;
  l.domain = detail::header_domain(h);
  try {
    l.maximal_id = std::stoll(h.at("maximal"));
    l.maximal_is_crossing = h.at("crossing") == "1";
    l.component_count = std::stoull(h.at("components"));
  } catch (const std::logic_error&) {
    throw FormatError("bad numeric value in PHLBL header");
  }
  l.label.resize(l.domain.size());
  for (auto& v : l.label) v = detail::get_le<std::int64_t>(is);
  detail::expect_end(is);
  return l;
}

template <class T, class Writer>
void save(const std::string& path, const T& value, Writer&& w) {
  auto os = detail::open_out(path);
  w(os, value);
  if (!os) throw Error("write to '" + path + "' failed");
}

inline void save_field(const std::string& path, const ScalarField& u) {
  save(path, u, [](std::ostream& os, const ScalarField& v) { write_field(os, v); });
}
inline void save_conductance(const std::string& path, const ConductanceField& a) {
  save(path, a, [](std::ostream& os, const ConductanceField& v) { write_conductance(os, v); });
}
inline void save_labels(const std::string& path, const ClusterLabels& l) {
  save(path, l, [](std::ostream& os, const ClusterLabels& v) { write_labels(os, v); });
}

inline ScalarField load_scalar_field(const std::string& path) {
  auto is = detail::open_in(path);
  return read_scalar_field(is);
}
inline ConductanceField load_conductance(const std::string& path) {
  auto is = detail::open_in(path);
  return read_conductance(is);
}
inline ClusterLabels load_labels(const std::string& path) {
  auto is = detail::open_in(path);
  return read_labels(is);
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(const std::string& bytes, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t file_hash(const std::string& path) {
  auto is = detail::open_in(path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return fnv1a(ss.str());
}

inline std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

}  // namespace phom
