#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "hncm/nn/adam.hpp"
#include "hncm/nn/param.hpp"

namespace hncm::io {

// Little-endian binary primitives shared by the checkpoint and index formats.

inline void write_u8(std::ostream& out, std::uint8_t v) { out.put(static_cast<char>(v)); }

inline void write_u32(std::ostream& out, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 4);
}

inline void write_u64(std::ostream& out, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 8);
}

inline void write_f64(std::ostream& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof bits);
  write_u64(out, bits);
}

inline void write_str(std::ostream& out, const std::string& s) {
  write_u32(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline void need(std::istream& in, const char* what) {
  if (!in) throw Error(std::string("truncated or unreadable input while reading ") + what);
}

inline std::uint8_t read_u8(std::istream& in) {
  char c;
  in.get(c);
  need(in, "u8");
  return static_cast<std::uint8_t>(c);
}

inline std::uint32_t read_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  need(in, "u32");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

inline std::uint64_t read_u64(std::istream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  need(in, "u64");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

inline double read_f64(std::istream& in) {
  std::uint64_t bits = read_u64(in);
  double v;
  std::memcpy(&v, &bits, sizeof v);
  return v;
}

inline std::string read_str(std::istream& in, std::uint32_t limit = 1u << 28) {
  std::uint32_t n = read_u32(in);
  if (n > limit) throw Error("string length out of range in binary file");
  std::string s(n, '\0');
  in.read(s.data(), n);
  need(in, "string");
  return s;
}

inline void write_matrix(std::ostream& out, const nn::Matrix& m) {
  write_u64(out, static_cast<std::uint64_t>(m.rows()));
  write_u64(out, static_cast<std::uint64_t>(m.cols()));
  for (Eigen::Index i = 0; i < m.size(); ++i) write_f64(out, m.data()[i]);
}

inline nn::Matrix read_matrix(std::istream& in) {
  auto rows = read_u64(in);
  auto cols = read_u64(in);
  if (rows > (1ull << 32) || cols > (1ull << 32) || rows * cols > (1ull << 34)) {
    throw Error("matrix shape out of range in binary file");
  }
  nn::Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = read_f64(in);
  return m;
}

}  // namespace hncm::io

namespace hncm::nn {

inline constexpr char kCheckpointMagic[8] = {'H', 'N', 'C', 'M', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

/// In-memory image of a checkpoint file:
///
///   magic "HNCMCKPT" | u32 version | u64 vocab hash | str kind
///   | u32 n_meta  { str key | str value }            (sorted by key)
///   | u32 n_params { str name | u64 rows | u64 cols | f64 * rows*cols }
///   | u8 has_optimizer [ u64 step | f64 lr b1 b2 eps | per param: m, v ]
///
/// Matrices are column-major, integers and doubles little-endian.
struct Checkpoint {
  std::string kind;
  std::uint64_t vocab_hash = 0;
  std::map<std::string, std::string> meta;
  std::vector<std::pair<std::string, Matrix>> params;
  std::optional<AdamState> optimizer;

  static Checkpoint capture(const std::string& kind, std::uint64_t vocab_hash,
                            std::map<std::string, std::string> meta, const ParamStore& store,
                            const AdamState* opt = nullptr) {
    Checkpoint ck;
    ck.kind = kind;
    ck.vocab_hash = vocab_hash;
    ck.meta = std::move(meta);
    store.for_each([&](const Param& p) { ck.params.emplace_back(p.name, p.value); });
    if (opt) ck.optimizer = *opt;
    return ck;
  }

  /// Copies stored values into `store`; names and shapes must match exactly.
  void apply(ParamStore& store) const {
    if (params.size() != store.size()) {
      throw Error("checkpoint has " + std::to_string(params.size()) + " parameters, model has " +
                  std::to_string(store.size()));
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
      Param& p = store.at(i);
      const auto& [name, value] = params[i];
      if (p.name != name) throw Error("checkpoint parameter " + name + " does not match " + p.name);
      if (p.value.rows() != value.rows() || p.value.cols() != value.cols()) {
        throw Error("checkpoint shape mismatch for " + name);
      }
      p.value = value;
    }
  }

  const std::string& require(const std::string& key) const {
    auto it = meta.find(key);
    if (it == meta.end()) throw Error("checkpoint is missing metadata key " + key);
    return it->second;
  }

  void write(std::ostream& out) const {
    out.write(kCheckpointMagic, sizeof kCheckpointMagic);
    io::write_u32(out, kCheckpointVersion);
    io::write_u64(out, vocab_hash);
    io::write_str(out, kind);
    io::write_u32(out, static_cast<std::uint32_t>(meta.size()));
    for (const auto& [k, v] : meta) {
      io::write_str(out, k);
      io::write_str(out, v);
    }
    io::write_u32(out, static_cast<std::uint32_t>(params.size()));
    for (const auto& [name, value] : params) {
      io::write_str(out, name);
      io::write_matrix(out, value);
    }
    io::write_u8(out, optimizer ? 1 : 0);
    if (optimizer) {
      io::write_u64(out, optimizer->step);
      io::write_f64(out, optimizer->lr);
      io::write_f64(out, optimizer->beta1);
      io::write_f64(out, optimizer->beta2);
      io::write_f64(out, optimizer->eps);
      if (optimizer->m.size() != params.size() || optimizer->v.size() != params.size()) {
        throw Error("optimizer state does not match parameter count");
      }
      for (std::size_t i = 0; i < params.size(); ++i) {
        io::write_matrix(out, optimizer->m[i]);
        io::write_matrix(out, optimizer->v[i]);
      }
    }
  }

  static Checkpoint read(std::istream& in) {
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kCheckpointMagic, 8) != 0) throw Error("not a checkpoint file");
    std::uint32_t version = io::read_u32(in);
    if (version != kCheckpointVersion) {
      throw Error("unsupported checkpoint version " + std::to_string(version));
    }
    Checkpoint ck;
    ck.vocab_hash = io::read_u64(in);
    ck.kind = io::read_str(in);
    std::uint32_t n_meta = io::read_u32(in);
    for (std::uint32_t i = 0; i < n_meta; ++i) {
      std::string k = io::read_str(in);
      ck.meta[k] = io::read_str(in);
    }
    std::uint32_t n = io::read_u32(in);
    for (std::uint32_t i = 0; i < n; ++i) {
      std::string name = io::read_str(in);
      ck.params.emplace_back(std::move(name), io::read_matrix(in));
    }
    if (io::read_u8(in)) {
      AdamState st;
      st.step = io::read_u64(in);
      st.lr = io::read_f64(in);
      st.beta1 = io::read_f64(in);
      st.beta2 = io::read_f64(in);
      st.eps = io::read_f64(in);
      for (std::uint32_t i = 0; i < n; ++i) {
        st.m.push_back(io::read_matrix(in));
        st.v.push_back(io::read_matrix(in));
      }
      ck.optimizer = std::move(st);
    }
    return ck;
  }

  void save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open checkpoint for writing: " + path);
    write(out);
    if (!out) throw Error("failed writing checkpoint: " + path);
  }

  static Checkpoint load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open checkpoint: " + path);
    return read(in);
  }
};

}  // namespace hncm::nn
