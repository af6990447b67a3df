#pragma once

// Portable array archive shared by datasets and checkpoints.
//
// Layout:
//   line 1: magic "PIDGAN-ARCHIVE"
//   line 2: byte length of the header
//   header: one JSON object {"format", "meta", "arrays": [{name, rows, cols, offset}]}
//   "\n", then the payload: float64 little-endian, row-major, arrays back to back.

#include "pidgan/common.hpp"

#include "json.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

namespace pidgan::io {

using Json = nlohmann::json;

inline constexpr const char* kArchiveMagic = "PIDGAN-ARCHIVE";

struct Archive {
  std::string format;  // e.g. "pidgan-dataset/1"
  Json meta = Json::object();
  std::map<std::string, Matrix> arrays;

  const Matrix& at(const std::string& name) const {
    auto it = arrays.find(name);
    if (it == arrays.end()) throw ValidationError("archive has no array named '" + name + "'");
    return it->second;
  }
  bool has(const std::string& name) const { return arrays.count(name) > 0; }
};

namespace detail {

static_assert(std::endian::native == std::endian::little, "archive payload assumes a little-endian host");

inline void append_matrix(std::string& payload, const Matrix& m) {
  const std::size_t start = payload.size();
  payload.resize(start + static_cast<std::size_t>(m.size()) * sizeof(double));
  char* dst = payload.data() + start;
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      const double v = m(i, j);
      std::memcpy(dst, &v, sizeof(double));
      dst += sizeof(double);
    }
}

}  // namespace detail

/// Serialized bytes of an archive; identical inputs give identical bytes.
inline std::string to_bytes(const Archive& a) {
  std::string payload;
  Json dir = Json::array();
  for (const auto& [name, m] : a.arrays) {
    dir.push_back({{"name", name}, {"rows", m.rows()}, {"cols", m.cols()}, {"offset", payload.size()}});
    detail::append_matrix(payload, m);
  }
  const Json header = {{"format", a.format}, {"meta", a.meta}, {"arrays", dir}};
  const std::string text = header.dump();
  std::ostringstream out;
  out << kArchiveMagic << '\n' << text.size() << '\n' << text << '\n';
  return out.str() + payload;
}

namespace detail {

inline Archive parse_archive(const std::string& bytes) {
  std::istringstream in(bytes);
  std::string magic, len_line;
  if (!std::getline(in, magic) || magic != kArchiveMagic) throw ValidationError("not a pidgan archive");
  if (!std::getline(in, len_line)) throw ValidationError("truncated archive header");
  const std::size_t len = std::stoull(len_line);
  std::string text(len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(len));
  if (static_cast<std::size_t>(in.gcount()) != len || in.get() != '\n') throw ValidationError("truncated archive header");
  const std::size_t base = static_cast<std::size_t>(in.tellg());
  const Json header = Json::parse(text);

  Archive a;
  a.format = header.at("format").get<std::string>();
  a.meta = header.at("meta");
  for (const auto& entry : header.at("arrays")) {
    const auto rows = entry.at("rows").get<Eigen::Index>();
    const auto cols = entry.at("cols").get<Eigen::Index>();
    const auto offset = entry.at("offset").get<std::size_t>();
    const std::size_t need = static_cast<std::size_t>(rows * cols) * sizeof(double);
    if (base + offset + need > bytes.size()) throw ValidationError("archive payload is truncated");
    Matrix m(rows, cols);
    const char* src = bytes.data() + base + offset;
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j) {
        double v;
        std::memcpy(&v, src, sizeof(double));
        src += sizeof(double);
        m(i, j) = v;
      }
    a.arrays.emplace(entry.at("name").get<std::string>(), std::move(m));
  }
  return a;
}

}  // namespace detail

inline Archive from_bytes(const std::string& bytes) {
  try {
    return detail::parse_archive(bytes);
  } catch (const Json::exception& e) {
    throw ValidationError(std::string("malformed archive header: ") + e.what());
  } catch (const std::logic_error& e) {  // stoull on a damaged length line
    if (dynamic_cast<const ValidationError*>(&e)) throw;
    throw ValidationError("malformed archive header");
  }
}

inline void write_archive(const std::string& path, const Archive& a) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot open '" + path + "' for writing");
  const std::string bytes = to_bytes(a);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline Archive read_archive(const std::string& path, const std::string& expected_format = "") {
  Archive a = from_bytes(read_file(path));
  if (!expected_format.empty() && a.format != expected_format)
    throw ValidationError("'" + path + "' has format '" + a.format + "', expected '" + expected_format + "'");
  return a;
}

/// 64-bit FNV-1a; used as a content fingerprint, not for security.
inline std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline std::string fingerprint(const Archive& a) { return hex64(fnv1a(to_bytes(a))); }

inline Json matrix_to_json(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json r = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
    rows.push_back(r);
  }
  return rows;
}

}  // namespace pidgan::io
