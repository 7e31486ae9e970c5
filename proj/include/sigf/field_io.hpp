#pragma once

// Binary field dumps:
//   "SIGF" | version u16 | N u32 | flags u32 (bit 0: phi present)
//   | N*N little-endian f64 heights (row-major) | optional N*N f64 phi

#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "sigf/error.hpp"
#include "sigf/field.hpp"

namespace sigf {

inline constexpr std::uint16_t field_format_version = 1;
inline constexpr char field_magic[4] = {'S', 'I', 'G', 'F'};

namespace detail {

template <class T>
void put_le(std::vector<std::uint8_t>& out, T v) {
  std::uint64_t u = 0;
  std::memcpy(&u, &v, sizeof(T));
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(std::uint8_t(u >> (8 * i)));
}

template <class T>
T get_le(const std::uint8_t* p) {
  std::uint64_t u = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) u |= std::uint64_t(p[i]) << (8 * i);
  T v;
  std::memcpy(&v, &u, sizeof(T));
  return v;
}

}  // namespace detail

inline std::vector<std::uint8_t> dump_field(const FieldSample& f) {
  std::vector<std::uint8_t> out(field_magic, field_magic + 4);
  detail::put_le<std::uint16_t>(out, field_format_version);
  detail::put_le<std::uint32_t>(out, std::uint32_t(f.spec.N));
  detail::put_le<std::uint32_t>(out, f.has_underlying() ? 1u : 0u);
  for (Eigen::Index i = 0; i < f.heights.size(); ++i) detail::put_le<double>(out, f.heights(i));
  if (f.has_underlying())
    for (Eigen::Index i = 0; i < f.underlying->size(); ++i) detail::put_le<double>(out, (*f.underlying)(i));
  return out;
}

inline FieldSample load_field(const std::vector<std::uint8_t>& bytes) {
  constexpr std::size_t header = 4 + 2 + 4 + 4;
  if (bytes.size() < 4 || std::memcmp(bytes.data(), field_magic, 4) != 0)
    throw ParseError("field dump: bad magic (expected \"SIGF\")", ParseFailure::magic);
  if (bytes.size() < header) {
    std::ostringstream os;
    os << "field dump: truncated header, expected " << header << " bytes, found " << bytes.size();
    throw ParseError(os.str(), ParseFailure::length);
  }
  const auto version = detail::get_le<std::uint16_t>(bytes.data() + 4);
  if (version != field_format_version)
    throw ParseError("field dump: unsupported version " + std::to_string(version), ParseFailure::version);
  const auto N = detail::get_le<std::uint32_t>(bytes.data() + 6);
  const auto flags = detail::get_le<std::uint32_t>(bytes.data() + 10);
  const std::size_t cells = std::size_t(N) * N;
  const std::size_t expected = header + cells * 8 * ((flags & 1u) ? 2 : 1);
  if (bytes.size() != expected) {
    std::ostringstream os;
    os << "field dump: length mismatch, expected " << expected << " bytes, found " << bytes.size();
    throw ParseError(os.str(), ParseFailure::length);
  }
  FieldSample f;
  f.spec = GridSpec(int(N));
  f.heights.resize(Eigen::Index(cells));
  const std::uint8_t* p = bytes.data() + header;
  for (std::size_t i = 0; i < cells; ++i, p += 8) f.heights(Eigen::Index(i)) = detail::get_le<double>(p);
  if (flags & 1u) {
    Eigen::VectorXd phi(static_cast<Eigen::Index>(cells));
    for (std::size_t i = 0; i < cells; ++i, p += 8) phi(Eigen::Index(i)) = detail::get_le<double>(p);
    f.underlying = std::move(phi);
  }
  f.sampler = "loaded";
  return f;
}

inline void write_field(const std::string& path, const FieldSample& f) {
  const auto b = dump_field(f);
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ResourceError("cannot open " + path + " for writing");
  os.write(reinterpret_cast<const char*>(b.data()), std::streamsize(b.size()));
  if (!os) throw ResourceError("write failed: " + path);
}

inline FieldSample read_field(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ResourceError("cannot open " + path);
  std::vector<std::uint8_t> b((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return load_field(b);
}

}  // namespace sigf
