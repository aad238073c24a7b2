#pragma once

#include <cstddef>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

#include "awe/matrix.hpp"

namespace awe {

// Parse failure in a binary stream; byte_offset is the position of the
// field that could not be read or validated.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t byte_offset)
      : std::runtime_error(what + " (byte offset " + std::to_string(byte_offset) + ")"),
        byte_offset(byte_offset) {}
  std::size_t byte_offset;
};

namespace io {

// All on-disk integers and floats are little-endian regardless of host.

inline void put_bytes_le(std::ostream& os, std::uint64_t v, int nbytes) {
  char buf[8];
  for (int i = 0; i < nbytes; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(buf, nbytes);
}

inline void put_u16(std::ostream& os, std::uint16_t v) { put_bytes_le(os, v, 2); }
inline void put_u32(std::ostream& os, std::uint32_t v) { put_bytes_le(os, v, 4); }
inline void put_u64(std::ostream& os, std::uint64_t v) { put_bytes_le(os, v, 8); }

inline void put_f32(std::ostream& os, float f) {
  std::uint32_t bits;
  std::memcpy(&bits, &f, 4);
  put_u32(os, bits);
}

inline void put_f64(std::ostream& os, double d) {
  std::uint64_t bits;
  std::memcpy(&bits, &d, 8);
  put_u64(os, bits);
}

inline std::uint64_t get_bytes_le(std::istream& is, int nbytes, const char* field) {
  const std::size_t at = static_cast<std::size_t>(is.tellg());
  char buf[8];
  is.read(buf, nbytes);
  if (!is) throw ParseError(std::string("truncated stream reading ") + field, at);
  std::uint64_t v = 0;
  for (int i = 0; i < nbytes; ++i)
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[i])) << (8 * i);
  return v;
}

inline std::uint16_t get_u16(std::istream& is, const char* field) {
  return static_cast<std::uint16_t>(get_bytes_le(is, 2, field));
}
inline std::uint32_t get_u32(std::istream& is, const char* field) {
  return static_cast<std::uint32_t>(get_bytes_le(is, 4, field));
}
inline std::uint64_t get_u64(std::istream& is, const char* field) {
  return get_bytes_le(is, 8, field);
}

inline float get_f32(std::istream& is, const char* field) {
  std::uint32_t bits = get_u32(is, field);
  float f;
  std::memcpy(&f, &bits, 4);
  return f;
}

inline double get_f64(std::istream& is, const char* field) {
  std::uint64_t bits = get_u64(is, field);
  double d;
  std::memcpy(&d, &bits, 8);
  return d;
}

inline std::string get_string(std::istream& is, std::size_t len, const char* field) {
  const std::size_t at = static_cast<std::size_t>(is.tellg());
  std::string s(len, '\0');
  is.read(s.data(), static_cast<std::streamsize>(len));
  if (!is) throw ParseError(std::string("truncated stream reading ") + field, at);
  return s;
}

// Matrices are stored row-major, f64 little-endian, no shape header
// (the caller writes shapes separately).
inline void put_matrix(std::ostream& os, const Matrix& m) {
  for (Index i = 0; i < m.size(); ++i) put_f64(os, m.data()[i]);
}

inline Matrix get_matrix(std::istream& is, Index rows, Index cols, const char* field) {
  Matrix m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = get_f64(is, field);
  return m;
}

inline void put_vector(std::ostream& os, const Vector& v) {
  for (Index i = 0; i < v.size(); ++i) put_f64(os, v[i]);
}

inline Vector get_vector(std::istream& is, Index n, const char* field) {
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = get_f64(is, field);
  return v;
}

bool valid_utf8(const std::string& s);

}  // namespace io
}  // namespace awe
