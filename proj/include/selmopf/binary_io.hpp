#pragma once

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "selmopf/errors.hpp"

namespace selmopf::binary {

static_assert(std::endian::native == std::endian::little, "archives are little-endian");

template <class T>
void put(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw FormatError("truncated archive");
  return v;
}

inline void put_string(std::ostream& out, const std::string& s) {
  put<std::uint64_t>(out, s.size());
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string get_string(std::istream& in) {
  const auto n = get<std::uint64_t>(in);
  if (n > (1ULL << 32)) throw FormatError("implausible string length in archive");
  std::string s(n, '\0');
  in.read(s.data(), static_cast<std::streamsize>(n));
  if (!in) throw FormatError("truncated archive");
  return s;
}

inline void put_matrix(std::ostream& out, const Eigen::MatrixXd& m) {
  put<std::uint64_t>(out, static_cast<std::uint64_t>(m.rows()));
  put<std::uint64_t>(out, static_cast<std::uint64_t>(m.cols()));
  out.write(reinterpret_cast<const char*>(m.data()),
            static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(m.size())));
}

inline Eigen::MatrixXd get_matrix(std::istream& in) {
  const auto r = get<std::uint64_t>(in);
  const auto c = get<std::uint64_t>(in);
  if (r > (1ULL << 28) || c > (1ULL << 28) || r * c > (1ULL << 30)) {
    throw FormatError("implausible matrix shape in archive");
  }
  Eigen::MatrixXd m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
  in.read(reinterpret_cast<char*>(m.data()),
          static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(m.size())));
  if (!in) throw FormatError("truncated archive");
  return m;
}

inline void put_vector(std::ostream& out, const Eigen::VectorXd& v) { put_matrix(out, v); }

inline Eigen::VectorXd get_vector(std::istream& in) {
  Eigen::MatrixXd m = get_matrix(in);
  if (m.cols() != 1 && m.size() != 0) throw FormatError("expected a column vector in archive");
  return Eigen::Map<Eigen::VectorXd>(m.data(), m.size());
}

inline void put_doubles(std::ostream& out, const std::vector<double>& v) {
  put_vector(out, Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
}

inline std::vector<double> get_doubles(std::istream& in) {
  Eigen::VectorXd v = get_vector(in);
  return {v.data(), v.data() + v.size()};
}

inline void put_magic(std::ostream& out, const char (&magic)[9], std::uint32_t version) {
  out.write(magic, 8);
  put(out, version);
}

inline std::uint32_t get_magic(std::istream& in, const char (&magic)[9]) {
  char buf[8];
  in.read(buf, 8);
  if (!in || std::string(buf, 8) != std::string(magic, 8)) {
    throw FormatError(std::string("not a ") + magic + " archive");
  }
  return get<std::uint32_t>(in);
}

}  // namespace selmopf::binary
