#include "asdflow/io.hpp"

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "asdflow/errors.hpp"

namespace asdflow {

namespace {

std::ofstream open_out(const std::string& file, std::ios::openmode mode) {
  std::ofstream out(file, mode);
  if (!out) throw Error("cannot open output file: " + file);
  return out;
}

void put_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16),
                        static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

void put_f64(std::ostream& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof bits);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(bits >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) |
         (static_cast<std::uint32_t>(b[3]) << 24);
}

double get_f64(std::istream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  double v;
  std::memcpy(&v, &bits, sizeof v);
  return v;
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_path_csv(const std::string& file, const DiscretePath& path) {
  std::ofstream out = open_out(file, std::ios::out);
  out << "t";
  for (Eigen::Index r = 0; r < path.dim(); ++r) out << ",x_" << (r + 1);
  out << "\n";
  const double h = path.h();
  for (Eigen::Index k = 0; k < path.values.cols(); ++k) {
    out << format_double(static_cast<double>(k) * h);
    for (Eigen::Index r = 0; r < path.dim(); ++r)
      out << "," << format_double(path.values(r, k));
    out << "\n";
  }
}

void write_surface_csv(const std::string& file, const SurfaceGrid& grid) {
  std::ofstream out = open_out(file, std::ios::out);
  out << "s,t";
  for (Eigen::Index r = 0; r < grid.dim(); ++r) out << ",x_" << (r + 1);
  out << "\n";
  for (int i = 0; i <= grid.m; ++i) {
    for (int k = 0; k <= grid.n_steps; ++k) {
      out << format_double(i * grid.hs()) << "," << format_double(k * grid.ht());
      for (Eigen::Index r = 0; r < grid.dim(); ++r)
        out << "," << format_double(grid.values(r, grid.col(i, k)));
      out << "\n";
    }
  }
}

void write_grid_binary(const std::string& file, const SurfaceGrid& grid) {
  std::ofstream out = open_out(file, std::ios::out | std::ios::binary);
  out.write("ASDF", 4);
  put_u32(out, static_cast<std::uint32_t>(grid.m));
  put_u32(out, static_cast<std::uint32_t>(grid.n_steps));
  put_u32(out, static_cast<std::uint32_t>(grid.dim()));
  put_f64(out, grid.s_horizon);
  put_f64(out, grid.t_horizon);
  for (int i = 0; i <= grid.m; ++i)
    for (int k = 0; k <= grid.n_steps; ++k)
      for (Eigen::Index r = 0; r < grid.dim(); ++r)
        put_f64(out, grid.values(r, grid.col(i, k)));
}

SurfaceGrid read_grid_binary(const std::string& file) {
  std::ifstream in(file, std::ios::in | std::ios::binary);
  if (!in) throw Error("cannot open grid file: " + file);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "ASDF", 4) != 0)
    throw ParseError("grid file " + file + ": bad magic, expected ASDF");
  std::uint32_t m = get_u32(in), n = get_u32(in), dim = get_u32(in);
  double s_hor = get_f64(in), t_hor = get_f64(in);
  if (!in || m < 1 || n < 1 || dim < 1)
    throw ParseError("grid file " + file + ": invalid header");
  SurfaceGrid grid{s_hor, t_hor, static_cast<int>(m), static_cast<int>(n),
                   Matrix(dim, (m + 1) * (n + 1))};
  for (std::uint32_t i = 0; i <= m; ++i)
    for (std::uint32_t k = 0; k <= n; ++k)
      for (std::uint32_t r = 0; r < dim; ++r)
        grid.values(r, grid.col(static_cast<int>(i), static_cast<int>(k))) = get_f64(in);
  if (!in) throw ParseError("grid file " + file + ": truncated payload");
  return grid;
}

}  // namespace asdflow
