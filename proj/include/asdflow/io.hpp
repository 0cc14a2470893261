#pragma once

#include <string>

#include "asdflow/multiflow.hpp"

namespace asdflow {

/// Shortest round-trip decimal (%.17g), used for all numeric text output so
/// that identical runs produce byte-identical files.
std::string format_double(double v);

/// Header `t,x_1..x_n`, one row per node, 17-significant-digit decimals.
void write_path_csv(const std::string& file, const DiscretePath& path);

/// Long format, header `s,t,x_1..x_n`, row-major over (i, k).
void write_surface_csv(const std::string& file, const SurfaceGrid& grid);

/// Binary grid: magic "ASDF", little-endian u32 M, N, n, f64 S, T, then
/// (M+1)(N+1) nodes row-major (s-major), n doubles each.
void write_grid_binary(const std::string& file, const SurfaceGrid& grid);
SurfaceGrid read_grid_binary(const std::string& file);

}  // namespace asdflow
