#pragma once

#include <filesystem>
#include <iosfwd>

#include "ecgli/fem/grid.hpp"
#include "ecgli/fem/sparse.hpp"

namespace ecgli::fem {

// Binary layouts, all little-endian:
//
//   grid:   "ECGLGRID" u32 version u32 dim u32 n_elems[3] u64 n_nodes
//           u64 n_elements u32 nodes_per_element f64 coords[3 n_nodes]
//           u32 connectivity[n_elements * nodes_per_element]
//   matrix: "ECGLCSR\0" u32 version u64 n u64 nnz u32 row_ptr[n + 1]
//           u32 col_idx[nnz] f64 values[nnz]
//
// Curvilinear shell metadata is not stored; a reloaded shell is a plain
// hexahedral mesh.

inline constexpr std::uint32_t kMeshFormatVersion = 1;

void write_grid(std::ostream& out, const StructuredGrid& grid);
StructuredGrid read_grid(std::istream& in);
void write_grid(const std::filesystem::path& path, const StructuredGrid& grid);
StructuredGrid read_grid(const std::filesystem::path& path);

void write_matrix(std::ostream& out, const CsrMatrix& a);
CsrMatrix read_matrix(std::istream& in);

}  // namespace ecgli::fem
