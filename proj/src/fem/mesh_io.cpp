#include "ecgli/fem/mesh_io.hpp"

#include <fstream>

#include "ecgli/binary_io.hpp"

namespace ecgli::fem {

void write_grid(std::ostream& out, const StructuredGrid& grid) {
  io::write_magic(out, "ECGLGRID");
  io::write_pod<std::uint32_t>(out, kMeshFormatVersion);
  io::write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(grid.dim()));
  for (int n : grid.elements_per_axis()) io::write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(n));
  io::write_pod<std::uint64_t>(out, grid.num_nodes());
  io::write_pod<std::uint64_t>(out, grid.num_elements());
  io::write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(grid.nodes_per_element()));
  io::write_array<double>(out, grid.coordinates());
  io::write_array<std::uint32_t>(out, grid.connectivity());
}

StructuredGrid read_grid(std::istream& in) {
  io::expect_magic(in, "ECGLGRID");
  if (io::read_pod<std::uint32_t>(in) != kMeshFormatVersion) throw CorruptData("unsupported grid format version");
  const auto dim = static_cast<int>(io::read_pod<std::uint32_t>(in));
  std::array<int, 3> n_elems{};
  for (int& n : n_elems) n = static_cast<int>(io::read_pod<std::uint32_t>(in));
  const auto n_nodes = io::read_pod<std::uint64_t>(in);
  const auto n_elements = io::read_pod<std::uint64_t>(in);
  const auto npe = io::read_pod<std::uint32_t>(in);
  if ((dim != 2 && dim != 3) || npe != (dim == 2 ? 4u : 8u)) throw CorruptData("grid header is inconsistent");
  auto coords = io::read_array<double>(in, 3 * n_nodes);
  auto conn = io::read_array<std::uint32_t>(in, n_elements * npe);
  try {
    return StructuredGrid::from_arrays(dim, n_elems, std::move(coords), std::move(conn));
  } catch (const InvalidArgument& e) {
    throw CorruptData(std::string("grid payload invalid: ") + e.what());
  }
}

void write_grid(const std::filesystem::path& path, const StructuredGrid& grid) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_grid(out, grid);
  if (!out) throw IoError("write failed: " + path.string());
}

StructuredGrid read_grid(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return read_grid(in);
}

void write_matrix(std::ostream& out, const CsrMatrix& a) {
  io::write_magic(out, std::string_view("ECGLCSR\0", 8));
  io::write_pod<std::uint32_t>(out, kMeshFormatVersion);
  io::write_pod<std::uint64_t>(out, a.size());
  io::write_pod<std::uint64_t>(out, a.nnz());
  io::write_array<std::uint32_t>(out, a.row_ptr());
  io::write_array<std::uint32_t>(out, a.col_idx());
  io::write_array<double>(out, a.values());
}

CsrMatrix read_matrix(std::istream& in) {
  io::expect_magic(in, std::string_view("ECGLCSR\0", 8));
  if (io::read_pod<std::uint32_t>(in) != kMeshFormatVersion) throw CorruptData("unsupported matrix format version");
  const auto n = io::read_pod<std::uint64_t>(in);
  const auto nnz = io::read_pod<std::uint64_t>(in);
  auto rp = io::read_array<std::uint32_t>(in, n + 1);
  auto ci = io::read_array<std::uint32_t>(in, nnz);
  auto v = io::read_array<double>(in, nnz);
  try {
    return CsrMatrix(n, std::move(rp), std::move(ci), std::move(v));
  } catch (const InvalidArgument& e) {
    throw CorruptData(std::string("matrix payload invalid: ") + e.what());
  }
}

}  // namespace ecgli::fem
