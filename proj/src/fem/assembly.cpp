#include "ecgli/fem/assembly.hpp"

#include "ecgli/fem/quadrature.hpp"

namespace ecgli::fem {

CsrMatrix mesh_pattern(const StructuredGrid& grid) {
  std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
  const int npe = grid.nodes_per_element();
  pairs.reserve(grid.num_elements() * npe * npe);
  for (std::size_t e = 0; e < grid.num_elements(); ++e) {
    const auto nodes = grid.element(e);
    for (auto a : nodes) {
      for (auto b : nodes) pairs.emplace_back(a, b);
    }
  }
  return CsrMatrix::from_pattern(grid.num_nodes(), std::move(pairs));
}

namespace {

// Element loop with a local npe x npe kernel scattered into the pattern.
// Elements are visited in index order so the floating-point summation order
// is fixed.
template <typename Kernel>
CsrMatrix assemble(const StructuredGrid& grid, Kernel&& kernel) {
  CsrMatrix a = mesh_pattern(grid);
  auto& values = a.values();
  const int npe = grid.nodes_per_element();
  std::array<double, 64> local{};
  for (std::size_t e = 0; e < grid.num_elements(); ++e) {
    local.fill(0.0);
    for (const auto& q : element_quadrature(grid, e, 2)) kernel(e, q, local);
    const auto nodes = grid.element(e);
    for (int i = 0; i < npe; ++i) {
      for (int j = 0; j < npe; ++j) values[a.find(nodes[i], nodes[j])] += local[i * 8 + j];
    }
  }
  return a;
}

}  // namespace

CsrMatrix assemble_mass(const StructuredGrid& grid, bool lumped) {
  const int npe = grid.nodes_per_element();
  CsrMatrix m = assemble(grid, [npe](std::size_t, const QuadraturePoint& q, std::array<double, 64>& local) {
    for (int i = 0; i < npe; ++i) {
      for (int j = 0; j < npe; ++j) local[i * 8 + j] += q.jxw * q.phi[i] * q.phi[j];
    }
  });
  if (!lumped) return m;
  auto& v = m.values();
  const auto& rp = m.row_ptr();
  const auto& ci = m.col_idx();
  for (std::size_t i = 0; i < m.size(); ++i) {
    double s = 0.0;
    for (auto k = rp[i]; k < rp[i + 1]; ++k) s += v[k];
    for (auto k = rp[i]; k < rp[i + 1]; ++k) v[k] = (ci[k] == i) ? s : 0.0;
  }
  return m;
}

CsrMatrix assemble_stiffness(const StructuredGrid& grid, const ConductivityTensorField& field) {
  if (field.tensors.size() != grid.num_elements()) {
    throw InvalidArgument("assemble_stiffness: one tensor per element required");
  }
  const int npe = grid.nodes_per_element();
  for (const auto& t : field.tensors) {
    if (t.dim != grid.dim()) throw InvalidArgument("assemble_stiffness: tensor dimension mismatch");
  }
  return assemble(grid, [&](std::size_t e, const QuadraturePoint& q, std::array<double, 64>& local) {
    const Tensor& d = field.tensors[e];
    for (int j = 0; j < npe; ++j) {
      const Point3 dg = d.apply(q.grad[j]);
      for (int i = 0; i < npe; ++i) local[i * 8 + j] += q.jxw * dot3(dg, q.grad[i]);
    }
  });
}

}  // namespace ecgli::fem
