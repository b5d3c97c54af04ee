#pragma once

#include "ecgli/fem/grid.hpp"
#include "ecgli/fem/sparse.hpp"
#include "ecgli/fem/tensor.hpp"

namespace ecgli::fem {

/// Node-to-node sparsity pattern of a Q1 mesh (all nodes sharing an element).
CsrMatrix mesh_pattern(const StructuredGrid& grid);

/// Consistent Q1 mass matrix; `lumped` puts row sums on the diagonal.
CsrMatrix assemble_mass(const StructuredGrid& grid, bool lumped = false);

/// Stiffness matrix int D grad(phi_j) . grad(phi_i) with one tensor per element.
CsrMatrix assemble_stiffness(const StructuredGrid& grid, const ConductivityTensorField& field);

}  // namespace ecgli::fem
