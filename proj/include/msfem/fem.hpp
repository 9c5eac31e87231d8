#pragma once

#include <Eigen/Dense>

#include <array>
#include <iosfwd>
#include <optional>
#include <vector>

#include "msfem/field.hpp"
#include "msfem/mesh.hpp"

namespace msfem {

/// Nodal values of a Q1 function on an nx x ny cell grid ((nx+1)(ny+1) nodes, row-major).
struct GridFunction {
    int nx = 0;
    int ny = 0;
    std::vector<double> values;

    GridFunction() = default;
    GridFunction(int nx_, int ny_, double fill = 0.0)
        : nx(nx_), ny(ny_), values(static_cast<std::size_t>(nx_ + 1) * static_cast<std::size_t>(ny_ + 1), fill) {}

    std::size_t size() const { return values.size(); }
    double& operator[](std::size_t i) { return values[i]; }
    double operator[](std::size_t i) const { return values[i]; }
};

GridFunction make_fine_function(const MeshHierarchy& mesh, double fill = 0.0);

using ElementMatrix = std::array<std::array<double, 4>, 4>;

/// Q1 stiffness of an hx x hy rectangle with unit coefficient; local node
/// order (0,0), (1,0), (1,1), (0,1).
ElementMatrix q1_stiffness(double hx, double hy);

/// Stiffness matrix over the interior nodes of an r x r cell grid with
/// piecewise-constant coefficient kappa (r^2 values).
Eigen::MatrixXd assemble_interior_stiffness(int r, double hx, double hy, const ScalarField& kappa);

enum class Factorize { none, kernel, both };

/// Per-coarse-cell matrices over the interior fine nodes and coupling vectors
/// with the bilinear coarse hats.
struct LocalOperators {
    int cell = 0;
    int r = 0;
    double hx = 0.0;
    double hy = 0.0;
    ScalarField k0, k1, k;             ///< local r x r coefficient values
    Eigen::MatrixXd m0, m1, m;         ///< m = m0 + m1
    std::array<Eigen::VectorXd, 4> v0, v1, v;
    std::array<GridFunction, 4> hats;  ///< bilinear hats on the (r+1)^2 local nodes
    std::optional<Eigen::LLT<Eigen::MatrixXd>> m0_factor;
    std::optional<Eigen::LLT<Eigen::MatrixXd>> m_factor;

    int interior_count() const { return (r - 1) * (r - 1); }
    /// Local node index of interior unknown p.
    int interior_to_local(int p) const { return (p / (r - 1) + 1) * (r + 1) + (p % (r - 1) + 1); }
};

LocalOperators assemble_local_operators(const MeshHierarchy& mesh, int cell, const Splitting& splitting,
                                        Factorize factorize = Factorize::both);

/// Cholesky factorization that throws NumericalError on failure.
Eigen::LLT<Eigen::MatrixXd> factor_spd(const Eigen::MatrixXd& matrix);
/// Solves with a residual check (2-norm <= 1e-10 |rhs|), refining once if needed.
Eigen::VectorXd solve_spd(const Eigen::MatrixXd& matrix, const Eigen::VectorXd& rhs);

/// Consistent load vector over all fine nodes: sum_e f_e |e| / 4.
Eigen::VectorXd load_vector(const MeshHierarchy& mesh, const ScalarField& f);

/// Global fine-grid Galerkin solution of -div(k grad u) = f, u = 0 on the boundary.
GridFunction fine_reference_solve(const MeshHierarchy& mesh, const ScalarField& k, const ScalarField& f);

/// sqrt((k grad v, grad v)) over the cell grid that v lives on.
double energy_norm(const ScalarField& k, const GridFunction& v, double hx, double hy);
double energy_norm(const MeshHierarchy& mesh, const ScalarField& k, const GridFunction& v);
double energy_norm(const MeshHierarchy& mesh, const ScalarField& k, const GridFunction& v, int cell);

/// y = A v for the local (r+1)^2-node stiffness with coefficient kappa.
std::vector<double> apply_local_stiffness(int r, double hx, double hy, const ScalarField& kappa,
                                          const std::vector<double>& v);

GridFunction difference(const GridFunction& a, const GridFunction& b);

void write_grid_function_csv(std::ostream& out, const MeshHierarchy& mesh, const GridFunction& v);

}  // namespace msfem
