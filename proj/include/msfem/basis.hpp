#pragma once

#include <Eigen/Dense>

#include <functional>
#include <vector>

#include "msfem/fem.hpp"

namespace msfem {

enum class BasisKind { standard, iterative, collocated };

struct BasisVariant {
    BasisKind kind = BasisKind::standard;
    int terms = -1;  ///< J for iterative and collocated bases
    int level = -1;  ///< sparse-grid level for collocated bases
};

/// A multiscale basis function on the (r+1)^2 local nodes of one coarse cell.
struct BasisFunction {
    int cell = 0;
    int vertex = 0;
    GridFunction values;
    BasisVariant variant;
};

/// Action of a discrete Green's operator, x -> G x, on interior-node vectors.
using GreenOperator = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

/// M0^{-1} through the cached Cholesky factor of the operators.
GreenOperator factored_green(const LocalOperators& ops);
/// Multiplication by an explicitly stored (possibly interpolated) inverse.
GreenOperator matrix_green(const Eigen::MatrixXd& inverse);

/// phi = l - M^{-1} v: the standard multiscale basis of the full coefficient.
BasisFunction standard_basis(const LocalOperators& ops, int vertex);

/// M0^{-1} v0, the k0-projection of the hat onto interior nodes.
Eigen::VectorXd projection_pi_l(const LocalOperators& ops, int vertex);
Eigen::VectorXd projection_pi_l(const LocalOperators& ops, int vertex, const GreenOperator& green);

/// Bubble terms xi_0 .. xi_J:
///   xi_0 = G (M1 G v0 - v1),  xi_j = -G M1 xi_{j-1}.
std::vector<Eigen::VectorXd> bubble_sequence(const LocalOperators& ops, int vertex, int terms);
std::vector<Eigen::VectorXd> bubble_sequence(const LocalOperators& ops, int vertex, int terms,
                                             const GreenOperator& green);

/// phi_J = l - Pi l + sum_{j <= J} xi_j.
BasisFunction iterative_basis(const LocalOperators& ops, int vertex, int terms);
/// phi_0 .. phi_Jmax sharing one bubble sequence.
std::vector<BasisFunction> iterative_basis_family(const LocalOperators& ops, int vertex, int max_terms);
std::vector<BasisFunction> iterative_basis_family(const LocalOperators& ops, int vertex, int max_terms,
                                                  const GreenOperator& green, BasisVariant tag);

/// Solution of (M0 + M1) xi = M1 M0^{-1} v0 - v1, the limit of the bubble series.
Eigen::VectorXd xi_direct(const LocalOperators& ops, int vertex);

/// Writes l + interior correction; boundary values are copied from l.
BasisFunction compose_basis(const LocalOperators& ops, int vertex, const Eigen::VectorXd& interior_correction,
                            BasisVariant variant);

/// max over the cell of |k1| / k0.
double cell_eta(const LocalOperators& ops);
/// ||sqrt(k0) grad w|| for an interior-node vector w (zero trace).
double kernel_energy(const LocalOperators& ops, const Eigen::VectorXd& interior);
/// ||sqrt(k0) grad l|| for the hat of a vertex, exact for Q1.
double hat_kernel_energy(const LocalOperators& ops, int vertex);
/// |||a - b|||_K with the full coefficient.
double basis_energy_distance(const LocalOperators& ops, const BasisFunction& a, const BasisFunction& b);

struct BasisErrorBound {
    /// 2 ||k1 / sqrt(k k0)||_inf eta_K^{J+1} ||sqrt(k0) grad l||
    double xi_bound = 0.0;
    /// ||grad l|| (2 b1 / sqrt(a0)) eta_K^{J+2} with b1 = max k0, a0 = min k on the cell
    double rate_bound = 0.0;
};

BasisErrorBound basis_error_bound(const LocalOperators& ops, int vertex, int terms);

}  // namespace msfem
