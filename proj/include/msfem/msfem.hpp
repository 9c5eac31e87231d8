#pragma once

#include <Eigen/Dense>

#include <vector>

#include "msfem/basis.hpp"
#include "msfem/fem.hpp"
#include "msfem/field.hpp"
#include "msfem/mesh.hpp"

namespace msfem {

/// One basis function per (cell, vertex), stored at cell * 4 + vertex.
struct BasisRegistry {
    std::vector<BasisFunction> functions;

    const BasisFunction& at(int cell, int vertex) const {
        return functions[static_cast<std::size_t>(cell) * 4 + static_cast<std::size_t>(vertex)];
    }
};

/// Galerkin system over the interior coarse vertices (zero Dirichlet data).
struct CoarseSystem {
    Eigen::MatrixXd stiffness;
    Eigen::VectorXd load;
    BasisRegistry bases;
};

CoarseSystem assemble_coarse_system(const MeshHierarchy& mesh, BasisRegistry bases, const ScalarField& k,
                                    const ScalarField& f, int threads = 1);

/// Solves the coarse system and downscales the coefficients onto the fine grid.
GridFunction solve_msfem(const MeshHierarchy& mesh, const CoarseSystem& system);

/// sqrt(2) max_K ||sqrt(k0 / k)||_inf.
double c_tilde(const Splitting& splitting);

struct SolutionBound {
    /// c^{1/2} (eta^{J+1} + eta^{J+1} / (1 - eta^{J+1}))^{1/2} |||u|||, bounds |||u_h - u_Jh|||
    double standard_gap = 0.0;
    /// sqrt(2) c (eta^{J+1} + eta^{J+1} / (1 - eta^{J+1})) |||u||| + 2 |||u - u_h|||, bounds |||u - u_Jh|||
    double reference_gap = 0.0;
};

SolutionBound solution_error_bound(int terms, double eta, double c_tilde, double u_energy,
                                   double u_minus_uh_energy = 0.0);

struct SolutionReport {
    double energy_u = 0.0;
    double energy_uh = 0.0;
    double err_u_uh = 0.0;
    double err_u_uJh = 0.0;
    double err_uh_uJh = 0.0;
    double rel_u_uJh = 0.0;   ///< |||u - u_Jh||| / |||u_h|||
    double rel_uh_uJh = 0.0;  ///< |||u_h - u_Jh||| / |||u_h|||
};

SolutionReport error_report(const MeshHierarchy& mesh, const GridFunction& u_ref, const GridFunction& u_h,
                            const GridFunction& u_Jh, const ScalarField& k);

/// Standard and iterative MsFEM solutions of one splitting, sharing the local
/// operators and bubble sequences across all requested J.
struct MsfemFamily {
    GridFunction standard;
    std::vector<int> terms;
    std::vector<GridFunction> iterative;  ///< aligned with terms
};

MsfemFamily solve_msfem_family(const MeshHierarchy& mesh, const Splitting& splitting, const ScalarField& f,
                               const std::vector<int>& terms, int threads = 1);

/// Standard-basis registry for a coefficient (used by solve_msfem_family and tests).
BasisRegistry standard_registry(const MeshHierarchy& mesh, const Splitting& splitting, int threads = 1);

}  // namespace msfem
