#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "msfem/basis.hpp"
#include "msfem/field.hpp"
#include "msfem/fem.hpp"
#include "msfem/mesh.hpp"
#include "msfem/msfem.hpp"

namespace msfem {

/// Uniform [-1, 1]^n draw determined by (master_seed, index) alone.
std::vector<double> sample_theta(std::uint64_t master_seed, std::uint64_t index, int n);

/// Exact Smolyak node count for the nested Clenshaw-Curtis family
/// (1D sizes 1, 3, 5, 9, ...). Throws ResourceError on uint64 overflow.
std::uint64_t smolyak_node_count(int dim, int level);

/// Nested Clenshaw-Curtis Smolyak grid built with the combination technique.
class SparseGrid {
public:
    int dim() const { return dim_; }
    int level() const { return level_; }
    std::size_t size() const { return nodes_.size() / static_cast<std::size_t>(dim_); }
    std::span<const double> node(std::size_t i) const {
        return {nodes_.data() + i * static_cast<std::size_t>(dim_), static_cast<std::size_t>(dim_)};
    }
    /// Interpolation weights: I f(x) = sum_i w_i(x) f(node_i).
    std::vector<double> weights(std::span<const double> x) const;
    std::size_t combination_terms() const { return terms_.size(); }

    friend SparseGrid build_sparse_grid(int dim, int level, std::uint64_t max_nodes);

private:
    struct Term {
        std::vector<int> levels;              // per dimension, 0-based
        double coefficient = 0.0;
        std::vector<std::uint32_t> node_ids;  // tensor grid, first dimension fastest
    };
    int dim_ = 0;
    int level_ = 0;
    std::vector<double> nodes_;
    std::vector<Term> terms_;
};

SparseGrid build_sparse_grid(int dim, int level, std::uint64_t max_nodes = 1'000'000);

/// Precomputed kernel inverses M0^{-1}(node) for every (sparse-grid node, coarse cell),
/// each stored as a packed upper triangle.
struct GreenStore {
    int m = 0;
    int cells = 0;
    int interior = 0;  ///< n_K
    std::size_t nodes = 0;
    std::vector<double> packed;

    std::size_t packed_size() const { return static_cast<std::size_t>(interior) * (interior + 1) / 2; }
    std::span<const double> entry(std::size_t node, int cell) const {
        return {packed.data() + (node * static_cast<std::size_t>(cells) + static_cast<std::size_t>(cell)) * packed_size(),
                packed_size()};
    }
    Eigen::MatrixXd matrix(std::size_t node, int cell) const;
    /// sum_i w_i M0^{-1}(node_i) for one cell.
    Eigen::MatrixXd interpolate(std::span<const double> weights, int cell) const;
};

inline constexpr std::size_t kDefaultGreenStoreBytes = std::size_t{4} << 30;

GreenStore precompute_green_inverses(const KleModel& model, const SparseGrid& grid, int m,
                                     std::size_t max_bytes = kDefaultGreenStoreBytes, int threads = 1);

/// theta padded with zeros beyond the first m components.
std::vector<double> kernel_parameters(const KleModel& model, std::span<const double> theta0);

/// Collocated bases phi~_0 .. phi~_J of one (cell, vertex): the interpolated Green's
/// matrix replaces M0^{-1}, while v0(Theta0), v1(Theta) and M1(Theta) are exact.
std::vector<BasisFunction> interpolated_basis_family(const LocalOperators& ops, const Eigen::MatrixXd& green,
                                                     int vertex, int terms, int level);

BasisFunction interpolated_basis(const GreenStore& store, const SparseGrid& grid, const KleModel& model,
                                 std::span<const double> theta, int cell, int vertex, int terms);

struct MonteCarloConfig {
    int m = 0;
    std::vector<int> terms;
    int samples = 1;
    std::uint64_t seed = 0;
    int threads = 1;
};

struct SampleStatistics {
    int samples = 0;
    int m = 0;
    std::vector<int> terms;
    double energy_ratio = 0.0;

    GridFunction mean_uh, var_uh;
    std::vector<GridFunction> mean_uJh, var_uJh;  ///< aligned with terms

    double mean_energy_u = 0.0;   ///< sample average of |||u|||
    double mean_energy_uh = 0.0;
    double mean_err_u_uh = 0.0;
    std::vector<double> mean_err_uh_uJh, var_err_uh_uJh;
    std::vector<double> mean_err_u_uJh, var_err_u_uJh;
    std::vector<double> mean_rel_uh_uJh;

    double eta_hat = 0.0;    ///< max over samples of the global contrast
    double c_tilde = 0.0;    ///< max over samples
    std::vector<double> bound;  ///< NaN when eta_hat >= 1
};

SampleStatistics monte_carlo_run(const KleModel& model, const ScalarField& f, const MonteCarloConfig& config);

/// Relative discrete L2 difference ||a - b|| / ||a|| over the nodes of a uniform grid.
double relative_l2_difference(const GridFunction& a, const GridFunction& b);

struct CollocationSample {
    double e = 0.0;      ///< |||u_h - u~_Jh||| / |||u_h|||
    double e_spl = 0.0;  ///< |||u_h - u_Jh||| / |||u_h|||
    double e_col = 0.0;  ///< |||u_Jh - u~_Jh||| / |||u_h|||
};

struct CollocationResult {
    int m = 0;
    int level = 0;
    std::vector<int> terms;
    std::vector<std::vector<CollocationSample>> samples;  ///< [sample][term]
    std::vector<CollocationSample> mean;                  ///< per term
    std::vector<CollocationSample> variance;              ///< per term
};

CollocationResult collocation_run(const KleModel& model, const GreenStore& store, const SparseGrid& grid,
                                  const std::vector<std::vector<double>>& thetas, const std::vector<int>& terms,
                                  const ScalarField& f, int threads = 1);

struct CostRatios {
    std::uint64_t ftc_denominator = 1;  ///< alpha_ftc = 1 / ftc_denominator
    std::uint64_t sgc_reduced = 0;      ///< H(m + L, m)
    std::uint64_t sgc_full = 0;         ///< H(n + L, n)
    double alpha_ftc = 1.0;
    double alpha_sgc = 1.0;
};

CostRatios cost_ratios(int n, int m, int q, int level);

}  // namespace msfem
