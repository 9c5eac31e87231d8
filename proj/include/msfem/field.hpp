#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "msfem/mesh.hpp"

namespace msfem {

/// Piecewise-constant field over an nx x ny grid of cells (row-major).
struct ScalarField {
    int nx = 0;
    int ny = 0;
    std::vector<double> values;

    ScalarField() = default;
    ScalarField(int nx_, int ny_, double fill = 0.0)
        : nx(nx_), ny(ny_), values(static_cast<std::size_t>(nx_) * static_cast<std::size_t>(ny_), fill) {}

    std::size_t size() const { return values.size(); }
    double& operator[](std::size_t i) { return values[i]; }
    double operator[](std::size_t i) const { return values[i]; }
};

/// Field over the global fine grid of a mesh.
ScalarField make_fine_field(const MeshHierarchy& mesh, double fill);
/// Copy of the r x r fine-cell values of one coarse cell.
ScalarField restrict_to_cell(const MeshHierarchy& mesh, const ScalarField& global, int cell);

/// Coefficient splitting k = k0 + k1 with cached contrast ratios.
struct Splitting {
    ScalarField k0;
    ScalarField k1;
    ScalarField k;
    double eta_global = 0.0;
    std::vector<double> eta_per_cell;
};

/// max_i |k1_i| / k0_i.
double max_ratio(std::span<const double> k0, std::span<const double> k1);

/// Builds a splitting from (k0, k1); k is formed as k0 + k1.
Splitting splitting_from_parts(const MeshHierarchy& mesh, ScalarField k0, ScalarField k1);
/// Builds a splitting from (k, k0); k1 is formed as k - k0.
Splitting splitting_from_total(const MeshHierarchy& mesh, ScalarField k, ScalarField k0);

double eta(const Splitting& s);
double eta(const Splitting& s, int cell);

/// Constant shift k0 + s, k1 - s that restores max |k1|/k0 < 1. Returns the
/// input unchanged when it already satisfies the contraction condition.
Splitting shift_splitting(const MeshHierarchy& mesh, const Splitting& s, double margin = 0.01);

/// Separable Gaussian covariance exp(-dx^2/(2 lx) - dy^2/(2 ly)) scaled by sigma2.
double gaussian_covariance(double sigma2, double lx, double ly, double x1, double y1, double x2, double y2);

/// Truncated Karhunen-Loeve model of a log-coefficient on the fine cells of a mesh.
struct KleModel {
    MeshHierarchy mesh;
    ScalarField mean;
    std::vector<double> eigenvalues;          ///< nonincreasing, >= 0
    std::vector<ScalarField> eigenfunctions;  ///< discretely L2-orthonormal
    double sigma2 = 0.0;
    double lx = 0.0;
    double ly = 0.0;

    int n() const { return static_cast<int>(eigenvalues.size()); }
};

KleModel build_kle_model(const MeshHierarchy& mesh, double sigma2, double lx, double ly, int n);

/// Same model on a finer grid by nearest-cell injection; the target fine grid
/// must refine the generation grid by integer factors.
KleModel prolong_kle_model(const KleModel& model, const MeshHierarchy& mesh);

/// E[Y] + sum_{i < terms} sqrt(lambda_i) b_i theta_i.
ScalarField log_field(const KleModel& model, std::span<const double> theta, int terms);
ScalarField realize_log_field(const KleModel& model, std::span<const double> theta);
Splitting split_kle(const KleModel& model, std::span<const double> theta, int m);

/// k = exp(Y), k0 = exp(sc Y).
Splitting split_lognormal(const MeshHierarchy& mesh, const ScalarField& y, double sc);
/// i.i.d. standard normal values per fine cell, reproducible from seed.
ScalarField standard_normal_field(const MeshHierarchy& mesh, std::uint64_t seed);

double energy_ratio(const KleModel& model, int m);

void write_field_csv(std::ostream& out, const MeshHierarchy& mesh, const ScalarField& field);
void write_kle_table(std::ostream& out, const KleModel& model);
KleModel read_kle_table(std::istream& in);

}  // namespace msfem
