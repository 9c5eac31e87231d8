#include "msfem/fem.hpp"

#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <ostream>

#include "msfem/csv.hpp"
#include "msfem/errors.hpp"

namespace msfem {

GridFunction make_fine_function(const MeshHierarchy& mesh, double fill) {
    return GridFunction(mesh.fine_nx(), mesh.fine_ny(), fill);
}

ElementMatrix q1_stiffness(double hx, double hy) {
    static constexpr double kx[4][4] = {{2, -2, -1, 1}, {-2, 2, 1, -1}, {-1, 1, 2, -2}, {1, -1, -2, 2}};
    static constexpr double ky[4][4] = {{2, 1, -1, -2}, {1, 2, -2, -1}, {-1, -2, 2, 1}, {-2, -1, 1, 2}};
    const double ax = hy / hx / 6.0;
    const double ay = hx / hy / 6.0;
    ElementMatrix out{};
    for (int p = 0; p < 4; ++p)
        for (int q = 0; q < 4; ++q) out[p][q] = ax * kx[p][q] + ay * ky[p][q];
    return out;
}

namespace {

// Local node indices of element (a, b) on an r x r grid, counterclockwise.
std::array<int, 4> element_nodes(int r, int a, int b) {
    const int w = r + 1;
    return {b * w + a, b * w + a + 1, (b + 1) * w + a + 1, (b + 1) * w + a};
}

// Interior unknown index of a local node, or -1 on the cell boundary.
int interior_index(int r, int node) {
    const int a = node % (r + 1);
    const int b = node / (r + 1);
    if (a == 0 || b == 0 || a == r || b == r) return -1;
    return (b - 1) * (r - 1) + (a - 1);
}

GridFunction bilinear_hat(int r, int vertex) {
    GridFunction hat(r, r);
    const int dx = kVertexOffsets[static_cast<std::size_t>(vertex)][0];
    const int dy = kVertexOffsets[static_cast<std::size_t>(vertex)][1];
    for (int b = 0; b <= r; ++b)
        for (int a = 0; a <= r; ++a) {
            const double s = static_cast<double>(a) / r;
            const double t = static_cast<double>(b) / r;
            hat[static_cast<std::size_t>(b * (r + 1) + a)] = (dx ? s : 1.0 - s) * (dy ? t : 1.0 - t);
        }
    return hat;
}

}  // namespace

Eigen::MatrixXd assemble_interior_stiffness(int r, double hx, double hy, const ScalarField& kappa) {
    MSFEM_REQUIRE(kappa.size() == static_cast<std::size_t>(r * r), "coefficient size mismatch");
    const int n = (r - 1) * (r - 1);
    const ElementMatrix ke = q1_stiffness(hx, hy);
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
    for (int b = 0; b < r; ++b)
        for (int a = 0; a < r; ++a) {
            const double c = kappa[static_cast<std::size_t>(b * r + a)];
            const auto nodes = element_nodes(r, a, b);
            for (int p = 0; p < 4; ++p) {
                const int ip = interior_index(r, nodes[p]);
                if (ip < 0) continue;
                for (int q = 0; q < 4; ++q) {
                    const int iq = interior_index(r, nodes[q]);
                    if (iq >= 0) out(ip, iq) += c * ke[p][q];
                }
            }
        }
    return out;
}

LocalOperators assemble_local_operators(const MeshHierarchy& mesh, int cell, const Splitting& splitting,
                                        Factorize factorize) {
    MSFEM_REQUIRE(cell >= 0 && cell < mesh.coarse_cells(), "cell out of range");
    LocalOperators ops;
    ops.cell = cell;
    ops.r = mesh.refinement();
    ops.hx = mesh.hx();
    ops.hy = mesh.hy();
    ops.k0 = restrict_to_cell(mesh, splitting.k0, cell);
    ops.k1 = restrict_to_cell(mesh, splitting.k1, cell);
    ops.k = restrict_to_cell(mesh, splitting.k, cell);
    for (double v : ops.k0.values)
        if (!(v > 0.0)) throw std::invalid_argument("assemble_local_operators: k0 must be strictly positive");

    const int r = ops.r;
    const int n = ops.interior_count();
    const ElementMatrix ke = q1_stiffness(ops.hx, ops.hy);
    ops.m0 = Eigen::MatrixXd::Zero(n, n);
    ops.m1 = Eigen::MatrixXd::Zero(n, n);
    ops.m = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < 4; ++i) {
        ops.hats[static_cast<std::size_t>(i)] = bilinear_hat(r, i);
        ops.v0[static_cast<std::size_t>(i)] = Eigen::VectorXd::Zero(n);
        ops.v1[static_cast<std::size_t>(i)] = Eigen::VectorXd::Zero(n);
        ops.v[static_cast<std::size_t>(i)] = Eigen::VectorXd::Zero(n);
    }

    for (int b = 0; b < r; ++b)
        for (int a = 0; a < r; ++a) {
            const auto e = static_cast<std::size_t>(b * r + a);
            const double c0 = ops.k0[e];
            const double c1 = ops.k1[e];
            const double c = ops.k[e];
            const auto nodes = element_nodes(r, a, b);
            for (int p = 0; p < 4; ++p) {
                const int ip = interior_index(r, nodes[p]);
                if (ip < 0) continue;
                for (int q = 0; q < 4; ++q) {
                    const double kpq = ke[p][q];
                    const int iq = interior_index(r, nodes[q]);
                    if (iq >= 0) {
                        ops.m0(ip, iq) += c0 * kpq;
                        ops.m1(ip, iq) += c1 * kpq;
                        ops.m(ip, iq) += c * kpq;
                    }
                    for (std::size_t i = 0; i < 4; ++i) {
                        const double lq = ops.hats[i][static_cast<std::size_t>(nodes[q])];
                        if (lq == 0.0) continue;
                        ops.v0[i](ip) += c0 * kpq * lq;
                        ops.v1[i](ip) += c1 * kpq * lq;
                        ops.v[i](ip) += c * kpq * lq;
                    }
                }
            }
        }

    if (n > 0 && factorize != Factorize::none) {
        ops.m0_factor = factor_spd(ops.m0);
        if (factorize == Factorize::both) ops.m_factor = factor_spd(ops.m);
    }
    return ops;
}

Eigen::LLT<Eigen::MatrixXd> factor_spd(const Eigen::MatrixXd& matrix) {
    MSFEM_REQUIRE(matrix.rows() == matrix.cols(), "matrix must be square");
    Eigen::LLT<Eigen::MatrixXd> llt(matrix);
    if (llt.info() != Eigen::Success) throw NumericalError("Cholesky factorization failed: matrix is not SPD");
    return llt;
}

Eigen::VectorXd solve_spd(const Eigen::MatrixXd& matrix, const Eigen::VectorXd& rhs) {
    MSFEM_REQUIRE(matrix.rows() == rhs.size(), "dimension mismatch");
    if (rhs.size() == 0) return rhs;
    const auto llt = factor_spd(matrix);
    Eigen::VectorXd x = llt.solve(rhs);
    const double target = 1e-10 * rhs.norm();
    Eigen::VectorXd res = rhs - matrix * x;
    if (res.norm() > target) {
        x += llt.solve(res);
        res = rhs - matrix * x;
        if (res.norm() > target) throw NumericalError("solve_spd: residual above tolerance");
    }
    return x;
}

Eigen::VectorXd load_vector(const MeshHierarchy& mesh, const ScalarField& f) {
    MSFEM_REQUIRE(f.nx == mesh.fine_nx() && f.ny == mesh.fine_ny(), "source does not match the mesh");
    Eigen::VectorXd out = Eigen::VectorXd::Zero(mesh.fine_nodes());
    const double w = mesh.fine_cell_area() / 4.0;
    for (int j = 0; j < mesh.fine_ny(); ++j)
        for (int i = 0; i < mesh.fine_nx(); ++i) {
            const double fe = f[static_cast<std::size_t>(mesh.fine_cell(i, j))] * w;
            out(mesh.fine_node(i, j)) += fe;
            out(mesh.fine_node(i + 1, j)) += fe;
            out(mesh.fine_node(i + 1, j + 1)) += fe;
            out(mesh.fine_node(i, j + 1)) += fe;
        }
    return out;
}

GridFunction fine_reference_solve(const MeshHierarchy& mesh, const ScalarField& k, const ScalarField& f) {
    MSFEM_REQUIRE(k.nx == mesh.fine_nx() && k.ny == mesh.fine_ny(), "coefficient does not match the mesh");
    for (double v : k.values)
        if (!(v > 0.0)) throw std::invalid_argument("fine_reference_solve: k must be strictly positive");

    const int nx = mesh.fine_nx();
    const int ny = mesh.fine_ny();
    const int w = nx - 1;
    const int n = (nx - 1) * (ny - 1);
    auto unknown = [&](int i, int j) { return (i == 0 || j == 0 || i == nx || j == ny) ? -1 : (j - 1) * w + (i - 1); };

    const ElementMatrix ke = q1_stiffness(mesh.hx(), mesh.hy());
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny) * 16);
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            const double c = k[static_cast<std::size_t>(mesh.fine_cell(i, j))];
            const std::array<int, 4> ids{unknown(i, j), unknown(i + 1, j), unknown(i + 1, j + 1), unknown(i, j + 1)};
            for (int p = 0; p < 4; ++p) {
                if (ids[p] < 0) continue;
                for (int q = 0; q < 4; ++q)
                    if (ids[q] >= 0) triplets.emplace_back(ids[p], ids[q], c * ke[p][q]);
            }
        }
    Eigen::SparseMatrix<double> a(n, n);
    a.setFromTriplets(triplets.begin(), triplets.end());

    const Eigen::VectorXd full_load = load_vector(mesh, f);
    Eigen::VectorXd rhs(n);
    for (int j = 1; j < ny; ++j)
        for (int i = 1; i < nx; ++i) rhs(unknown(i, j)) = full_load(mesh.fine_node(i, j));

    GridFunction u = make_fine_function(mesh);
    if (n == 0) return u;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(a);
    if (solver.info() != Eigen::Success) throw NumericalError("fine_reference_solve: factorization failed");
    const Eigen::VectorXd x = solver.solve(rhs);
    if ((rhs - a * x).norm() > 1e-10 * rhs.norm() + 1e-300)
        throw NumericalError("fine_reference_solve: residual above tolerance");
    for (int j = 1; j < ny; ++j)
        for (int i = 1; i < nx; ++i) u[static_cast<std::size_t>(mesh.fine_node(i, j))] = x(unknown(i, j));
    return u;
}

double energy_norm(const ScalarField& k, const GridFunction& v, double hx, double hy) {
    MSFEM_REQUIRE(k.nx == v.nx && k.ny == v.ny, "coefficient and function grids differ");
    const ElementMatrix ke = q1_stiffness(hx, hy);
    const int w = v.nx + 1;
    double sum = 0.0;
    for (int b = 0; b < v.ny; ++b)
        for (int a = 0; a < v.nx; ++a) {
            const std::array<double, 4> ve{v[static_cast<std::size_t>(b * w + a)], v[static_cast<std::size_t>(b * w + a + 1)],
                                           v[static_cast<std::size_t>((b + 1) * w + a + 1)],
                                           v[static_cast<std::size_t>((b + 1) * w + a)]};
            double q = 0.0;
            for (int p = 0; p < 4; ++p)
                for (int r = 0; r < 4; ++r) q += ve[p] * ke[p][r] * ve[r];
            sum += k[static_cast<std::size_t>(b * v.nx + a)] * q;
        }
    return std::sqrt(std::max(0.0, sum));
}

double energy_norm(const MeshHierarchy& mesh, const ScalarField& k, const GridFunction& v) {
    MSFEM_REQUIRE(v.nx == mesh.fine_nx() && v.ny == mesh.fine_ny(), "function does not match the mesh");
    return energy_norm(k, v, mesh.hx(), mesh.hy());
}

double energy_norm(const MeshHierarchy& mesh, const ScalarField& k, const GridFunction& v, int cell) {
    MSFEM_REQUIRE(v.nx == mesh.fine_nx() && v.ny == mesh.fine_ny(), "function does not match the mesh");
    const int r = mesh.refinement();
    GridFunction local(r, r);
    const auto nodes = mesh.local_nodes(cell);
    for (std::size_t p = 0; p < nodes.size(); ++p) local[p] = v[static_cast<std::size_t>(nodes[p])];
    return energy_norm(restrict_to_cell(mesh, k, cell), local, mesh.hx(), mesh.hy());
}

std::vector<double> apply_local_stiffness(int r, double hx, double hy, const ScalarField& kappa,
                                          const std::vector<double>& v) {
    MSFEM_REQUIRE(v.size() == static_cast<std::size_t>((r + 1) * (r + 1)), "vector size mismatch");
    const ElementMatrix ke = q1_stiffness(hx, hy);
    std::vector<double> out(v.size(), 0.0);
    for (int b = 0; b < r; ++b)
        for (int a = 0; a < r; ++a) {
            const double c = kappa[static_cast<std::size_t>(b * r + a)];
            const auto nodes = element_nodes(r, a, b);
            for (int p = 0; p < 4; ++p) {
                double acc = 0.0;
                for (int q = 0; q < 4; ++q) acc += ke[p][q] * v[static_cast<std::size_t>(nodes[q])];
                out[static_cast<std::size_t>(nodes[p])] += c * acc;
            }
        }
    return out;
}

GridFunction difference(const GridFunction& a, const GridFunction& b) {
    MSFEM_REQUIRE(a.nx == b.nx && a.ny == b.ny, "grid functions live on different grids");
    GridFunction out(a.nx, a.ny);
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
    return out;
}

void write_grid_function_csv(std::ostream& out, const MeshHierarchy& mesh, const GridFunction& v) {
    MSFEM_REQUIRE(v.nx == mesh.fine_nx() && v.ny == mesh.fine_ny(), "function does not match the mesh");
    CsvWriter csv(out);
    csv.header({"node", "x", "y", "value"});
    for (int p = 0; p < mesh.fine_nodes(); ++p) {
        csv.field(p).field(mesh.node_x(p)).field(mesh.node_y(p)).field(v[static_cast<std::size_t>(p)]);
        csv.end_row();
    }
}

}  // namespace msfem
