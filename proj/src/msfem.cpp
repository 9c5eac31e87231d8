#include "msfem/msfem.hpp"

#include <algorithm>
#include <cmath>

#include "msfem/errors.hpp"
#include "msfem/parallel.hpp"

namespace msfem {

namespace {

std::vector<double> local_load(int r, double hx, double hy, const ScalarField& f_local) {
    const int w = r + 1;
    std::vector<double> out(static_cast<std::size_t>(w * w), 0.0);
    const double quarter = hx * hy / 4.0;
    for (int b = 0; b < r; ++b)
        for (int a = 0; a < r; ++a) {
            const double fe = f_local[static_cast<std::size_t>(b * r + a)] * quarter;
            out[static_cast<std::size_t>(b * w + a)] += fe;
            out[static_cast<std::size_t>(b * w + a + 1)] += fe;
            out[static_cast<std::size_t>((b + 1) * w + a + 1)] += fe;
            out[static_cast<std::size_t>((b + 1) * w + a)] += fe;
        }
    return out;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

struct CellContribution {
    double stiffness[4][4] = {};
    double load[4] = {};
};

}  // namespace

CoarseSystem assemble_coarse_system(const MeshHierarchy& mesh, BasisRegistry bases, const ScalarField& k,
                                    const ScalarField& f, int threads) {
    MSFEM_REQUIRE(bases.functions.size() == static_cast<std::size_t>(mesh.coarse_cells()) * 4,
                  "basis registry must hold one function per (cell, vertex)");
    const int r = mesh.refinement();
    for (int c = 0; c < mesh.coarse_cells(); ++c)
        for (int i = 0; i < 4; ++i) {
            const auto& phi = bases.at(c, i);
            MSFEM_REQUIRE(phi.cell == c && phi.vertex == i && phi.values.nx == r && phi.values.ny == r,
                          "missing or misplaced basis entry");
        }

    std::vector<CellContribution> parts(static_cast<std::size_t>(mesh.coarse_cells()));
    parallel_for(parts.size(), threads, [&](std::size_t c) {
        const int cell = static_cast<int>(c);
        const ScalarField k_local = restrict_to_cell(mesh, k, cell);
        const auto load = local_load(r, mesh.hx(), mesh.hy(), restrict_to_cell(mesh, f, cell));
        std::array<std::vector<double>, 4> applied;
        for (int j = 0; j < 4; ++j)
            applied[static_cast<std::size_t>(j)] =
                apply_local_stiffness(r, mesh.hx(), mesh.hy(), k_local, bases.at(cell, j).values.values);
        auto& part = parts[c];
        for (int i = 0; i < 4; ++i) {
            const auto& phi_i = bases.at(cell, i).values.values;
            for (int j = i; j < 4; ++j) {
                part.stiffness[i][j] = dot(phi_i, applied[static_cast<std::size_t>(j)]);
                part.stiffness[j][i] = part.stiffness[i][j];
            }
            part.load[i] = dot(phi_i, load);
        }
    });

    const int n = mesh.interior_coarse_vertices();
    CoarseSystem system;
    system.stiffness = Eigen::MatrixXd::Zero(n, n);
    system.load = Eigen::VectorXd::Zero(n);
    for (int c = 0; c < mesh.coarse_cells(); ++c) {
        const auto& part = parts[static_cast<std::size_t>(c)];
        for (int i = 0; i < 4; ++i) {
            const int gi = mesh.interior_coarse_index(mesh.coarse_vertex(c, i));
            if (gi < 0) continue;
            system.load(gi) += part.load[i];
            for (int j = 0; j < 4; ++j) {
                const int gj = mesh.interior_coarse_index(mesh.coarse_vertex(c, j));
                if (gj >= 0) system.stiffness(gi, gj) += part.stiffness[i][j];
            }
        }
    }
    system.bases = std::move(bases);
    return system;
}

GridFunction solve_msfem(const MeshHierarchy& mesh, const CoarseSystem& system) {
    GridFunction u = make_fine_function(mesh);
    const int n = mesh.interior_coarse_vertices();
    if (n == 0) return u;
    const Eigen::VectorXd coeff = solve_spd(system.stiffness, system.load);
    for (int c = 0; c < mesh.coarse_cells(); ++c) {
        std::array<double, 4> ci{};
        for (int i = 0; i < 4; ++i) {
            const int gi = mesh.interior_coarse_index(mesh.coarse_vertex(c, i));
            ci[static_cast<std::size_t>(i)] = gi < 0 ? 0.0 : coeff(gi);
        }
        const auto nodes = mesh.local_nodes(c);
        for (std::size_t p = 0; p < nodes.size(); ++p) {
            double value = 0.0;
            for (int i = 0; i < 4; ++i) value += ci[static_cast<std::size_t>(i)] * system.bases.at(c, i).values[p];
            u[static_cast<std::size_t>(nodes[p])] = value;
        }
    }
    // Domain boundary nodes carry only boundary-vertex hats, which have zero coefficients.
    for (int p = 0; p < mesh.fine_nodes(); ++p)
        if (mesh.on_boundary(p)) u[static_cast<std::size_t>(p)] = 0.0;
    return u;
}

double c_tilde(const Splitting& splitting) {
    double worst = 0.0;
    for (std::size_t i = 0; i < splitting.k.size(); ++i)
        worst = std::max(worst, std::sqrt(splitting.k0[i] / splitting.k[i]));
    return std::sqrt(2.0) * worst;
}

SolutionBound solution_error_bound(int terms, double eta, double c_tilde, double u_energy, double u_minus_uh_energy) {
    MSFEM_REQUIRE(terms >= 0, "J must be >= 0");
    MSFEM_REQUIRE(eta >= 0.0 && eta < 1.0, "the bound requires eta < 1");
    const double p = std::pow(eta, terms + 1);
    const double factor = p + p / (1.0 - p);
    SolutionBound out;
    out.standard_gap = std::sqrt(c_tilde) * std::sqrt(factor) * u_energy;
    out.reference_gap = std::sqrt(2.0) * c_tilde * factor * u_energy + 2.0 * u_minus_uh_energy;
    return out;
}

SolutionReport error_report(const MeshHierarchy& mesh, const GridFunction& u_ref, const GridFunction& u_h,
                            const GridFunction& u_Jh, const ScalarField& k) {
    for (const auto* g : {&u_ref, &u_h, &u_Jh})
        MSFEM_REQUIRE(g->nx == mesh.fine_nx() && g->ny == mesh.fine_ny(), "solutions must live on the mesh fine grid");
    SolutionReport rep;
    rep.energy_u = energy_norm(mesh, k, u_ref);
    rep.energy_uh = energy_norm(mesh, k, u_h);
    rep.err_u_uh = energy_norm(mesh, k, difference(u_ref, u_h));
    rep.err_u_uJh = energy_norm(mesh, k, difference(u_ref, u_Jh));
    rep.err_uh_uJh = energy_norm(mesh, k, difference(u_h, u_Jh));
    const double denom = rep.energy_uh > 0.0 ? rep.energy_uh : 1.0;
    rep.rel_u_uJh = rep.err_u_uJh / denom;
    rep.rel_uh_uJh = rep.err_uh_uJh / denom;
    return rep;
}

BasisRegistry standard_registry(const MeshHierarchy& mesh, const Splitting& splitting, int threads) {
    BasisRegistry reg;
    reg.functions.resize(static_cast<std::size_t>(mesh.coarse_cells()) * 4);
    parallel_for(static_cast<std::size_t>(mesh.coarse_cells()), threads, [&](std::size_t c) {
        const auto ops = assemble_local_operators(mesh, static_cast<int>(c), splitting, Factorize::both);
        for (int i = 0; i < 4; ++i) reg.functions[c * 4 + static_cast<std::size_t>(i)] = standard_basis(ops, i);
    });
    return reg;
}

MsfemFamily solve_msfem_family(const MeshHierarchy& mesh, const Splitting& splitting, const ScalarField& f,
                               const std::vector<int>& terms, int threads) {
    int max_terms = 0;
    for (int j : terms) {
        MSFEM_REQUIRE(j >= 0, "J must be >= 0");
        max_terms = std::max(max_terms, j);
    }
    const auto slots = static_cast<std::size_t>(mesh.coarse_cells()) * 4;
    BasisRegistry standard;
    standard.functions.resize(slots);
    std::vector<BasisRegistry> iterative(terms.size());
    for (auto& reg : iterative) reg.functions.resize(slots);

    parallel_for(static_cast<std::size_t>(mesh.coarse_cells()), threads, [&](std::size_t c) {
        const auto ops = assemble_local_operators(mesh, static_cast<int>(c), splitting, Factorize::both);
        for (int i = 0; i < 4; ++i) {
            const std::size_t slot = c * 4 + static_cast<std::size_t>(i);
            standard.functions[slot] = standard_basis(ops, i);
            auto family = iterative_basis_family(ops, i, max_terms);
            for (std::size_t t = 0; t < terms.size(); ++t)
                iterative[t].functions[slot] = family[static_cast<std::size_t>(terms[t])];
        }
    });

    MsfemFamily out;
    out.terms = terms;
    out.standard = solve_msfem(mesh, assemble_coarse_system(mesh, std::move(standard), splitting.k, f, threads));
    for (auto& reg : iterative)
        out.iterative.push_back(solve_msfem(mesh, assemble_coarse_system(mesh, std::move(reg), splitting.k, f, threads)));
    return out;
}

}  // namespace msfem
