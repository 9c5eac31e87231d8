#include "doctest.h"

#include <cmath>
#include <random>
#include <stdexcept>

#include "msfem/msfem.hpp"
#include "oracle.hpp"

using namespace msfem;

namespace {

Splitting random_splitting(const MeshHierarchy& mesh, std::mt19937_64& rng, double contrast) {
    ScalarField k0 = make_fine_field(mesh, 0.0), k1 = make_fine_field(mesh, 0.0);
    std::uniform_real_distribution<double> a(-1.5, 1.5), b(-contrast, contrast);
    for (std::size_t i = 0; i < k0.size(); ++i) {
        k0[i] = std::exp(a(rng));
        k1[i] = b(rng) * k0[i];
    }
    return splitting_from_parts(mesh, std::move(k0), std::move(k1));
}

// Global function sum_i c_i Phi_i from per-cell basis pieces; also reports the
// largest mismatch on nodes shared by neighbouring cells.
GridFunction combine(const MeshHierarchy& mesh, const BasisRegistry& bases, const std::vector<double>& coeff,
                     double& mismatch) {
    GridFunction out = make_fine_function(mesh);
    std::vector<char> set(out.size(), 0);
    mismatch = 0.0;
    for (int c = 0; c < mesh.coarse_cells(); ++c) {
        const auto nodes = mesh.local_nodes(c);
        for (std::size_t p = 0; p < nodes.size(); ++p) {
            double v = 0.0;
            for (int k = 0; k < 4; ++k) {
                const int i = mesh.interior_coarse_index(mesh.coarse_vertex(c, k));
                if (i >= 0) v += coeff[static_cast<std::size_t>(i)] * bases.at(c, k).values[p];
            }
            const auto g = static_cast<std::size_t>(nodes[p]);
            if (set[g]) mismatch = std::max(mismatch, std::abs(out[g] - v));
            out[g] = v;
            set[g] = 1;
        }
    }
    return out;
}

std::vector<double> coarse_values(const MeshHierarchy& mesh, const GridFunction& u) {
    std::vector<double> c(static_cast<std::size_t>(mesh.interior_coarse_vertices()));
    const int r = mesh.refinement();
    for (int j = 1; j < mesh.ny_coarse(); ++j)
        for (int i = 1; i < mesh.nx_coarse(); ++i)
            c[static_cast<std::size_t>(mesh.interior_coarse_index(j * (mesh.nx_coarse() + 1) + i))] =
                u[static_cast<std::size_t>(mesh.fine_node(i * r, j * r))];
    return c;
}

}  // namespace

TEST_CASE("constant coefficient reproduces coarse Q1") {
    const MeshHierarchy mesh(5, 5, 4);
    const ScalarField one = make_fine_field(mesh, 1.0);
    const Splitting s = splitting_from_parts(mesh, one, make_fine_field(mesh, 0.0));
    const CoarseSystem sys = assemble_coarse_system(mesh, standard_registry(mesh, s), s.k, one);

    const int nc = 5;
    const double h = 1.0 / nc;
    const Eigen::MatrixXd full = oracle::full_stiffness(nc, h, h, std::vector<double>(nc * nc, 1.0));
    const auto in = oracle::interior(nc);
    const Eigen::MatrixXd q1 = oracle::select(full, in, in);
    CHECK((sys.stiffness - q1).cwiseAbs().maxCoeff() <= 1e-12);
    for (Eigen::Index i = 0; i < sys.load.size(); ++i) CHECK(sys.load(i) == doctest::Approx(h * h).epsilon(1e-12));

    const Eigen::VectorXd c = q1.ldlt().solve(Eigen::VectorXd::Constant(q1.rows(), h * h));
    const GridFunction u = solve_msfem(mesh, sys);
    const Eigen::VectorXd full_c = oracle::extend(c, in, (nc + 1) * (nc + 1));
    double worst = 0.0;
    for (int n = 0; n < mesh.fine_nodes(); ++n) {
        const double x = mesh.node_x(n) * nc, y = mesh.node_y(n) * nc;
        const int i = std::min(static_cast<int>(x), nc - 1), j = std::min(static_cast<int>(y), nc - 1);
        const double s0 = x - i, t0 = y - j;
        const double v = (1 - s0) * (1 - t0) * full_c(oracle::node(nc, i, j)) + s0 * (1 - t0) * full_c(oracle::node(nc, i + 1, j)) +
                         s0 * t0 * full_c(oracle::node(nc, i + 1, j + 1)) + (1 - s0) * t0 * full_c(oracle::node(nc, i, j + 1));
        worst = std::max(worst, std::abs(v - u[static_cast<std::size_t>(n)]));
    }
    CHECK(worst <= 1e-12);
}

TEST_CASE("coarse system is symmetric and conforming") {
    std::mt19937_64 rng(3);
    const MeshHierarchy mesh(4, 4, 5);
    const Splitting s = random_splitting(mesh, rng, 0.8);
    const ScalarField f = make_fine_field(mesh, 1.0);
    const CoarseSystem sys = assemble_coarse_system(mesh, standard_registry(mesh, s), s.k, f);
    CHECK(sys.stiffness.rows() == mesh.interior_coarse_vertices());
    CHECK((sys.stiffness - sys.stiffness.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * sys.stiffness.cwiseAbs().maxCoeff());
    CHECK(Eigen::LLT<Eigen::MatrixXd>(sys.stiffness).info() == Eigen::Success);

    std::vector<double> coeff(static_cast<std::size_t>(mesh.interior_coarse_vertices()));
    for (auto& c : coeff) c = std::uniform_real_distribution<double>(-1, 1)(rng);
    double mismatch = 0.0;
    combine(mesh, sys.bases, coeff, mismatch);
    CHECK(mismatch <= 1e-12);
}

TEST_CASE("trivial systems") {
    const MeshHierarchy one(1, 1, 6);
    std::mt19937_64 rng(6);
    const Splitting s = random_splitting(one, rng, 0.5);
    const ScalarField f = make_fine_field(one, 1.0);
    const CoarseSystem sys = assemble_coarse_system(one, standard_registry(one, s), s.k, f);
    CHECK(sys.stiffness.rows() == 0);
    const GridFunction u = solve_msfem(one, sys);
    for (double v : u.values) CHECK(v == 0.0);

    const MeshHierarchy mesh(3, 3, 4);
    const Splitting t = random_splitting(mesh, rng, 0.5);
    const auto fam = solve_msfem_family(mesh, t, make_fine_field(mesh, 0.0), {0, 2});
    for (double v : fam.standard.values) CHECK(v == 0.0);
    for (const auto& g : fam.iterative)
        for (double v : g.values) CHECK(v == 0.0);
}

TEST_CASE("registry validation") {
    const MeshHierarchy mesh(2, 2, 3);
    std::mt19937_64 rng(2);
    const Splitting s = random_splitting(mesh, rng, 0.5);
    BasisRegistry bad = standard_registry(mesh, s);
    bad.functions.pop_back();
    CHECK_THROWS_AS(assemble_coarse_system(mesh, bad, s.k, make_fine_field(mesh, 1.0)), std::invalid_argument);
}

TEST_CASE("Galerkin optimality of the standard MsFEM solution") {
    std::mt19937_64 rng(10);
    const MeshHierarchy mesh(4, 4, 6);
    const Splitting s = random_splitting(mesh, rng, 0.8);
    const ScalarField f = make_fine_field(mesh, 1.0);
    const CoarseSystem sys = assemble_coarse_system(mesh, standard_registry(mesh, s), s.k, f);
    const GridFunction uh = solve_msfem(mesh, sys);
    const GridFunction u = fine_reference_solve(mesh, s.k, f);
    const double best = energy_norm(mesh, s.k, difference(u, uh));

    const auto c = coarse_values(mesh, uh);
    double mismatch = 0.0;
    const GridFunction again = combine(mesh, sys.bases, c, mismatch);
    CHECK(energy_norm(mesh, s.k, difference(again, uh)) <= 1e-10);
    for (int trial = 0; trial < 20; ++trial) {
        auto p = c;
        for (auto& v : p) v += std::uniform_real_distribution<double>(-1e-3, 1e-3)(rng);
        const GridFunction w = combine(mesh, sys.bases, p, mismatch);
        CHECK(best <= energy_norm(mesh, s.k, difference(u, w)));
    }
}

TEST_CASE("error report") {
    std::mt19937_64 rng(15);
    const MeshHierarchy mesh(3, 3, 6);
    const Splitting s = random_splitting(mesh, rng, 0.9);
    const ScalarField f = make_fine_field(mesh, 1.0);
    const auto fam = solve_msfem_family(mesh, s, f, {0, 1, 3});
    const GridFunction u = fine_reference_solve(mesh, s.k, f);

    const auto same = error_report(mesh, u, u, u, s.k);
    CHECK(same.err_u_uh == 0.0);
    CHECK(same.err_u_uJh == 0.0);
    CHECK(same.err_uh_uJh == 0.0);

    for (const auto& ujh : fam.iterative) {
        const auto rep = error_report(mesh, u, fam.standard, ujh, s.k);
        CHECK(rep.err_u_uJh <= rep.err_u_uh + rep.err_uh_uJh + 1e-12);
        CHECK(rep.rel_uh_uJh == doctest::Approx(rep.err_uh_uJh / rep.energy_uh));
        CHECK(rep.rel_u_uJh == doctest::Approx(rep.err_u_uJh / rep.energy_uh));
        CHECK(rep.err_uh_uJh >= 0.0);
    }
}

TEST_CASE("solution bound formula") {
    const double c = std::sqrt(2.0) * 1.3;
    const auto b = solution_error_bound(2, 0.4, c, 2.0, 0.1);
    const double p = std::pow(0.4, 3);
    CHECK(b.standard_gap == doctest::Approx(std::sqrt(c) * std::sqrt(p + p / (1 - p)) * 2.0));
    CHECK(b.reference_gap == doctest::Approx(std::sqrt(2.0) * c * (p + p / (1 - p)) * 2.0 + 0.2));
    CHECK(solution_error_bound(2, 1e-9, c, 2.0).standard_gap < 1e-12);
    double prev = INFINITY;
    for (int j = 0; j < 10; ++j) {
        const double v = solution_error_bound(j, 0.7, c, 1.0).standard_gap;
        CHECK(v < prev);
        prev = v;
    }
    CHECK_THROWS(solution_error_bound(1, 1.0, c, 1.0));
    CHECK_THROWS(solution_error_bound(-1, 0.5, c, 1.0));
}

TEST_CASE("c tilde") {
    const MeshHierarchy mesh(1, 1, 2);
    ScalarField k0 = make_fine_field(mesh, 1.0), k1 = make_fine_field(mesh, 0.0);
    k1[2] = -0.75;  // k = 0.25 there, k0 / k = 4
    const Splitting s = splitting_from_parts(mesh, k0, k1);
    CHECK(c_tilde(s) == doctest::Approx(std::sqrt(2.0) * 2.0));
}

TEST_CASE("iterative solutions converge below the bound") {
    std::mt19937_64 rng(77);
    const MeshHierarchy mesh(4, 4, 8);
    const Splitting s = random_splitting(mesh, rng, 0.7);
    REQUIRE(eta(s) < 1.0);
    const ScalarField f = make_fine_field(mesh, 1.0);
    const std::vector<int> terms{0, 1, 2, 3, 4, 5};
    const auto fam = solve_msfem_family(mesh, s, f, terms);
    const GridFunction u = fine_reference_solve(mesh, s.k, f);
    double prev = INFINITY;
    for (std::size_t j = 0; j < terms.size(); ++j) {
        const auto rep = error_report(mesh, u, fam.standard, fam.iterative[j], s.k);
        const auto b = solution_error_bound(terms[j], eta(s), c_tilde(s), rep.energy_u, rep.err_u_uh);
        CHECK(rep.err_uh_uJh <= b.standard_gap);
        CHECK(rep.err_u_uJh <= b.reference_gap);
        CHECK(rep.err_uh_uJh <= prev);
        prev = rep.err_uh_uJh;
    }

    // the family path agrees with explicit registries
    const GridFunction direct = solve_msfem(mesh, assemble_coarse_system(mesh, standard_registry(mesh, s), s.k, f));
    CHECK(energy_norm(mesh, s.k, difference(direct, fam.standard)) <= 1e-12 * energy_norm(mesh, s.k, direct));
}

TEST_CASE("thread count does not change results") {
    std::mt19937_64 rng(99);
    const MeshHierarchy mesh(5, 5, 5);
    const Splitting s = random_splitting(mesh, rng, 0.8);
    const ScalarField f = make_fine_field(mesh, 1.0);
    const auto a = solve_msfem_family(mesh, s, f, {0, 2}, 1);
    const auto b = solve_msfem_family(mesh, s, f, {0, 2}, 4);
    CHECK(a.standard.values == b.standard.values);
    CHECK(a.iterative[1].values == b.iterative[1].values);
}
