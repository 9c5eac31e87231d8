#include "doctest.h"

#include <cmath>
#include <random>

#include "msfem/errors.hpp"
#include "msfem/stochastic.hpp"

using namespace msfem;

TEST_CASE("theta sampler") {
    const auto a = sample_theta(42, 7, 20);
    CHECK(a.size() == 20);
    CHECK(a == sample_theta(42, 7, 20));
    CHECK(a != sample_theta(42, 8, 20));
    CHECK(a != sample_theta(43, 7, 20));

    const int n = 20;
    const int draws = 100000;
    std::vector<double> mean(n, 0.0);
    for (int i = 0; i < draws; ++i) {
        const auto t = sample_theta(5, static_cast<std::uint64_t>(i), n);
        for (int k = 0; k < n; ++k) {
            CHECK_FALSE((t[static_cast<std::size_t>(k)] < -1.0 || t[static_cast<std::size_t>(k)] > 1.0));
            mean[static_cast<std::size_t>(k)] += t[static_cast<std::size_t>(k)];
        }
    }
    const double sigma = 1.0 / std::sqrt(3.0);
    for (double m : mean) CHECK(std::abs(m / draws) <= 3.0 * sigma / std::sqrt(static_cast<double>(draws)));
}

TEST_CASE("Smolyak node counts") {
    CHECK(smolyak_node_count(1, 0) == 1);
    CHECK(smolyak_node_count(1, 1) == 3);
    CHECK(smolyak_node_count(1, 3) == 9);
    CHECK(smolyak_node_count(2, 1) == 5);
    CHECK(smolyak_node_count(2, 2) == 13);
    CHECK(smolyak_node_count(2, 3) == 29);
    CHECK(smolyak_node_count(10, 2) == 221);
    CHECK(smolyak_node_count(20, 2) == 841);
    CHECK_THROWS_AS(smolyak_node_count(400, 14), ResourceError);
    for (int d : {1, 2, 3, 5})
        for (int l : {0, 1, 2, 3}) CHECK(build_sparse_grid(d, l).size() == smolyak_node_count(d, l));
    CHECK_THROWS_AS(build_sparse_grid(20, 3, 1000), ResourceError);
}

TEST_CASE("sparse grid interpolation") {
    const SparseGrid grid = build_sparse_grid(4, 3);
    for (std::size_t i = 0; i < grid.size(); ++i)
        for (double x : grid.node(i)) CHECK(std::abs(x) <= 1.0);

    SUBCASE("nodal exactness") {
        for (std::size_t i = 0; i < grid.size(); i += 7) {
            const auto w = grid.weights(grid.node(i));
            for (std::size_t j = 0; j < w.size(); ++j) CHECK(std::abs(w[j] - (i == j ? 1.0 : 0.0)) <= 1e-12);
        }
    }
    SUBCASE("constants and low-degree polynomials") {
        std::mt19937_64 rng(1);
        std::uniform_real_distribution<double> u(-1, 1);
        auto f = [](std::span<const double> x) { return 1.0 + x[0] - 2.0 * x[1] * x[1] + 0.5 * x[2] * x[3] + x[3] * x[3] * x[3]; };
        for (int trial = 0; trial < 20; ++trial) {
            std::vector<double> x(4);
            for (auto& v : x) v = u(rng);
            const auto w = grid.weights(x);
            double sum = 0.0, interp = 0.0;
            for (std::size_t j = 0; j < w.size(); ++j) {
                sum += w[j];
                interp += w[j] * f(grid.node(j));
            }
            CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
            CHECK(interp == doctest::Approx(f(x)).epsilon(1e-11));
        }
    }
    SUBCASE("origin only at level 0") {
        const SparseGrid g0 = build_sparse_grid(1, 0);
        CHECK(g0.size() == 1);
        CHECK(g0.node(0)[0] == 0.0);
    }
}

namespace {

struct Setup {
    MeshHierarchy mesh{2, 2, 4};
    KleModel model = build_kle_model(mesh, 1.0, 0.1, 0.1, 6);
    ScalarField f = make_fine_field(mesh, 1.0);
};

}  // namespace

TEST_CASE("Green store") {
    Setup s;
    const int m = 3;
    const SparseGrid grid = build_sparse_grid(m, 2);
    const GreenStore store = precompute_green_inverses(s.model, grid, m);
    CHECK(store.nodes == grid.size());
    CHECK(store.packed.size() == grid.size() * static_cast<std::size_t>(s.mesh.coarse_cells()) * store.packed_size());

    for (std::size_t node = 0; node < grid.size(); node += 3) {
        const auto theta = kernel_parameters(s.model, grid.node(node));
        CHECK(theta.size() == 6);
        CHECK(theta[3] == 0.0);
        const Splitting split = split_kle(s.model, theta, m);
        for (int c = 0; c < s.mesh.coarse_cells(); ++c) {
            const LocalOperators ops = assemble_local_operators(s.mesh, c, split, Factorize::none);
            const Eigen::MatrixXd inv = store.matrix(node, c);
            CHECK((inv - inv.transpose()).norm() == 0.0);
            CHECK((ops.m0 * inv - Eigen::MatrixXd::Identity(inv.rows(), inv.cols())).cwiseAbs().maxCoeff() <= 1e-8);
            CHECK((store.interpolate(grid.weights(grid.node(node)), c) - inv).cwiseAbs().maxCoeff() <= 1e-12);
        }
    }
    CHECK_THROWS_AS(precompute_green_inverses(s.model, grid, m, 1024), ResourceError);
}

TEST_CASE("collocated basis at sparse-grid nodes") {
    Setup s;
    const int m = 3;
    const SparseGrid grid = build_sparse_grid(m, 1);
    const GreenStore store = precompute_green_inverses(s.model, grid, m);
    auto theta = sample_theta(3, 0, 6);
    for (std::size_t node : {std::size_t{0}, std::size_t{4}}) {
        for (int k = 0; k < m; ++k) theta[static_cast<std::size_t>(k)] = grid.node(node)[static_cast<std::size_t>(k)];
        const Splitting split = split_kle(s.model, theta, m);
        for (int c : {0, 3}) {
            const LocalOperators ops = assemble_local_operators(s.mesh, c, split);
            for (int v = 0; v < 4; ++v) {
                const auto exact = iterative_basis(ops, v, 2);
                const auto approx = interpolated_basis(store, grid, s.model, theta, c, v, 2);
                CHECK(approx.variant.kind == BasisKind::collocated);
                for (std::size_t p = 0; p < exact.values.size(); ++p)
                    CHECK(std::abs(exact.values[p] - approx.values[p]) <= 1e-10);
            }
        }
    }

    // m = n: no remainder, the collocated basis is the k0 standard basis
    const SparseGrid full_grid = build_sparse_grid(6, 1);
    const GreenStore full = precompute_green_inverses(s.model, full_grid, 6);
    for (int k = 0; k < 6; ++k) theta[static_cast<std::size_t>(k)] = full_grid.node(9)[static_cast<std::size_t>(k)];
    const LocalOperators ops = assemble_local_operators(s.mesh, 2, split_kle(s.model, theta, 6));
    const auto approx = interpolated_basis(full, full_grid, s.model, theta, 2, 1, 3);
    const auto standard = standard_basis(ops, 1);
    for (std::size_t p = 0; p < standard.values.size(); ++p) CHECK(std::abs(standard.values[p] - approx.values[p]) <= 1e-10);
}

TEST_CASE("Monte Carlo statistics") {
    Setup s;
    SUBCASE("single sample equals the deterministic run") {
        const auto st = monte_carlo_run(s.model, s.f, {3, {0, 2}, 1, 11, 1});
        const auto theta = sample_theta(11, 0, 6);
        const Splitting split = split_kle(s.model, theta, 3);
        const auto fam = solve_msfem_family(s.mesh, split, s.f, {0, 2});
        for (std::size_t p = 0; p < fam.standard.size(); ++p) {
            CHECK(st.mean_uh[p] == doctest::Approx(fam.standard[p]).epsilon(1e-14));
            CHECK(st.mean_uJh[1][p] == doctest::Approx(fam.iterative[1][p]).epsilon(1e-14));
            CHECK(st.var_uh[p] == 0.0);
        }
        CHECK(st.var_err_uh_uJh[0] == 0.0);
        CHECK(st.eta_hat == doctest::Approx(eta(split)));
        CHECK(st.c_tilde == doctest::Approx(c_tilde(split)));
        CHECK(st.energy_ratio == doctest::Approx(energy_ratio(s.model, 3)));
    }
    SUBCASE("worker count does not change statistics") {
        const auto a = monte_carlo_run(s.model, s.f, {2, {0, 1, 3}, 12, 4, 1});
        const auto b = monte_carlo_run(s.model, s.f, {2, {0, 1, 3}, 12, 4, 3});
        CHECK(a.mean_uh.values == b.mean_uh.values);
        CHECK(a.var_uJh[2].values == b.var_uJh[2].values);
        CHECK(a.mean_err_uh_uJh == b.mean_err_uh_uJh);
        CHECK(a.var_err_u_uJh == b.var_err_u_uJh);
        CHECK(a.eta_hat == b.eta_hat);
        for (const auto& v : a.var_uJh)
            for (double x : v.values) CHECK(x >= 0.0);
        for (std::size_t j = 0; j < a.terms.size(); ++j) {
            if (a.eta_hat < 1.0) CHECK(a.mean_err_uh_uJh[j] <= a.bound[j]);
            if (j > 0) CHECK(a.mean_err_uh_uJh[j] <= a.mean_err_uh_uJh[j - 1]);
        }
    }
    CHECK_THROWS(monte_carlo_run(s.model, s.f, {3, {0}, 0, 0, 1}));
}

TEST_CASE("collocation error decomposition") {
    Setup s;
    const int m = 3;
    const SparseGrid grid = build_sparse_grid(m, 2);
    const GreenStore store = precompute_green_inverses(s.model, grid, m);
    std::vector<std::vector<double>> thetas;
    for (int i = 0; i < 4; ++i) thetas.push_back(sample_theta(0, static_cast<std::uint64_t>(i), 6));
    const auto res = collocation_run(s.model, store, grid, thetas, {0, 2}, s.f);
    CHECK(res.samples.size() == 4);
    for (const auto& row : res.samples)
        for (const auto& cs : row) {
            CHECK(cs.e <= cs.e_spl + cs.e_col + 1e-12);
            CHECK(cs.e >= 0.0);
        }
    for (const auto& v : res.variance) CHECK(v.e >= 0.0);
    const auto again = collocation_run(s.model, store, grid, thetas, {0, 2}, s.f, 3);
    CHECK(again.mean[1].e == res.mean[1].e);
}

TEST_CASE("relative L2 difference") {
    GridFunction a(3, 3, 1.0), b(3, 3, 1.0);
    CHECK(relative_l2_difference(a, b) == 0.0);
    b[4] = 2.0;
    CHECK(relative_l2_difference(a, b) == doctest::Approx(1.0 / 4.0));
}

TEST_CASE("cost ratios") {
    const auto r = cost_ratios(20, 10, 2, 2);
    CHECK(r.ftc_denominator == 59049);
    CHECK(r.alpha_ftc == doctest::Approx(std::pow(3.0, -10)));
    CHECK(r.sgc_reduced == 221);
    CHECK(r.sgc_full == 841);
    CHECK(r.alpha_sgc == doctest::Approx(221.0 / 841.0));
    const auto same = cost_ratios(20, 20, 2, 2);
    CHECK(same.alpha_ftc == 1.0);
    CHECK(same.alpha_sgc == 1.0);
}
