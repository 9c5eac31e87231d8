#include "msfem/basis.hpp"

#include <algorithm>
#include <cmath>

#include "msfem/errors.hpp"

namespace msfem {

namespace {

void check_vertex(int vertex) { MSFEM_REQUIRE(vertex >= 0 && vertex < 4, "vertex must be in 0..3"); }

const Eigen::LLT<Eigen::MatrixXd>& kernel_factor(const LocalOperators& ops) {
    if (!ops.m0_factor) throw std::invalid_argument("local operators were assembled without the k0 factorization");
    return *ops.m0_factor;
}

}  // namespace

GreenOperator factored_green(const LocalOperators& ops) {
    const auto* factor = &kernel_factor(ops);
    return [factor](const Eigen::VectorXd& x) -> Eigen::VectorXd { return factor->solve(x); };
}

GreenOperator matrix_green(const Eigen::MatrixXd& inverse) {
    return [&inverse](const Eigen::VectorXd& x) -> Eigen::VectorXd { return inverse * x; };
}

BasisFunction compose_basis(const LocalOperators& ops, int vertex, const Eigen::VectorXd& interior_correction,
                            BasisVariant variant) {
    check_vertex(vertex);
    MSFEM_REQUIRE(interior_correction.size() == ops.interior_count(), "interior vector size mismatch");
    BasisFunction phi{ops.cell, vertex, ops.hats[static_cast<std::size_t>(vertex)], variant};
    for (int p = 0; p < ops.interior_count(); ++p) phi.values[static_cast<std::size_t>(ops.interior_to_local(p))] += interior_correction(p);
    return phi;
}

BasisFunction standard_basis(const LocalOperators& ops, int vertex) {
    check_vertex(vertex);
    if (!ops.m_factor) throw std::invalid_argument("local operators were assembled without the full factorization");
    const Eigen::VectorXd correction = -ops.m_factor->solve(ops.v[static_cast<std::size_t>(vertex)]);
    return compose_basis(ops, vertex, correction, {BasisKind::standard, -1, -1});
}

Eigen::VectorXd projection_pi_l(const LocalOperators& ops, int vertex) {
    return projection_pi_l(ops, vertex, factored_green(ops));
}

Eigen::VectorXd projection_pi_l(const LocalOperators& ops, int vertex, const GreenOperator& green) {
    check_vertex(vertex);
    return green(ops.v0[static_cast<std::size_t>(vertex)]);
}

std::vector<Eigen::VectorXd> bubble_sequence(const LocalOperators& ops, int vertex, int terms) {
    return bubble_sequence(ops, vertex, terms, factored_green(ops));
}

std::vector<Eigen::VectorXd> bubble_sequence(const LocalOperators& ops, int vertex, int terms,
                                             const GreenOperator& green) {
    check_vertex(vertex);
    MSFEM_REQUIRE(terms >= 0, "J must be >= 0");
    const auto v = static_cast<std::size_t>(vertex);
    std::vector<Eigen::VectorXd> out;
    out.reserve(static_cast<std::size_t>(terms) + 1);
    const Eigen::VectorXd pi_l = green(ops.v0[v]);
    out.push_back(green(ops.m1 * pi_l - ops.v1[v]));
    for (int j = 1; j <= terms; ++j) out.push_back(-green(ops.m1 * out.back()));
    return out;
}

BasisFunction iterative_basis(const LocalOperators& ops, int vertex, int terms) {
    return iterative_basis_family(ops, vertex, terms).back();
}

std::vector<BasisFunction> iterative_basis_family(const LocalOperators& ops, int vertex, int max_terms) {
    return iterative_basis_family(ops, vertex, max_terms, factored_green(ops), {BasisKind::iterative, 0, -1});
}

std::vector<BasisFunction> iterative_basis_family(const LocalOperators& ops, int vertex, int max_terms,
                                                  const GreenOperator& green, BasisVariant tag) {
    const auto bubbles = bubble_sequence(ops, vertex, max_terms, green);
    Eigen::VectorXd correction = -projection_pi_l(ops, vertex, green);
    std::vector<BasisFunction> out;
    out.reserve(bubbles.size());
    for (int j = 0; j <= max_terms; ++j) {
        correction += bubbles[static_cast<std::size_t>(j)];
        tag.terms = j;
        out.push_back(compose_basis(ops, vertex, correction, tag));
    }
    return out;
}

Eigen::VectorXd xi_direct(const LocalOperators& ops, int vertex) {
    check_vertex(vertex);
    const auto v = static_cast<std::size_t>(vertex);
    const Eigen::VectorXd rhs = ops.m1 * kernel_factor(ops).solve(ops.v0[v]) - ops.v1[v];
    if (ops.m_factor) return ops.m_factor->solve(rhs);
    return solve_spd(ops.m, rhs);
}

double cell_eta(const LocalOperators& ops) { return max_ratio(ops.k0.values, ops.k1.values); }

double kernel_energy(const LocalOperators& ops, const Eigen::VectorXd& interior) {
    return std::sqrt(std::max(0.0, interior.dot(ops.m0 * interior)));
}

double hat_kernel_energy(const LocalOperators& ops, int vertex) {
    check_vertex(vertex);
    return energy_norm(ops.k0, ops.hats[static_cast<std::size_t>(vertex)], ops.hx, ops.hy);
}

double basis_energy_distance(const LocalOperators& ops, const BasisFunction& a, const BasisFunction& b) {
    return energy_norm(ops.k, difference(a.values, b.values), ops.hx, ops.hy);
}

BasisErrorBound basis_error_bound(const LocalOperators& ops, int vertex, int terms) {
    check_vertex(vertex);
    MSFEM_REQUIRE(terms >= 0, "J must be >= 0");
    const double eta_k = cell_eta(ops);
    double coupling = 0.0;
    double b1 = 0.0;
    double a0 = INFINITY;
    for (std::size_t e = 0; e < ops.k.size(); ++e) {
        coupling = std::max(coupling, std::abs(ops.k1[e]) / std::sqrt(ops.k[e] * ops.k0[e]));
        b1 = std::max(b1, ops.k0[e]);
        a0 = std::min(a0, ops.k[e]);
    }
    const ScalarField unit(ops.r, ops.r, 1.0);
    const double grad_l = energy_norm(unit, ops.hats[static_cast<std::size_t>(vertex)], ops.hx, ops.hy);

    BasisErrorBound out;
    out.xi_bound = 2.0 * coupling * std::pow(eta_k, terms + 1) * hat_kernel_energy(ops, vertex);
    out.rate_bound = grad_l * 2.0 * b1 / std::sqrt(a0) * std::pow(eta_k, terms + 2);
    return out;
}

}  // namespace msfem
