#include "msfem/field.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "msfem/errors.hpp"

namespace msfem {

ScalarField make_fine_field(const MeshHierarchy& mesh, double fill) {
    return ScalarField(mesh.fine_nx(), mesh.fine_ny(), fill);
}

ScalarField restrict_to_cell(const MeshHierarchy& mesh, const ScalarField& global, int cell) {
    MSFEM_REQUIRE(global.nx == mesh.fine_nx() && global.ny == mesh.fine_ny(), "field does not match the mesh");
    const int r = mesh.refinement();
    ScalarField local(r, r);
    for (int b = 0; b < r; ++b)
        for (int a = 0; a < r; ++a) local[static_cast<std::size_t>(b * r + a)] = global[mesh.local_cell(cell, a, b)];
    return local;
}

double max_ratio(std::span<const double> k0, std::span<const double> k1) {
    MSFEM_REQUIRE(k0.size() == k1.size(), "size mismatch");
    double out = 0.0;
    for (std::size_t i = 0; i < k0.size(); ++i) out = std::max(out, std::abs(k1[i]) / k0[i]);
    return out;
}

namespace {

void fill_eta(const MeshHierarchy& mesh, Splitting& s) {
    s.eta_per_cell.assign(static_cast<std::size_t>(mesh.coarse_cells()), 0.0);
    for (int c = 0; c < mesh.coarse_cells(); ++c) {
        double e = 0.0;
        for (int idx : mesh.local_cells(c)) e = std::max(e, std::abs(s.k1[idx]) / s.k0[idx]);
        s.eta_per_cell[static_cast<std::size_t>(c)] = e;
    }
    s.eta_global = s.eta_per_cell.empty() ? 0.0 : *std::max_element(s.eta_per_cell.begin(), s.eta_per_cell.end());
}

void check_positive(const ScalarField& f, const char* what) {
    for (double v : f.values)
        if (!(v > 0.0)) throw std::invalid_argument(std::string(what) + " must be strictly positive");
}

void check_matches(const MeshHierarchy& mesh, const ScalarField& f) {
    MSFEM_REQUIRE(f.nx == mesh.fine_nx() && f.ny == mesh.fine_ny(), "field does not match the mesh fine grid");
}

}  // namespace

Splitting splitting_from_parts(const MeshHierarchy& mesh, ScalarField k0, ScalarField k1) {
    check_matches(mesh, k0);
    check_matches(mesh, k1);
    Splitting s;
    s.k = ScalarField(k0.nx, k0.ny);
    for (std::size_t i = 0; i < k0.size(); ++i) s.k[i] = k0[i] + k1[i];
    s.k0 = std::move(k0);
    s.k1 = std::move(k1);
    check_positive(s.k0, "k0");
    check_positive(s.k, "k");
    fill_eta(mesh, s);
    return s;
}

Splitting splitting_from_total(const MeshHierarchy& mesh, ScalarField k, ScalarField k0) {
    check_matches(mesh, k);
    check_matches(mesh, k0);
    Splitting s;
    s.k1 = ScalarField(k.nx, k.ny);
    for (std::size_t i = 0; i < k.size(); ++i) s.k1[i] = k[i] - k0[i];
    s.k = std::move(k);
    s.k0 = std::move(k0);
    check_positive(s.k0, "k0");
    check_positive(s.k, "k");
    fill_eta(mesh, s);
    return s;
}

double eta(const Splitting& s) { return s.eta_global; }

double eta(const Splitting& s, int cell) {
    MSFEM_REQUIRE(cell >= 0 && static_cast<std::size_t>(cell) < s.eta_per_cell.size(), "cell out of range");
    return s.eta_per_cell[static_cast<std::size_t>(cell)];
}

Splitting shift_splitting(const MeshHierarchy& mesh, const Splitting& s, double margin) {
    MSFEM_REQUIRE(margin > 0.0, "margin must be positive");
    if (s.eta_global < 1.0) return s;
    double sup = -INFINITY;
    double k0_max = 0.0;
    for (std::size_t i = 0; i < s.k.size(); ++i) {
        sup = std::max(sup, std::max(0.5 * (s.k1[i] - s.k0[i]), -s.k0[i]));
        k0_max = std::max(k0_max, s.k0[i]);
    }
    double shift = (1.0 + margin) * sup;
    if (!(shift > 0.0)) shift = margin * k0_max;
    ScalarField k0 = s.k0;
    ScalarField k1 = s.k1;
    for (std::size_t i = 0; i < k0.size(); ++i) {
        k0[i] += shift;
        k1[i] -= shift;
    }
    Splitting out;
    out.k0 = std::move(k0);
    out.k1 = std::move(k1);
    out.k = s.k;
    fill_eta(mesh, out);
    return out;
}

Splitting split_lognormal(const MeshHierarchy& mesh, const ScalarField& y, double sc) {
    MSFEM_REQUIRE(sc > 0.0 && sc <= 1.0, "strength factor must lie in (0, 1]");
    check_matches(mesh, y);
    ScalarField k(y.nx, y.ny);
    ScalarField k0(y.nx, y.ny);
    for (std::size_t i = 0; i < y.size(); ++i) {
        k[i] = std::exp(y[i]);
        k0[i] = std::exp(sc * y[i]);
    }
    return splitting_from_total(mesh, std::move(k), std::move(k0));
}

ScalarField standard_normal_field(const MeshHierarchy& mesh, std::uint64_t seed) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), 0x4c4f474eu};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> dist(0.0, 1.0);
    ScalarField y = make_fine_field(mesh, 0.0);
    for (auto& v : y.values) v = dist(rng);
    return y;
}

}  // namespace msfem
