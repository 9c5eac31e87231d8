#include "doctest.h"

#include <algorithm>
#include <map>
#include <set>
#include <stdexcept>

#include "msfem/mesh.hpp"

using namespace msfem;

TEST_CASE("mesh sizes") {
    const MeshHierarchy one(1, 1, 2);
    CHECK(one.coarse_cells() == 1);
    CHECK(one.local_interior_nodes(0).size() == 1);

    const MeshHierarchy mesh(12, 12, 10);
    CHECK(mesh.fine_nx() == 120);
    CHECK(mesh.fine_ny() == 120);
    CHECK(mesh.local_interior_nodes(5).size() == 81);

    const MeshHierarchy mc(16, 16, 4);
    CHECK(mc.fine_nx() == 64);
    CHECK(mc.fine_nodes() == 65 * 65);
    CHECK(mc.interior_coarse_vertices() == 15 * 15);
}

TEST_CASE("mesh rejects bad sizes") {
    CHECK_THROWS_AS(MeshHierarchy(0, 1, 2), std::invalid_argument);
    CHECK_THROWS_AS(MeshHierarchy(2, 2, 0), std::invalid_argument);
    const MeshHierarchy m(2, 2, 3);
    CHECK_THROWS(m.local_nodes(4));
}

TEST_CASE("interior node lists are deterministic") {
    const MeshHierarchy m(3, 2, 5);
    CHECK(m.local_interior_nodes(4) == m.local_interior_nodes(4));
}

TEST_CASE("local cells partition the fine grid") {
    const MeshHierarchy m(3, 4, 5);
    std::vector<int> seen(static_cast<std::size_t>(m.fine_cells()), 0);
    std::size_t total = 0;
    for (int c = 0; c < m.coarse_cells(); ++c) {
        const auto cells = m.local_cells(c);
        total += cells.size();
        for (int fc : cells) ++seen[static_cast<std::size_t>(fc)];
    }
    CHECK(total == static_cast<std::size_t>(m.fine_cells()));
    CHECK(std::all_of(seen.begin(), seen.end(), [](int s) { return s == 1; }));
}

TEST_CASE("shared fine nodes sit on cell boundaries only") {
    const MeshHierarchy m(3, 3, 4);
    std::map<int, int> boundary_count, interior_count;
    for (int c = 0; c < m.coarse_cells(); ++c) {
        const auto all = m.local_nodes(c);
        const auto in = m.local_interior_nodes(c);
        const std::set<int> inset(in.begin(), in.end());
        for (int n : in) ++interior_count[n];
        for (int n : all)
            if (!inset.count(n)) ++boundary_count[n];
    }
    for (const auto& [n, k] : interior_count) {
        CHECK(k == 1);
        CHECK(boundary_count.count(n) == 0);
    }
    // interior coarse edge node: 2 cells; interior coarse vertex: 4 cells
    const int r = m.refinement();
    CHECK(boundary_count[m.fine_node(r, 1)] == 2);
    CHECK(boundary_count[m.fine_node(r, r)] == 4);
    CHECK(boundary_count[m.fine_node(0, 0)] == 1);
}

TEST_CASE("coarse vertex numbering") {
    const MeshHierarchy m(3, 2, 2);
    // cell 4 is (1, 1)
    CHECK(m.coarse_vertex(4, 0) == 1 * 4 + 1);
    CHECK(m.coarse_vertex(4, 1) == 1 * 4 + 2);
    CHECK(m.coarse_vertex(4, 2) == 2 * 4 + 2);
    CHECK(m.coarse_vertex(4, 3) == 2 * 4 + 1);
    CHECK(m.interior_coarse_index(0) == -1);
    CHECK(m.interior_coarse_index(1 * 4 + 1) == 0);
    CHECK(m.interior_coarse_index(1 * 4 + 2) == 1);
    CHECK(m.local_node(4, 0, 0) == m.fine_node(2, 2));
    CHECK(m.local_node(4, 2, 2) == m.fine_node(4, 4));
}

TEST_CASE("node coordinates and boundary flags") {
    const MeshHierarchy m(2, 2, 2);
    const int n = m.fine_node(4, 2);
    CHECK(m.node_x(n) == doctest::Approx(1.0));
    CHECK(m.node_y(n) == doctest::Approx(0.5));
    CHECK(m.on_boundary(n));
    CHECK_FALSE(m.on_boundary(m.fine_node(2, 2)));
    CHECK(m.cell_center_x(m.fine_cell(0, 0)) == doctest::Approx(0.125));
}
