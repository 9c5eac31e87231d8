#include "msfem/mesh.hpp"

#include "msfem/errors.hpp"

namespace msfem {

MeshHierarchy::MeshHierarchy(int nx_coarse, int ny_coarse, int r) : nx_(nx_coarse), ny_(ny_coarse), r_(r) {
    MSFEM_REQUIRE(nx_coarse >= 1 && ny_coarse >= 1, "coarse cell counts must be >= 1");
    MSFEM_REQUIRE(r >= 2, "refinement factor must be >= 2");
}

MeshHierarchy build_mesh(int nx_coarse, int ny_coarse, int r) { return MeshHierarchy(nx_coarse, ny_coarse, r); }

double MeshHierarchy::node_x(int node) const { return (node % (fine_nx() + 1)) * hx(); }
double MeshHierarchy::node_y(int node) const { return (node / (fine_nx() + 1)) * hy(); }
double MeshHierarchy::cell_center_x(int cell) const { return (cell % fine_nx() + 0.5) * hx(); }
double MeshHierarchy::cell_center_y(int cell) const { return (cell / fine_nx() + 0.5) * hy(); }

bool MeshHierarchy::on_boundary(int node) const {
    const int i = node % (fine_nx() + 1);
    const int j = node / (fine_nx() + 1);
    return i == 0 || j == 0 || i == fine_nx() || j == fine_ny();
}

void MeshHierarchy::check_cell(int cell) const {
    MSFEM_REQUIRE(cell >= 0 && cell < coarse_cells(), "coarse cell index out of range");
}

int MeshHierarchy::local_node(int cell, int a, int b) const {
    const int cx = cell % nx_;
    const int cy = cell / nx_;
    return fine_node(cx * r_ + a, cy * r_ + b);
}

int MeshHierarchy::local_cell(int cell, int a, int b) const {
    const int cx = cell % nx_;
    const int cy = cell / nx_;
    return fine_cell(cx * r_ + a, cy * r_ + b);
}

std::vector<int> MeshHierarchy::local_interior_nodes(int cell) const {
    check_cell(cell);
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>((r_ - 1) * (r_ - 1)));
    for (int b = 1; b < r_; ++b)
        for (int a = 1; a < r_; ++a) out.push_back(local_node(cell, a, b));
    return out;
}

std::vector<int> MeshHierarchy::local_nodes(int cell) const {
    check_cell(cell);
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>((r_ + 1) * (r_ + 1)));
    for (int b = 0; b <= r_; ++b)
        for (int a = 0; a <= r_; ++a) out.push_back(local_node(cell, a, b));
    return out;
}

std::vector<int> MeshHierarchy::local_cells(int cell) const {
    check_cell(cell);
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(r_ * r_));
    for (int b = 0; b < r_; ++b)
        for (int a = 0; a < r_; ++a) out.push_back(local_cell(cell, a, b));
    return out;
}

int MeshHierarchy::coarse_vertex(int cell, int vertex) const {
    check_cell(cell);
    MSFEM_REQUIRE(vertex >= 0 && vertex < 4, "vertex must be in 0..3");
    const int cx = cell % nx_ + kVertexOffsets[vertex][0];
    const int cy = cell / nx_ + kVertexOffsets[vertex][1];
    return cy * (nx_ + 1) + cx;
}

int MeshHierarchy::interior_coarse_index(int coarse_vertex) const {
    const int i = coarse_vertex % (nx_ + 1);
    const int j = coarse_vertex / (nx_ + 1);
    if (i == 0 || j == 0 || i == nx_ || j == ny_) return -1;
    return (j - 1) * (nx_ - 1) + (i - 1);
}

}  // namespace msfem
