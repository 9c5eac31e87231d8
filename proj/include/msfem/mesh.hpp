#pragma once

#include <array>
#include <cstddef>
#include <vector>

namespace msfem {

/// Two-level structured grid on the unit square.
///
/// The coarse grid has nx_coarse x ny_coarse cells; every coarse cell is split
/// into r x r fine cells. Fine nodes, fine cells and coarse cells are all
/// numbered row-major (x fastest). Coarse vertices of a cell are numbered
/// counterclockwise from the lower-left corner: 0=(0,0), 1=(1,0), 2=(1,1),
/// 3=(0,1).
class MeshHierarchy {
public:
    MeshHierarchy(int nx_coarse, int ny_coarse, int r);

    int nx_coarse() const { return nx_; }
    int ny_coarse() const { return ny_; }
    int refinement() const { return r_; }

    int coarse_cells() const { return nx_ * ny_; }
    int fine_nx() const { return nx_ * r_; }
    int fine_ny() const { return ny_ * r_; }
    int fine_cells() const { return fine_nx() * fine_ny(); }
    int fine_nodes() const { return (fine_nx() + 1) * (fine_ny() + 1); }

    double hx() const { return 1.0 / fine_nx(); }
    double hy() const { return 1.0 / fine_ny(); }
    double fine_cell_area() const { return hx() * hy(); }

    int fine_node(int i, int j) const { return j * (fine_nx() + 1) + i; }
    int fine_cell(int i, int j) const { return j * fine_nx() + i; }
    double node_x(int node) const;
    double node_y(int node) const;
    double cell_center_x(int cell) const;
    double cell_center_y(int cell) const;
    bool on_boundary(int node) const;

    /// Global fine node of local node (a, b), 0 <= a, b <= r, in coarse cell.
    int local_node(int cell, int a, int b) const;
    /// Global fine cell of local fine cell (a, b), 0 <= a, b < r.
    int local_cell(int cell, int a, int b) const;

    /// Interior fine nodes of a coarse cell, row-major; (r-1)^2 entries.
    std::vector<int> local_interior_nodes(int cell) const;
    /// All (r+1)^2 fine nodes of a coarse cell, row-major.
    std::vector<int> local_nodes(int cell) const;
    /// The r^2 fine cells of a coarse cell, row-major.
    std::vector<int> local_cells(int cell) const;

    /// Global coarse vertex id (row-major over (nx+1) x (ny+1)) of a cell corner.
    int coarse_vertex(int cell, int vertex) const;
    /// Index of a coarse vertex among interior coarse vertices, or -1 on the boundary.
    int interior_coarse_index(int coarse_vertex) const;
    int interior_coarse_vertices() const { return (nx_ - 1) * (ny_ - 1); }

private:
    void check_cell(int cell) const;

    int nx_;
    int ny_;
    int r_;
};

MeshHierarchy build_mesh(int nx_coarse, int ny_coarse, int r);

/// Corner offsets (dx, dy) of the four coarse vertices.
inline constexpr std::array<std::array<int, 2>, 4> kVertexOffsets{{{0, 0}, {1, 0}, {1, 1}, {0, 1}}};

}  // namespace msfem
