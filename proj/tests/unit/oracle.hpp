#pragma once

// Independent reference assembly for tests: Q1 on an r x r cell grid, element
// integrals by 2x2 Gauss quadrature on the full (r+1)^2 node set, Dirichlet
// data eliminated by row/column selection.

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <random>
#include <vector>

namespace oracle {

inline int node(int r, int a, int b) { return b * (r + 1) + a; }

inline Eigen::MatrixXd full_stiffness(int r, double hx, double hy, const std::vector<double>& kappa) {
    const int n = (r + 1) * (r + 1);
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    const double g = 1.0 / std::sqrt(3.0);
    const std::array<double, 2> q{0.5 - 0.5 * g, 0.5 + 0.5 * g};
    for (int cy = 0; cy < r; ++cy)
        for (int cx = 0; cx < r; ++cx) {
            const int ids[4] = {node(r, cx, cy), node(r, cx + 1, cy), node(r, cx + 1, cy + 1), node(r, cx, cy + 1)};
            const double kc = kappa[static_cast<std::size_t>(cy * r + cx)];
            for (double s : q)
                for (double t : q) {
                    // reference gradients of the four bilinear shape functions
                    const double dx[4] = {-(1 - t) / hx, (1 - t) / hx, t / hx, -t / hx};
                    const double dy[4] = {-(1 - s) / hy, -s / hy, s / hy, (1 - s) / hy};
                    for (int i = 0; i < 4; ++i)
                        for (int j = 0; j < 4; ++j)
                            a(ids[i], ids[j]) += 0.25 * hx * hy * kc * (dx[i] * dx[j] + dy[i] * dy[j]);
                }
        }
    return a;
}

inline std::vector<int> interior(int r) {
    std::vector<int> out;
    for (int b = 1; b < r; ++b)
        for (int a = 1; a < r; ++a) out.push_back(node(r, a, b));
    return out;
}

inline Eigen::MatrixXd select(const Eigen::MatrixXd& a, const std::vector<int>& rows, const std::vector<int>& cols) {
    Eigen::MatrixXd out(rows.size(), cols.size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < cols.size(); ++j) out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = a(rows[i], cols[j]);
    return out;
}

inline Eigen::VectorXd restrict(const Eigen::VectorXd& v, const std::vector<int>& ids) {
    Eigen::VectorXd out(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) out(static_cast<Eigen::Index>(i)) = v(ids[i]);
    return out;
}

inline Eigen::VectorXd extend(const Eigen::VectorXd& inner, const std::vector<int>& ids, int n) {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
    for (std::size_t i = 0; i < ids.size(); ++i) out(ids[i]) = inner(static_cast<Eigen::Index>(i));
    return out;
}

/// Bilinear hat of cell corner v (0=(0,0), 1=(1,0), 2=(1,1), 3=(0,1)) at the local nodes.
inline Eigen::VectorXd hat(int r, int v) {
    Eigen::VectorXd out((r + 1) * (r + 1));
    for (int b = 0; b <= r; ++b)
        for (int a = 0; a <= r; ++a) {
            const double x = static_cast<double>(a) / r, y = static_cast<double>(b) / r;
            const double fx = (v == 0 || v == 3) ? 1 - x : x;
            const double fy = (v == 0 || v == 1) ? 1 - y : y;
            out(node(r, a, b)) = fx * fy;
        }
    return out;
}

/// Solves a(w, z) = -a_rhs(g, z) for all interior z, w zero on the boundary; returns the full vector.
inline Eigen::VectorXd dirichlet_solve(const Eigen::MatrixXd& a, const Eigen::MatrixXd& a_rhs, const Eigen::VectorXd& g,
                                       int r) {
    const auto in = interior(r);
    const Eigen::VectorXd rhs = -restrict(a_rhs * g, in);
    const Eigen::VectorXd w = select(a, in, in).ldlt().solve(rhs);
    return extend(w, in, (r + 1) * (r + 1));
}

inline double energy(const Eigen::MatrixXd& a, const Eigen::VectorXd& v) { return std::sqrt(v.dot(a * v)); }

inline std::vector<double> random_values(std::mt19937_64& rng, std::size_t n, double lo, double hi) {
    std::uniform_real_distribution<double> d(lo, hi);
    std::vector<double> out(n);
    for (auto& x : out) x = d(rng);
    return out;
}

}  // namespace oracle
