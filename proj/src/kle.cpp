#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>

#include "msfem/csv.hpp"
#include "msfem/errors.hpp"
#include "msfem/field.hpp"

namespace msfem {

double gaussian_covariance(double sigma2, double lx, double ly, double x1, double y1, double x2, double y2) {
    const double dx = x1 - x2;
    const double dy = y1 - y2;
    return sigma2 * std::exp(-dx * dx / (2.0 * lx) - dy * dy / (2.0 * ly));
}

namespace {

struct Eigen1d {
    Eigen::VectorXd values;   // descending, clamped at zero
    Eigen::MatrixXd vectors;  // Euclidean-orthonormal columns
};

// Nystrom discretization of the 1D factor exp(-d^2/(2 l)) on the cell centers
// of a uniform grid with n cells over [0, 1].
Eigen1d factor_eigenpairs(int n, double l) {
    const double h = 1.0 / n;
    Eigen::MatrixXd a(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const double d = (i - j) * h;
            a(i, j) = h * std::exp(-d * d / (2.0 * l));
        }
    if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-12)
        throw NumericalError("covariance factor is not symmetric");

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a);
    if (solver.info() != Eigen::Success) throw NumericalError("covariance eigensolver failed");

    Eigen1d out;
    out.values.resize(n);
    out.vectors.resize(n, n);
    for (int k = 0; k < n; ++k) {
        const int src = n - 1 - k;
        out.values(k) = std::max(0.0, solver.eigenvalues()(src));
        Eigen::VectorXd v = solver.eigenvectors().col(src);
        // Sign convention: the first entry of (numerically) largest magnitude is positive.
        const double vmax = v.cwiseAbs().maxCoeff();
        for (int i = 0; i < n; ++i) {
            if (std::abs(v(i)) >= vmax * (1.0 - 1e-10)) {
                if (v(i) < 0) v = -v;
                break;
            }
        }
        out.vectors.col(k) = v;
    }
    return out;
}

}  // namespace

KleModel build_kle_model(const MeshHierarchy& mesh, double sigma2, double lx, double ly, int n) {
    MSFEM_REQUIRE(sigma2 > 0.0 && lx > 0.0 && ly > 0.0, "covariance parameters must be positive");
    MSFEM_REQUIRE(n >= 1 && n <= mesh.fine_cells(), "truncation length must be in [1, fine cell count]");

    const int nx = mesh.fine_nx();
    const int ny = mesh.fine_ny();
    // The kernel is separable and the grid is a tensor grid, so the area-weighted
    // covariance matrix is the Kronecker product of the two 1D factors.
    const Eigen1d ex = factor_eigenpairs(nx, lx);
    const Eigen1d ey = factor_eigenpairs(ny, ly);

    struct Pair {
        double lambda;
        int a;
        int b;
    };
    std::vector<Pair> pairs;
    pairs.reserve(static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny));
    for (int a = 0; a < nx; ++a)
        for (int b = 0; b < ny; ++b) pairs.push_back({sigma2 * ex.values(a) * ey.values(b), a, b});
    const auto keep = static_cast<std::ptrdiff_t>(n);
    std::partial_sort(pairs.begin(), pairs.begin() + keep, pairs.end(), [](const Pair& p, const Pair& q) {
        if (p.lambda != q.lambda) return p.lambda > q.lambda;
        if (p.a != q.a) return p.a < q.a;
        return p.b < q.b;
    });

    KleModel model{mesh, make_fine_field(mesh, 0.0), {}, {}, sigma2, lx, ly};
    const double scale = 1.0 / std::sqrt(mesh.fine_cell_area());
    for (int k = 0; k < n; ++k) {
        const Pair& p = pairs[static_cast<std::size_t>(k)];
        ScalarField b = make_fine_field(mesh, 0.0);
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i)
                b[static_cast<std::size_t>(j * nx + i)] = ex.vectors(i, p.a) * ey.vectors(j, p.b) * scale;
        model.eigenvalues.push_back(p.lambda);
        model.eigenfunctions.push_back(std::move(b));
    }
    return model;
}

KleModel prolong_kle_model(const KleModel& model, const MeshHierarchy& mesh) {
    const int fx = mesh.fine_nx() / model.mesh.fine_nx();
    const int fy = mesh.fine_ny() / model.mesh.fine_ny();
    MSFEM_REQUIRE(fx >= 1 && fy >= 1 && fx * model.mesh.fine_nx() == mesh.fine_nx() &&
                      fy * model.mesh.fine_ny() == mesh.fine_ny(),
                  "target fine grid must be an integer refinement of the generation grid");
    auto inject = [&](const ScalarField& coarse) {
        ScalarField out = make_fine_field(mesh, 0.0);
        for (int j = 0; j < mesh.fine_ny(); ++j)
            for (int i = 0; i < mesh.fine_nx(); ++i)
                out[static_cast<std::size_t>(mesh.fine_cell(i, j))] =
                    coarse[static_cast<std::size_t>(model.mesh.fine_cell(i / fx, j / fy))];
        return out;
    };
    KleModel out{mesh, inject(model.mean), model.eigenvalues, {}, model.sigma2, model.lx, model.ly};
    for (const auto& b : model.eigenfunctions) out.eigenfunctions.push_back(inject(b));
    return out;
}

ScalarField log_field(const KleModel& model, std::span<const double> theta, int terms) {
    MSFEM_REQUIRE(static_cast<int>(theta.size()) == model.n(), "theta length must equal the truncation length");
    MSFEM_REQUIRE(terms >= 0 && terms <= model.n(), "term count out of range");
    ScalarField y = model.mean;
    for (int i = 0; i < terms; ++i) {
        const double c = std::sqrt(model.eigenvalues[static_cast<std::size_t>(i)]) * theta[static_cast<std::size_t>(i)];
        const auto& b = model.eigenfunctions[static_cast<std::size_t>(i)].values;
        for (std::size_t p = 0; p < y.size(); ++p) y[p] += c * b[p];
    }
    return y;
}

ScalarField realize_log_field(const KleModel& model, std::span<const double> theta) {
    ScalarField k = log_field(model, theta, model.n());
    for (auto& v : k.values) v = std::exp(v);
    return k;
}

Splitting split_kle(const KleModel& model, std::span<const double> theta, int m) {
    MSFEM_REQUIRE(m >= 0 && m <= model.n(), "m must lie in [0, n]");
    ScalarField k0 = log_field(model, theta, m);
    for (auto& v : k0.values) v = std::exp(v);
    return splitting_from_total(model.mesh, realize_log_field(model, theta), std::move(k0));
}

double energy_ratio(const KleModel& model, int m) {
    MSFEM_REQUIRE(m >= 0 && m <= model.n(), "m must lie in [0, n]");
    double partial = 0.0;
    double total = 0.0;
    for (int i = 0; i < model.n(); ++i) {
        const double s = std::sqrt(model.eigenvalues[static_cast<std::size_t>(i)]);
        total += s;
        if (i < m) partial += s;
    }
    return total > 0.0 ? partial / total : 0.0;
}

void write_field_csv(std::ostream& out, const MeshHierarchy& mesh, const ScalarField& field) {
    MSFEM_REQUIRE(field.nx == mesh.fine_nx() && field.ny == mesh.fine_ny(), "field does not match the mesh");
    CsvWriter csv(out);
    csv.header({"cell", "x", "y", "value"});
    for (int c = 0; c < mesh.fine_cells(); ++c) {
        csv.field(c).field(mesh.cell_center_x(c)).field(mesh.cell_center_y(c)).field(field[static_cast<std::size_t>(c)]);
        csv.end_row();
    }
}

void write_kle_table(std::ostream& out, const KleModel& model) {
    CsvWriter csv(out);
    csv.header({"nx_coarse", "ny_coarse", "r", "n", "sigma2", "lx", "ly"});
    csv.field(model.mesh.nx_coarse()).field(model.mesh.ny_coarse()).field(model.mesh.refinement()).field(model.n());
    csv.field(model.sigma2).field(model.lx).field(model.ly);
    csv.end_row();
    csv.field(std::string_view("mean"));
    for (double v : model.mean.values) csv.field(v);
    csv.end_row();
    for (int i = 0; i < model.n(); ++i) {
        csv.field(model.eigenvalues[static_cast<std::size_t>(i)]);
        for (double v : model.eigenfunctions[static_cast<std::size_t>(i)].values) csv.field(v);
        csv.end_row();
    }
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(item);
    return out;
}

}  // namespace

KleModel read_kle_table(std::istream& in) {
    std::string line;
    auto next = [&]() {
        if (!std::getline(in, line)) throw std::invalid_argument("read_kle_table: truncated table");
        return split_csv_line(line);
    };
    next();  // header
    const auto meta = next();
    MSFEM_REQUIRE(meta.size() == 7, "malformed metadata row");
    const MeshHierarchy mesh(std::stoi(meta[0]), std::stoi(meta[1]), std::stoi(meta[2]));
    const int n = std::stoi(meta[3]);
    KleModel model{mesh, make_fine_field(mesh, 0.0), {}, {}, parse_double(meta[4]), parse_double(meta[5]),
                   parse_double(meta[6])};
    const auto expect = static_cast<std::size_t>(mesh.fine_cells()) + 1;
    auto mean = next();
    MSFEM_REQUIRE(mean.size() == expect && mean[0] == "mean", "malformed mean row");
    for (std::size_t p = 1; p < expect; ++p) model.mean[p - 1] = parse_double(mean[p]);
    for (int i = 0; i < n; ++i) {
        auto row = next();
        MSFEM_REQUIRE(row.size() == expect, "malformed eigenpair row");
        model.eigenvalues.push_back(parse_double(row[0]));
        ScalarField b = make_fine_field(mesh, 0.0);
        for (std::size_t p = 1; p < expect; ++p) b[p - 1] = parse_double(row[p]);
        model.eigenfunctions.push_back(std::move(b));
    }
    return model;
}

}  // namespace msfem
