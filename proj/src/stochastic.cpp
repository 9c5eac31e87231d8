#include "msfem/stochastic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "msfem/errors.hpp"
#include "msfem/parallel.hpp"

namespace msfem {

namespace {

template <class Body>
void for_each_sample(std::size_t count, int threads, Body&& body) {
    parallel_for(count, threads, [&](std::size_t s) {
        try {
            body(s);
        } catch (const std::exception& e) {
            throw NumericalError("sample " + std::to_string(s) + ": " + e.what());
        }
    });
}

void add_scaled(std::vector<double>& acc, std::span<const double> x, double w) {
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += w * x[i];
}

double mean_of(const std::vector<double>& xs) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
}

double variance_of(const std::vector<double>& xs) {
    if (xs.size() < 2) return 0.0;
    const double mu = mean_of(xs);
    double s = 0.0;
    for (double x : xs) s += (x - mu) * (x - mu);
    return s / static_cast<double>(xs.size() - 1);
}

void field_moments(const std::vector<const GridFunction*>& fields, GridFunction& mean, GridFunction& var) {
    const auto& first = *fields.front();
    mean = GridFunction(first.nx, first.ny);
    var = GridFunction(first.nx, first.ny);
    const double n = static_cast<double>(fields.size());
    for (const auto* f : fields)
        for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += (*f)[i];
    for (std::size_t i = 0; i < mean.size(); ++i) mean[i] /= n;
    if (fields.size() < 2) return;
    for (const auto* f : fields)
        for (std::size_t i = 0; i < var.size(); ++i) var[i] += ((*f)[i] - mean[i]) * ((*f)[i] - mean[i]);
    for (std::size_t i = 0; i < var.size(); ++i) var[i] /= n - 1.0;
}

int max_of(const std::vector<int>& terms) {
    int out = 0;
    for (int j : terms) {
        MSFEM_REQUIRE(j >= 0, "J must be >= 0");
        out = std::max(out, j);
    }
    return out;
}

}  // namespace

std::vector<double> sample_theta(std::uint64_t master_seed, std::uint64_t index, int n) {
    MSFEM_REQUIRE(n >= 1, "parameter dimension must be >= 1");
    std::seed_seq seq{static_cast<std::uint32_t>(master_seed), static_cast<std::uint32_t>(master_seed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
    std::mt19937_64 gen(seq);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    std::vector<double> theta(static_cast<std::size_t>(n));
    for (auto& t : theta) t = dist(gen);
    return theta;
}

Eigen::MatrixXd GreenStore::matrix(std::size_t node, int cell) const {
    const auto p = entry(node, cell);
    Eigen::MatrixXd out(interior, interior);
    std::size_t k = 0;
    for (int i = 0; i < interior; ++i)
        for (int j = i; j < interior; ++j) {
            out(i, j) = p[k];
            out(j, i) = p[k];
            ++k;
        }
    return out;
}

Eigen::MatrixXd GreenStore::interpolate(std::span<const double> weights, int cell) const {
    MSFEM_REQUIRE(weights.size() == nodes, "weight count does not match the store");
    MSFEM_REQUIRE(cell >= 0 && cell < cells, "cell out of range");
    std::vector<double> acc(packed_size(), 0.0);
    for (std::size_t node = 0; node < nodes; ++node)
        if (weights[node] != 0.0) add_scaled(acc, entry(node, cell), weights[node]);
    Eigen::MatrixXd out(interior, interior);
    std::size_t k = 0;
    for (int i = 0; i < interior; ++i)
        for (int j = i; j < interior; ++j) {
            out(i, j) = acc[k];
            out(j, i) = acc[k];
            ++k;
        }
    return out;
}

std::vector<double> kernel_parameters(const KleModel& model, std::span<const double> theta0) {
    MSFEM_REQUIRE(static_cast<int>(theta0.size()) <= model.n(), "more kernel parameters than KLE terms");
    std::vector<double> theta(static_cast<std::size_t>(model.n()), 0.0);
    std::copy(theta0.begin(), theta0.end(), theta.begin());
    return theta;
}

GreenStore precompute_green_inverses(const KleModel& model, const SparseGrid& grid, int m, std::size_t max_bytes,
                                     int threads) {
    MSFEM_REQUIRE(grid.dim() == m, "sparse grid dimension must equal m");
    MSFEM_REQUIRE(m >= 1 && m <= model.n(), "m must lie in [1, n]");
    const auto& mesh = model.mesh;
    const int r = mesh.refinement();

    GreenStore store;
    store.m = m;
    store.cells = mesh.coarse_cells();
    store.interior = (r - 1) * (r - 1);
    store.nodes = grid.size();
    const double bytes = static_cast<double>(store.nodes) * store.cells * static_cast<double>(store.packed_size()) *
                         sizeof(double);
    if (bytes > static_cast<double>(max_bytes))
        throw ResourceError("Green's store needs " + std::to_string(static_cast<unsigned long long>(bytes)) +
                            " bytes, above the limit of " + std::to_string(max_bytes) +
                            "; lower the refinement r or the level L");
    store.packed.assign(store.nodes * static_cast<std::size_t>(store.cells) * store.packed_size(), 0.0);

    parallel_for(store.nodes, threads, [&](std::size_t node) {
        const auto theta = kernel_parameters(model, grid.node(node));
        ScalarField k0 = log_field(model, theta, m);
        for (auto& v : k0.values) v = std::exp(v);
        const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(store.interior, store.interior);
        for (int cell = 0; cell < store.cells; ++cell) {
            const Eigen::MatrixXd m0 =
                assemble_interior_stiffness(r, mesh.hx(), mesh.hy(), restrict_to_cell(mesh, k0, cell));
            const Eigen::MatrixXd inv = factor_spd(m0).solve(identity);
            double* out = store.packed.data() + (node * static_cast<std::size_t>(store.cells) +
                                                  static_cast<std::size_t>(cell)) * store.packed_size();
            for (int i = 0; i < store.interior; ++i)
                for (int j = i; j < store.interior; ++j) *out++ = 0.5 * (inv(i, j) + inv(j, i));
        }
    });
    return store;
}

std::vector<BasisFunction> interpolated_basis_family(const LocalOperators& ops, const Eigen::MatrixXd& green,
                                                     int vertex, int terms, int level) {
    MSFEM_REQUIRE(green.rows() == ops.interior_count() && green.cols() == ops.interior_count(),
                  "Green's matrix size does not match the cell");
    return iterative_basis_family(ops, vertex, terms, matrix_green(green), {BasisKind::collocated, 0, level});
}

BasisFunction interpolated_basis(const GreenStore& store, const SparseGrid& grid, const KleModel& model,
                                 std::span<const double> theta, int cell, int vertex, int terms) {
    MSFEM_REQUIRE(static_cast<int>(theta.size()) == model.n(), "theta length must equal the truncation length");
    MSFEM_REQUIRE(grid.dim() == store.m && grid.size() == store.nodes, "grid does not match the store");
    const Splitting split = split_kle(model, theta, store.m);
    const auto ops = assemble_local_operators(model.mesh, cell, split, Factorize::none);
    const auto w = grid.weights(theta.first(static_cast<std::size_t>(store.m)));
    const Eigen::MatrixXd green = store.interpolate(w, cell);
    return interpolated_basis_family(ops, green, vertex, terms, grid.level()).back();
}

double relative_l2_difference(const GridFunction& a, const GridFunction& b) {
    MSFEM_REQUIRE(a.size() == b.size(), "grid functions differ in size");
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num += (a[i] - b[i]) * (a[i] - b[i]);
        den += a[i] * a[i];
    }
    return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

SampleStatistics monte_carlo_run(const KleModel& model, const ScalarField& f, const MonteCarloConfig& config) {
    MSFEM_REQUIRE(config.samples >= 1, "sample count must be >= 1");
    MSFEM_REQUIRE(config.m >= 0 && config.m <= model.n(), "m must lie in [0, n]");
    MSFEM_REQUIRE(!config.terms.empty(), "at least one J is required");
    max_of(config.terms);
    const auto& mesh = model.mesh;
    const std::size_t nt = config.terms.size();

    struct PerSample {
        MsfemFamily family;
        double energy_u = 0.0, energy_uh = 0.0, err_u_uh = 0.0;
        std::vector<double> err_uh_uJh, err_u_uJh;
        double eta = 0.0, c_tilde = 0.0;
    };
    std::vector<PerSample> runs(static_cast<std::size_t>(config.samples));

    for_each_sample(runs.size(), config.threads, [&](std::size_t s) {
        const auto theta = sample_theta(config.seed, s, model.n());
        const Splitting split = split_kle(model, theta, config.m);
        auto& run = runs[s];
        run.family = solve_msfem_family(mesh, split, f, config.terms, 1);
        const GridFunction u = fine_reference_solve(mesh, split.k, f);
        run.energy_u = energy_norm(mesh, split.k, u);
        run.energy_uh = energy_norm(mesh, split.k, run.family.standard);
        run.err_u_uh = energy_norm(mesh, split.k, difference(u, run.family.standard));
        for (std::size_t t = 0; t < nt; ++t) {
            run.err_uh_uJh.push_back(energy_norm(mesh, split.k, difference(run.family.standard, run.family.iterative[t])));
            run.err_u_uJh.push_back(energy_norm(mesh, split.k, difference(u, run.family.iterative[t])));
        }
        run.eta = split.eta_global;
        run.c_tilde = c_tilde(split);
    });

    SampleStatistics st;
    st.samples = config.samples;
    st.m = config.m;
    st.terms = config.terms;
    st.energy_ratio = energy_ratio(model, config.m);

    std::vector<const GridFunction*> fields;
    for (const auto& run : runs) fields.push_back(&run.family.standard);
    field_moments(fields, st.mean_uh, st.var_uh);
    st.mean_uJh.resize(nt);
    st.var_uJh.resize(nt);
    for (std::size_t t = 0; t < nt; ++t) {
        fields.clear();
        for (const auto& run : runs) fields.push_back(&run.family.iterative[t]);
        field_moments(fields, st.mean_uJh[t], st.var_uJh[t]);
    }

    std::vector<double> xs;
    auto collect = [&](auto get) -> const std::vector<double>& {
        xs.clear();
        for (const auto& run : runs) xs.push_back(get(run));
        return xs;
    };
    st.mean_energy_u = mean_of(collect([](const PerSample& r) { return r.energy_u; }));
    st.mean_energy_uh = mean_of(collect([](const PerSample& r) { return r.energy_uh; }));
    st.mean_err_u_uh = mean_of(collect([](const PerSample& r) { return r.err_u_uh; }));
    for (std::size_t t = 0; t < nt; ++t) {
        collect([t](const PerSample& r) { return r.err_uh_uJh[t]; });
        st.mean_err_uh_uJh.push_back(mean_of(xs));
        st.var_err_uh_uJh.push_back(variance_of(xs));
        collect([t](const PerSample& r) { return r.err_u_uJh[t]; });
        st.mean_err_u_uJh.push_back(mean_of(xs));
        st.var_err_u_uJh.push_back(variance_of(xs));
        st.mean_rel_uh_uJh.push_back(
            mean_of(collect([t](const PerSample& r) { return r.energy_uh > 0.0 ? r.err_uh_uJh[t] / r.energy_uh : 0.0; })));
    }
    for (const auto& run : runs) {
        st.eta_hat = std::max(st.eta_hat, run.eta);
        st.c_tilde = std::max(st.c_tilde, run.c_tilde);
    }
    for (std::size_t t = 0; t < nt; ++t)
        st.bound.push_back(st.eta_hat < 1.0
                               ? solution_error_bound(config.terms[t], st.eta_hat, st.c_tilde, st.mean_energy_u).standard_gap
                               : std::numeric_limits<double>::quiet_NaN());
    return st;
}

CollocationResult collocation_run(const KleModel& model, const GreenStore& store, const SparseGrid& grid,
                                  const std::vector<std::vector<double>>& thetas, const std::vector<int>& terms,
                                  const ScalarField& f, int threads) {
    MSFEM_REQUIRE(!thetas.empty(), "at least one sample is required");
    MSFEM_REQUIRE(!terms.empty(), "at least one J is required");
    MSFEM_REQUIRE(grid.dim() == store.m && grid.size() == store.nodes, "grid does not match the store");
    const int jmax = max_of(terms);
    const auto& mesh = model.mesh;
    const std::size_t nt = terms.size();
    const std::size_t slots = static_cast<std::size_t>(mesh.coarse_cells()) * 4;

    CollocationResult result;
    result.m = store.m;
    result.level = grid.level();
    result.terms = terms;
    result.samples.resize(thetas.size());

    for_each_sample(thetas.size(), threads, [&](std::size_t s) {
        const auto& theta = thetas[s];
        MSFEM_REQUIRE(static_cast<int>(theta.size()) == model.n(), "theta length must equal the truncation length");
        const Splitting split = split_kle(model, theta, store.m);
        const auto w = grid.weights(std::span<const double>(theta).first(static_cast<std::size_t>(store.m)));

        BasisRegistry standard;
        standard.functions.resize(slots);
        std::vector<BasisRegistry> exact(nt), colloc(nt);
        for (std::size_t t = 0; t < nt; ++t) {
            exact[t].functions.resize(slots);
            colloc[t].functions.resize(slots);
        }
        for (int cell = 0; cell < mesh.coarse_cells(); ++cell) {
            const auto ops = assemble_local_operators(mesh, cell, split, Factorize::both);
            const Eigen::MatrixXd green = store.interpolate(w, cell);
            for (int i = 0; i < 4; ++i) {
                const std::size_t slot = static_cast<std::size_t>(cell) * 4 + static_cast<std::size_t>(i);
                standard.functions[slot] = standard_basis(ops, i);
                auto fam = iterative_basis_family(ops, i, jmax);
                auto col = interpolated_basis_family(ops, green, i, jmax, grid.level());
                for (std::size_t t = 0; t < nt; ++t) {
                    exact[t].functions[slot] = fam[static_cast<std::size_t>(terms[t])];
                    colloc[t].functions[slot] = col[static_cast<std::size_t>(terms[t])];
                }
            }
        }
        const GridFunction uh = solve_msfem(mesh, assemble_coarse_system(mesh, std::move(standard), split.k, f));
        const double denom = energy_norm(mesh, split.k, uh);
        const double scale = denom > 0.0 ? 1.0 / denom : 1.0;
        auto& out = result.samples[s];
        for (std::size_t t = 0; t < nt; ++t) {
            const GridFunction uj = solve_msfem(mesh, assemble_coarse_system(mesh, std::move(exact[t]), split.k, f));
            const GridFunction uc = solve_msfem(mesh, assemble_coarse_system(mesh, std::move(colloc[t]), split.k, f));
            CollocationSample cs;
            cs.e = energy_norm(mesh, split.k, difference(uh, uc)) * scale;
            cs.e_spl = energy_norm(mesh, split.k, difference(uh, uj)) * scale;
            cs.e_col = energy_norm(mesh, split.k, difference(uj, uc)) * scale;
            out.push_back(cs);
        }
    });

    for (std::size_t t = 0; t < nt; ++t) {
        std::vector<double> e, spl, col;
        for (const auto& row : result.samples) {
            e.push_back(row[t].e);
            spl.push_back(row[t].e_spl);
            col.push_back(row[t].e_col);
        }
        result.mean.push_back({mean_of(e), mean_of(spl), mean_of(col)});
        result.variance.push_back({variance_of(e), variance_of(spl), variance_of(col)});
    }
    return result;
}

CostRatios cost_ratios(int n, int m, int q, int level) {
    MSFEM_REQUIRE(m >= 0 && m <= n, "m must lie in [0, n]");
    MSFEM_REQUIRE(q >= 0 && level >= 0, "degree and level must be nonnegative");
    CostRatios out;
    const auto base = static_cast<std::uint64_t>(q) + 1;
    for (int i = 0; i < n - m; ++i) {
        if (out.ftc_denominator > std::numeric_limits<std::uint64_t>::max() / base)
            throw ResourceError("(q+1)^(n-m) exceeds 64-bit range");
        out.ftc_denominator *= base;
    }
    out.sgc_reduced = smolyak_node_count(m, level);
    out.sgc_full = smolyak_node_count(n, level);
    out.alpha_ftc = 1.0 / static_cast<double>(out.ftc_denominator);
    out.alpha_sgc = static_cast<double>(out.sgc_reduced) / static_cast<double>(out.sgc_full);
    return out;
}

}  // namespace msfem
