#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include <Eigen/Core>

#include "msfem/basis.hpp"
#include "msfem/cli.hpp"
#include "msfem/csv.hpp"
#include "msfem/errors.hpp"
#include "msfem/field.hpp"
#include "msfem/msfem.hpp"
#include "msfem/stochastic.hpp"

namespace msfem {

namespace {

struct Table {
    std::ostringstream text;
    CsvWriter csv{text};
};

std::string fmt(double v) { return format_double(v); }

void add_check(ExperimentOutput& out, std::string name, bool ok, std::string detail) {
    out.checks.push_back({std::move(name), ok, std::move(detail)});
}

KleModel field_model(const ExperimentConfig& c, const MeshHierarchy& mesh) {
    const int grid = c.kle_grid > 0 ? c.kle_grid : mesh.fine_nx();
    MSFEM_REQUIRE(mesh.fine_nx() == mesh.fine_ny(), "square fine grids only");
    const MeshHierarchy generation(1, 1, grid);
    return prolong_kle_model(build_kle_model(generation, c.sigma2, c.lx, c.ly, c.n), mesh);
}

std::vector<double> frozen_theta(const ExperimentConfig& c) {
    return sample_theta(c.seed, static_cast<std::uint64_t>(c.theta_index), c.n);
}

struct NamedSplitting {
    double param;
    Splitting split;
};

// One deterministic splitting per configured m (kle) or sc (lognormal).
std::vector<NamedSplitting> deterministic_splittings(const ExperimentConfig& c, const MeshHierarchy& mesh) {
    std::vector<NamedSplitting> out;
    if (c.field == "kle") {
        const KleModel model = field_model(c, mesh);
        const auto theta = frozen_theta(c);
        for (int m : c.m) out.push_back({static_cast<double>(m), split_kle(model, theta, m)});
    } else {
        const ScalarField y = standard_normal_field(mesh, c.seed);
        for (double sc : c.sc) out.push_back({sc, split_lognormal(mesh, y, sc)});
    }
    if (c.shift)
        for (auto& ns : out) ns.split = shift_splitting(mesh, ns.split, c.shift_margin);
    return out;
}

const char* param_name(const ExperimentConfig& c) { return c.field == "kle" ? "m" : "sc"; }

std::string param_label(const ExperimentConfig& c, double p) {
    if (c.field == "kle") return std::to_string(static_cast<int>(p));
    std::ostringstream s;
    s << p;
    return s.str();
}

std::string grid_csv(const MeshHierarchy& mesh, const GridFunction& g) {
    std::ostringstream s;
    write_grid_function_csv(s, mesh, g);
    return s.str();
}

std::string field_csv(const MeshHierarchy& mesh, const ScalarField& f) {
    std::ostringstream s;
    write_field_csv(s, mesh, f);
    return s.str();
}

double fitted_slope(const std::vector<double>& x, const std::vector<double>& y) {
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(x.size());
    my /= static_cast<double>(y.size());
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    return sxx > 0.0 ? sxy / sxx : std::numeric_limits<double>::quiet_NaN();
}

std::vector<double> ranks(const std::vector<double>& v) {
    std::vector<std::size_t> order(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t k = i;
        while (k + 1 < order.size() && v[order[k + 1]] == v[order[i]]) ++k;
        for (std::size_t q = i; q <= k; ++q) r[order[q]] = 0.5 * static_cast<double>(i + k);  // ties share the mean rank
        i = k + 1;
    }
    return r;
}

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
    const auto rx = ranks(x), ry = ranks(y);
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        mx += rx[i];
        my += ry[i];
    }
    mx /= static_cast<double>(rx.size());
    my /= static_cast<double>(ry.size());
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    return sxx > 0.0 && syy > 0.0 ? sxy / std::sqrt(sxx * syy) : 0.0;
}

// ---------------------------------------------------------------------------

ExperimentOutput basis_bound(const ExperimentConfig& c) {
    ExperimentOutput out;
    const MeshHierarchy mesh(c.coarse, c.coarse, c.refinement);
    const int jmax = *std::max_element(c.terms.begin(), c.terms.end());
    Table t;
    t.csv.header({param_name(c), "eta_k", "J", "error", "bound", "rate_bound"});
    for (const auto& ns : deterministic_splittings(c, mesh)) {
        const auto ops = assemble_local_operators(mesh, c.cell, ns.split);
        const auto phi = standard_basis(ops, c.vertex);
        const auto family = iterative_basis_family(ops, c.vertex, jmax);
        const double eta_k = cell_eta(ops);
        bool dominated = eta_k < 1.0;
        bool monotone = true;
        double prev = std::numeric_limits<double>::infinity();
        std::vector<int> sorted = c.terms;
        std::sort(sorted.begin(), sorted.end());
        std::map<int, double> errors;
        for (int j : c.terms) {
            const double err = basis_energy_distance(ops, phi, family[static_cast<std::size_t>(j)]);
            const auto b = basis_error_bound(ops, c.vertex, j);
            errors[j] = err;
            dominated = dominated && err <= b.xi_bound;
            t.csv.field(ns.param).field(eta_k).field(j).field(err).field(b.xi_bound)
                .field(b.rate_bound);
            t.csv.end_row();
        }
        for (int j : sorted) {
            monotone = monotone && errors[j] <= prev;
            prev = errors[j];
        }
        const std::string label = std::string(param_name(c)) + "=" + param_label(c, ns.param);
        add_check(out, "basis error below bound (" + label + ")", dominated,
                  "eta_K = " + fmt(eta_k) + (eta_k < 1.0 ? "" : " (>= 1, bound void)"));
        add_check(out, "basis error decreasing in J (" + label + ")", monotone, "");
        if (c.write_fields) {
            out.files.emplace_back("basis_" + param_label(c, ns.param) + "_standard.csv",
                                   [&] {
                                       std::ostringstream s;
                                       CsvWriter w(s);
                                       w.header({"node", "value"});
                                       for (std::size_t p = 0; p < phi.values.size(); ++p) {
                                           w.field(static_cast<long long>(p)).field(phi.values[p]);
                                           w.end_row();
                                       }
                                       return s.str();
                                   }());
        }
    }
    out.files.insert(out.files.begin(), {"basis_bound.csv", t.text.str()});
    return out;
}

ExperimentOutput basis_slope(const ExperimentConfig& c) {
    ExperimentOutput out;
    const MeshHierarchy mesh(c.coarse, c.coarse, c.refinement);
    const int jmax = *std::max_element(c.terms.begin(), c.terms.end());
    const auto splittings = deterministic_splittings(c, mesh);

    std::vector<double> etas;
    std::vector<std::vector<double>> errors(c.terms.size());
    std::vector<std::vector<double>> rates(c.terms.size());
    for (const auto& ns : splittings) {
        const auto ops = assemble_local_operators(mesh, c.cell, ns.split);
        const auto phi = standard_basis(ops, c.vertex);
        const auto family = iterative_basis_family(ops, c.vertex, jmax);
        etas.push_back(cell_eta(ops));
        for (std::size_t t = 0; t < c.terms.size(); ++t) {
            errors[t].push_back(basis_energy_distance(ops, phi, family[static_cast<std::size_t>(c.terms[t])]));
            rates[t].push_back(basis_error_bound(ops, c.vertex, c.terms[t]).rate_bound);
        }
    }
    Table rows;
    rows.csv.header({"J", "sc", "eta_k", "error", "rate_bound"});
    Table slopes;
    slopes.csv.header({"J", "slope", "lower", "upper", "pass"});
    for (std::size_t t = 0; t < c.terms.size(); ++t) {
        std::vector<double> lx, ly;
        for (std::size_t i = 0; i < splittings.size(); ++i) {
            rows.csv.field(c.terms[t]).field(splittings[i].param).field(etas[i]).field(errors[t][i]).field(rates[t][i]);
            rows.csv.end_row();
            if (etas[i] > 0.0 && errors[t][i] > 0.0) {
                lx.push_back(std::log(etas[i]));
                ly.push_back(std::log(errors[t][i]));
            }
        }
        const double slope = lx.size() >= 2 ? fitted_slope(lx, ly) : std::numeric_limits<double>::quiet_NaN();
        const double lo = c.terms[t] + 1.5;
        const double hi = c.terms[t] + 2.5;
        const bool ok = slope >= lo && slope <= hi;
        slopes.csv.field(c.terms[t]).field(slope).field(lo).field(hi).field(ok ? "true" : "false");
        slopes.csv.end_row();
        add_check(out, "log-log slope for J=" + std::to_string(c.terms[t]) + " in [J+1.5, J+2.5]", ok,
                  "slope = " + fmt(slope));
    }
    out.files.emplace_back("basis_slope.csv", rows.text.str());
    out.files.emplace_back("basis_slope_fit.csv", slopes.text.str());
    return out;
}

ExperimentOutput solution_bound(const ExperimentConfig& c) {
    ExperimentOutput out;
    const MeshHierarchy mesh(c.coarse, c.coarse, c.refinement);
    const ScalarField f = make_fine_field(mesh, c.source);
    Table t;
    t.csv.header({param_name(c), "eta", "c_tilde", "J", "energy_u", "energy_uh", "err_u_uh", "err_u_uJh", "err_uh_uJh",
                  "rel_uh_uJh", "bound", "bound_reference"});
    std::vector<std::pair<std::string, std::string>> fields;
    for (const auto& ns : deterministic_splittings(c, mesh)) {
        const auto family = solve_msfem_family(mesh, ns.split, f, c.terms, c.threads);
        const GridFunction u = fine_reference_solve(mesh, ns.split.k, f);
        const double ct = c_tilde(ns.split);
        const double eta = ns.split.eta_global;
        const std::string label = std::string(param_name(c)) + "=" + param_label(c, ns.param);
        bool dominated = eta < 1.0;
        std::map<int, double> rel;
        std::map<int, double> err;
        for (std::size_t j = 0; j < c.terms.size(); ++j) {
            const auto rep = error_report(mesh, u, family.standard, family.iterative[j], ns.split.k);
            SolutionBound b{std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
            if (eta < 1.0) b = solution_error_bound(c.terms[j], eta, ct, rep.energy_u, rep.err_u_uh);
            dominated = dominated && rep.err_uh_uJh <= b.standard_gap && rep.err_u_uJh <= b.reference_gap;
            rel[c.terms[j]] = rep.rel_uh_uJh;
            err[c.terms[j]] = rep.err_uh_uJh;
            t.csv.field(ns.param).field(eta).field(ct).field(c.terms[j]).field(rep.energy_u).field(rep.energy_uh)
                .field(rep.err_u_uh).field(rep.err_u_uJh).field(rep.err_uh_uJh).field(rep.rel_uh_uJh)
                .field(b.standard_gap).field(b.reference_gap);
            t.csv.end_row();
            if (c.write_fields)
                fields.emplace_back("solution_" + param_label(c, ns.param) + "_J" + std::to_string(c.terms[j]) + ".csv",
                                    grid_csv(mesh, family.iterative[j]));
        }
        add_check(out, "solution error below bound (" + label + ")", dominated,
                  "eta = " + fmt(eta) + (eta < 1.0 ? "" : " (>= 1, bound void)"));
        bool monotone = true;
        double prev = std::numeric_limits<double>::infinity();
        for (const auto& [j, e] : err) {
            monotone = monotone && e <= prev;
            prev = e;
        }
        add_check(out, "solution error decreasing in J (" + label + ")", monotone, "");
        if (rel.count(0) && rel.count(2))
            add_check(out, "relative error drops by >= 2 from J=0 to J=2 (" + label + ")", rel[0] >= 2.0 * rel[2],
                      fmt(rel[0]) + " -> " + fmt(rel[2]));
        if (c.write_fields) {
            fields.emplace_back("solution_" + param_label(c, ns.param) + "_standard.csv", grid_csv(mesh, family.standard));
            fields.emplace_back("solution_" + param_label(c, ns.param) + "_reference.csv", grid_csv(mesh, u));
            fields.emplace_back("coefficient_" + param_label(c, ns.param) + ".csv", field_csv(mesh, ns.split.k));
        }
    }
    out.files.emplace_back("solution_bound.csv", t.text.str());
    for (auto& f2 : fields) out.files.push_back(std::move(f2));
    return out;
}

ExperimentOutput mesh_sweep(const ExperimentConfig& c) {
    ExperimentOutput out;
    const int m = c.m.front();
    struct Row {
        MeshSpec spec;
        int fine;
        std::vector<double> err_u_uJh, err_uh_uJh;
    };
    std::vector<Row> rows;
    Table t;
    t.csv.header({"coarse", "refinement", "fine", "m", "J", "err_u_uh", "err_u_uJh", "err_uh_uJh", "rel_uh_uJh"});
    for (const auto& spec : c.meshes) {
        const MeshHierarchy mesh(spec.coarse, spec.coarse, spec.refinement);
        const KleModel model = field_model(c, mesh);
        const Splitting split = split_kle(model, frozen_theta(c), m);
        const ScalarField f = make_fine_field(mesh, c.source);
        const auto family = solve_msfem_family(mesh, split, f, c.terms, c.threads);
        const GridFunction u = fine_reference_solve(mesh, split.k, f);
        Row row{spec, mesh.fine_nx(), {}, {}};
        for (std::size_t j = 0; j < c.terms.size(); ++j) {
            const auto rep = error_report(mesh, u, family.standard, family.iterative[j], split.k);
            row.err_u_uJh.push_back(rep.err_u_uJh);
            row.err_uh_uJh.push_back(rep.err_uh_uJh);
            t.csv.field(spec.coarse).field(spec.refinement).field(mesh.fine_nx()).field(m).field(c.terms[j])
                .field(rep.err_u_uh).field(rep.err_u_uJh).field(rep.err_uh_uJh).field(rep.rel_uh_uJh);
            t.csv.end_row();
        }
        rows.push_back(std::move(row));
    }
    out.files.emplace_back("mesh_sweep.csv", t.text.str());

    auto spread_check = [&](const std::vector<const Row*>& group, const std::string& what) {
        for (std::size_t j = 0; j < c.terms.size(); ++j) {
            double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
            for (const auto* r : group) {
                lo = std::min(lo, r->err_uh_uJh[j]);
                hi = std::max(hi, r->err_uh_uJh[j]);
            }
            const double factor = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
            add_check(out, "|||u_h - u_Jh||| varies < 2x across " + what + " at J=" + std::to_string(c.terms[j]),
                      factor < 2.0, "max/min = " + fmt(factor));
        }
    };
    std::map<int, std::vector<const Row*>> by_coarse, by_fine;
    for (const auto& r : rows) {
        by_coarse[r.spec.coarse].push_back(&r);
        by_fine[r.fine].push_back(&r);
    }
    for (const auto& [coarse, group] : by_coarse)
        if (group.size() >= 2) spread_check(group, "local refinements of the " + std::to_string(coarse) + "^2 coarse mesh");
    for (auto& [fine, group] : by_fine) {
        if (group.size() < 2) continue;
        spread_check(group, "coarse meshes on the " + std::to_string(fine) + "^2 fine grid");
        auto sorted = group;
        std::sort(sorted.begin(), sorted.end(), [](const Row* a, const Row* b) { return a->spec.coarse < b->spec.coarse; });
        for (std::size_t j = 0; j < c.terms.size(); ++j) {
            bool decreasing = true;
            for (std::size_t i = 1; i < sorted.size(); ++i)
                decreasing = decreasing && sorted[i]->err_u_uJh[j] < sorted[i - 1]->err_u_uJh[j];
            add_check(out,
                      "|||u - u_Jh||| decreases under coarse refinement on the " + std::to_string(fine) +
                          "^2 fine grid at J=" + std::to_string(c.terms[j]),
                      decreasing, "");
        }
    }
    return out;
}

ExperimentOutput mc_stats(const ExperimentConfig& c) {
    ExperimentOutput out;
    const MeshHierarchy mesh(c.coarse, c.coarse, c.refinement);
    const KleModel model = field_model(c, mesh);
    const ScalarField f = make_fine_field(mesh, c.source);
    Table t;
    t.csv.header({"m", "energy_ratio", "J", "samples", "mean_err_uh_uJh", "var_err_uh_uJh", "mean_err_u_uJh",
                  "var_err_u_uJh", "mean_rel_uh_uJh", "eta_hat", "c_tilde", "mean_energy_u", "bound",
                  "mean_field_rel_l2", "var_field_rel_l2"});
    std::vector<std::pair<std::string, std::string>> fields;
    std::vector<double> ratios;
    std::vector<std::vector<double>> mean_errors(c.terms.size());
    for (int m : c.m) {
        MonteCarloConfig mc{m, c.terms, c.samples, c.seed, c.threads};
        const auto st = monte_carlo_run(model, f, mc);
        ratios.push_back(st.energy_ratio);
        for (std::size_t j = 0; j < c.terms.size(); ++j) mean_errors[j].push_back(st.mean_err_uh_uJh[j]);
        bool dominated = st.eta_hat < 1.0;
        bool close = true;
        double worst = 0.0;
        for (std::size_t j = 0; j < c.terms.size(); ++j) {
            const double mean_gap = relative_l2_difference(st.mean_uh, st.mean_uJh[j]);
            const double var_gap = relative_l2_difference(st.var_uh, st.var_uJh[j]);
            dominated = dominated && st.mean_err_uh_uJh[j] <= st.bound[j];
            close = close && mean_gap <= c.mean_field_tolerance;
            worst = std::max(worst, mean_gap);
            t.csv.field(m).field(st.energy_ratio).field(c.terms[j]).field(st.samples).field(st.mean_err_uh_uJh[j])
                .field(st.var_err_uh_uJh[j]).field(st.mean_err_u_uJh[j]).field(st.var_err_u_uJh[j])
                .field(st.mean_rel_uh_uJh[j]).field(st.eta_hat).field(st.c_tilde).field(st.mean_energy_u)
                .field(st.bound[j]).field(mean_gap).field(var_gap);
            t.csv.end_row();
            if (c.write_fields) {
                const std::string tag = "m" + std::to_string(m) + "_J" + std::to_string(c.terms[j]);
                fields.emplace_back("mean_uJh_" + tag + ".csv", grid_csv(mesh, st.mean_uJh[j]));
                fields.emplace_back("var_uJh_" + tag + ".csv", grid_csv(mesh, st.var_uJh[j]));
            }
        }
        if (c.write_fields) {
            fields.emplace_back("mean_uh_m" + std::to_string(m) + ".csv", grid_csv(mesh, st.mean_uh));
            fields.emplace_back("var_uh_m" + std::to_string(m) + ".csv", grid_csv(mesh, st.var_uh));
        }
        add_check(out, "expected energy error below bound (m=" + std::to_string(m) + ")", dominated,
                  "eta_hat = " + fmt(st.eta_hat) + (st.eta_hat < 1.0 ? "" : " (>= 1, bound void)"));
        add_check(out, "mean fields agree within tolerance (m=" + std::to_string(m) + ")", close,
                  "max relative L2 gap = " + fmt(worst));
    }
    if (c.m.size() >= 3) {
        for (std::size_t j = 0; j < c.terms.size(); ++j) {
            const double rho = spearman(ratios, mean_errors[j]);
            add_check(out, "mean error nonincreasing in E(m) (J=" + std::to_string(c.terms[j]) + ")", rho <= 0.0,
                      "rank correlation = " + fmt(rho));
        }
    }
    out.files.emplace_back("mc_stats.csv", t.text.str());
    for (auto& f2 : fields) out.files.push_back(std::move(f2));
    return out;
}

std::vector<std::vector<double>> collocation_thetas(const ExperimentConfig& c) {
    std::vector<std::vector<double>> thetas;
    for (int s = 0; s < c.samples; ++s) thetas.push_back(sample_theta(c.seed, static_cast<std::uint64_t>(s), c.n));
    return thetas;
}

ExperimentOutput colloc_table(const ExperimentConfig& c) {
    ExperimentOutput out;
    const MeshHierarchy mesh(c.coarse, c.coarse, c.refinement);
    const KleModel model = field_model(c, mesh);
    const ScalarField f = make_fine_field(mesh, c.source);
    const int m = c.m.front();
    const auto thetas = collocation_thetas(c);
    std::vector<int> levels = c.levels;
    std::sort(levels.begin(), levels.end());

    Table t;
    t.csv.header({"sample", "L", "J", "e", "e_spl", "e_col"});
    Table means;
    means.csv.header({"L", "J", "nodes", "mean_e", "mean_e_spl", "mean_e_col", "max_e"});
    std::map<int, std::vector<double>> mean_by_term;
    for (int level : levels) {
        const SparseGrid grid = build_sparse_grid(m, level);
        const GreenStore store = precompute_green_inverses(model, grid, m, c.max_store_bytes, c.threads);
        const auto res = collocation_run(model, store, grid, thetas, c.terms, f, c.threads);
        for (std::size_t j = 0; j < c.terms.size(); ++j) {
            double worst = 0.0;
            for (std::size_t s = 0; s < thetas.size(); ++s) {
                const auto& cs = res.samples[s][j];
                worst = std::max(worst, cs.e);
                t.csv.field(static_cast<long long>(s)).field(level).field(c.terms[j]).field(cs.e).field(cs.e_spl)
                    .field(cs.e_col);
                t.csv.end_row();
            }
            means.csv.field(level).field(c.terms[j]).field(static_cast<long long>(grid.size())).field(res.mean[j].e)
                .field(res.mean[j].e_spl).field(res.mean[j].e_col).field(worst);
            means.csv.end_row();
            mean_by_term[c.terms[j]].push_back(res.mean[j].e);
            add_check(out,
                      "per-sample relative error <= tolerance (L=" + std::to_string(level) +
                          ", J=" + std::to_string(c.terms[j]) + ")",
                      worst <= c.sample_error_tolerance, "max e = " + fmt(worst));
        }
    }
    for (const auto& [j, series] : mean_by_term) {
        bool nonincreasing = true;
        for (std::size_t i = 1; i < series.size(); ++i) nonincreasing = nonincreasing && series[i] <= series[i - 1];
        add_check(out, "mean error nonincreasing in L (J=" + std::to_string(j) + ")", nonincreasing, "");
    }
    out.files.emplace_back("colloc_table.csv", t.text.str());
    out.files.emplace_back("colloc_table_means.csv", means.text.str());
    return out;
}

ExperimentOutput colloc_decomp(const ExperimentConfig& c) {
    ExperimentOutput out;
    const MeshHierarchy mesh(c.coarse, c.coarse, c.refinement);
    const KleModel model = field_model(c, mesh);
    const ScalarField f = make_fine_field(mesh, c.source);
    const auto thetas = collocation_thetas(c);
    std::vector<int> levels = c.levels;
    std::sort(levels.begin(), levels.end());

    Table t;
    t.csv.header({"m", "J", "L", "energy_ratio", "samples", "e", "e_spl", "e_col", "var_e", "var_e_spl", "var_e_col"});
    for (int m : c.m) {
        std::map<int, std::map<int, CollocationSample>> means;  // J -> L -> mean
        bool triangle = true;
        for (int level : levels) {
            const SparseGrid grid = build_sparse_grid(m, level);
            const GreenStore store = precompute_green_inverses(model, grid, m, c.max_store_bytes, c.threads);
            const auto res = collocation_run(model, store, grid, thetas, c.terms, f, c.threads);
            for (const auto& row : res.samples)
                for (const auto& cs : row) triangle = triangle && cs.e <= cs.e_spl + cs.e_col + 1e-12;
            for (std::size_t j = 0; j < c.terms.size(); ++j) {
                t.csv.field(m).field(c.terms[j]).field(level).field(energy_ratio(model, m))
                    .field(static_cast<long long>(thetas.size())).field(res.mean[j].e).field(res.mean[j].e_spl)
                    .field(res.mean[j].e_col).field(res.variance[j].e).field(res.variance[j].e_spl)
                    .field(res.variance[j].e_col);
                t.csv.end_row();
                means[c.terms[j]][level] = res.mean[j];
            }
        }
        const std::string tag = "m=" + std::to_string(m);
        add_check(out, "e <= e_spl + e_col for every sample (" + tag + ")", triangle, "");
        for (const auto& [j, by_level] : means) {
            const auto& [lo_level, lo] = *by_level.begin();
            const auto& [hi_level, hi] = *by_level.rbegin();
            const std::string jt = tag + ", J=" + std::to_string(j);
            if (lo_level <= 1)
                add_check(out, "collocation error dominant at L=" + std::to_string(lo_level) + " (" + jt + ")",
                          lo.e_col >= lo.e_spl, "e_col = " + fmt(lo.e_col) + ", e_spl = " + fmt(lo.e_spl));
            if (hi_level >= 3)
                add_check(out, "splitting error dominant at L=" + std::to_string(hi_level) + " (" + jt + ")",
                          hi.e_spl >= hi.e_col, "e_spl = " + fmt(hi.e_spl) + ", e_col = " + fmt(hi.e_col));
        }
    }
    out.files.emplace_back("colloc_decomp.csv", t.text.str());
    return out;
}

ExperimentOutput cost_ratio_table(const ExperimentConfig& c) {
    ExperimentOutput out;
    Table t;
    t.csv.header({"n", "m", "q", "L", "ftc_denominator", "alpha_ftc", "sgc_reduced", "sgc_full", "alpha_sgc"});
    for (int m : c.m)
        for (int level : c.levels) {
            const auto r = cost_ratios(c.n, m, c.q, level);
            t.csv.field(c.n).field(m).field(c.q).field(level).field(std::to_string(r.ftc_denominator))
                .field(r.alpha_ftc).field(std::to_string(r.sgc_reduced)).field(std::to_string(r.sgc_full))
                .field(r.alpha_sgc);
            t.csv.end_row();
        }
    out.files.emplace_back("cost_ratios.csv", t.text.str());
    return out;
}

}  // namespace

ExperimentOutput run_experiment(const ExperimentConfig& config) {
    validate_config(config);
    const auto& e = config.experiment;
    if (e == "basis-bound") return basis_bound(config);
    if (e == "basis-slope") return basis_slope(config);
    if (e == "solution-bound") return solution_bound(config);
    if (e == "mesh-sweep") return mesh_sweep(config);
    if (e == "mc-stats") return mc_stats(config);
    if (e == "colloc-table") return colloc_table(config);
    if (e == "colloc-decomp") return colloc_decomp(config);
    return cost_ratio_table(config);
}

std::string manifest_text(const ExperimentConfig& c) {
    std::ostringstream s;
    auto ints = [](const std::vector<int>& v) {
        std::string out;
        for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + std::to_string(v[i]);
        return out;
    };
    auto reals = [](const std::vector<double>& v) {
        std::string out;
        for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + format_double(v[i]);
        return out;
    };
    std::string meshes;
    for (std::size_t i = 0; i < c.meshes.size(); ++i)
        meshes += (i ? ", " : "") + std::to_string(c.meshes[i].coarse) + "x" + std::to_string(c.meshes[i].refinement);
    s << "# msfem-split " << kVersion << ", Eigen " << EIGEN_WORLD_VERSION << '.' << EIGEN_MAJOR_VERSION << '.'
      << EIGEN_MINOR_VERSION << '\n';
    s << "# config source: " << c.source_name << '\n';
    s << "experiment = " << c.experiment << '\n';
    s << "coarse = " << c.coarse << '\n';
    s << "refinement = " << c.refinement << '\n';
    if (!meshes.empty()) s << "meshes = " << meshes << '\n';
    s << "field = " << c.field << '\n';
    s << "sigma2 = " << format_double(c.sigma2) << '\n';
    s << "lx = " << format_double(c.lx) << '\n';
    s << "ly = " << format_double(c.ly) << '\n';
    s << "n = " << c.n << '\n';
    s << "kle_grid = " << c.kle_grid << '\n';
    s << "m = " << ints(c.m) << '\n';
    s << "sc = " << reals(c.sc) << '\n';
    s << "shift = " << (c.shift ? "true" : "false") << '\n';
    s << "shift_margin = " << format_double(c.shift_margin) << '\n';
    s << "J = " << ints(c.terms) << '\n';
    s << "L = " << ints(c.levels) << '\n';
    s << "samples = " << c.samples << '\n';
    s << "seed = " << c.seed << '\n';
    s << "theta_index = " << c.theta_index << '\n';
    s << "cell = " << c.cell << '\n';
    s << "vertex = " << c.vertex << '\n';
    s << "source = " << format_double(c.source) << '\n';
    s << "q = " << c.q << '\n';
    s << "mean_field_tolerance = " << format_double(c.mean_field_tolerance) << '\n';
    s << "sample_error_tolerance = " << format_double(c.sample_error_tolerance) << '\n';
    s << "max_store_bytes = " << c.max_store_bytes << '\n';
    s << "write_fields = " << (c.write_fields ? "true" : "false") << '\n';
    s << "out = " << c.out_dir << '\n';
    s << "threads = " << c.threads << '\n';
    return s.str();
}

std::string summary_text(const ExperimentConfig& c, const ExperimentOutput& out) {
    std::ostringstream s;
    s << "experiment: " << c.experiment << '\n';
    s << "seed: " << c.seed << '\n';
    s << "files:";
    for (const auto& [name, body] : out.files) s << ' ' << name;
    s << '\n';
    std::size_t passed = 0;
    for (const auto& chk : out.checks) {
        passed += chk.passed ? 1 : 0;
        s << (chk.passed ? "PASS " : "FAIL ") << chk.name;
        if (!chk.detail.empty()) s << ": " << chk.detail;
        s << '\n';
    }
    s << passed << '/' << out.checks.size() << " checks passed\n";
    return s.str();
}

void write_outputs(const ExperimentConfig& c, const ExperimentOutput& out) {
    namespace fs = std::filesystem;
    const fs::path dir(c.out_dir);
    fs::create_directories(dir);
    auto write = [&](const std::string& name, const std::string& body) {
        std::ofstream f(dir / name, std::ios::binary);
        if (!f) throw std::runtime_error("cannot write " + (dir / name).string());
        f << body;
    };
    for (const auto& [name, body] : out.files) write(name, body);
    write("manifest.txt", manifest_text(c));
    write("summary.txt", summary_text(c, out));
}

}  // namespace msfem
