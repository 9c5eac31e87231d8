#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <string>

#include "msfem/errors.hpp"
#include "msfem/stochastic.hpp"

namespace msfem {

namespace {

// Number of 1D points at level l (0-based): 1, 3, 5, 9, ...
int points_at(int l) { return l == 0 ? 1 : (1 << l) + 1; }

// Points first introduced at level l.
std::uint64_t new_points_at(int l) { return l == 0 ? 1 : (l == 1 ? 2 : (std::uint64_t{1} << (l - 1))); }

double cc_coordinate(int finest_index, int finest) {
    if (2 * finest_index == finest) return 0.0;
    return std::sin(std::numbers::pi * (2.0 * finest_index - finest) / (2.0 * finest));
}

double binomial(int n, int k) {
    if (k < 0 || k > n) return 0.0;
    double out = 1.0;
    for (int i = 1; i <= k; ++i) out = out * (n - k + i) / i;
    return std::round(out);
}

void enumerate_levels(int dim, int lo, int hi, std::vector<int>& current, int sum,
                      std::vector<std::vector<int>>& out) {
    if (static_cast<int>(current.size()) == dim) {
        if (sum >= lo) out.push_back(current);
        return;
    }
    for (int l = 0; sum + l <= hi; ++l) {
        current.push_back(l);
        enumerate_levels(dim, lo, hi, current, sum + l, out);
        current.pop_back();
    }
}

}  // namespace

std::uint64_t smolyak_node_count(int dim, int level) {
    MSFEM_REQUIRE(dim >= 0 && level >= 0, "dimension and level must be nonnegative");
    using wide = unsigned __int128;
    const wide cap = std::numeric_limits<std::uint64_t>::max();
    // counts[s]: nodes whose per-dimension introduction levels sum to s
    std::vector<wide> counts(static_cast<std::size_t>(level) + 1, 0);
    counts[0] = 1;
    for (int d = 0; d < dim; ++d) {
        std::vector<wide> next(counts.size(), 0);
        for (int s = 0; s <= level; ++s) {
            if (counts[static_cast<std::size_t>(s)] == 0) continue;
            for (int l = 0; s + l <= level; ++l) {
                next[static_cast<std::size_t>(s + l)] += counts[static_cast<std::size_t>(s)] * new_points_at(l);
                if (next[static_cast<std::size_t>(s + l)] > cap)
                    throw ResourceError("Smolyak node count exceeds 64-bit range");
            }
        }
        counts = std::move(next);
    }
    wide total = 0;
    for (auto c : counts) total += c;
    if (total > cap) throw ResourceError("Smolyak node count exceeds 64-bit range");
    return static_cast<std::uint64_t>(total);
}

SparseGrid build_sparse_grid(int dim, int level, std::uint64_t max_nodes) {
    MSFEM_REQUIRE(dim >= 1, "sparse grid dimension must be >= 1");
    MSFEM_REQUIRE(level >= 0 && level <= 14, "sparse grid level must lie in [0, 14]");
    const std::uint64_t expected = smolyak_node_count(dim, level);
    if (expected > max_nodes)
        throw ResourceError("sparse grid with " + std::to_string(expected) + " nodes exceeds the limit of " +
                            std::to_string(max_nodes));

    const int top = std::max(level, 1);
    const int finest = 1 << top;

    SparseGrid grid;
    grid.dim_ = dim;
    grid.level_ = level;

    std::vector<std::vector<int>> multi;
    std::vector<int> scratch;
    enumerate_levels(dim, std::max(0, level - dim + 1), level, scratch, 0, multi);

    std::map<std::vector<std::uint16_t>, std::uint32_t> index;
    std::vector<std::vector<std::vector<std::uint16_t>>> term_keys(multi.size());
    for (std::size_t t = 0; t < multi.size(); ++t) {
        const auto& lv = multi[t];
        std::size_t tensor = 1;
        for (int l : lv) tensor *= static_cast<std::size_t>(points_at(l));
        std::vector<int> j(static_cast<std::size_t>(dim), 0);
        for (std::size_t p = 0; p < tensor; ++p) {
            std::vector<std::uint16_t> key(static_cast<std::size_t>(dim));
            for (int d = 0; d < dim; ++d) {
                const int l = lv[static_cast<std::size_t>(d)];
                key[static_cast<std::size_t>(d)] = static_cast<std::uint16_t>(
                    l == 0 ? finest / 2 : j[static_cast<std::size_t>(d)] << (top - l));
            }
            index.emplace(key, 0);
            term_keys[t].push_back(std::move(key));
            for (int d = 0; d < dim; ++d) {
                auto& jd = j[static_cast<std::size_t>(d)];
                if (++jd < points_at(lv[static_cast<std::size_t>(d)])) break;
                jd = 0;
            }
        }
    }

    std::uint32_t next = 0;
    grid.nodes_.reserve(index.size() * static_cast<std::size_t>(dim));
    for (auto& [key, id] : index) {
        id = next++;
        for (auto k : key) grid.nodes_.push_back(cc_coordinate(k, finest));
    }
    if (index.size() != expected) throw NumericalError("sparse grid construction produced an unexpected node count");

    grid.terms_.reserve(multi.size());
    for (std::size_t t = 0; t < multi.size(); ++t) {
        int sum = 0;
        for (int l : multi[t]) sum += l;
        const int gap = level - sum;
        SparseGrid::Term term;
        term.levels = multi[t];
        term.coefficient = (gap % 2 == 0 ? 1.0 : -1.0) * binomial(dim - 1, gap);
        term.node_ids.reserve(term_keys[t].size());
        for (const auto& key : term_keys[t]) term.node_ids.push_back(index.at(key));
        grid.terms_.push_back(std::move(term));
    }
    return grid;
}

std::vector<double> SparseGrid::weights(std::span<const double> x) const {
    MSFEM_REQUIRE(static_cast<int>(x.size()) == dim_, "point dimension does not match the grid");
    const int top = std::max(level_, 1);
    const int finest = 1 << top;

    // 1D Lagrange values per (dimension, level) are shared across terms.
    std::vector<std::vector<std::vector<double>>> basis(static_cast<std::size_t>(dim_));
    for (int d = 0; d < dim_; ++d) {
        auto& per_level = basis[static_cast<std::size_t>(d)];
        per_level.resize(static_cast<std::size_t>(level_) + 1);
        const double xd = x[static_cast<std::size_t>(d)];
        for (int l = 0; l <= level_; ++l) {
            const int n = points_at(l);
            std::vector<double> pts(static_cast<std::size_t>(n));
            for (int j = 0; j < n; ++j)
                pts[static_cast<std::size_t>(j)] = l == 0 ? 0.0 : cc_coordinate(j << (top - l), finest);
            auto& vals = per_level[static_cast<std::size_t>(l)];
            vals.assign(static_cast<std::size_t>(n), 1.0);
            for (int j = 0; j < n; ++j)
                for (int i = 0; i < n; ++i)
                    if (i != j)
                        vals[static_cast<std::size_t>(j)] *= (xd - pts[static_cast<std::size_t>(i)]) /
                                                             (pts[static_cast<std::size_t>(j)] - pts[static_cast<std::size_t>(i)]);
        }
    }

    std::vector<double> w(size(), 0.0);
    std::vector<int> j(static_cast<std::size_t>(dim_));
    for (const auto& term : terms_) {
        std::fill(j.begin(), j.end(), 0);
        for (auto id : term.node_ids) {
            double prod = term.coefficient;
            for (int d = 0; d < dim_; ++d)
                prod *= basis[static_cast<std::size_t>(d)][static_cast<std::size_t>(term.levels[static_cast<std::size_t>(d)])]
                             [static_cast<std::size_t>(j[static_cast<std::size_t>(d)])];
            w[id] += prod;
            for (int d = 0; d < dim_; ++d) {
                auto& jd = j[static_cast<std::size_t>(d)];
                if (++jd < points_at(term.levels[static_cast<std::size_t>(d)])) break;
                jd = 0;
            }
        }
    }
    return w;
}

}  // namespace msfem
