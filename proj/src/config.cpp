#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include "msfem/cli.hpp"
#include "msfem/csv.hpp"

namespace msfem {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream ss(v);
    while (std::getline(ss, item, ',')) out.push_back(trim(item));
    return out;
}

template <class T>
bool parse_integer(const std::string& s, T& out) {
    const auto* end = s.data() + s.size();
    auto [p, ec] = std::from_chars(s.data(), end, out);
    return ec == std::errc{} && p == end;
}

bool parse_real(const std::string& s, double& out) {
    if (s.empty()) return false;
    try {
        out = parse_double(s);
    } catch (const std::exception&) {
        return false;
    }
    return std::isfinite(out);
}

struct Parser {
    ExperimentConfig& cfg;
    int line;

    [[noreturn]] void fail(const std::string& msg) const { throw ConfigError(cfg.source_name, line, msg); }

    int integer(const std::string& v) const {
        int out = 0;
        if (!parse_integer(v, out)) fail("expected an integer, got '" + v + "'");
        return out;
    }
    double real(const std::string& v) const {
        double out = 0.0;
        if (!parse_real(v, out)) fail("expected a number, got '" + v + "'");
        return out;
    }
    bool boolean(const std::string& v) const {
        if (v == "true" || v == "yes" || v == "1") return true;
        if (v == "false" || v == "no" || v == "0") return false;
        fail("expected true or false, got '" + v + "'");
    }
    std::vector<int> int_list(const std::string& v) const {
        std::vector<int> out;
        for (const auto& item : split_list(v)) {
            const auto dots = item.find("..");
            if (dots != std::string::npos) {
                const int a = integer(trim(item.substr(0, dots)));
                const int b = integer(trim(item.substr(dots + 2)));
                if (b < a) fail("empty range '" + item + "'");
                for (int i = a; i <= b; ++i) out.push_back(i);
            } else {
                out.push_back(integer(item));
            }
        }
        if (out.empty()) fail("empty list");
        return out;
    }
    std::vector<double> real_list(const std::string& v) const {
        std::vector<double> out;
        for (const auto& item : split_list(v)) out.push_back(real(item));
        if (out.empty()) fail("empty list");
        return out;
    }
    std::vector<MeshSpec> mesh_list(const std::string& v) const {
        std::vector<MeshSpec> out;
        for (const auto& item : split_list(v)) {
            const auto x = item.find('x');
            if (x == std::string::npos) fail("mesh entries look like <coarse>x<refinement>, got '" + item + "'");
            out.push_back({integer(trim(item.substr(0, x))), integer(trim(item.substr(x + 1)))});
        }
        if (out.empty()) fail("empty list");
        return out;
    }
};

using Setter = std::function<void(const Parser&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = {
        {"experiment", [](const Parser& p, const std::string& v) { p.cfg.experiment = v; }},
        {"coarse", [](const Parser& p, const std::string& v) { p.cfg.coarse = p.integer(v); }},
        {"refinement", [](const Parser& p, const std::string& v) { p.cfg.refinement = p.integer(v); }},
        {"meshes", [](const Parser& p, const std::string& v) { p.cfg.meshes = p.mesh_list(v); }},
        {"field", [](const Parser& p, const std::string& v) { p.cfg.field = v; }},
        {"sigma2", [](const Parser& p, const std::string& v) { p.cfg.sigma2 = p.real(v); }},
        {"lx", [](const Parser& p, const std::string& v) { p.cfg.lx = p.real(v); }},
        {"ly", [](const Parser& p, const std::string& v) { p.cfg.ly = p.real(v); }},
        {"n", [](const Parser& p, const std::string& v) { p.cfg.n = p.integer(v); }},
        {"kle_grid", [](const Parser& p, const std::string& v) { p.cfg.kle_grid = p.integer(v); }},
        {"m", [](const Parser& p, const std::string& v) { p.cfg.m = p.int_list(v); }},
        {"sc", [](const Parser& p, const std::string& v) { p.cfg.sc = p.real_list(v); }},
        {"shift", [](const Parser& p, const std::string& v) { p.cfg.shift = p.boolean(v); }},
        {"shift_margin", [](const Parser& p, const std::string& v) { p.cfg.shift_margin = p.real(v); }},
        {"J", [](const Parser& p, const std::string& v) { p.cfg.terms = p.int_list(v); }},
        {"L", [](const Parser& p, const std::string& v) { p.cfg.levels = p.int_list(v); }},
        {"samples", [](const Parser& p, const std::string& v) { p.cfg.samples = p.integer(v); }},
        {"seed",
         [](const Parser& p, const std::string& v) {
             if (!parse_integer(v, p.cfg.seed)) p.fail("expected an unsigned 64-bit integer, got '" + v + "'");
         }},
        {"theta_index", [](const Parser& p, const std::string& v) { p.cfg.theta_index = p.integer(v); }},
        {"cell", [](const Parser& p, const std::string& v) { p.cfg.cell = p.integer(v); }},
        {"vertex", [](const Parser& p, const std::string& v) { p.cfg.vertex = p.integer(v); }},
        {"source", [](const Parser& p, const std::string& v) { p.cfg.source = p.real(v); }},
        {"q", [](const Parser& p, const std::string& v) { p.cfg.q = p.integer(v); }},
        {"mean_field_tolerance", [](const Parser& p, const std::string& v) { p.cfg.mean_field_tolerance = p.real(v); }},
        {"sample_error_tolerance",
         [](const Parser& p, const std::string& v) { p.cfg.sample_error_tolerance = p.real(v); }},
        {"max_store_bytes",
         [](const Parser& p, const std::string& v) {
             if (!parse_integer(v, p.cfg.max_store_bytes)) p.fail("expected a byte count, got '" + v + "'");
         }},
        {"write_fields", [](const Parser& p, const std::string& v) { p.cfg.write_fields = p.boolean(v); }},
        {"out", [](const Parser& p, const std::string& v) { p.cfg.out_dir = v; }},
        {"threads", [](const Parser& p, const std::string& v) { p.cfg.threads = p.integer(v); }},
    };
    return table;
}

}  // namespace

ConfigError::ConfigError(std::string source, int line, const std::string& message)
    : std::runtime_error(line > 0 ? source + ":" + std::to_string(line) + ": " + message : source + ": " + message),
      line_(line) {}

const std::vector<std::string>& experiment_names() {
    static const std::vector<std::string> names = {"basis-bound", "basis-slope",  "solution-bound", "mesh-sweep",
                                                   "mc-stats",    "colloc-table", "colloc-decomp",  "cost-ratios"};
    return names;
}

ExperimentConfig parse_config(std::istream& in, const std::string& source_name) {
    ExperimentConfig cfg;
    cfg.source_name = source_name;
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        const auto hash = raw.find('#');
        const std::string text = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (text.empty()) continue;
        const auto eq = text.find('=');
        if (eq == std::string::npos) throw ConfigError(source_name, line, "expected 'key = value'");
        const std::string key = trim(text.substr(0, eq));
        const std::string value = trim(text.substr(eq + 1));
        if (key.empty()) throw ConfigError(source_name, line, "missing key");
        if (value.empty()) throw ConfigError(source_name, line, "missing value for '" + key + "'");
        const auto it = setters().find(key);
        if (it == setters().end()) throw ConfigError(source_name, line, "unknown key '" + key + "'");
        if (cfg.lines.count(key))
            throw ConfigError(source_name, line,
                              "duplicate key '" + key + "' (first set on line " + std::to_string(cfg.lines[key]) + ")");
        cfg.lines[key] = line;
        it->second(Parser{cfg, line}, value);
    }
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path, 0, "cannot open config file");
    return parse_config(in, path);
}

void validate_config(const ExperimentConfig& c) {
    auto line_of = [&](const std::string& key) {
        const auto it = c.lines.find(key);
        return it == c.lines.end() ? 0 : it->second;
    };
    auto require = [&](bool ok, const std::string& key, const std::string& msg) {
        if (!ok) throw ConfigError(c.source_name, line_of(key), key + ": " + msg);
    };
    const auto& names = experiment_names();
    require(!c.experiment.empty(), "experiment", "missing experiment name");
    require(std::find(names.begin(), names.end(), c.experiment) != names.end(), "experiment",
            "unknown experiment '" + c.experiment + "'");

    const bool uses_mesh = c.experiment != "cost-ratios";
    const bool uses_kle = c.experiment != "cost-ratios" && (c.field == "kle" || c.experiment == "mc-stats" ||
                                                            c.experiment == "colloc-table" ||
                                                            c.experiment == "colloc-decomp" || c.experiment == "mesh-sweep");
    require(c.field == "kle" || c.field == "lognormal", "field", "must be 'kle' or 'lognormal'");
    if (c.experiment == "basis-slope") require(c.field == "lognormal", "field", "basis-slope sweeps the log-normal strength sc");
    if (c.experiment == "mc-stats" || c.experiment == "colloc-table" || c.experiment == "colloc-decomp" ||
        c.experiment == "mesh-sweep")
        require(c.field == "kle", "field", c.experiment + " requires the kle field");

    require(c.threads >= 1, "threads", "must be >= 1");
    require(c.n >= 1, "n", "must be >= 1");
    require(c.q >= 0, "q", "must be >= 0");
    for (int m : c.m) require(m >= 0 && m <= c.n, "m", "every m must lie in [0, n]");
    for (int j : c.terms) require(j >= 0 && j <= 200, "J", "every J must lie in [0, 200]");
    for (int l : c.levels) require(l >= 0 && l <= 6, "L", "every level must lie in [0, 6]");
    require(c.samples >= 1, "samples", "must be >= 1");
    require(c.theta_index >= 0, "theta_index", "must be >= 0");
    require(c.shift_margin > 0.0, "shift_margin", "must be > 0");
    require(c.mean_field_tolerance > 0.0, "mean_field_tolerance", "must be > 0");
    require(c.sample_error_tolerance > 0.0, "sample_error_tolerance", "must be > 0");
    require(!c.out_dir.empty(), "out", "must not be empty");

    if (uses_mesh) {
        std::vector<MeshSpec> meshes = c.experiment == "mesh-sweep" ? c.meshes : std::vector<MeshSpec>{{c.coarse, c.refinement}};
        if (c.experiment == "mesh-sweep") require(!meshes.empty(), "meshes", "mesh-sweep needs a list like 4x30, 12x10");
        const std::string key = c.experiment == "mesh-sweep" ? "meshes" : "refinement";
        for (const auto& ms : meshes) {
            require(ms.coarse >= 1, c.experiment == "mesh-sweep" ? "meshes" : "coarse", "coarse count must be >= 1");
            require(ms.refinement >= 2, key, "refinement must be >= 2");
            const long long fine = static_cast<long long>(ms.coarse) * ms.refinement;
            require(fine <= 1024, key, "fine grid above 1024 cells per axis");
            if (uses_kle) {
                require(c.n <= fine * fine, "n", "exceeds the fine cell count");
                if (c.kle_grid > 0)
                    require(c.kle_grid >= 2 && fine % c.kle_grid == 0, "kle_grid",
                            "must be >= 2 and divide every fine grid size");
            }
        }
        require(c.cell >= 0 && c.cell < c.coarse * c.coarse, "cell", "out of range");
        require(c.vertex >= 0 && c.vertex < 4, "vertex", "must be in 0..3");
    }
    if (uses_kle) {
        require(c.sigma2 > 0.0, "sigma2", "must be > 0");
        require(c.lx > 0.0, "lx", "must be > 0");
        require(c.ly > 0.0, "ly", "must be > 0");
    }
    if (c.field == "lognormal" && uses_mesh && c.experiment != "mc-stats")
        for (double s : c.sc) require(s > 0.0 && s <= 1.0, "sc", "every sc must lie in (0, 1]");
    if (c.experiment == "basis-slope") require(c.sc.size() >= 2, "sc", "needs at least two strengths for a slope");
    if (c.experiment == "colloc-table" || c.experiment == "colloc-decomp" || c.experiment == "mc-stats")
        for (int m : c.m) require(m >= 1, "m", "must be >= 1 for stochastic experiments");
    if (c.experiment == "colloc-table" || c.experiment == "colloc-decomp")
        for (int l : c.levels) require(l <= 4, "L", "collocation levels above 4 are not supported");
    if (c.experiment == "cost-ratios") {
        for (int l : c.levels) require(l >= 0, "L", "must be >= 0");
        require(c.n <= 64, "n", "cost-ratios supports n <= 64");
    }
}

bool ExperimentOutput::all_passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

}  // namespace msfem
