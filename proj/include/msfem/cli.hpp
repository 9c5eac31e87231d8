#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace msfem {

/// Config problem tied to a line of the input (line 0: not tied to a line).
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string source, int line, const std::string& message);
    int line() const { return line_; }

private:
    int line_;
};

struct MeshSpec {
    int coarse = 12;
    int refinement = 10;
};

struct ExperimentConfig {
    std::string experiment;

    int coarse = 12;
    int refinement = 10;
    std::vector<MeshSpec> meshes;  ///< mesh-sweep only

    std::string field = "kle";  ///< kle | lognormal
    double sigma2 = 2.25;
    double lx = 0.2;
    double ly = 0.05;
    int n = 20;
    int kle_grid = 0;  ///< generation grid cells per axis; 0 means the fine grid
    std::vector<int> m{15};
    std::vector<double> sc{0.9};
    bool shift = false;
    double shift_margin = 0.01;

    std::vector<int> terms{0, 1, 2};
    std::vector<int> levels{1};
    int samples = 1;
    std::uint64_t seed = 0;
    int theta_index = 0;
    int cell = 0;
    int vertex = 0;
    double source = 1.0;
    int q = 2;
    double mean_field_tolerance = 0.02;
    double sample_error_tolerance = 0.01;
    std::size_t max_store_bytes = std::size_t{4} << 30;
    bool write_fields = false;

    std::string out_dir = "out";
    int threads = 1;

    /// key -> line of definition, for line-precise validation messages
    std::map<std::string, int> lines;
    std::string source_name = "<config>";
};

const std::vector<std::string>& experiment_names();

ExperimentConfig parse_config(std::istream& in, const std::string& source_name);
ExperimentConfig load_config(const std::string& path);

/// Semantic checks for the chosen experiment; throws ConfigError.
void validate_config(const ExperimentConfig& config);

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

struct ExperimentOutput {
    std::vector<std::pair<std::string, std::string>> files;  ///< name -> contents, CSVs first
    std::vector<CheckResult> checks;
    bool all_passed() const;
};

/// Runs a validated experiment entirely in memory.
ExperimentOutput run_experiment(const ExperimentConfig& config);

std::string manifest_text(const ExperimentConfig& config);
std::string summary_text(const ExperimentConfig& config, const ExperimentOutput& output);

/// Writes CSVs, the manifest and the summary into config.out_dir.
void write_outputs(const ExperimentConfig& config, const ExperimentOutput& output);

inline constexpr const char* kVersion = "0.1.0";

}  // namespace msfem
