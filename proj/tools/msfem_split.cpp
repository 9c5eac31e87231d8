#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "msfem/cli.hpp"
#include "msfem/errors.hpp"

namespace {

std::optional<std::string> env(const char* name) {
    const char* v = std::getenv(name);
    if (v == nullptr || *v == '\0') return std::nullopt;
    return std::string(v);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Splitting-based multiscale FEM experiment runner"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    int threads = 0;

    auto* run = app.add_subcommand("run", "run the experiment described by a config file");
    run->add_option("config", config_path, "config file")->required();
    auto* out_opt = run->add_option("--out", out_dir, "output directory (overrides MSFEM_SPLIT_OUT and the config)");
    auto* seed_opt = run->add_option("--seed", seed, "master seed (overrides the config)");
    auto* threads_opt = run->add_option("--threads", threads, "worker threads (overrides MSFEM_SPLIT_THREADS)")
                            ->check(CLI::PositiveNumber);

    auto* validate = app.add_subcommand("validate", "parse and validate a config file without running it");
    validate->add_option("config", config_path, "config file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        msfem::ExperimentConfig cfg = msfem::load_config(config_path);
        if (*validate) {
            msfem::validate_config(cfg);
            std::cout << config_path << ": ok (" << cfg.experiment << ")\n";
            return 0;
        }
        if (auto v = env("MSFEM_SPLIT_OUT")) cfg.out_dir = *v;
        if (auto v = env("MSFEM_SPLIT_THREADS")) {
            try {
                cfg.threads = std::stoi(*v);
            } catch (const std::exception&) {
                std::cerr << "error: MSFEM_SPLIT_THREADS must be a positive integer\n";
                return 2;
            }
        }
        if (*out_opt) cfg.out_dir = out_dir;
        if (*seed_opt) cfg.seed = seed;
        if (*threads_opt) cfg.threads = threads;
        msfem::validate_config(cfg);

        const auto output = msfem::run_experiment(cfg);
        msfem::write_outputs(cfg, output);
        std::cout << msfem::summary_text(cfg, output);
        return output.all_passed() ? 0 : 1;
    } catch (const msfem::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const msfem::NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return 3;
    } catch (const msfem::ResourceError& e) {
        std::cerr << "resource error: " << e.what() << '\n';
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 5;
    }
}
