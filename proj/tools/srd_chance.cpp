#include "srdcc/harness/commands.hpp"
#include "srdcc/harness/config.hpp"

#include <CLI11.hpp>

#include <iostream>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace {

enum ExitCode : int {
    kOk = 0,
    kFailure = 1,
    kUsage = 2,
    kConfig = 3,
    kSlater = 4,
    kDefiniteness = 5,
};

}  // namespace

int main(int argc, char** argv) {
    using namespace srdcc;
    CLI::App app{"Chance-constrained PDE control with spherical-radial decomposition"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    bool fast = false, timing = false, dump = false;
    std::uint64_t seed = 0;
    std::string out_dir;
    int threads = 0;
    app.add_option("--config", config_path, "INI experiment config")->check(CLI::ExistingFile);
    app.add_flag("--fast", fast, "desk-scale profile: n <= 64, sample counts <= 1e4, at most 20 repetitions");
    auto* seed_opt = app.add_option("--seed", seed, "override the base seed");
    app.add_option("--out", out_dir, "override the output directory");
    app.add_option("--threads", threads, "OpenMP thread count (results do not depend on it)")->check(CLI::PositiveNumber);
    app.add_flag("--timing", timing, "record wall-clock seconds instead of NA");
    app.add_flag("--dump-operators", dump, "write assembled operators as COO triplets");
    app.add_flag("--print-config", "print the resolved config and exit");

    const char* commands[][2] = {
        {"estimate", "probability estimate at the nominal control"},
        {"converge", "RMSE against a reference over a sample schedule"},
        {"kl-study", "RMSE for several KL truncations, and KL spectra"},
        {"variance-study", "elementary-estimator variances for several bounds"},
        {"optimize", "chance-constrained SQP solves for each target probability"},
    };
    for (const auto& cmd : commands) app.add_subcommand(cmd[0], cmd[1]);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        harness::ExperimentConfig cfg = config_path.empty() ? harness::ExperimentConfig{} : harness::load_config(config_path);
        if (fast) cfg = harness::apply_fast(cfg);
        if (*seed_opt) cfg.seed = seed;
        if (!out_dir.empty()) cfg.output_dir = out_dir;
        harness::validate(cfg);
        if (app.get_option("--print-config")->as<bool>()) {
            std::cout << harness::to_text(cfg);
            return kOk;
        }
#ifdef _OPENMP
        if (threads > 0) omp_set_num_threads(threads);
#endif
        harness::RunOptions opt;
        opt.timing = timing;
        opt.dump_operators = dump;
        const std::string name = app.get_subcommands().front()->get_name();
        const harness::CommandResult res = harness::run_command(name, cfg, opt);
        for (const auto& f : res.files) std::cout << f.string() << "\n";
        return kOk;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfig;
    } catch (const SlaterError& e) {
        std::cerr << "slater error: " << e.what() << "\n";
        return kSlater;
    } catch (const DefinitenessError& e) {
        std::cerr << "definiteness error: " << e.what() << "\n";
        return kDefiniteness;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kFailure;
    }
}
