// dinf: trains grid-backed fields against pixel or PDE supervision and writes
// the run artifacts. Exit codes: 0 success, 1 failed validation, 2 bad
// configuration, 3 diverged training, 4 io failure.

#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include "../vendor/CLI11.hpp"
#include "dinf/run.hpp"

namespace {

struct sub_args {
    std::string config;
    std::vector<std::string> overrides;
    bool deterministic = false;
    int threads = 0;  // 0: leave the config value alone
    bool defaults = false;
};

int dispatch(const std::string& name, const sub_args& a) {
    dinf::run_config cfg(dinf::schema_for(name));
    if (a.defaults) {
        std::fputs(cfg.schema().reference().c_str(), stdout);
        return 0;
    }
    if (!a.config.empty()) cfg.load_file(a.config);
    for (const auto& token : a.overrides) cfg.apply_override(token);
    if (a.threads > 0) cfg.apply_override("train.threads=" + std::to_string(a.threads));
    // deterministic mode pins the reduction order to a single worker
    if (a.deterministic) cfg.apply_override("train.threads=1");
    return dinf::run_subcommand(name, cfg);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"multi-resolution field training for pixel and PDE supervision"};
    app.require_subcommand(1);

    static const struct {
        const char* name;
        const char* help;
        bool config_required;
    } subs[] = {
        {"fit", "fit a field to an image", true},
        {"poisson", "reconstruct an image from its derivatives", true},
        {"heat", "solve the heat equation on x in [-1,1]", true},
        {"advect", "transport an initial pulse at constant speed", true},
        {"helmholtz", "solve the helmholtz equation with an absorbing layer", true},
        {"eikonal", "recover a signed distance field from oriented samples", true},
        {"check", "validate jet derivatives against finite differences", false},
    };

    std::vector<sub_args> args(std::size(subs));
    for (std::size_t i = 0; i < std::size(subs); ++i) {
        CLI::App* sub = app.add_subcommand(subs[i].name, subs[i].help);
        auto* cfg = sub->add_option("-c,--config", args[i].config, "key=value config file");
        if (subs[i].config_required) cfg->check(CLI::ExistingFile);
        sub->add_option("overrides", args[i].overrides, "key=value overrides; they win over the file");
        sub->add_flag("--deterministic", args[i].deterministic,
                      "bit-reproducible runs: forces a single worker");
        sub->add_option("--threads", args[i].threads, "worker threads; overrides train.threads");
        sub->add_flag("--defaults", args[i].defaults,
                      "print the subcommand's config reference and exit");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;  // bad usage is a config error
    }

    try {
        for (std::size_t i = 0; i < std::size(subs); ++i)
            if (app.got_subcommand(subs[i].name)) {
                if (subs[i].config_required && !args[i].defaults && args[i].config.empty()) {
                    std::fprintf(stderr, "%s: --config is required (or pass --defaults)\n",
                                 subs[i].name);
                    return 2;
                }
                return dispatch(subs[i].name, args[i]);
            }
        return 2;
    } catch (const dinf::config_error& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const dinf::diverged_error& e) {
        std::fprintf(stderr, "diverged: %s\n", e.what());
        return 3;
    } catch (const dinf::io_error& e) {
        std::fprintf(stderr, "io error: %s\n", e.what());
        return 4;
    } catch (const dinf::data_error& e) {
        std::fprintf(stderr, "bad input data: %s\n", e.what());
        return 4;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
