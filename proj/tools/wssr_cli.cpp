//
// wssr: run, inspect and list systems for VMC optimisation with WSSR and
// baseline optimizers.
//

#include <wssr/runner.hpp>

#include <CLI11.hpp>

#include <iostream>

namespace {

int cmd_run(const std::string& config_path, const std::optional<std::uint64_t>& seed,
            const std::optional<std::size_t>& steps, const std::optional<std::string>& optimizer,
            const std::optional<std::string>& out, const std::optional<std::string>& resume)
{
    wssr::RunConfig cfg;
    try {
        cfg = wssr::load_config(config_path);
        if (seed) {
            cfg.seed = *seed;
            cfg.wssr.seed = *seed;
        }
        if (steps)
            cfg.steps = *steps;
        if (optimizer)
            cfg.optimizer = *optimizer;
        if (out)
            cfg.out = *out;
        cfg.validate();
    }
    catch (const wssr::Error& e) {
        std::cerr << e.what() << "\n";
        return 2;
    }
    std::optional<std::filesystem::path> ckpt;
    if (resume)
        ckpt = *resume;
    return wssr::run_to_completion(cfg, ckpt, std::cout);
}

int cmd_inspect(const std::string& path)
{
    try {
        std::cout << wssr::describe_checkpoint(wssr::read_checkpoint(path));
        return 0;
    }
    catch (const wssr::Error& e) {
        std::cerr << e.what() << "\n";
        return 1;
    }
}

int cmd_presets()
{
    for (const auto& name : wssr::preset_names()) {
        const auto sys = *wssr::preset(name);
        std::cout << name << ": " << sys.nuclei.size() << " nuclei, " << sys.n_up << " up + " << sys.n_down
                  << " down electrons\n";
    }
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Variational Monte Carlo with warm-started stochastic reconfiguration"};
    app.footer("Config keys (INI sections):\n" + wssr::config_help());
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "optimise a wavefunction");
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> steps;
    std::optional<std::string> optimizer, out, resume;
    run->add_option("--config", config_path, "config file")->required();
    run->add_option("--seed", seed, "override run.seed");
    run->add_option("--steps", steps, "override run.steps");
    run->add_option("--optimizer", optimizer, "override optimizer.name (" + wssr::joined(wssr::optimizer_names()) + ")");
    run->add_option("--out", out, "override run.out");
    run->add_option("--resume", resume, "continue from a checkpoint");

    auto* inspect = app.add_subcommand("inspect", "summarise a checkpoint");
    std::string ckpt;
    inspect->add_option("--ckpt", ckpt, "checkpoint file")->required();

    auto* presets = app.add_subcommand("presets", "list built-in systems");

    try {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    if (*run)
        return cmd_run(config_path, seed, steps, optimizer, out, resume);
    if (*inspect)
        return cmd_inspect(ckpt);
    if (*presets)
        return cmd_presets();
    return 2;
}
