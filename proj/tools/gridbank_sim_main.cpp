// gridbank-sim: scenario runner. Boots a bank plus the configured providers
// and consumers in-process, drives the job list, forces batch redemption and
// the expiry sweep, and emits a machine-readable report.

#include "gridbank/harness.hpp"

#include "gridbank/errors.hpp"

#include "common.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

using namespace gridbank;

namespace {

std::filesystem::path resolve_scenario(const std::string& name)
{
    namespace fs = std::filesystem;
    if (fs::exists(name))
        return name;
    for (const fs::path base : {fs::path("scenarios"), tools::home_dir() / "scenarios"}) {
        for (const char* ext : {"", ".scn"}) {
            fs::path candidate = base / (name + ext);
            if (fs::exists(candidate))
                return candidate;
        }
    }
    fail(Errc::ConfigError, "scenario '" + name + "' not found");
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"GridBank scenario harness"};
    app.require_subcommand(1);

    std::string scenario_name, out_path, work_dir;
    std::int64_t seed = -1;
    CLI::App* run = app.add_subcommand("run", "run a scenario and print its report");
    run->add_option("scenario", scenario_name,
                    "scenario file or bundled name (fig1_single_job, fig4_coop4, "
                    "competitive_estimate)")
        ->required();
    run->add_option("--seed", seed, "override the scenario seed");
    run->add_option("--out", out_path, "write the report here instead of stdout");
    run->add_option("--workdir", work_dir, "working directory for journal and mapfiles");

    CLI11_PARSE(app, argc, argv);

    try {
        Scenario scenario = Scenario::load(resolve_scenario(scenario_name));
        if (seed >= 0)
            scenario.seed = static_cast<std::uint64_t>(seed);
        std::filesystem::path dir =
            work_dir.empty()
                ? std::filesystem::temp_directory_path() /
                      ("gridbank-sim-" + scenario.name + "-" + std::to_string(scenario.seed))
                : std::filesystem::path(work_dir);
        std::filesystem::remove_all(dir);

        ScenarioReport report = run_scenario(scenario, dir);
        if (out_path.empty()) {
            std::cout << report.canonical_text();
        } else {
            std::ofstream out(out_path, std::ios::trunc);
            out << report.canonical_text();
        }
        return report.conservation_holds() ? 0 : 1;
    } catch (const GridBankError& e) {
        std::cerr << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return 1;
    }
}
