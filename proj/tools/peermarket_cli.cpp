// Command-line front end: simulate, probe, calibrate, sweep.

#include "peermarket/harness.hpp"
#include "peermarket/incentives.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace pm = peermarket;
using nlohmann::json;

namespace {

constexpr const char* kSeedEnv = "PEERMARKET_SEED";

json read_json(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open " + path);
    return json::parse(in);
}

// --seed, then the scenario's own seed, then $PEERMARKET_SEED, then 0.
pm::Scenario load_scenario(const std::string& path, std::optional<std::uint64_t> seed_flag)
{
    const json doc = read_json(path);
    pm::Scenario s = pm::scenario_from_json(doc);
    if (seed_flag) {
        s.seed = *seed_flag;
    } else if (!doc.contains("seed")) {
        if (const char* env = std::getenv(kSeedEnv))
            s.seed = std::stoull(env);
    }
    return s;
}

void emit(const json& doc, const std::string& out_path)
{
    if (out_path.empty()) {
        std::cout << doc.dump(2) << '\n';
        return;
    }
    std::ofstream out(out_path);
    if (!out)
        throw std::runtime_error("cannot write " + out_path);
    out << doc.dump(2) << '\n';
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Prediction market with peer-prediction arbitration: simulation and fee calibration"};
    app.require_subcommand(1);

    std::string scenario_path;
    std::string out_path;
    std::optional<std::uint64_t> seed;

    auto* simulate = app.add_subcommand("simulate", "run a scenario end to end and print the report");
    simulate->add_option("scenario", scenario_path, "scenario JSON")->required()->check(CLI::ExistingFile);
    simulate->add_option("--seed", seed, "RNG seed (overrides the scenario and $PEERMARKET_SEED)");
    simulate->add_option("--out", out_path, "write the report here instead of stdout");

    std::string probe_path;
    std::optional<std::uint64_t> probe_seed;
    auto* probe = app.add_subcommand("probe", "tabulate misreport gains per arbiter and signal");
    probe->add_option("scenario", probe_path, "scenario JSON")->required()->check(CLI::ExistingFile);
    probe->add_option("--seed", probe_seed, "RNG seed");

    double delta = 1.0;
    double liquidity = 0.0;
    double budget = 0.0;
    double total = 1e6;
    std::string entry = "multiple";
    auto* calibrate = app.add_subcommand("calibrate", "minimum fee that funds truthful arbitration");
    calibrate->add_option("--delta", delta, "update strength mu1 - mu0")->required();
    calibrate->add_option("--b", liquidity, "LMSR liquidity (single entry)");
    calibrate->add_option("--B", budget, "per-agent budget")->required();
    calibrate->add_option("--M", total, "aggregate worst-case loss of traders")->required();
    calibrate->add_option("--entry", entry, "entry mode")->check(CLI::IsMember({"single", "multiple"}));

    std::string grid_path;
    std::string csv_path;
    auto* sweep = app.add_subcommand("sweep", "minimum-fee curves over a parameter grid");
    sweep->add_option("grid", grid_path, "grid JSON")->required()->check(CLI::ExistingFile);
    sweep->add_option("--out", csv_path, "CSV output path")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*simulate) {
            const pm::RunReport report = pm::run_scenario(load_scenario(scenario_path, seed));
            emit(pm::report_to_json(report), out_path);
        } else if (*probe) {
            const auto rows = pm::probe_deviations(load_scenario(probe_path, probe_seed));
            std::cout << pm::deviations_to_json(rows).dump(2) << '\n';
        } else if (*calibrate) {
            pm::CalibrationProblem problem{delta, budget, total, liquidity, pm::entry_mode_from_string(entry)};
            json out = {{"delta", delta}, {"B", budget}, {"M", total}, {"entry_mode", entry}};
            if (problem.mode == pm::EntryMode::single)
                out["b"] = liquidity;
            try {
                const double fee = pm::calibrate_min_fee(problem);
                out["min_fee"] = fee;
                if (fee > 0.0) {
                    const pm::SubsidyVerdict v = pm::subsidy_condition(problem, fee);
                    out["revenue"] = v.revenue;
                    out["required_payment"] = v.required;
                }
            } catch (const pm::InfeasibleCalibration& e) {
                out["min_fee"] = nullptr;
                out["reason"] = e.what();
                std::cout << out.dump(2) << '\n';
                return 2;
            }
            std::cout << out.dump(2) << '\n';
        } else if (*sweep) {
            const auto rows = pm::sweep_calibration(pm::sweep_grid_from_json(read_json(grid_path)));
            std::ofstream out(csv_path);
            if (!out)
                throw std::runtime_error("cannot write " + csv_path);
            pm::write_sweep_csv(out, rows);
            std::cerr << "wrote " << rows.size() << " rows to " << csv_path << '\n';
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
