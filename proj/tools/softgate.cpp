// softgate: gate curves, admissibility checks, and toy training runs.

#include <cstdint>
#include <exception>
#include <filesystem>
#include <optional>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "softgate/cli.hpp"

namespace {

std::vector<softgate::GateKind> parse_gates(const std::vector<std::string>& names) {
    std::vector<softgate::GateKind> out;
    for (const auto& n : names) {
        if (n == "all") {
            out.insert(out.end(), softgate::kAllGates.begin(), softgate::kAllGates.end());
            continue;
        }
        if (n == "smooth") {
            out.insert(out.end(), softgate::kSmoothGates.begin(), softgate::kSmoothGates.end());
            continue;
        }
        const auto kind = softgate::parse_gate_kind(n);
        if (!kind) throw CLI::ValidationError("--gates", "unknown gate '" + n + "'");
        out.push_back(*kind);
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    using namespace softgate;

    CLI::App app{"Soft gate functions for policy optimization: curves, admissibility checks, toy training"};
    app.require_subcommand(1);

    // curves
    auto* curves = app.add_subcommand("curves", "Emit gate values and derivatives as CSV");
    std::vector<std::string> curve_gates{"all"};
    CurveRequest curve_req;
    std::string curve_out;
    curves->add_option("--gates", curve_gates, "Gates (hard_clip, sigmoid, erf, arctan, softsign, smooth, all)")
        ->delimiter(',')
        ->capture_default_str();
    curves->add_option("--taus", curve_req.taus, "Temperatures")->delimiter(',')->capture_default_str();
    curves->add_option("--x-min", curve_req.x_min, "Grid start")->capture_default_str();
    curves->add_option("--x-max", curve_req.x_max, "Grid end")->capture_default_str();
    curves->add_option("--points", curve_req.points, "Grid points")->capture_default_str();
    curves->add_option("--epsilon", curve_req.epsilon, "Clip width for hard_clip rows")->capture_default_str();
    curves->add_option("-o,--output", curve_out, "Output CSV path")->required();

    // check
    auto* check = app.add_subcommand("check", "Check a gate against the admissibility properties; writes JSON");
    std::string check_gate;
    std::string check_custom;
    CheckRequest check_req;
    std::string check_out;
    auto* gate_opt = check->add_option("--gate", check_gate, "Built-in smooth gate");
    auto* custom_opt =
        check->add_option("--custom", check_custom, "Custom candidate: linear, clip_surrogate, shifted_erf, rescaled_erf");
    gate_opt->excludes(custom_opt);
    check->add_option("--tau", check_req.tau, "Temperature")->capture_default_str();
    check->add_option("--tail-probe", check_req.options.tail_probe, "Largest probed ratio")->capture_default_str();
    check->add_option("--grid-step", check_req.options.grid_step, "Probe grid spacing")->capture_default_str();
    check->add_option("-o,--output", check_out, "Output JSON path")->required();

    // train
    auto* train = app.add_subcommand("train", "Run the toy trainer; writes per-step metrics CSV and a summary JSON");
    std::string train_config;
    std::string train_out;
    std::string train_summary;
    train->add_option("-c,--config", train_config, "Config file (key = value)")->required();
    train->add_option("-o,--output", train_out, "Metrics CSV path")->required();
    train->add_option("--summary", train_summary, "Summary JSON path (default: <output>.summary.json)");

    // compare
    auto* compare = app.add_subcommand("compare", "Train every (gate, seed) pair and aggregate final metrics per gate");
    std::string compare_config;
    std::vector<std::string> compare_gates{"smooth"};
    std::vector<std::uint64_t> compare_seeds{0, 1, 2};
    std::string compare_out;
    compare->add_option("-c,--config", compare_config, "Base config file")->required();
    compare->add_option("--gates", compare_gates, "Gates to compare")->delimiter(',')->capture_default_str();
    compare->add_option("--seeds", compare_seeds, "Seeds")->delimiter(',')->capture_default_str();
    std::optional<double> compare_epsilon;
    compare->add_option("--epsilon", compare_epsilon, "Clip width for hard_clip runs (overrides the config)");
    compare->add_option("-o,--output", compare_out, "Output CSV path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*curves) {
            curve_req.gates = parse_gates(curve_gates);
            return cmd_curves(curve_req, curve_out);
        }
        if (*check) {
            if (!check_gate.empty()) {
                const auto kind = parse_gate_kind(check_gate);
                if (!kind || !is_smooth(*kind)) {
                    std::cerr << "check: --gate must be one of sigmoid, erf, arctan, softsign\n";
                    return kExitUsage;
                }
                check_req.gate = kind;
            } else if (!check_custom.empty()) {
                check_req.custom = parse_custom_gate(check_custom);
                if (!check_req.custom) {
                    std::cerr << "check: unknown --custom candidate '" << check_custom << "'\n";
                    return kExitUsage;
                }
            } else {
                std::cerr << "check: one of --gate or --custom is required\n";
                return kExitUsage;
            }
            return cmd_check(check_req, check_out);
        }
        if (*train) {
            std::optional<std::filesystem::path> summary;
            if (!train_summary.empty()) summary = train_summary;
            return cmd_train(train_config, train_out, summary);
        }
        if (*compare) return cmd_compare(compare_config, parse_gates(compare_gates), compare_seeds, compare_out, compare_epsilon);
    } catch (const ConfigError& e) {
        std::cerr << e.what() << '\n';
        if (!e.keys().empty()) {
            std::cerr << "offending keys:";
            for (const auto& k : e.keys()) std::cerr << ' ' << k;
            std::cerr << '\n';
        }
        return kExitUsage;
    } catch (const CLI::ValidationError& e) {
        std::cerr << e.what() << '\n';
        return kExitUsage;
    } catch (const std::invalid_argument& e) {
        std::cerr << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    }
    return kExitUsage;
}
