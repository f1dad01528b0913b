#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>
#include <unistd.h>

#include <json.hpp>

#include "softgate/cli.hpp"

using namespace softgate;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir() {
    static const fs::path dir = [] {
        auto d = fs::temp_directory_path() / ("softgate_test_cli_" + std::to_string(::getpid()));
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::vector<std::string> lines(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream in(line);
    for (std::string f; std::getline(in, f, ',');) out.push_back(f);
    return out;
}

fs::path write_config(const std::string& name, const std::string& body) {
    const auto p = scratch_dir() / name;
    std::ofstream(p, std::ios::binary) << body;
    return p;
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(SOFTGATE_CLI_PATH) + " " + args + " 2>" + (scratch_dir() / "stderr.txt").string();
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

const char* kSmallConfig =
    "# small run\n"
    "gate = sigmoid\n"
    "queries_per_batch = 4\n"
    "steps = 5\n"
    "seed = 3\n";

}  // namespace

TEST_CASE("curves: default grid row count", "[cli]") {
    const CurveRequest req;
    const auto rows = curve_rows(req);
    CHECK(rows.size() == 301u * 5u * 3u);
    const auto path = scratch_dir() / "curves.csv";
    CHECK(cmd_curves(req, path) == kExitOk);
    const auto ls = lines(slurp(path));
    CHECK(ls.front() == "x,gate,tau,value,derivative");
    CHECK(ls.size() == 1 + 301u * 5u * 3u);
}

TEST_CASE("curves: single point", "[cli]") {
    CurveRequest req;
    req.gates = {GateKind::Erf};
    req.taus = {1.0};
    req.x_min = req.x_max = 1.0;
    req.points = 1;
    const auto path = scratch_dir() / "one.csv";
    CHECK(cmd_curves(req, path) == kExitOk);
    CHECK(slurp(path) == "x,gate,tau,value,derivative\n1,erf,1,1,1\n");
}

TEST_CASE("curves: values are the gate functions, serialized losslessly", "[cli][invariant]") {
    CurveRequest req;
    req.gates = {GateKind::Arctan};
    req.taus = {10.0};
    const auto path = scratch_dir() / "atan.csv";
    REQUIRE(cmd_curves(req, path) == kExitOk);
    bool saw_two = false;
    for (const auto& l : lines(slurp(path))) {
        const auto f = split(l);
        if (f[0] == "x") continue;
        const double x = std::stod(f[0]);
        CHECK(std::stod(f[3]) == gate_value(GateKind::Arctan, 10.0, x));
        CHECK(std::stod(f[4]) == gate_derivative(GateKind::Arctan, 10.0, x));
        if (f[0] == "2") {
            saw_two = true;
            CHECK(std::abs(std::stod(f[4]) - 1.0 / 101.0) < 1e-15);
        }
    }
    CHECK(saw_two);
}

TEST_CASE("curves: hard clip rows follow the positive-advantage surrogate", "[cli]") {
    CurveRequest req;
    req.gates = {GateKind::HardClip};
    req.taus = {1.0};
    req.x_min = 0.0;
    req.x_max = 2.0;
    req.points = 5;
    const auto rows = curve_rows(req);
    REQUIRE(rows.size() == 5);
    const double expect_v[] = {0.0, 0.5, 1.0, 1.2, 1.2};
    const double expect_d[] = {1.0, 1.0, 1.0, 0.0, 0.0};
    for (std::size_t i = 0; i < 5; ++i) {
        CHECK(rows[i].value == Catch::Approx(expect_v[i]));
        CHECK(rows[i].derivative == expect_d[i]);
    }
}

TEST_CASE("curves: invalid requests and unwritable paths", "[cli]") {
    CurveRequest req;
    req.points = 1;
    CHECK_THROWS_AS(req.validate(), std::invalid_argument);
    req = {};
    req.x_min = -1.0;
    CHECK_THROWS_AS(req.validate(), std::invalid_argument);
    req = {};
    try {
        (void)cmd_curves(req, "/nonexistent-dir/x.csv");
        FAIL("expected an I/O error");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()).find("/nonexistent-dir/x.csv") != std::string::npos);
    }
}

TEST_CASE("check: exit statuses and report", "[cli]") {
    const auto out = scratch_dir() / "check.json";
    CHECK(run_cli("check --gate softsign --tau 5 -o " + out.string()) == 0);
    auto j = nlohmann::json::parse(slurp(out));
    CHECK(j["smooth_ok"] == true);
    CHECK(j["tail_ok"] == true);

    CHECK(run_cli("check --custom linear -o " + out.string()) == 1);
    j = nlohmann::json::parse(slurp(out));
    CHECK(j["tail_ok"] == false);

    CHECK(run_cli("check --gate sigmoid --tau 1 -o " + out.string()) == 0);
    CHECK(run_cli("check --custom shifted_erf --tau 5 -o " + out.string()) == 1);
    CHECK(run_cli("check --gate hard_clip -o " + out.string()) == 2);
    CHECK(run_cli("check --gate erf --custom linear -o " + out.string()) == 2);
    CHECK(run_cli("check --gate erf --tail-probe 10 -o " + out.string()) == 2);
}

TEST_CASE("train: steps = 0 writes only the header", "[cli]") {
    const auto cfg = write_config("zero.conf", "steps = 0\n");
    const auto out = scratch_dir() / "zero.csv";
    CHECK(cmd_train(cfg, out) == kExitOk);
    CHECK(slurp(out) == std::string(kMetricsHeader) + "\n");
    const auto summary = nlohmann::json::parse(slurp(default_summary_path(out)));
    CHECK(summary["steps_completed"] == 0);
    CHECK(summary["diverged"] == false);
    CHECK(summary["final_mean_reward"].is_null());
}

TEST_CASE("train: identical files on rerun", "[cli][invariant]") {
    const auto cfg = write_config("small.conf", kSmallConfig);
    const auto a = scratch_dir() / "a.csv";
    const auto b = scratch_dir() / "b.csv";
    CHECK(run_cli("train -c " + cfg.string() + " -o " + a.string()) == 0);
    CHECK(run_cli("train -c " + cfg.string() + " -o " + b.string()) == 0);
    CHECK(slurp(a) == slurp(b));
    CHECK(slurp(default_summary_path(a)) == slurp(default_summary_path(b)));
    const auto ls = lines(slurp(a));
    CHECK(ls.size() == 6);

    // the CSV rows round-trip to the in-process metrics
    const auto metrics = run_training(load_config(cfg.string()));
    for (std::size_t i = 0; i < metrics.size(); ++i) {
        std::ostringstream row;
        write_metrics_row(row, metrics[i]);
        CHECK(ls[i + 1] + "\n" == row.str());
    }
    const auto summary = nlohmann::json::parse(slurp(default_summary_path(a)));
    CHECK(summary["final_mean_reward"].get<double>() == metrics.back().mean_reward);
    CHECK(summary["final_entropy"].get<double>() == metrics.back().policy_entropy);
}

TEST_CASE("train: validation errors list offending keys", "[cli]") {
    const auto out = scratch_dir() / "bad.csv";
    const auto missing_eps = write_config("clip.conf", "gate = hard_clip\n");
    CHECK(run_cli("train -c " + missing_eps.string() + " -o " + out.string()) == 2);
    CHECK(slurp(scratch_dir() / "stderr.txt").find("offending keys: epsilon") != std::string::npos);

    try {
        (void)load_config(write_config("multi.conf", "gate = tanh\nbogus = 1\nsteps = x\nsteps = 2\n").string());
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.keys() == std::vector<std::string>{"gate", "bogus", "steps", "steps"});
    }
    try {
        (void)load_config(write_config("range.conf", "group_size = 1\n").string());
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.keys() == std::vector<std::string>{"group_size"});
    }
}

TEST_CASE("config round-trips through format_config", "[cli]") {
    TrainConfig cfg;
    cfg.gate = GateKind::HardClip;
    cfg.epsilon = 0.15;
    cfg.learning_rate = 0.1 + 0.2;
    cfg.seed = 18446744073709551615ull;
    cfg.task = TaskKind::RandomReward;
    std::istringstream in(format_config(cfg));
    const TrainConfig back = parse_config(in);
    CHECK(back.gate == cfg.gate);
    CHECK(back.epsilon == cfg.epsilon);
    CHECK(back.learning_rate == cfg.learning_rate);
    CHECK(back.seed == cfg.seed);
    CHECK(back.task == cfg.task);
}

TEST_CASE("compare: one gate, one seed equals that run", "[cli]") {
    TrainConfig base;
    base.queries_per_batch = 4;
    base.steps = 10;
    const auto rows = run_compare(base, {GateKind::Erf}, {5});
    REQUIRE(rows.size() == 1);
    auto cfg = base;
    cfg.gate = GateKind::Erf;
    cfg.seed = 5;
    const auto s = run_and_summarize(cfg);
    CHECK(rows[0].runs == 1);
    CHECK(rows[0].final_reward_mean == *s.final_mean_reward);
    CHECK(rows[0].final_entropy_mean == *s.final_entropy);
    CHECK(rows[0].suppression_mean == *s.mean_suppression);
    CHECK(rows[0].final_reward_std == 0.0);
    CHECK(rows[0].final_entropy_std == 0.0);
}

TEST_CASE("compare: U = 1 gives identical reward columns", "[cli][invariant]") {
    const auto cfg = write_config("onpolicy.conf", "updates_per_batch = 1\nqueries_per_batch = 4\nsteps = 10\n");
    const auto out = scratch_dir() / "cmp1.csv";
    CHECK(run_cli("compare -c " + cfg.string() + " --gates sigmoid,erf --seeds 4 -o " + out.string()) == 0);
    const auto ls = lines(slurp(out));
    REQUIRE(ls.size() == 3);
    const auto a = split(ls[1]);
    const auto b = split(ls[2]);
    CHECK(a[0] == "sigmoid");
    CHECK(b[0] == "erf");
    for (std::size_t c = 1; c < a.size(); ++c) CHECK(a[c] == b[c]);
}

TEST_CASE("compare: four smooth gates over three seeds", "[cli]") {
    TrainConfig base;
    base.queries_per_batch = 4;
    base.steps = 5;
    const auto rows = run_compare(base, {kSmoothGates.begin(), kSmoothGates.end()}, {0, 1, 2});
    CHECK(rows.size() == 4);
    int runs = 0;
    for (const auto& r : rows) runs += r.runs;
    CHECK(runs == 12);

    const auto cfg = write_config("cmp.conf", "queries_per_batch = 4\nsteps = 5\n");
    const auto out = scratch_dir() / "cmp4.csv";
    CHECK(run_cli("compare -c " + cfg.string() + " -o " + out.string()) == 0);
    const auto ls = lines(slurp(out));
    CHECK(ls.size() == 5);
    CHECK(ls[0] ==
          "gate,runs,diverged_runs,final_reward_mean,final_reward_std,final_entropy_mean,final_entropy_std,"
          "suppression_mean,suppression_std");
}

TEST_CASE("usage errors exit 2", "[cli]") {
    CHECK(run_cli("") == 2);
    CHECK(run_cli("frobnicate") == 2);
    CHECK(run_cli("curves") == 2);
    CHECK(run_cli("curves --gates nope -o " + (scratch_dir() / "x.csv").string()) == 2);
    CHECK(run_cli("train -c /nonexistent.conf -o " + (scratch_dir() / "x.csv").string()) == 2);
    CHECK(run_cli("--help >/dev/null") == 0);
}

TEST_CASE("compare: hard clip needs epsilon from the config or the flag", "[cli]") {
    const auto cfg = write_config("cmp_clip.conf", "queries_per_batch = 4\nsteps = 3\n");
    const auto out = scratch_dir() / "cmp_clip.csv";
    CHECK(run_cli("compare -c " + cfg.string() + " --gates hard_clip -o " + out.string()) == 2);
    CHECK(slurp(scratch_dir() / "stderr.txt").find("offending keys: epsilon") != std::string::npos);
    CHECK(run_cli("compare -c " + cfg.string() + " --gates all --epsilon 0.2 --seeds 0,1 -o " + out.string()) == 0);
    const auto ls = lines(slurp(out));
    REQUIRE(ls.size() == 6);
    CHECK(split(ls[1])[0] == "hard_clip");
    CHECK(split(ls[1])[1] == "2");
}
