#include <doctest.h>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "hiermodel/cli.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const std::string models = HIERMODEL_MODELS_DIR;

struct Run {
    int code;
    std::string out, err;
    json report() const { return json::parse(out); }
};

Run run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = hiermodel::cli::dispatch(args, out, err);
    return {code, out.str(), err.str()};
}

std::string model(const std::string& name) { return models + "/" + name; }

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / "hiermodel_cli_test";
    fs::create_directories(dir);
    return dir / name;
}

std::string write(const std::string& name, const std::string& text) {
    const auto p = scratch(name);
    std::ofstream(p) << text;
    return p.string();
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p);
    return {std::istreambuf_iterator<char>(f), {}};
}

}  // namespace

TEST_CASE("usage and unknown verbs") {
    CHECK(run({}).code == 64);
    CHECK(run({"frobnicate"}).code == 64);
    CHECK(run({"frobnicate"}).err.find("usage") != std::string::npos);
    CHECK(run({"--help"}).code == 0);
    CHECK(run({"solve-qn"}).code == 64);
    CHECK(run({"solve-qn", "--bogus", "-i", model("two_class.json")}).code == 64);
    CHECK(run({"simulate", "--case", "12"}).code == 64);
    const auto h = run({"simulate", "--help"});
    CHECK(h.code == 0);
    CHECK(h.out.find("--seed") != std::string::npos);
}

TEST_CASE("solve-qn reports the two-class throughputs") {
    const auto r = run({"solve-qn", "-i", model("two_class.json")});
    REQUIRE(r.code == 0);
    const auto j = r.report();
    CHECK(j["solution"]["throughput"][0].get<double>() == doctest::Approx(1.0 / 15).epsilon(1e-12));
    CHECK(j["solution"]["throughput"][1].get<double>() == doctest::Approx(1.0 / 30).epsilon(1e-12));
    CHECK(j["input"]["demands"][1][0] == 10.0);
    CHECK(j["input"]["population"] == json::array({1, 1}));
    const auto t = run({"solve-qn", "-i", model("two_class.json"), "--population", "2,1", "--table"}).report();
    CHECK(t["table"]["dims"] == json::array({2, 1}));
}

TEST_CASE("solve-qn from a routing matrix") {
    const auto j = run({"solve-qn", "-i", model("central_server.json"), "--population", "1"}).report();
    CHECK(j["input"]["demands"][0][0].get<double>() == doctest::Approx(20.0));
    CHECK(j["solution"]["throughput"][0].get<double>() == doctest::Approx(1.0 / 65.0).epsilon(1e-12));
}

TEST_CASE("report written to a file") {
    const auto path = scratch("qn.json");
    fs::remove(path);
    const auto r = run({"solve-qn", "-i", model("two_class.json"), "-o", path.string()});
    CHECK(r.code == 0);
    CHECK(r.out.empty());
    CHECK(json::parse(slurp(path))["solution"]["response"][0].get<double>() == doctest::Approx(15.0));
}

TEST_CASE("fesc verb") {
    const auto j = run({"fesc", "-i", model("fesc.json")}).report();
    CHECK(j["input"]["rates"].size() == 3);
    CHECK(j["solution"]["n_bar"].get<double>() > 0.0);
    CHECK(run({"fesc", "-i", model("fesc.json"), "--lambda", "0.9"}).code == 2);
    const auto rates = write("rates.json", R"({"rates": [2.0], "lambda": 1.0})");
    CHECK(run({"fesc", "-i", rates}).report()["solution"]["n_bar"].get<double>() == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("task-makespan on one task equals its residence") {
    const auto one = write("one_task.json", R"({"stations": 2, "tasks": [{"id": 3, "demands": [2.0, 1.5]}]})");
    const auto j = run({"task-makespan", "-i", one}).report();
    CHECK(j["report"]["makespan"].get<double>() == doctest::Approx(3.5).epsilon(1e-14));
}

TEST_CASE("task-makespan outputs") {
    const auto dot = scratch("levels.dot"), txt = scratch("report.txt");
    const auto r = run({"task-makespan", "-i", model("six_tasks.json"), "--dot", dot.string(), "--text", txt.string()});
    REQUIRE(r.code == 0);
    const auto j = r.report();
    CHECK(j["report"]["level_sizes"] == json::array({1, 1, 3, 5, 7, 5, 3, 1}));
    CHECK(j["input"]["rule"] == "conditional");
    CHECK(slurp(dot).find("digraph") == 0);
    const auto text = slurp(txt);
    CHECK(text.find("makespan") == 0);
    CHECK(text.find("{1,2,4}") != std::string::npos);
    CHECK(run({"task-makespan", "-i", model("six_tasks.json"), "--rule", "other"}).code == 64);
    CHECK(run({"task-makespan", "-i", model("six_tasks.json"), "--max-mpl", "2"}).code == 2);
}

TEST_CASE("txn-lock verb") {
    const auto j = run({"txn-lock", "-i", model("lock.json"), "--two-level"}).report();
    CHECK(j["states"].size() == 6);
    CHECK(j["pi"].size() == 6);
    CHECK(j["response"].size() == 5);
    CHECK(j["two_level"]["blocking"].get<double>() <= 1e-8);
    const auto p = run({"txn-lock", "-i", model("lock.json"), "--matrix-variant", "printed"}).report();
    CHECK(p["input"]["matrix_variant"] == "printed");
    CHECK(run({"txn-lock", "-i", model("lock.json"), "--lambda", "5"}).code == 2);
}

TEST_CASE("simulate with a preset is reproducible") {
    const std::vector<std::string> args{"simulate", "--case", "3", "--seed", "42", "-i", model("timesharing.json"), "--exact"};
    const auto a = run(args), b = run(args);
    REQUIRE(a.code == 0);
    CHECK(a.out == b.out);
    const auto j = a.report();
    CHECK(j["input"]["seed"] == 42);
    CHECK(j["input"]["mpl"] == json::array({4, 2}));  // the document overrides the preset
    CHECK(j["exact"]["states"] == 63);
    const auto csv = scratch("batches.csv");
    CHECK(run({"simulate", "--case", "3", "--seed", "1", "-i", model("timesharing.json"), "--csv", csv.string()}).code == 0);
    CHECK(slurp(csv).find("batch,class,response,throughput") == 0);
}

TEST_CASE("hybrid verb") {
    const auto f = run({"hybrid", "-i", model("hybrid_fixed.json")}).report();
    CHECK(f["report"]["makespan"].get<double>() == doctest::Approx(25.0).epsilon(1e-12));
    const auto r = run({"hybrid", "-i", model("hybrid_fixed.json"), "--mode", "residual"}).report();
    CHECK(r["report"]["makespan"].get<double>() == doctest::Approx(25.0).epsilon(1e-12));
    const std::vector<std::string> geo{"hybrid", "-i", model("hybrid_geometric.json"), "--replications", "2000", "--seed", "5"};
    const auto g = run(geo);
    CHECK(g.report()["report"]["mean_completion"].get<double>() == doctest::Approx(80.0 / 3.0).epsilon(1e-12));
    CHECK(run(geo).out == g.out);
}

TEST_CASE("epa verb") {
    const auto d = run({"epa", "-i", model("drift.csv")}).report();
    CHECK(d["equilibrium"]["j_bar"].get<double>() == doctest::Approx(11.0 / 3.0).epsilon(1e-9));
    CHECK(d["integer"]["j"] == 4);  // |A(4)| < |A(3)|
    const auto t = run({"epa", "-i", model("terminals.json")}).report();
    const double n_star = t["intersection"]["n_star"].get<double>();
    CHECK(std::abs(n_star - t["exact"]["n_bar"].get<double>()) <= 1.0);
}

TEST_CASE("validate") {
    const auto good = run({"validate", model("two_class.json"), model("six_tasks.json"), model("lock.json"),
                           model("hybrid_fixed.json"), model("terminals.json"), model("timesharing.json")});
    CHECK(good.code == 0);
    for (const auto& f : good.report()["files"]) CHECK(f["diagnostics"].empty());
    const auto bad = run({"validate", model("bad_routing.json")});
    CHECK(bad.code == 2);
    CHECK(bad.report()["files"][0]["diagnostics"].size() == 1);
    CHECK(run({"validate", model("bad_demands.json")}).report()["files"][0]["diagnostics"].size() == 1);
}

TEST_CASE("model errors map to exit code 2") {
    CHECK(run({"solve-qn", "-i", models + "/missing.json"}).code == 2);
    const auto broken = write("broken.json", "{ not json");
    CHECK(run({"solve-qn", "-i", broken}).code == 2);
    const auto cyc = write("cycle.json", R"({"tasks": [{"id": 1, "demands": [1]}, {"id": 2, "demands": [1]}], "precedence": [[1, 2], [2, 1]]})");
    CHECK(run({"task-makespan", "-i", cyc}).code == 2);
}

TEST_CASE("non-convergence maps to exit code 3") {
    const auto r = run({"txn-lock", "-i", model("lock.json"), "--two-level", "--max-iter", "2"});
    CHECK(r.code == 3);
    CHECK(r.err.find("no convergence") != std::string::npos);
}
