#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "dtr/cli.hpp"
#include "dtr/core.hpp"

using namespace dtr;

namespace {

int run(const std::vector<std::string>& args) {
    std::vector<const char*> argv = {"dtr"};
    for (const std::string& a : args) argv.push_back(a.c_str());
    return cli_main(static_cast<int>(argv.size()), argv.data());
}

std::string slurp(const std::string& path) {
    std::ifstream f(path);
    REQUIRE(f.good());
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

}  // namespace

TEST_CASE("simulate writes a valid deterministic csv") {
    CHECK(run({"simulate", "--setting", "1", "--n", "100", "--seed", "1", "--out",
               "cli_sim.csv"}) == 0);
    const Dataset d = read_csv("cli_sim.csv", 0.5);
    CHECK(d.size() == 100);
    CHECK(validate(d).empty());

    CHECK(run({"simulate", "--setting", "1", "--n", "100", "--seed", "1", "--out",
               "cli_sim2.csv"}) == 0);
    CHECK(slurp("cli_sim.csv") == slurp("cli_sim2.csv"));
    std::remove("cli_sim.csv");
    std::remove("cli_sim2.csv");
}

TEST_CASE("usage errors exit with code 2") {
    CHECK(run({"simulate", "--setting", "9", "--n", "10", "--out", "x.csv"}) == 2);
    CHECK(run({"nosuchcommand"}) == 2);
    CHECK(run({}) == 2);
    CHECK(run({"consistency", "--surrogate", "logistic", "--tau", "1,2,oops,4"}) == 2);
    CHECK(run({"evaluate", "--method", "warp", "--policy", "nope.json"}) == 2);
}

TEST_CASE("missing files exit with code 3") {
    CHECK(run({"train", "--data", "definitely_missing.csv", "--out", "p.json"}) == 3);
    CHECK(run({"report", "--in", "definitely_missing.csv"}) == 3);
}

TEST_CASE("train then evaluate round-trips through files") {
    REQUIRE(run({"simulate", "--setting", "3", "--n", "400", "--seed", "3", "--out",
                 "cli_train.csv"}) == 0);
    CHECK(run({"train", "--data", "cli_train.csv", "--surrogate", "arctan",
               "--policy1", "linear", "--policy2", "linear", "--epochs", "4",
               "--seed", "5", "--floor", "0.5", "--out", "cli_pair.json", "--trace",
               "cli_trace.csv"}) == 0);

    const std::string trace = slurp("cli_trace.csv");
    CHECK(trace.rfind("epoch,objective\n0,", 0) == 0);

    CHECK(run({"evaluate", "--method", "ipw", "--policy", "cli_pair.json", "--data",
               "cli_train.csv", "--floor", "0.5", "--out", "cli_ipw.json"}) == 0);
    const nlohmann::json ipw = nlohmann::json::parse(slurp("cli_ipw.json"));
    CHECK(ipw["method"] == "ipw");
    CHECK(ipw["n"] == 400);
    CHECK(ipw["value"].get<double>() > 0.0);

    CHECK(run({"evaluate", "--method", "dr", "--policy", "cli_pair.json", "--data",
               "cli_train.csv", "--floor", "0.5", "--out", "cli_dr.json"}) == 0);
    CHECK(nlohmann::json::parse(slurp("cli_dr.json"))["method"] == "dr");

    CHECK(run({"evaluate", "--method", "mc", "--policy", "cli_pair.json", "--setting",
               "3", "--n-eval", "2000", "--seed", "9", "--out", "cli_mc.json"}) == 0);
    const nlohmann::json mc = nlohmann::json::parse(slurp("cli_mc.json"));
    CHECK(mc["method"] == "mc");
    CHECK(mc["value"].get<double>() > 15.0);

    for (const char* f : {"cli_train.csv", "cli_pair.json", "cli_trace.csv",
                          "cli_ipw.json", "cli_dr.json", "cli_mc.json"}) {
        std::remove(f);
    }
}

TEST_CASE("cross-validated surrogate selection is deterministic and usable") {
    REQUIRE(run({"simulate", "--setting", "1", "--n", "200", "--seed", "21", "--out",
                 "cli_cv.csv"}) == 0);
    CHECK(run({"train", "--data", "cli_cv.csv", "--surrogate", "cv", "--epochs", "3",
               "--batch", "64", "--seed", "2", "--floor", "0.5", "--out",
               "cli_cv_pair.json"}) == 0);
    const std::string pair1 = slurp("cli_cv_pair.json");
    CHECK(run({"train", "--data", "cli_cv.csv", "--surrogate", "cv", "--epochs", "3",
               "--batch", "64", "--seed", "2", "--floor", "0.5", "--out",
               "cli_cv_pair.json"}) == 0);
    CHECK(slurp("cli_cv_pair.json") == pair1);
    std::remove("cli_cv.csv");
    std::remove("cli_cv_pair.json");
}

TEST_CASE("consistency command reports the counterexample verdicts") {
    CHECK(run({"consistency", "--surrogate", "logistic", "--tau", "5,4,6,2", "--out",
               "cli_con.json"}) == 0);
    const nlohmann::json good = nlohmann::json::parse(slurp("cli_con.json"));
    CHECK(good["signs"]["x"] == -1);
    CHECK(good["d_star"]["d1"] == -1);
    CHECK(good["verdict"] == "consistent");

    CHECK(run({"consistency", "--surrogate", "exp-concave", "--tau", "5,4,6,2",
               "--box", "10", "--out", "cli_con2.json"}) == 0);
    const nlohmann::json bad = nlohmann::json::parse(slurp("cli_con2.json"));
    CHECK(bad["signs"]["x"] == 1);
    CHECK(bad["verdict"] == "inconsistent");
    std::remove("cli_con.json");
    std::remove("cli_con2.json");
}

TEST_CASE("benchmark runs replications and reports aggregates") {
    {
        std::ofstream cfg("cli_bench.cfg");
        cfg << "# desk-scale smoke experiment\n"
            << "setting = 1\n"
            << "n_train = 200\n"
            << "n_eval = 400\n"
            << "reps = 2\n"
            << "seed = 11\n"
            << "surrogate = arctan\n"
            << "policy1 = linear\n"
            << "policy2 = linear\n"
            << "epochs = 3\n"
            << "qlearn = linear\n"
            << "out = cli_bench.csv\n";
    }
    CHECK(run({"benchmark", "--config", "cli_bench.cfg", "--threads", "1"}) == 0);
    const std::string report = slurp("cli_bench.csv");
    CHECK(report.rfind("kind,rep,method,scale,value,se,objective,status\n", 0) == 0);
    CHECK(report.find("aggregate,,surrogate-linear/linear") != std::string::npos);
    CHECK(report.find("aggregate,,qlearn-linear") != std::string::npos);

    CHECK(run({"benchmark", "--config", "cli_bench.cfg", "--threads", "2", "--out",
               "cli_bench2.csv"}) == 0);
    CHECK(slurp("cli_bench2.csv") == report);  // thread count cannot change results

    CHECK(run({"report", "--in", "cli_bench.csv", "--out", "cli_agg.csv"}) == 0);
    const std::string agg = slurp("cli_agg.csv");
    CHECK(agg.rfind("method,reps,mean,sd\n", 0) == 0);
    CHECK(agg.find("surrogate-linear/linear,2,") != std::string::npos);

    {
        std::ofstream cfg("cli_bench_bad.cfg");
        cfg << "setting = 1\nreps = 0\nout = never.csv\n";
    }
    CHECK(run({"benchmark", "--config", "cli_bench_bad.cfg"}) == 2);

    for (const char* f : {"cli_bench.cfg", "cli_bench.csv", "cli_bench2.csv",
                          "cli_agg.csv", "cli_bench_bad.cfg"}) {
        std::remove(f);
    }
}

TEST_CASE("failed replications are logged as rows without aborting the run") {
    {
        std::ofstream cfg("cli_bench_fail.cfg");
        cfg << "setting = 1\nn_train = 100\nn_eval = 100\nreps = 2\nepochs = 2\n"
            << "surrogate = hinge\nout = cli_bench_fail.csv\n";  // trainer rejects it
    }
    CHECK(run({"benchmark", "--config", "cli_bench_fail.cfg", "--threads", "1"}) == 0);
    const std::string report = slurp("cli_bench_fail.csv");
    CHECK(report.find("failed: ") != std::string::npos);
    CHECK(report.find("aggregate") == std::string::npos);  // nothing succeeded
    std::remove("cli_bench_fail.cfg");
    std::remove("cli_bench_fail.csv");
}

TEST_CASE("benchmark supports estimator evaluation and fixed datasets") {
    REQUIRE(run({"simulate", "--setting", "3", "--n", "300", "--seed", "8", "--out",
                 "cli_fixed.csv"}) == 0);
    {
        std::ofstream cfg("cli_bench_ipw.cfg");
        cfg << "setting = 3\nn_train = 200\nn_eval = 300\nreps = 2\nseed = 4\n"
            << "epochs = 2\neval = ipw\nout = cli_bench_ipw.csv\n";
    }
    CHECK(run({"benchmark", "--config", "cli_bench_ipw.cfg", "--threads", "1"}) == 0);
    CHECK(slurp("cli_bench_ipw.csv").find("aggregate") != std::string::npos);

    {
        std::ofstream cfg("cli_bench_data.cfg");
        cfg << "data = cli_fixed.csv\nfloor = 0.5\nreps = 2\nseed = 4\nepochs = 2\n"
            << "eval = dr\nout = cli_bench_data.csv\n";
    }
    CHECK(run({"benchmark", "--config", "cli_bench_data.cfg", "--threads", "1"}) == 0);
    CHECK(slurp("cli_bench_data.csv").find("aggregate") != std::string::npos);

    {
        std::ofstream cfg("cli_bench_badmix.cfg");
        cfg << "data = cli_fixed.csv\neval = mc\nreps = 1\n";
    }
    CHECK(run({"benchmark", "--config", "cli_bench_badmix.cfg"}) == 2);

    for (const char* f : {"cli_fixed.csv", "cli_bench_ipw.cfg", "cli_bench_ipw.csv",
                          "cli_bench_data.cfg", "cli_bench_data.csv",
                          "cli_bench_badmix.cfg"}) {
        std::remove(f);
    }
}
