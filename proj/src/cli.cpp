#include "dtr/cli.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dtr/consistency.hpp"
#include "dtr/core.hpp"
#include "dtr/evalkit.hpp"
#include "dtr/policy.hpp"
#include "dtr/qlearn.hpp"
#include "dtr/rng.hpp"
#include "dtr/simlab.hpp"
#include "dtr/surrogate.hpp"
#include "dtr/trainer.hpp"

namespace dtr {

namespace {

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path);
    f << text;
    if (!f) throw std::runtime_error("write failed for " + path);
}

std::string read_text(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path);
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

DecisionFn pair_decision(const Policy& p) {
    return [p](const History& h) { return decide(p, h); };
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

struct SimulateArgs {
    int setting = 1;
    std::size_t n = 100;
    std::uint64_t seed = 0;
    std::string out;
};

int run_simulate(const SimulateArgs& a) {
    const Dataset d = generate({a.setting, a.n, a.seed});
    write_csv(d, a.out);
    std::cout << "wrote " << d.size() << " rows to " << a.out << " (offset "
              << fmt(d.offset) << ", positivity floor " << fmt(d.positivity_floor)
              << ")\n";
    return 0;
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

struct TrainArgs {
    std::string data;
    std::string surrogate = "arctan";
    std::string policy1 = "linear";
    std::string policy2 = "linear";
    TrainConfig cfg;
    double offset = 0.0;
    double floor = 1e-3;
    std::string out;
    std::string trace;
};

// Five-fold selection among the sigmoid-family keys: folds stratified by the
// observed stage-1 action, held-out ipw value as the selection criterion.
std::string cv_select_surrogate(const Dataset& d, const TrainArgs& a) {
    const std::vector<std::string> keys = {"rational", "arctan", "algebraic",
                                           "logistic"};
    constexpr int kFolds = 5;
    std::vector<int> fold(d.size(), 0);
    {
        CounterRng rng(CounterRng::derive(a.cfg.seed, 0xcf5e));
        std::vector<std::size_t> strata[2];
        for (std::size_t i = 0; i < d.size(); ++i) {
            strata[d.trajectories[i].a1 == 1 ? 0 : 1].push_back(i);
        }
        int next = 0;
        for (auto& s : strata) {
            rng.shuffle(s);
            for (std::size_t idx : s) fold[idx] = next++ % kFolds;
        }
    }

    std::string best_key;
    double best_value = -1e300;
    for (const std::string& key : keys) {
        double held_sum = 0.0;
        std::size_t held_n = 0;
        for (int f = 0; f < kFolds; ++f) {
            Dataset train_d, test_d;
            train_d.p1 = test_d.p1 = d.p1;
            train_d.p2 = test_d.p2 = d.p2;
            train_d.offset = test_d.offset = d.offset;
            train_d.positivity_floor = test_d.positivity_floor = d.positivity_floor;
            for (std::size_t i = 0; i < d.size(); ++i) {
                (fold[i] == f ? test_d : train_d).trajectories.push_back(d.trajectories[i]);
            }
            if (train_d.trajectories.empty() || test_d.trajectories.empty()) continue;
            TrainConfig cfg = a.cfg;
            cfg.surrogate = surrogate_from_key(key).kind;
            cfg.batch_size = std::min<int>(cfg.batch_size,
                                           static_cast<int>(train_d.size()));
            cfg.seed = CounterRng::derive(a.cfg.seed, 0xcf00 + f);
            const TrainResult res = train(train_d, policy_class_from_key(a.policy1),
                                          policy_class_from_key(a.policy2), cfg);
            const ValueEstimate est =
                ipw_value(test_d, pair_decision(res.pair.f1), pair_decision(res.pair.f2));
            held_sum += est.value * static_cast<double>(est.n_used);
            held_n += est.n_used;
        }
        const double held = held_n > 0 ? held_sum / static_cast<double>(held_n) : -1e300;
        if (held > best_value) {
            best_value = held;
            best_key = key;
        }
    }
    std::cout << "cross-validation picked surrogate '" << best_key
              << "' (held-out value " << fmt(best_value) << ")\n";
    return best_key;
}

int run_train(const TrainArgs& a) {
    Dataset d = read_csv(a.data, a.floor, a.offset);
    TrainConfig cfg = a.cfg;
    const std::string key = a.surrogate == "cv" ? cv_select_surrogate(d, a) : a.surrogate;
    cfg.surrogate = surrogate_from_key(key).kind;
    const TrainResult res = train(d, policy_class_from_key(a.policy1),
                                  policy_class_from_key(a.policy2), cfg);
    write_text(a.out, pair_to_json(res.pair, d.offset));
    if (!a.trace.empty()) {
        std::ostringstream os;
        os << "epoch,objective\n0," << fmt(res.initial_objective) << "\n";
        for (std::size_t e = 0; e < res.objective_trace.size(); ++e) {
            os << (e + 1) << "," << fmt(res.objective_trace[e]) << "\n";
        }
        write_text(a.trace, os.str());
    }
    std::cout << "final objective " << fmt(res.final_objective) << " (initial "
              << fmt(res.initial_objective) << "); policy pair written to " << a.out
              << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

struct EvaluateArgs {
    std::string method = "ipw";
    std::string policy;
    std::string data;
    int setting = 0;
    std::size_t n_eval = 10000;
    std::uint64_t seed = 0;
    std::string q_form = "linear";
    std::string propensity = "known";
    double floor = 1e-3;
    std::string out;
};

int run_evaluate(const EvaluateArgs& a) {
    if (a.method != "ipw" && a.method != "dr" && a.method != "mc") {
        throw CLI::ValidationError("evaluate", "--method must be ipw, dr or mc");
    }
    double pair_offset = 0.0;
    const PolicyPair pair = pair_from_json(read_text(a.policy), &pair_offset);
    const DecisionFn d1 = pair_decision(pair.f1);
    const DecisionFn d2 = pair_decision(pair.f2);

    ValueEstimate est;
    if (a.method == "mc") {
        if (a.setting < 1) throw CLI::ValidationError("evaluate", "--setting required for mc");
        est = mc_value(a.setting, d1, d2, a.n_eval, a.seed, pair_offset);
    } else {
        if (a.data.empty()) throw CLI::ValidationError("evaluate", "--data required");
        const Dataset d = read_csv(a.data, a.floor, pair_offset);
        if (a.method == "ipw") {
            est = ipw_value(d, d1, d2);
        } else if (a.method == "dr") {
            const QForm form = a.q_form == "mlp" ? QForm::Mlp : QForm::Linear;
            const QPolicy qp = fit_q_learning(d, form, QFitConfig{20, 128, 1e-3, a.seed, 1e-8});
            const QFn q1 = [&qp](const History& h, int act) { return qp.q1.q(h, act); };
            const QFn q2 = [&qp](const History& h, int act) { return qp.q2.q(h, act); };
            if (a.propensity == "fit") {
                const PropensityModel pm1 = fit_propensity(d, 1);
                const PropensityModel pm2 = fit_propensity(d, 2);
                est = dr_value(d, d1, d2, q1, q2, &pm1, &pm2);
            } else {
                est = dr_value(d, d1, d2, q1, q2);
            }
        } else {
            throw CLI::ValidationError("evaluate", "--method must be ipw, dr or mc");
        }
    }
    nlohmann::json j;
    j["value"] = est.value;
    j["sd"] = est.sd;
    j["method"] = estimator_method_key(est.method);
    j["n"] = est.n_used;
    const std::string text = j.dump();
    std::cout << text << "\n";
    if (!a.out.empty()) write_text(a.out, text);
    return 0;
}

// ---------------------------------------------------------------------------
// benchmark
// ---------------------------------------------------------------------------

struct RepRow {
    int rep = 0;
    std::string method;
    double value = 0.0;
    double se = 0.0;
    double objective = 0.0;
    std::string status = "ok";
};

struct BenchmarkSpec {
    int setting = 1;
    std::string data;  // dataset path alternative to a setting id
    std::size_t n_train = 2500;
    std::size_t n_eval = 10000;
    int reps = 50;
    std::uint64_t seed = 0;
    std::string surrogate = "arctan";
    std::string policy1 = "linear";
    std::string policy2 = "linear";
    std::string eval = "mc";  // mc | ipw | dr
    double floor = 1e-3;
    TrainConfig cfg;
    std::string qlearn = "none";
    std::string scale = "desk";
    std::string out = "benchmark.csv";
};

BenchmarkSpec load_benchmark_spec(const std::string& path) {
    const std::map<std::string, std::string> kv = parse_config(path);
    BenchmarkSpec b;
    auto get = [&](const char* key) -> const std::string* {
        const auto it = kv.find(key);
        return it == kv.end() ? nullptr : &it->second;
    };
    try {
        if (const auto* v = get("setting")) b.setting = std::stoi(*v);
        if (const auto* v = get("data")) b.data = *v;
        if (const auto* v = get("n_train")) b.n_train = std::stoul(*v);
        if (const auto* v = get("n_eval")) b.n_eval = std::stoul(*v);
        if (const auto* v = get("reps")) b.reps = std::stoi(*v);
        if (const auto* v = get("seed")) b.seed = std::stoull(*v);
        if (const auto* v = get("surrogate")) b.surrogate = *v;
        if (const auto* v = get("policy1")) b.policy1 = *v;
        if (const auto* v = get("policy2")) b.policy2 = *v;
        if (const auto* v = get("eval")) b.eval = *v;
        if (const auto* v = get("floor")) b.floor = std::stod(*v);
        if (const auto* v = get("epochs")) b.cfg.epochs = std::stoi(*v);
        if (const auto* v = get("batch_size")) b.cfg.batch_size = std::stoi(*v);
        if (const auto* v = get("learning_rate")) b.cfg.learning_rate = std::stod(*v);
        if (const auto* v = get("l1_lambda")) b.cfg.l1_lambda = std::stod(*v);
        if (const auto* v = get("qlearn")) b.qlearn = *v;
        if (const auto* v = get("scale")) b.scale = *v;
        if (const auto* v = get("out")) b.out = *v;
    } catch (const std::exception&) {
        throw CLI::ValidationError("benchmark", "malformed value in config " + path);
    }
    if (b.data.empty() && (b.setting < 1 || b.setting > 5)) {
        throw CLI::ValidationError("benchmark", "setting must be 1..5");
    }
    if (b.reps < 1) throw CLI::ValidationError("benchmark", "reps must be >= 1");
    if (b.qlearn != "none" && b.qlearn != "linear" && b.qlearn != "mlp") {
        throw CLI::ValidationError("benchmark", "qlearn must be none, linear or mlp");
    }
    if (b.eval != "mc" && b.eval != "ipw" && b.eval != "dr") {
        throw CLI::ValidationError("benchmark", "eval must be mc, ipw or dr");
    }
    if (!b.data.empty() && b.eval == "mc") {
        throw CLI::ValidationError("benchmark",
                                   "mc evaluation needs a setting; use eval = ipw or dr");
    }
    return b;
}

std::vector<RepRow> run_benchmark_rep(const BenchmarkSpec& b, int rep) {
    std::vector<RepRow> rows;
    const std::uint64_t sub = CounterRng::derive(b.seed, static_cast<std::uint64_t>(rep));
    try {
        const Dataset data = b.data.empty() ? generate({b.setting, b.n_train, sub})
                                            : read_csv(b.data, b.floor);

        // evaluation of a decision pair under the configured method
        auto evaluate = [&](const DecisionFn& d1, const DecisionFn& d2,
                            std::uint64_t eval_seed) -> ValueEstimate {
            if (b.eval == "mc") {
                return mc_value(b.setting, d1, d2, b.n_eval, eval_seed, data.offset);
            }
            const Dataset eval_d = b.data.empty()
                                       ? generate({b.setting, b.n_eval, eval_seed})
                                       : data;
            if (b.eval == "ipw") return ipw_value(eval_d, d1, d2);
            const QPolicy qp =
                fit_q_learning(eval_d, QForm::Linear, QFitConfig{20, 128, 1e-3, eval_seed, 1e-8});
            const QFn q1 = [&qp](const History& h, int a) { return qp.q1.q(h, a); };
            const QFn q2 = [&qp](const History& h, int a) { return qp.q2.q(h, a); };
            return dr_value(eval_d, d1, d2, q1, q2);
        };

        TrainConfig cfg = b.cfg;
        cfg.surrogate = surrogate_from_key(b.surrogate).kind;
        cfg.seed = sub;
        const TrainResult res = train(data, policy_class_from_key(b.policy1),
                                      policy_class_from_key(b.policy2), cfg);
        const ValueEstimate est =
            evaluate(pair_decision(res.pair.f1), pair_decision(res.pair.f2),
                     CounterRng::derive(sub, 0xe0a1));
        rows.push_back({rep, "surrogate-" + b.policy1 + "/" + b.policy2, est.value,
                        est.sd, res.final_objective, "ok"});
        if (b.qlearn != "none") {
            const QForm form = b.qlearn == "mlp" ? QForm::Mlp : QForm::Linear;
            const QPolicy qp = fit_q_learning(data, form, QFitConfig{20, 128, 1e-3, sub, 1e-8});
            const DecisionFn qd = [&qp](const History& h) { return qp.decide(h); };
            const ValueEstimate qest = evaluate(qd, qd, CounterRng::derive(sub, 0xe0a2));
            rows.push_back({rep, "qlearn-" + b.qlearn, qest.value, qest.sd, 0.0, "ok"});
        }
    } catch (const std::exception& e) {
        rows.push_back({rep, "surrogate-" + b.policy1 + "/" + b.policy2, 0.0, 0.0, 0.0,
                        std::string("failed: ") + e.what()});
    }
    return rows;
}

int run_benchmark(const std::string& config_path, int threads, const std::string& out_override) {
    BenchmarkSpec b = load_benchmark_spec(config_path);
    if (!out_override.empty()) b.out = out_override;
    if (threads < 1) threads = static_cast<int>(std::thread::hardware_concurrency());
    if (threads < 1) threads = 1;

    std::vector<std::vector<RepRow>> results(b.reps);
    std::atomic<int> next{0};
    auto worker = [&]() {
        for (;;) {
            const int rep = next.fetch_add(1);
            if (rep >= b.reps) return;
            results[rep] = run_benchmark_rep(b, rep);
        }
    };
    std::vector<std::thread> pool;
    const int nthreads = std::min(threads, b.reps);
    pool.reserve(nthreads);
    for (int i = 0; i < nthreads; ++i) pool.emplace_back(worker);
    for (std::thread& th : pool) th.join();

    std::ostringstream os;
    os << "kind,rep,method,scale,value,se,objective,status\n";
    std::map<std::string, std::vector<double>> by_method;
    std::map<std::string, std::vector<double>> obj_by_method;
    for (const std::vector<RepRow>& rows : results) {
        for (const RepRow& r : rows) {
            std::string status = r.status;
            for (char& c : status) {
                if (c == ',' || c == '\n') c = ';';
            }
            os << "rep," << r.rep << "," << r.method << "," << b.scale << ","
               << fmt(r.value) << "," << fmt(r.se) << "," << fmt(r.objective) << ","
               << status << "\n";
            if (r.status == "ok") {
                by_method[r.method].push_back(r.value);
                obj_by_method[r.method].push_back(r.objective);
            }
        }
    }
    for (const auto& [method, vals] : by_method) {
        double mean = 0.0;
        for (double v : vals) mean += v;
        mean /= static_cast<double>(vals.size());
        double ss = 0.0;
        for (double v : vals) ss += (v - mean) * (v - mean);
        const double sd = vals.size() > 1
                              ? std::sqrt(ss / static_cast<double>(vals.size() - 1))
                              : 0.0;
        double obj = 0.0;
        for (double v : obj_by_method[method]) obj += v;
        obj /= static_cast<double>(vals.size());
        os << "aggregate,," << method << "," << b.scale << "," << fmt(mean) << ","
           << fmt(sd) << "," << fmt(obj) << ",ok(" << vals.size() << "/" << b.reps
           << ")\n";
    }
    write_text(b.out, os.str());
    std::cout << "benchmark report written to " << b.out << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// consistency
// ---------------------------------------------------------------------------

struct ConsistencyArgs {
    std::string surrogate = "logistic";
    std::string tau = "1,1,1,1";
    double box = 50.0;
    double step = 0.5;
    std::string out;
};

int run_consistency(const ConsistencyArgs& a) {
    TauVector tau;
    {
        std::istringstream is(a.tau);
        std::string tok;
        int i = 0;
        while (std::getline(is, tok, ',')) {
            if (i >= 4) break;
            try {
                tau.tau[i++] = std::stod(tok);
            } catch (const std::exception&) {
                throw CLI::ValidationError("consistency", "malformed --tau component");
            }
        }
        if (i != 4 || !tau.positive()) {
            throw CLI::ValidationError("consistency",
                                       "--tau must be four positive comma-separated reals");
        }
    }
    const SurrogateSpec s = surrogate_from_key(a.surrogate);
    const MaximizeResult r = maximize_psi_transform(s, tau, a.box, a.step);
    const TauRule rule = optimal_rule_from_tau(tau);
    auto sgn = [](double v) { return v > 0.0 ? 1 : (v < 0.0 ? -1 : 0); };
    const int sign_x_as_action = r.x >= 0.0 ? 1 : -1;  // tie convention

    nlohmann::json j;
    j["surrogate"] = a.surrogate;
    j["tau"] = tau.tau;
    j["maximizer"] = {{"x", r.x}, {"y", r.y}, {"z", r.z}, {"value", r.value}};
    j["signs"] = {{"x", sgn(r.x)}, {"y", sgn(r.y)}, {"z", sgn(r.z)}};
    j["d_star"] = {{"d1", rule.d1},
                   {"d2_given_a1_plus", rule.d2_given_a1_plus},
                   {"d2_given_a1_minus", rule.d2_given_a1_minus}};
    j["verdict"] = sign_x_as_action == rule.d1 ? "consistent" : "inconsistent";
    const std::string text = j.dump();
    std::cout << text << "\n";
    if (!a.out.empty()) write_text(a.out, text);
    return 0;
}

// ---------------------------------------------------------------------------
// report
// ---------------------------------------------------------------------------

int run_report(const std::string& in_path, const std::string& out_path) {
    std::ifstream f(in_path);
    if (!f) throw std::runtime_error("cannot open " + in_path);
    std::string line;
    if (!std::getline(f, line) || line.rfind("kind,rep,method", 0) != 0) {
        throw std::runtime_error("not a benchmark report: " + in_path);
    }
    std::map<std::string, std::vector<double>> by_method;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::istringstream is(line);
        std::string kind, rep, method, scale, value, se, obj, status;
        std::getline(is, kind, ',');
        std::getline(is, rep, ',');
        std::getline(is, method, ',');
        std::getline(is, scale, ',');
        std::getline(is, value, ',');
        std::getline(is, se, ',');
        std::getline(is, obj, ',');
        std::getline(is, status, ',');
        if (kind == "rep" && status == "ok") by_method[method].push_back(std::stod(value));
    }
    std::ostringstream os;
    os << "method,reps,mean,sd\n";
    for (const auto& [method, vals] : by_method) {
        double mean = 0.0;
        for (double v : vals) mean += v;
        mean /= static_cast<double>(vals.size());
        double ss = 0.0;
        for (double v : vals) ss += (v - mean) * (v - mean);
        const double sd = vals.size() > 1
                              ? std::sqrt(ss / static_cast<double>(vals.size() - 1))
                              : 0.0;
        os << method << "," << vals.size() << "," << fmt(mean) << "," << fmt(sd) << "\n";
    }
    std::cout << os.str();
    if (!out_path.empty()) write_text(out_path, os.str());
    return 0;
}

}  // namespace

std::map<std::string, std::string> parse_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open config " + path);
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(f, line)) {
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            const std::size_t b = s.find_first_not_of(" \t\r");
            const std::size_t e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (!key.empty()) kv[key] = val;
    }
    return kv;
}

int cli_main(int argc, const char* const* argv) {
    CLI::App app{"two-stage treatment-regime estimation toolkit"};
    app.require_subcommand(1);

    SimulateArgs sim;
    CLI::App* c_sim = app.add_subcommand("simulate", "draw a dataset from a built-in setting");
    c_sim->add_option("--setting", sim.setting, "setting id")->required()->check(CLI::Range(1, 5));
    c_sim->add_option("--n", sim.n, "number of trajectories")->required()
        ->check(CLI::PositiveNumber);
    c_sim->add_option("--seed", sim.seed, "stream seed");
    c_sim->add_option("--out", sim.out, "output CSV path")->required();

    TrainArgs tr;
    CLI::App* c_tr = app.add_subcommand("train", "fit a policy pair by surrogate-value ascent");
    c_tr->add_option("--data", tr.data, "training CSV")->required();
    c_tr->add_option("--surrogate", tr.surrogate,
                     "surrogate key, or 'cv' for five-fold selection");
    c_tr->add_option("--policy1", tr.policy1, "stage-1 class");
    c_tr->add_option("--policy2", tr.policy2, "stage-2 class");
    c_tr->add_option("--epochs", tr.cfg.epochs, "training epochs");
    c_tr->add_option("--batch", tr.cfg.batch_size, "minibatch size");
    c_tr->add_option("--lr", tr.cfg.learning_rate, "learning rate");
    c_tr->add_option("--l1", tr.cfg.l1_lambda, "lasso penalty weight");
    c_tr->add_option("--seed", tr.cfg.seed, "training seed");
    c_tr->add_flag("--allow-inconsistent", tr.cfg.allow_inconsistent_surrogate,
                   "permit comparator surrogates");
    c_tr->add_option("--offset", tr.offset, "reward offset already applied to the data");
    c_tr->add_option("--floor", tr.floor, "positivity floor of the data");
    c_tr->add_option("--out", tr.out, "output pair JSON")->required();
    c_tr->add_option("--trace", tr.trace, "objective trace CSV");

    EvaluateArgs ev;
    CLI::App* c_ev = app.add_subcommand("evaluate", "estimate the value of a policy pair");
    c_ev->add_option("--method", ev.method, "ipw, dr or mc")->required();
    c_ev->add_option("--policy", ev.policy, "pair JSON path")->required();
    c_ev->add_option("--data", ev.data, "dataset CSV (ipw/dr)");
    c_ev->add_option("--setting", ev.setting, "setting id (mc)")->check(CLI::Range(1, 5));
    c_ev->add_option("--n-eval", ev.n_eval, "mc sample size")->check(CLI::PositiveNumber);
    c_ev->add_option("--seed", ev.seed, "mc stream seed");
    c_ev->add_option("--q-form", ev.q_form, "outcome model for dr: linear or mlp");
    c_ev->add_option("--propensity", ev.propensity, "dr propensities: known or fit");
    c_ev->add_option("--floor", ev.floor, "positivity floor of the data");
    c_ev->add_option("--out", ev.out, "also write the JSON report here");

    std::string bench_config;
    int bench_threads = 0;
    std::string bench_out;
    CLI::App* c_be = app.add_subcommand("benchmark", "replicated train/evaluate experiment");
    c_be->add_option("--config", bench_config, "key=value experiment file")->required();
    c_be->add_option("--threads", bench_threads, "worker pool size (default: cpu count)");
    c_be->add_option("--out", bench_out, "override report path");

    ConsistencyArgs co;
    CLI::App* c_co = app.add_subcommand("consistency", "transform maximizer diagnostics");
    c_co->add_option("--surrogate", co.surrogate, "surrogate key")->required();
    c_co->add_option("--tau", co.tau, "four positive weights a,b,c,d")->required();
    c_co->add_option("--box", co.box, "search box half-width");
    c_co->add_option("--step", co.step, "coarse grid step");
    c_co->add_option("--out", co.out, "also write the JSON report here");

    std::string report_in, report_out;
    CLI::App* c_re = app.add_subcommand("report", "aggregate a benchmark report");
    c_re->add_option("--in", report_in, "per-rep report CSV")->required();
    c_re->add_option("--out", report_out, "write the aggregate CSV here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*c_sim) return run_simulate(sim);
        if (*c_tr) return run_train(tr);
        if (*c_ev) return run_evaluate(ev);
        if (*c_be) return run_benchmark(bench_config, bench_threads, bench_out);
        if (*c_co) return run_consistency(co);
        if (*c_re) return run_report(report_in, report_out);
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 2;
}

}  // namespace dtr
