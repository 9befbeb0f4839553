#include "dtr/trainer.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "dtr/rng.hpp"

namespace dtr {

namespace {

void validate_config(const TrainConfig& cfg, std::size_t n) {
    if (cfg.epochs < 1) throw std::invalid_argument("train: epochs must be >= 1");
    if (cfg.batch_size < 1 || static_cast<std::size_t>(cfg.batch_size) > n) {
        throw std::invalid_argument("train: batch_size must be in [1, n]");
    }
    if (!(cfg.learning_rate > 0.0)) throw std::invalid_argument("train: learning_rate must be > 0");
    if (!(cfg.rmsprop_decay > 0.0) || !(cfg.rmsprop_decay < 1.0)) {
        throw std::invalid_argument("train: rmsprop_decay must be in (0,1)");
    }
    if (cfg.l1_lambda < 0.0) throw std::invalid_argument("train: l1_lambda must be >= 0");
}

void check_weights(const Dataset& d) {
    for (std::size_t i = 0; i < d.trajectories.size(); ++i) {
        const Trajectory& t = d.trajectories[i];
        if (t.pi1 < d.positivity_floor || t.pi2 < d.positivity_floor) {
            throw std::invalid_argument("propensity below positivity floor at row " +
                                        std::to_string(i));
        }
    }
}

double sign0(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

}  // namespace

double surrogate_value_hat(const Dataset& d, const SurrogateSpec& s,
                           const PolicyPair& pair) {
    if (d.trajectories.empty()) {
        throw std::invalid_argument("surrogate_value_hat: empty dataset");
    }
    check_weights(d);
    double sum = 0.0;
    for (const Trajectory& t : d.trajectories) {
        const History h1 = build_history(t, 1);
        const History h2 = build_history(t, 2);
        const double w = (t.y1 + t.y2) / (t.pi1 * t.pi2);
        sum += w * psi_eval(s, t.a1 * policy_eval(pair.f1, h1),
                            t.a2 * policy_eval(pair.f2, h2));
    }
    return sum / static_cast<double>(d.trajectories.size());
}

ObjectiveGrad objective_grad(const std::vector<const Trajectory*>& batch,
                             const SurrogateSpec& s, const PolicyPair& pair,
                             double l1_lambda, CounterRng* train_rng) {
    if (!s.is_sigmoid()) {
        throw std::invalid_argument("objective_grad: surrogate has no usable gradient");
    }
    if (batch.empty()) throw std::invalid_argument("objective_grad: empty batch");
    ObjectiveGrad out;
    out.g1.assign(pair.f1.params.size(), 0.0);
    out.g2.assign(pair.f2.params.size(), 0.0);
    std::vector<double> pg1, pg2;
    const double inv_b = 1.0 / static_cast<double>(batch.size());
    for (const Trajectory* t : batch) {
        const History h1 = build_history(*t, 1);
        const History h2 = build_history(*t, 2);
        DropoutMask m1, m2;
        const DropoutMask* pm1 = nullptr;
        const DropoutMask* pm2 = nullptr;
        if (train_rng && pair.f1.kind == PolicyClass::Mlp) {
            m1 = draw_dropout_mask(pair.f1, *train_rng);
            pm1 = &m1;
        }
        if (train_rng && pair.f2.kind == PolicyClass::Mlp) {
            m2 = draw_dropout_mask(pair.f2, *train_rng);
            pm2 = &m2;
        }
        const double f1 = policy_eval_grad(pair.f1, h1, pm1, pg1);
        const double f2 = policy_eval_grad(pair.f2, h2, pm2, pg2);
        const double w = inv_b * (t->y1 + t->y2) / (t->pi1 * t->pi2);
        const auto [dx, dy] = psi_grad(s, t->a1 * f1, t->a2 * f2);
        const double c1 = w * dx * t->a1;
        const double c2 = w * dy * t->a2;
        for (std::size_t i = 0; i < pg1.size(); ++i) out.g1[i] += c1 * pg1[i];
        for (std::size_t i = 0; i < pg2.size(); ++i) out.g2[i] += c2 * pg2[i];
    }
    if (l1_lambda > 0.0) {
        for (std::size_t i = 0; i < out.g1.size(); ++i) {
            out.g1[i] -= l1_lambda * sign0(pair.f1.params[i]);
        }
        for (std::size_t i = 0; i < out.g2.size(); ++i) {
            out.g2[i] -= l1_lambda * sign0(pair.f2.params[i]);
        }
    }
    return out;
}

void RmsProp::ascend(std::vector<double>& theta, const std::vector<double>& g) {
    for (std::size_t i = 0; i < theta.size(); ++i) {
        v[i] = decay * v[i] + (1.0 - decay) * g[i] * g[i];
        theta[i] += lr * g[i] / (std::sqrt(v[i]) + eps);
    }
}

void RmsProp::descend(std::vector<double>& theta, const std::vector<double>& g) {
    for (std::size_t i = 0; i < theta.size(); ++i) {
        v[i] = decay * v[i] + (1.0 - decay) * g[i] * g[i];
        theta[i] -= lr * g[i] / (std::sqrt(v[i]) + eps);
    }
}

TrainResult train_pair(const Dataset& d, PolicyPair pair, const TrainConfig& cfg) {
    const std::size_t n = d.trajectories.size();
    validate_config(cfg, n);
    check_weights(d);
    const SurrogateSpec s = make_surrogate(cfg.surrogate);
    if (!s.is_sigmoid() && !cfg.allow_inconsistent_surrogate) {
        throw std::invalid_argument(
            "train: surrogate '" + surrogate_key(s.kind) +
            "' is outside the consistent family; set allow_inconsistent_surrogate to force");
    }

    TrainResult res;
    res.config_echo = cfg;
    res.initial_objective = surrogate_value_hat(d, s, pair);

    RmsProp opt1{cfg.rmsprop_decay, cfg.rmsprop_eps, cfg.learning_rate, {}};
    RmsProp opt2 = opt1;
    opt1.init(pair.f1.params.size());
    opt2.init(pair.f2.params.size());

    CounterRng shuffle_rng(CounterRng::derive(cfg.seed, 0x5348));
    CounterRng dropout_rng(CounterRng::derive(cfg.seed, 0x4d4b));
    const bool uses_dropout = pair.f1.kind == PolicyClass::Mlp ||
                              pair.f2.kind == PolicyClass::Mlp;

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::vector<const Trajectory*> batch;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        const std::size_t steps = (n + cfg.batch_size - 1) / cfg.batch_size;
        for (std::size_t b = 0; b < steps; ++b) {
            batch.clear();
            const std::size_t lo = b * cfg.batch_size;
            const std::size_t hi = std::min(n, lo + cfg.batch_size);
            for (std::size_t i = lo; i < hi; ++i) {
                batch.push_back(&d.trajectories[order[i]]);
            }
            ObjectiveGrad g = objective_grad(batch, s, pair, cfg.l1_lambda,
                                             uses_dropout ? &dropout_rng : nullptr);
            double norm2 = 0.0;
            for (double v : g.g1) norm2 += v * v;
            for (double v : g.g2) norm2 += v * v;
            if (!std::isfinite(norm2)) {
                throw std::runtime_error("train: non-finite gradient at epoch " +
                                         std::to_string(epoch + 1) + " step " +
                                         std::to_string(b + 1));
            }
            // Global-norm clip guards against early blowups from small weights.
            const double norm = std::sqrt(norm2);
            if (norm > 100.0) {
                const double scale = 100.0 / norm;
                for (double& v : g.g1) v *= scale;
                for (double& v : g.g2) v *= scale;
            }
            opt1.ascend(pair.f1.params, g.g1);
            opt2.ascend(pair.f2.params, g.g2);
        }
        const double obj = surrogate_value_hat(d, s, pair);
        if (!std::isfinite(obj)) {
            throw std::runtime_error("train: non-finite objective after epoch " +
                                     std::to_string(epoch + 1));
        }
        res.objective_trace.push_back(obj);
    }
    res.final_objective = res.objective_trace.back();
    res.pair = std::move(pair);
    return res;
}

TrainResult train(const Dataset& d, PolicyClass class1, PolicyClass class2,
                  const TrainConfig& cfg) {
    PolicyPair pair;
    pair.f1 = make_policy(class1, 1, d, CounterRng::derive(cfg.seed, 1));
    pair.f2 = make_policy(class2, 2, d, CounterRng::derive(cfg.seed, 2));
    return train_pair(d, std::move(pair), cfg);
}

}  // namespace dtr
