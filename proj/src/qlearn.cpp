#include "dtr/qlearn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "dtr/linalg.hpp"
#include "dtr/rng.hpp"
#include "dtr/trainer.hpp"

namespace dtr {

namespace {

std::vector<double> with_intercept(const std::vector<double>& h) {
    std::vector<double> x;
    x.reserve(h.size() + 1);
    x.push_back(1.0);
    x.insert(x.end(), h.begin(), h.end());
    return x;
}

std::vector<double> net_input(const History& h, int a) {
    std::vector<double> x = h.h;
    x.push_back(static_cast<double>(a));
    return x;
}

QModel fit_linear(const Dataset& d, int stage, const std::vector<double>& targets,
                  double ridge) {
    const std::size_t n = d.trajectories.size();
    const std::size_t p = with_intercept(build_history(d.trajectories[0], stage).h).size();
    const std::size_t dim = 2 * p;  // [x, a*x]
    std::vector<double> xtx(dim * dim, 0.0), xty(dim, 0.0), row(dim);
    for (std::size_t i = 0; i < n; ++i) {
        const Trajectory& t = d.trajectories[i];
        const std::vector<double> x = with_intercept(build_history(t, stage).h);
        const double a = stage == 1 ? t.a1 : t.a2;
        for (std::size_t j = 0; j < p; ++j) {
            row[j] = x[j];
            row[p + j] = a * x[j];
        }
        for (std::size_t j = 0; j < dim; ++j) {
            xty[j] += row[j] * targets[i];
            for (std::size_t k = 0; k <= j; ++k) xtx[j * dim + k] += row[j] * row[k];
        }
    }
    for (std::size_t j = 0; j < dim; ++j) {
        for (std::size_t k = j + 1; k < dim; ++k) xtx[j * dim + k] = xtx[k * dim + j];
        xtx[j * dim + j] += ridge;
    }
    std::vector<double> theta;
    try {
        theta = solve_spd(std::move(xtx), std::move(xty));
    } catch (const std::runtime_error&) {
        throw std::runtime_error("fit_q: singular design even after ridge");
    }
    QModel m;
    m.stage = stage;
    m.form = QForm::Linear;
    m.theta0.assign(theta.begin(), theta.begin() + p);
    m.theta1.assign(theta.begin() + p, theta.end());
    m.fitted = true;
    return m;
}

QModel fit_net(const Dataset& d, int stage, const std::vector<double>& targets,
               const QFitConfig& cfg) {
    const std::size_t n = d.trajectories.size();
    const int in_dim = history_dim(stage, d.p1, d.p2) + 1;
    QModel m;
    m.stage = stage;
    m.form = QForm::Mlp;
    std::vector<std::vector<double>> inputs;
    inputs.reserve(n);
    for (const Trajectory& t : d.trajectories) {
        inputs.push_back(net_input(build_history(t, stage), stage == 1 ? t.a1 : t.a2));
    }
    m.net = make_mlp_policy(stage, in_dim, CounterRng::derive(cfg.seed, stage), &inputs);

    RmsProp opt{0.9, 1e-8, cfg.learning_rate, {}};
    opt.init(m.net.params.size());
    CounterRng shuffle_rng(CounterRng::derive(cfg.seed, 0x71 + stage));
    CounterRng dropout_rng(CounterRng::derive(cfg.seed, 0x72 + stage));

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> g(m.net.params.size()), sample_g;
    const int batch = std::min<int>(cfg.batch_size, static_cast<int>(n));
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        const std::size_t steps = (n + batch - 1) / batch;
        for (std::size_t b = 0; b < steps; ++b) {
            std::fill(g.begin(), g.end(), 0.0);
            const std::size_t lo = b * batch;
            const std::size_t hi = std::min(n, lo + batch);
            for (std::size_t i = lo; i < hi; ++i) {
                const Trajectory& t = d.trajectories[order[i]];
                const History h = build_history(t, stage);
                const int a = stage == 1 ? t.a1 : t.a2;
                const DropoutMask mask = draw_dropout_mask(m.net, dropout_rng);
                const double f = mlp_forward_grad(m.net, net_input(h, a), &mask, sample_g);
                const double coef = 2.0 * (f - targets[order[i]]) /
                                    static_cast<double>(hi - lo);
                for (std::size_t j = 0; j < g.size(); ++j) g[j] += coef * sample_g[j];
            }
            double norm2 = 0.0;
            for (double v : g) norm2 += v * v;
            if (!std::isfinite(norm2)) {
                throw std::runtime_error("fit_q: non-finite gradient");
            }
            if (norm2 > 100.0 * 100.0) {
                const double scale = 100.0 / std::sqrt(norm2);
                for (double& v : g) v *= scale;
            }
            opt.descend(m.net.params, g);
        }
    }
    m.fitted = true;
    return m;
}

}  // namespace

double QModel::q(const History& h, int a) const {
    if (!fitted) throw std::logic_error("QModel::q called before fitting");
    if (h.stage != stage) throw std::invalid_argument("QModel stage mismatch");
    if (form == QForm::Linear) {
        const std::vector<double> x = with_intercept(h.h);
        double main = 0.0, inter = 0.0;
        for (std::size_t j = 0; j < x.size(); ++j) {
            main += theta0[j] * x[j];
            inter += theta1[j] * x[j];
        }
        return main + a * inter;
    }
    return mlp_forward(net, net_input(h, a), nullptr);
}

QModel fit_q2(const Dataset& d, QForm form, const QFitConfig& cfg) {
    if (d.trajectories.empty()) throw std::invalid_argument("fit_q2: empty dataset");
    std::vector<double> y(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) y[i] = d.trajectories[i].y2;
    return form == QForm::Linear ? fit_linear(d, 2, y, cfg.ridge)
                                 : fit_net(d, 2, y, cfg);
}

std::vector<double> pseudo_outcome(const Dataset& d, const QModel& q2) {
    std::vector<double> out(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) {
        const Trajectory& t = d.trajectories[i];
        const History h2 = build_history(t, 2);
        out[i] = t.y1 + std::max(q2.q(h2, 1), q2.q(h2, -1));
    }
    return out;
}

QModel fit_q1(const Dataset& d, const std::vector<double>& pseudo, QForm form,
              const QFitConfig& cfg) {
    if (pseudo.size() != d.size()) {
        throw std::invalid_argument("fit_q1: pseudo outcome length mismatch");
    }
    return form == QForm::Linear ? fit_linear(d, 1, pseudo, cfg.ridge)
                                 : fit_net(d, 1, pseudo, cfg);
}

int QPolicy::decide(const History& h) const {
    const QModel& m = h.stage == 1 ? q1 : q2;
    return m.q(h, 1) >= m.q(h, -1) ? 1 : -1;
}

QPolicy q_policy(QModel q1, QModel q2) {
    if (q1.stage != 1 || q2.stage != 2) {
        throw std::invalid_argument("q_policy: stages must be (1, 2)");
    }
    return QPolicy{std::move(q1), std::move(q2)};
}

QPolicy fit_q_learning(const Dataset& d, QForm form, const QFitConfig& cfg) {
    QModel q2 = fit_q2(d, form, cfg);
    const std::vector<double> pseudo = pseudo_outcome(d, q2);
    QModel q1 = fit_q1(d, pseudo, form, cfg);
    return q_policy(std::move(q1), std::move(q2));
}

std::string qmodel_to_json(const QModel& m) {
    nlohmann::json j;
    j["stage"] = m.stage;
    j["form"] = m.form == QForm::Linear ? "linear" : "mlp";
    if (m.form == QForm::Linear) {
        j["theta0"] = m.theta0;
        j["theta1"] = m.theta1;
    } else {
        j["net"] = nlohmann::json::parse(policy_to_json(m.net));
    }
    return j.dump();
}

QModel qmodel_from_json(const std::string& text) {
    const nlohmann::json j = nlohmann::json::parse(text);
    QModel m;
    m.stage = j.at("stage").get<int>();
    if (j.at("form") == "linear") {
        m.form = QForm::Linear;
        m.theta0 = j.at("theta0").get<std::vector<double>>();
        m.theta1 = j.at("theta1").get<std::vector<double>>();
    } else {
        m.form = QForm::Mlp;
        m.net = policy_from_json(j.at("net").dump());
    }
    m.fitted = true;
    return m;
}

}  // namespace dtr
