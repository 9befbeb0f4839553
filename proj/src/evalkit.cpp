#include "dtr/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "dtr/linalg.hpp"

namespace dtr {

namespace {

double expit(double x) { return 1.0 / (1.0 + std::exp(-x)); }

ValueEstimate summarize(const std::vector<double>& summands, EstimatorMethod method) {
    const std::size_t n = summands.size();
    double mean = 0.0;
    for (double v : summands) mean += v;
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double v : summands) ss += (v - mean) * (v - mean);
    const double sd = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
    return {mean, sd / std::sqrt(static_cast<double>(n)), method, n};
}

}  // namespace

const char* estimator_method_key(EstimatorMethod m) {
    switch (m) {
        case EstimatorMethod::IpwPlugin: return "ipw";
        case EstimatorMethod::MonteCarlo: return "mc";
        case EstimatorMethod::DoublyRobust: return "dr";
    }
    return "?";
}

ValueEstimate ipw_value(const Dataset& d, const DecisionFn& d1, const DecisionFn& d2) {
    if (d.trajectories.empty()) throw std::invalid_argument("ipw_value: empty dataset");
    std::vector<double> summands;
    summands.reserve(d.size());
    for (const Trajectory& t : d.trajectories) {
        if (t.pi1 < d.positivity_floor || t.pi2 < d.positivity_floor) {
            throw std::invalid_argument("ipw_value: propensity below positivity floor");
        }
        const bool match = d1(build_history(t, 1)) == t.a1 &&
                           d2(build_history(t, 2)) == t.a2;
        summands.push_back(match ? (t.y1 + t.y2) / (t.pi1 * t.pi2) : 0.0);
    }
    return summarize(summands, EstimatorMethod::IpwPlugin);
}

double PropensityModel::prob_plus(const History& h) const {
    double z = weights[0];
    for (std::size_t j = 0; j < h.h.size(); ++j) z += weights[j + 1] * h.h[j];
    const double p = expit(z);
    return std::min(1.0 - clip, std::max(clip, p));
}

double PropensityModel::prob(const History& h, int a) const {
    const double p = prob_plus(h);
    return a == 1 ? p : 1.0 - p;
}

PropensityModel fit_propensity(const Dataset& d, int stage, double clip) {
    if (d.trajectories.empty()) throw std::invalid_argument("fit_propensity: empty dataset");
    const std::size_t n = d.size();
    const std::size_t p = build_history(d.trajectories[0], stage).h.size() + 1;

    std::vector<std::vector<double>> x(n);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Trajectory& t = d.trajectories[i];
        const History h = build_history(t, stage);
        x[i].reserve(p);
        x[i].push_back(1.0);
        x[i].insert(x[i].end(), h.h.begin(), h.h.end());
        y[i] = (stage == 1 ? t.a1 : t.a2) == 1 ? 1.0 : 0.0;
    }

    auto loglik = [&](const std::vector<double>& w) {
        double ll = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double z = 0.0;
            for (std::size_t j = 0; j < p; ++j) z += w[j] * x[i][j];
            // log expit(z) if y=1 else log(1-expit(z)), in a stable form
            ll += y[i] * z - (z > 0.0 ? z + std::log1p(std::exp(-z))
                                      : std::log1p(std::exp(z)));
        }
        return ll;
    };

    PropensityModel m;
    m.stage = stage;
    m.clip = clip;
    std::vector<double> w(p, 0.0);
    std::vector<double> grad(p), hess(p * p);
    double ll = loglik(w);

    for (int iter = 0; iter < 100; ++iter) {
        m.iterations = iter + 1;
        std::fill(grad.begin(), grad.end(), 0.0);
        std::fill(hess.begin(), hess.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            double z = 0.0;
            for (std::size_t j = 0; j < p; ++j) z += w[j] * x[i][j];
            const double pi = expit(z);
            const double r = y[i] - pi;
            const double v = pi * (1.0 - pi);
            for (std::size_t j = 0; j < p; ++j) {
                grad[j] += r * x[i][j];
                for (std::size_t k = 0; k <= j; ++k) {
                    hess[j * p + k] += v * x[i][j] * x[i][k];
                }
            }
        }
        double gmax = 0.0;
        for (double g : grad) gmax = std::max(gmax, std::fabs(g));
        if (gmax < 1e-8) break;
        for (std::size_t j = 0; j < p; ++j) {
            for (std::size_t k = j + 1; k < p; ++k) hess[j * p + k] = hess[k * p + j];
            hess[j * p + j] += 1e-10;
        }
        const std::vector<double> dir = solve_spd(hess, grad);
        double step = 1.0;
        std::vector<double> w_new(p);
        for (int back = 0; back < 30; ++back) {
            for (std::size_t j = 0; j < p; ++j) w_new[j] = w[j] + step * dir[j];
            const double ll_new = loglik(w_new);
            if (ll_new > ll) {
                w = w_new;
                ll = ll_new;
                break;
            }
            step /= 2.0;
        }
        double wmax = 0.0;
        for (double v : w) wmax = std::max(wmax, std::fabs(v));
        if (wmax > 30.0) {
            m.separation_warning = true;
            break;
        }
    }

    // A converged fit that classifies every row to within float resolution is
    // separated as well: the likelihood has no interior maximum.
    if (!m.separation_warning) {
        bool degenerate = true;
        for (std::size_t i = 0; i < n && degenerate; ++i) {
            double z = 0.0;
            for (std::size_t j = 0; j < p; ++j) z += w[j] * x[i][j];
            const double pi = expit(z);
            degenerate = std::fabs(pi - y[i]) < 1e-4;
        }
        if (degenerate) m.separation_warning = true;
    }

    m.weights = w;
    // Standard errors from the inverse observed information.
    std::fill(hess.begin(), hess.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double z = 0.0;
        for (std::size_t j = 0; j < p; ++j) z += w[j] * x[i][j];
        const double pi = expit(z);
        const double v = pi * (1.0 - pi);
        for (std::size_t j = 0; j < p; ++j) {
            for (std::size_t k = 0; k <= j; ++k) hess[j * p + k] += v * x[i][j] * x[i][k];
        }
    }
    for (std::size_t j = 0; j < p; ++j) {
        for (std::size_t k = j + 1; k < p; ++k) hess[j * p + k] = hess[k * p + j];
        hess[j * p + j] += 1e-10;
    }
    m.se.resize(p);
    try {
        const std::vector<double> inv = invert_spd(hess, p);
        for (std::size_t j = 0; j < p; ++j) m.se[j] = std::sqrt(inv[j * p + j]);
    } catch (const std::runtime_error&) {
        m.se.assign(p, std::numeric_limits<double>::quiet_NaN());
        m.separation_warning = true;
    }
    return m;
}

ValueEstimate dr_value(const Dataset& d, const DecisionFn& d1, const DecisionFn& d2,
                       const QFn& q1, const QFn& q2,
                       const PropensityModel* pm1, const PropensityModel* pm2) {
    if (d.trajectories.empty()) throw std::invalid_argument("dr_value: empty dataset");
    std::vector<double> summands;
    summands.reserve(d.size());
    for (const Trajectory& t : d.trajectories) {
        const History h1 = build_history(t, 1);
        const History h2 = build_history(t, 2);
        // Fitted propensities are bounded below by their clip; the dataset
        // floor applies to the stored (known) values.
        const double pi1 = pm1 ? pm1->prob(h1, t.a1) : t.pi1;
        const double pi2 = pm2 ? pm2->prob(h2, t.a2) : t.pi2;
        if ((!pm1 && pi1 < d.positivity_floor) || (!pm2 && pi2 < d.positivity_floor)) {
            throw std::invalid_argument("dr_value: propensity below positivity floor");
        }
        const int dec1 = d1(h1);
        const int dec2 = d2(h2);
        const double q1v = q1(h1, dec1);
        const double q2v = q2(h2, dec2);
        double s = q1v;
        if (t.a1 == dec1) {
            s += (t.y1 - (q1v - q2v)) / pi1;
            if (t.a2 == dec2) s += (t.y2 - q2v) / (pi1 * pi2);
        }
        summands.push_back(s);
    }
    return summarize(summands, EstimatorMethod::DoublyRobust);
}

}  // namespace dtr
