#include "dtr/simlab.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <tuple>

#include "dtr/rng.hpp"

namespace dtr {

namespace {

constexpr std::uint64_t kGenStream = 0x4745;  // generate()
constexpr std::uint64_t kMcStream = 0x4d43;   // mc_value()

double expit(double x) { return 1.0 / (1.0 + std::exp(-x)); }
double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }
double sgn0(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

// E|Z| for Z ~ N(mu, sigma^2).
double folded_mean(double mu, double sigma) {
    return sigma * std::sqrt(2.0 / M_PI) * std::exp(-mu * mu / (2.0 * sigma * sigma)) +
           mu * (1.0 - 2.0 * norm_cdf(-mu / sigma));
}

// ---------------------------------------------------------------------------
// Setting 5 coefficient blocks. Printed vectors shorter than their history
// blocks pair against the leading entries; the tilde-coefficient on the
// extra treatment-model term is zero (the term is dropped) and the scalar
// inside c2 is taken as 1.0. The nonlinear outcome term uses the second
// base covariate.
// ---------------------------------------------------------------------------
const double kB1[4] = {-0.1, 1.0, -1.0, 0.1};                      // vs (1,x1,x2,x3)
const double kC1[7] = {0.5, 0.2, -1.0, -1.0, 0.1, -0.1, 0.1};      // vs (1,x1..x6)
const double kD1[6] = {1.0, -2.0, -2.0, -0.1, 0.1, -1.5};          // vs (1,x2..x6)
const double kB2[6] = {0.0, 0.5, 0.1, -1.0, 1.0, -0.1};            // vs (y1,1,x1,x2,x3,x4)
const double kBeta1 = 1.0;
const double kC2[5] = {1.0, kBeta1, 0.25, -1.0, -0.5};             // vs (y1,1,x1,x2,x3)
const double kD2[8] = {1.0, 0.1, -0.1, 0.1, -0.1, 0.25, -1.0, -0.5};  // vs (1,x1..x4,a1,z21,z22)
const double kCtilde2 = 1.0;
const double kSigmaZ = 0.9;
const double kRhoZ = 0.1;

double s5_mean_y1(const std::vector<double>& x, int a1) {
    double m = kC1[0];
    for (int j = 0; j < 6; ++j) m += kC1[j + 1] * x[j];
    double d = kD1[0];
    for (int j = 0; j < 5; ++j) d += kD1[j + 1] * x[j + 1];  // (1, x2..x6)
    return m + a1 * d;
}

double s5_stage2_score(const std::vector<double>& x, int a1, double z21, double z22) {
    double s = kD2[0];
    for (int j = 0; j < 4; ++j) s += kD2[j + 1] * x[j];
    s += kD2[5] * a1 + kD2[6] * z21 + kD2[7] * z22;
    return s;
}

double s5_mean_y2_base(const std::vector<double>& x, double y1) {
    const double lin = kC2[0] * y1 + kC2[1] + kC2[2] * x[0] + kC2[3] * x[1] + kC2[4] * x[2];
    return lin + kCtilde2 * x[1] * y1 * std::sin(x[1] * x[1] / (y1 + 1.0));
}

// ---------------------------------------------------------------------------
// One episode per setting; action callbacks return (action, propensity).
// The draw order follows the episode order o1, a1, y1, o2, a2, y2, so a
// fixed per-trajectory stream reproduces bit-for-bit.
// ---------------------------------------------------------------------------

using ActFn = std::function<std::pair<int, double>(const History&)>;

Trajectory draw_one(int id, CounterRng& rng, const ActFn& act1, const ActFn& act2,
                    double feature_offset) {
    Trajectory t;
    switch (id) {
        case 1: {
            const double x11 = rng.rademacher(), x12 = rng.rademacher(),
                         x13 = rng.rademacher();
            t.o1 = {x11, x12, x13};
            std::tie(t.a1, t.pi1) = act1({1, t.o1});
            t.y1 = rng.bernoulli(expit((x13 - 0.5 * x12) * t.a1)) ? 1.0 : 0.0;
            const double x21 = -1.75 * x12 * t.a1 + rng.normal() > 0.0 ? 1.0 : 0.0;
            t.o2 = {x21};
            break;
        }
        case 2: {
            const double x1 = rng.normal();
            t.o1 = {x1};
            std::tie(t.a1, t.pi1) = act1({1, t.o1});
            t.y1 = t.a1 * (2.0 * (std::fabs(x1) < 1.0) - 1.0) + rng.normal();
            t.o2 = {rng.normal()};
            break;
        }
        case 3: {
            const double x11 = rng.normal(), x12 = rng.normal(), x13 = rng.normal();
            t.o1 = {x11, x12, x13};
            std::tie(t.a1, t.pi1) = act1({1, t.o1});
            t.y1 = 10.0 + t.a1 * (1.0 + 1.5 * x13) + rng.normal();
            const double x21 = 1.25 * x11 * t.a1 + rng.normal() > 0.0 ? 1.0 : 0.0;
            const double x22 = -1.75 * x12 * t.a1 + rng.normal() > 0.0 ? 1.0 : 0.0;
            t.o2 = {x21, x22};
            break;
        }
        case 4: {
            const double x11 = rng.normal(), x12 = rng.normal(), x13 = rng.normal();
            t.o1 = {x11, x12, x13};
            std::tie(t.a1, t.pi1) = act1({1, t.o1});
            t.y1 = 2.0 + t.a1 * (1.0 + 1.5 * (x13 > 0.0)) + rng.normal();
            t.o2 = {rng.normal()};
            break;
        }
        case 5: {
            const double g0 = rng.normal();
            t.o1.resize(6);
            for (int j = 0; j < 6; ++j) {
                t.o1[j] = std::floor(std::sqrt(kRhoZ) * g0 + kSigmaZ * rng.normal());
            }
            std::tie(t.a1, t.pi1) = act1({1, t.o1});
            t.y1 = s5_mean_y1(t.o1, t.a1) + rng.normal();
            const double z21 = 1.25 * t.o1[0] + rng.normal() > 0.0 ? 1.0 : 0.0;
            const double z22 = -1.75 * t.o1[1] + rng.normal() > 0.0 ? 1.0 : 0.0;
            t.o2 = {z21, z22};
            break;
        }
        default:
            throw std::invalid_argument("unknown setting id " + std::to_string(id));
    }

    Trajectory shifted = t;
    shifted.y1 += feature_offset;
    std::tie(t.a2, t.pi2) = act2(build_history(shifted, 2));

    switch (id) {
        case 1: {
            const double logit =
                (0.5 * t.o1[0] + t.o1[1] - 0.2 * t.o2[0] + t.y1) * t.a2;
            t.y2 = rng.bernoulli(expit(logit)) ? 1.0 : 0.0;
            break;
        }
        case 2: {
            t.y2 = t.a2 * (2.0 * (t.o2[0] > t.o1[0] * t.o1[0]) - 1.0) + rng.normal();
            break;
        }
        case 3: {
            const double blip = -0.5 + 0.5 * t.y1 + 0.5 * t.a1 + 0.5 * t.o2[0] -
                                0.5 * t.o2[1];
            t.y2 = 10.0 + t.a2 * blip + rng.normal();
            break;
        }
        case 4: {
            const double stage1 = t.a1 * (1.0 + 1.5 * (t.o1[2] > 0.0));
            const double s = sgn0(0.01 * t.o1[1] * t.o1[1] - 0.05 * t.o1[2] * t.o1[2]);
            t.y2 = 2.0 + stage1 + 10.0 * t.a2 * s + t.o2[0] + rng.normal();
            break;
        }
        case 5: {
            const double score = s5_stage2_score(t.o1, t.a1, t.o2[0], t.o2[1]);
            t.y2 = s5_mean_y2_base(t.o1, t.y1) + t.a2 * score + rng.normal();
            break;
        }
    }
    return t;
}

ActFn coin_action(CounterRng& rng) {
    return [&rng](const History&) -> std::pair<int, double> {
        return {rng.rademacher(), 0.5};
    };
}

ActFn setting5_act1(CounterRng& rng) {
    return [&rng](const History& h) -> std::pair<int, double> {
        double z = kB1[0];
        for (int j = 0; j < 3; ++j) z += kB1[j + 1] * h.h[j];
        const double p = expit(z);
        const int a = rng.bernoulli(p) ? 1 : -1;
        return {a, a == 1 ? p : 1.0 - p};
    };
}

ActFn setting5_act2(CounterRng& rng) {
    return [&rng](const History& h) -> std::pair<int, double> {
        // h = (x1..x6, y1, z21, z22, a1); model reads (y1, 1, x1, x2, x3, x4)
        const double z = kB2[0] * h.h[6] + kB2[1] + kB2[2] * h.h[0] + kB2[3] * h.h[1] +
                         kB2[4] * h.h[2] + kB2[5] * h.h[3];
        const double p = expit(z);
        const int a = rng.bernoulli(p) ? 1 : -1;
        return {a, a == 1 ? p : 1.0 - p};
    };
}

ActFn forced_action(const DecisionFn& d) {
    return [&d](const History& h) -> std::pair<int, double> { return {d(h), 1.0}; };
}

}  // namespace

Dataset generate(const SettingSpec& spec) {
    if (spec.id < 1 || spec.id > 5) {
        throw std::invalid_argument("generate: setting id must be 1..5");
    }
    if (spec.n < 1) throw std::invalid_argument("generate: n must be >= 1");

    Dataset d;
    d.trajectories.reserve(spec.n);
    const std::uint64_t base = CounterRng::derive(spec.seed, kGenStream + spec.id);
    double min_reward = 1e300;
    double min_pi = 1.0;
    for (std::size_t i = 0; i < spec.n; ++i) {
        CounterRng rng(CounterRng::derive(base, i));
        Trajectory t;
        if (spec.id == 5) {
            t = draw_one(5, rng, setting5_act1(rng), setting5_act2(rng), 0.0);
        } else {
            t = draw_one(spec.id, rng, coin_action(rng), coin_action(rng), 0.0);
        }
        min_reward = std::min(min_reward, std::min(t.y1, t.y2));
        min_pi = std::min(min_pi, std::min(t.pi1, t.pi2));
        d.trajectories.push_back(std::move(t));
    }
    d.p1 = static_cast<int>(d.trajectories[0].o1.size());
    d.p2 = static_cast<int>(d.trajectories[0].o2.size());
    d.positivity_floor = spec.id == 5 ? std::min(0.5, min_pi) : 0.5;

    double offset = 0.0;
    if (min_reward < 0.1) {
        offset = 0.5 * std::ceil((0.1 - min_reward) / 0.5);
    }
    if (offset != 0.0) {
        for (Trajectory& t : d.trajectories) {
            t.y1 += offset;
            t.y2 += offset;
        }
    }
    d.offset = offset;
    return d;
}

// ---------------------------------------------------------------------------
// Oracle rules
// ---------------------------------------------------------------------------

namespace {

// Setting 1: exact enumeration of E[Y1 + U2* | h1, a1] over (y1, x21).
double s1_stage1_value(double x11, double x12, double x13, int a1) {
    const double p_y1 = expit((x13 - 0.5 * x12) * a1);
    const double p_x21 = norm_cdf(-1.75 * x12 * a1);
    double g = 0.0;
    for (int y1 = 0; y1 <= 1; ++y1) {
        const double py = y1 == 1 ? p_y1 : 1.0 - p_y1;
        for (int x21 = 0; x21 <= 1; ++x21) {
            const double px = x21 == 1 ? p_x21 : 1.0 - p_x21;
            const double beta = 0.5 * x11 + x12 - 0.2 * x21 + y1;
            g += py * px * (y1 + expit(std::fabs(beta)));
        }
    }
    return g;
}

// Setting 3: stage-1 comparison with the stage-2 envelope integrated out.
// The envelope term is a folded normal in the stage-1 noise mixed over the
// exact (x21, x22) probabilities.
double s3_stage1_value(double x11, double x12, double x13, int a1) {
    double g = a1 * (1.0 + 1.5 * x13);
    const double p21 = norm_cdf(1.25 * x11 * a1);
    const double p22 = norm_cdf(-1.75 * x12 * a1);
    for (int x21 = 0; x21 <= 1; ++x21) {
        for (int x22 = 0; x22 <= 1; ++x22) {
            const double p = (x21 ? p21 : 1.0 - p21) * (x22 ? p22 : 1.0 - p22);
            const double mu = 4.5 + 0.5 * a1 * (2.0 + 1.5 * x13) + 0.5 * x21 - 0.5 * x22;
            g += p * folded_mean(mu, 0.5);
        }
    }
    return g;
}

// Setting 5: stage-1 comparison; the only non-closed-form piece is
// E[Y1 sin(x2^2/(Y1+1))], handled by composite Simpson over mu +- 8.
double s5_sin_integral(double mu, double x2sq) {
    const int n = 1600;
    const double lo = mu - 8.0, hi = mu + 8.0;
    const double h = (hi - lo) / n;
    auto f = [&](double y) {
        if (std::fabs(y + 1.0) < 1e-9) return 0.0;  // bounded integrand, single pole
        const double pdf = std::exp(-0.5 * (y - mu) * (y - mu)) / std::sqrt(2.0 * M_PI);
        return y * std::sin(x2sq / (y + 1.0)) * pdf;
    };
    double s = f(lo) + f(hi);
    for (int i = 1; i < n; ++i) s += f(lo + i * h) * (i % 2 == 1 ? 4.0 : 2.0);
    return s * h / 3.0;
}

double s5_stage1_value(const std::vector<double>& x, int a1) {
    const double mu1 = s5_mean_y1(x, a1);
    // E[Y1|a1] + E[U2*|a1]; U2* = base(Y1) + |stage2 score|.
    double g = mu1;
    g += kC2[0] * mu1 + kC2[1] + kC2[2] * x[0] + kC2[3] * x[1] + kC2[4] * x[2];
    g += kCtilde2 * x[1] * s5_sin_integral(mu1, x[1] * x[1]);
    const double p21 = norm_cdf(1.25 * x[0]);
    const double p22 = norm_cdf(-1.75 * x[1]);
    for (int z21 = 0; z21 <= 1; ++z21) {
        for (int z22 = 0; z22 <= 1; ++z22) {
            const double p = (z21 ? p21 : 1.0 - p21) * (z22 ? p22 : 1.0 - p22);
            g += p * std::fabs(s5_stage2_score(x, a1, z21, z22));
        }
    }
    return g;
}

}  // namespace

OracleRule oracle_rule(int id) {
    OracleRule r;
    r.id = id;
    switch (id) {
        case 1:
            r.d1 = [](const History& h) {
                return s1_stage1_value(h.h[0], h.h[1], h.h[2], 1) >=
                               s1_stage1_value(h.h[0], h.h[1], h.h[2], -1)
                           ? 1
                           : -1;
            };
            r.d2 = [](const History& h) {
                // h = (x11,x12,x13, y1, x21, a1)
                return 0.5 * h.h[0] + h.h[1] - 0.2 * h.h[4] + h.h[3] >= 0.0 ? 1 : -1;
            };
            break;
        case 2:
            r.d1 = [](const History& h) { return std::fabs(h.h[0]) < 1.0 ? 1 : -1; };
            r.d2 = [](const History& h) {
                // h = (x1, y1, x2, a1)
                return h.h[2] > h.h[0] * h.h[0] ? 1 : -1;
            };
            break;
        case 3:
            r.d1 = [](const History& h) {
                return s3_stage1_value(h.h[0], h.h[1], h.h[2], 1) >=
                               s3_stage1_value(h.h[0], h.h[1], h.h[2], -1)
                           ? 1
                           : -1;
            };
            r.d2 = [](const History& h) {
                // h = (x11,x12,x13, y1, x21, x22, a1)
                const double m = -0.5 + 0.5 * h.h[3] + 0.5 * h.h[6] + 0.5 * h.h[4] -
                                 0.5 * h.h[5];
                return m >= 0.0 ? 1 : -1;
            };
            break;
        case 4:
            r.d1 = [](const History&) { return 1; };
            r.d2 = [](const History& h) {
                return 0.01 * h.h[1] * h.h[1] - 0.05 * h.h[2] * h.h[2] >= 0.0 ? 1 : -1;
            };
            break;
        case 5:
            r.d1 = [](const History& h) {
                return s5_stage1_value(h.h, 1) >= s5_stage1_value(h.h, -1) ? 1 : -1;
            };
            r.d2 = [](const History& h) {
                // h = (x1..x6, y1, z21, z22, a1)
                const int a1 = static_cast<int>(h.h[9]);
                return s5_stage2_score(h.h, a1, h.h[7], h.h[8]) >= 0.0 ? 1 : -1;
            };
            break;
        default:
            throw std::invalid_argument("oracle_rule: setting id must be 1..5");
    }
    return r;
}

ValueEstimate mc_value(int id, const DecisionFn& d1, const DecisionFn& d2,
                       std::size_t n_eval, std::uint64_t seed, double feature_offset) {
    if (id < 1 || id > 5) throw std::invalid_argument("mc_value: setting id must be 1..5");
    if (n_eval < 1) throw std::invalid_argument("mc_value: n_eval must be >= 1");
    const std::uint64_t base = CounterRng::derive(seed, kMcStream + id);
    double sum = 0.0, ss = 0.0;
    for (std::size_t i = 0; i < n_eval; ++i) {
        CounterRng rng(CounterRng::derive(base, i));
        const Trajectory t =
            draw_one(id, rng, forced_action(d1), forced_action(d2), feature_offset);
        const double total = t.y1 + t.y2;
        sum += total;
        ss += total * total;
    }
    const double n = static_cast<double>(n_eval);
    const double mean = sum / n;
    const double var = n > 1 ? (ss - n * mean * mean) / (n - 1.0) : 0.0;
    return {mean, std::sqrt(std::max(0.0, var) / n), EstimatorMethod::MonteCarlo, n_eval};
}

double setting1_exact_optimal_value() {
    double v = 0.0;
    for (double x11 : {-1.0, 1.0}) {
        for (double x12 : {-1.0, 1.0}) {
            for (double x13 : {-1.0, 1.0}) {
                v += 0.125 * std::max(s1_stage1_value(x11, x12, x13, 1),
                                      s1_stage1_value(x11, x12, x13, -1));
            }
        }
    }
    return v;
}

DiscreteDtr setting1_discrete_law(double offset) {
    DiscreteDtr law;
    for (double x11 : {-1.0, 1.0}) {
        for (double x12 : {-1.0, 1.0}) {
            for (double x13 : {-1.0, 1.0}) {
                H1Point p;
                p.prob = 0.125;
                p.h1 = {x11, x12, x13};
                p.p_a1_plus = 0.5;
                for (int a1 : {-1, 1}) {
                    const double p_y1 = expit((x13 - 0.5 * x12) * a1);
                    const double p_x21 = norm_cdf(-1.75 * x12 * a1);
                    for (int y1 = 0; y1 <= 1; ++y1) {
                        for (int x21 = 0; x21 <= 1; ++x21) {
                            Stage2Point t;
                            t.prob = (y1 ? p_y1 : 1.0 - p_y1) * (x21 ? p_x21 : 1.0 - p_x21);
                            t.y1 = y1 + offset;
                            t.o2 = {static_cast<double>(x21)};
                            t.p_a2_plus = 0.5;
                            const double beta = 0.5 * x11 + x12 - 0.2 * x21 + y1;
                            t.ey2_plus = expit(beta) + offset;
                            t.ey2_minus = expit(-beta) + offset;
                            p.trans[DiscreteDtr::idx(a1)].push_back(std::move(t));
                        }
                    }
                }
                law.points.push_back(std::move(p));
            }
        }
    }
    return law;
}

}  // namespace dtr
