#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "dtr/evalkit.hpp"
#include "dtr/qlearn.hpp"
#include "dtr/rng.hpp"
#include "dtr/simlab.hpp"

using namespace dtr;

namespace {

double expit(double x) { return 1.0 / (1.0 + std::exp(-x)); }

DecisionFn match_all(const Dataset& d, int stage) {
    // replay the observed actions (decision == a_t for every row)
    std::vector<std::pair<std::vector<double>, int>> lookup;
    for (const Trajectory& t : d.trajectories) {
        lookup.emplace_back(build_history(t, stage).h, stage == 1 ? t.a1 : t.a2);
    }
    return [lookup](const History& h) {
        for (const auto& [key, a] : lookup) {
            if (key == h.h) return a;
        }
        return 1;
    };
}

}  // namespace

TEST_CASE("ipw with perfectly matching decisions is the weighted mean") {
    Dataset d = generate({2, 60, 21});
    const DecisionFn d1 = match_all(d, 1);
    const DecisionFn d2 = match_all(d, 2);
    const ValueEstimate est = ipw_value(d, d1, d2);
    double mean = 0.0;
    for (const Trajectory& t : d.trajectories) mean += t.y1 + t.y2;
    mean /= static_cast<double>(d.size());
    CHECK(est.value == doctest::Approx(4.0 * mean).epsilon(1e-12));
    CHECK(est.method == EstimatorMethod::IpwPlugin);
}

TEST_CASE("ipw with never-matching decisions is zero with zero spread") {
    Dataset d = generate({2, 40, 22});
    const DecisionFn flip1 = [&d](const History& h) {
        for (const Trajectory& t : d.trajectories) {
            if (build_history(t, 1).h == h.h) return -t.a1;
        }
        return 1;
    };
    const ValueEstimate est = ipw_value(d, flip1, [](const History&) { return 1; });
    // stage-1 mismatch alone forces every indicator to zero
    CHECK(est.value == 0.0);
    CHECK(est.sd == 0.0);
}

TEST_CASE("ipw scales linearly in the rewards") {
    Dataset d = generate({2, 80, 23});
    const OracleRule r = oracle_rule(2);
    // oracle reads raw-scale histories; evaluate decisions on the offset data
    const double off = d.offset;
    const DecisionFn d2 = [&r, off](const History& h) {
        History raw = h;
        raw.h[1] -= off;  // y1 slot for p1=1
        return r.d2(raw);
    };
    const ValueEstimate base = ipw_value(d, r.d1, d2);
    Dataset scaled = d;
    for (Trajectory& t : scaled.trajectories) {
        t.y1 *= 2.5;
        t.y2 *= 2.5;
    }
    // decisions must see the original scale to stay fixed
    const DecisionFn d2s = [&r, off](const History& h) {
        History raw = h;
        raw.h[1] = raw.h[1] / 2.5 - off;
        return r.d2(raw);
    };
    const ValueEstimate s = ipw_value(scaled, r.d1, d2s);
    CHECK(s.value == doctest::Approx(2.5 * base.value).epsilon(1e-12));
}

TEST_CASE("cross-estimator agreement on setting 1 with the oracle rule") {
    const Dataset d = generate({1, 100000, 4});
    const OracleRule r = oracle_rule(1);
    const double off = d.offset;
    const DecisionFn d2_off = [&r, off](const History& h) {
        History raw = h;
        raw.h[3] -= off;  // y1 slot for p1=3
        return r.d2(raw);
    };
    const ValueEstimate ipw = ipw_value(d, r.d1, d2_off);
    const ValueEstimate mc = mc_value(1, r.d1, r.d2, 100000, 700);
    // ipw is on the offset scale: raw value + 2 * offset
    CHECK(std::fabs(ipw.value - (mc.value + 2 * off)) <
          3.0 * std::hypot(ipw.sd, mc.sd));
}

TEST_CASE("propensity fit: null model, recovery, separation") {
    SUBCASE("coin-flip treatments give a null intercept") {
        const Dataset d = generate({3, 4000, 31});
        const PropensityModel m = fit_propensity(d, 1);
        REQUIRE(m.weights.size() == 4);
        CHECK(std::fabs(m.weights[0]) < 3.0 * m.se[0]);
        CHECK(!m.separation_warning);
    }

    SUBCASE("setting 5 stage-1 weights are recovered") {
        const Dataset d = generate({5, 10000, 32});
        const PropensityModel m = fit_propensity(d, 1);
        const double truth[7] = {-0.1, 1.0, -1.0, 0.1, 0.0, 0.0, 0.0};
        REQUIRE(m.weights.size() == 7);
        for (std::size_t j = 0; j < 7; ++j) {
            CHECK(std::fabs(m.weights[j] - truth[j]) < 3.0 * m.se[j] + 1e-6);
        }
    }

    SUBCASE("perfect separation sets the warning flag") {
        Dataset d;
        d.p1 = 1;
        d.p2 = 1;
        d.positivity_floor = 0.01;
        for (int i = 0; i < 40; ++i) {
            Trajectory t;
            const double x = i < 20 ? -1.0 - 0.05 * i : 1.0 + 0.05 * i;
            t.o1 = {x};
            t.a1 = x > 0 ? 1 : -1;
            t.y1 = 1.0;
            t.o2 = {0.0};
            t.a2 = 1;
            t.y2 = 1.0;
            t.pi1 = t.pi2 = 0.5;
            d.trajectories.push_back(t);
        }
        const PropensityModel m = fit_propensity(d, 1);
        CHECK(m.separation_warning);
        // predictions stay clipped
        CHECK(m.prob_plus({1, {5.0}}) <= 0.99);
        CHECK(m.prob_plus({1, {-5.0}}) >= 0.01);
    }

    SUBCASE("probability error halves from n=1e3 to n=1e4") {
        auto mae = [](std::size_t n, std::uint64_t seed) {
            const Dataset d = generate({5, n, seed});
            const PropensityModel m = fit_propensity(d, 1);
            double err = 0.0;
            for (const Trajectory& t : d.trajectories) {
                const double z = -0.1 + t.o1[0] - t.o1[1] + 0.1 * t.o1[2];
                err += std::fabs(m.prob_plus(build_history(t, 1)) - expit(z));
            }
            return err / static_cast<double>(d.size());
        };
        CHECK(mae(10000, 33) <= 0.5 * mae(1000, 33));
    }
}

TEST_CASE("doubly robust estimator") {
    SUBCASE("zero outcome models reduce to the stagewise weighted form") {
        const Dataset d = generate({3, 200, 41});
        const OracleRule r = oracle_rule(3);
        const double off = d.offset;
        const DecisionFn d2_off = [&r, off](const History& h) {
            History raw = h;
            raw.h[3] -= off;
            return r.d2(raw);
        };
        const QFn zero = [](const History&, int) { return 0.0; };
        const ValueEstimate est = dr_value(d, r.d1, d2_off, zero, zero);
        double expect = 0.0;
        for (const Trajectory& t : d.trajectories) {
            const int dec1 = r.d1(build_history(t, 1));
            const int dec2 = d2_off(build_history(t, 2));
            double s = 0.0;
            if (t.a1 == dec1) {
                s += t.y1 / t.pi1;
                if (t.a2 == dec2) s += t.y2 / (t.pi1 * t.pi2);
            }
            expect += s;
        }
        expect /= static_cast<double>(d.size());
        CHECK(est.value == doctest::Approx(expect).epsilon(1e-15));
    }

    SUBCASE("per-row summand formula when everything matches") {
        Dataset d;
        d.p1 = 1;
        d.p2 = 1;
        d.positivity_floor = 0.1;
        CounterRng rng(5);
        for (int i = 0; i < 3; ++i) {
            Trajectory t;
            t.o1 = {rng.uniform(-1, 1)};
            t.a1 = 1;
            t.y1 = rng.uniform(0.5, 2.0);
            t.o2 = {rng.uniform(-1, 1)};
            t.a2 = 1;
            t.y2 = rng.uniform(0.5, 2.0);
            t.pi1 = 0.4;
            t.pi2 = 0.7;
            d.trajectories.push_back(t);
        }
        const DecisionFn plus = [](const History&) { return 1; };
        const QFn q1 = [](const History& h, int) { return 0.3 + h.h[0]; };
        const QFn q2 = [](const History& h, int) { return 0.1 * h.h[0] + 0.2; };
        const ValueEstimate est = dr_value(d, plus, plus, q1, q2);
        double expect = 0.0;
        for (const Trajectory& t : d.trajectories) {
            const double q1v = 0.3 + t.o1[0];
            const double q2v = 0.1 * t.o1[0] + 0.2;
            expect += q1v + (t.y1 - q1v + q2v) / t.pi1 +
                      (t.y2 - q2v) / (t.pi1 * t.pi2);
        }
        expect /= 3.0;
        CHECK(est.value == doctest::Approx(expect).epsilon(1e-15));
    }

    SUBCASE("oracle q and true propensities agree with monte carlo") {
        const Dataset d = generate({1, 100000, 42});
        const OracleRule r = oracle_rule(1);
        const double off = d.offset;
        const DecisionFn d2_off = [&r, off](const History& h) {
            History raw = h;
            raw.h[3] -= off;
            return r.d2(raw);
        };
        // exact conditional means of the generating process, offset scale
        const QFn q2 = [off](const History& h, int a) {
            const double beta =
                0.5 * h.h[0] + h.h[1] - 0.2 * h.h[4] + (h.h[3] - off);
            return expit(beta * a) + off;
        };
        const QFn q1 = [off](const History& h, int a) {
            // E[Y1 + U2* | h1, a1] + 2*offset via enumeration of (y1, x21)
            const double x11 = h.h[0], x12 = h.h[1], x13 = h.h[2];
            const double p_y1 = expit((x13 - 0.5 * x12) * a);
            const double p_x21 = 0.5 * std::erfc((1.75 * x12 * a) / std::sqrt(2.0));
            double v = 0.0;
            for (int y1 = 0; y1 <= 1; ++y1) {
                for (int x21 = 0; x21 <= 1; ++x21) {
                    const double p =
                        (y1 ? p_y1 : 1 - p_y1) * (x21 ? p_x21 : 1 - p_x21);
                    const double beta = 0.5 * x11 + x12 - 0.2 * x21 + y1;
                    v += p * (y1 + expit(std::fabs(beta)));
                }
            }
            return v + 2 * off;
        };
        const ValueEstimate dr = dr_value(d, r.d1, d2_off, q1, q2);
        const ValueEstimate mc = mc_value(1, r.d1, r.d2, 100000, 4242);
        CHECK(std::fabs(dr.value - (mc.value + 2 * off)) <
              3.0 * std::hypot(dr.sd, mc.sd));
        // the augmentation shrinks the spread relative to plain ipw
        const ValueEstimate ipw = ipw_value(d, r.d1, d2_off);
        CHECK(dr.sd < ipw.sd);
    }

    SUBCASE("propensity below the floor is an error") {
        Dataset d = generate({3, 50, 43});
        d.trajectories[7].pi2 = 1e-9;
        const DecisionFn plus = [](const History&) { return 1; };
        const QFn zero = [](const History&, int) { return 0.0; };
        CHECK_THROWS_AS(dr_value(d, plus, plus, zero, zero), std::invalid_argument);
    }
}

TEST_CASE("q-learning q-functions plug into the doubly robust estimator") {
    const Dataset d = generate({3, 3000, 44});
    const QPolicy qp = fit_q_learning(d, QForm::Linear);
    const QFn q1 = [&qp](const History& h, int a) { return qp.q1.q(h, a); };
    const QFn q2 = [&qp](const History& h, int a) { return qp.q2.q(h, a); };
    const DecisionFn d1 = [&qp](const History& h) { return qp.decide(h); };
    const DecisionFn d2 = d1;
    const ValueEstimate known = dr_value(d, d1, d2, q1, q2);
    const PropensityModel pm1 = fit_propensity(d, 1);
    const PropensityModel pm2 = fit_propensity(d, 2);
    const ValueEstimate fitted = dr_value(d, d1, d2, q1, q2, &pm1, &pm2);
    // coin-flip design: fitted propensities sit near 1/2, estimates agree
    CHECK(std::fabs(known.value - fitted.value) <
          3.0 * std::hypot(known.sd, fitted.sd));
}
