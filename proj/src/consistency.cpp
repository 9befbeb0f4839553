#include "dtr/consistency.hpp"

#include <cmath>
#include <stdexcept>

#include "dtr/rng.hpp"

namespace dtr {

double psi_transform(const SurrogateSpec& s, double x, double y, double z,
                     const TauVector& tau) {
    return tau[0] * psi_eval(s, x, y) + tau[1] * psi_eval(s, x, -y) +
           tau[2] * psi_eval(s, -x, z) + tau[3] * psi_eval(s, -x, -z);
}

namespace {

constexpr double kRefineTol = 1e-6;

// 1-D maximization by grid scan plus step-halving hill climb. Ties keep the
// candidate closest to zero so that flat directions stay at the origin.
double maximize_1d(const std::function<double(double)>& f, double b, double step) {
    double best_x = 0.0;
    double best_v = f(0.0);
    for (double x = -b; x <= b + 1e-12; x += step) {
        const double v = f(x);
        if (v > best_v || (v == best_v && std::fabs(x) < std::fabs(best_x))) {
            best_v = v;
            best_x = x;
        }
    }
    double h = step;
    while (h > kRefineTol) {
        bool moved = false;
        for (double cand : {best_x - h, best_x + h}) {
            if (cand < -b || cand > b) continue;
            const double v = f(cand);
            if (v > best_v) {
                best_v = v;
                best_x = cand;
                moved = true;
            }
        }
        if (!moved) h /= 2.0;
    }
    return best_x;
}

MaximizeResult maximize_product_form(const SurrogateSpec& s, const TauVector& tau,
                                     double b, double step) {
    // Psi = phi(x) [tau1 phi(y) + tau2 phi(-y)] + phi(-x) [tau3 phi(z) + tau4 phi(-z)]
    auto branch_y = [&](double y) {
        return tau[0] * phi_eval(s, y) + tau[1] * phi_eval(s, -y);
    };
    auto branch_z = [&](double z) {
        return tau[2] * phi_eval(s, z) + tau[3] * phi_eval(s, -z);
    };
    MaximizeResult r;
    r.y = maximize_1d(branch_y, b, step);
    r.z = maximize_1d(branch_z, b, step);
    const double by = branch_y(r.y);
    const double bz = branch_z(r.z);
    r.x = maximize_1d([&](double x) { return phi_eval(s, x) * by + phi_eval(s, -x) * bz; },
                      b, step);
    r.value = psi_transform(s, r.x, r.y, r.z, tau);
    return r;
}

MaximizeResult maximize_generic(const SurrogateSpec& s, const TauVector& tau,
                                double b, double step) {
    auto eval = [&](double x, double y, double z) {
        return psi_transform(s, x, y, z, tau);
    };
    MaximizeResult r;
    r.value = eval(0.0, 0.0, 0.0);
    for (double x = -b; x <= b + 1e-12; x += step) {
        for (double y = -b; y <= b + 1e-12; y += step) {
            for (double z = -b; z <= b + 1e-12; z += step) {
                const double v = eval(x, y, z);
                const bool closer = std::max({std::fabs(x), std::fabs(y), std::fabs(z)}) <
                                    std::max({std::fabs(r.x), std::fabs(r.y), std::fabs(r.z)});
                if (v > r.value || (v == r.value && closer)) {
                    r.value = v;
                    r.x = x;
                    r.y = y;
                    r.z = z;
                }
            }
        }
    }
    double h = step;
    while (h > kRefineTol) {
        bool moved = false;
        for (int c = 0; c < 3; ++c) {
            double* coord = c == 0 ? &r.x : (c == 1 ? &r.y : &r.z);
            for (double dir : {-1.0, 1.0}) {
                const double cand = *coord + dir * h;
                if (cand < -b || cand > b) continue;
                const double old = *coord;
                *coord = cand;
                const double v = eval(r.x, r.y, r.z);
                if (v > r.value) {
                    r.value = v;
                    moved = true;
                } else {
                    *coord = old;
                }
            }
        }
        if (!moved) h /= 2.0;
    }
    return r;
}

}  // namespace

MaximizeResult maximize_psi_transform(const SurrogateSpec& s, const TauVector& tau,
                                      double box_halfwidth, double grid_step) {
    if (!(box_halfwidth > 0.0) || !(grid_step > 0.0)) {
        throw std::invalid_argument("maximize_psi_transform: box and step must be > 0");
    }
    if (!tau.positive()) {
        throw std::invalid_argument("maximize_psi_transform: tau must be positive");
    }
    return s.is_sigmoid() ? maximize_product_form(s, tau, box_halfwidth, grid_step)
                          : maximize_generic(s, tau, box_halfwidth, grid_step);
}

bool hinge_sign_check(const TauVector& tau) {
    if (!tau.positive()) throw std::invalid_argument("hinge_sign_check: tau must be positive");
    const bool unique_max = tau[0] > tau[1] && tau[0] > tau[2] && tau[0] > tau[3];
    if (!unique_max) {
        throw std::invalid_argument("hinge_sign_check: tau1 must be the unique maximum");
    }
    if (!(tau[0] < tau[1] + tau[2] + tau[3])) {
        throw std::invalid_argument(
            "hinge_sign_check: requires tau1 < tau2 + tau3 + tau4");
    }
    // Maximizer provably lies in [-1,1]^3; a tight box keeps the grid cheap.
    const MaximizeResult r = maximize_psi_transform(
        make_surrogate(SurrogateKind::HingeBivariate), tau, 2.0, 0.5);
    return r.x <= 1e-6;
}

TauRule optimal_rule_from_tau(const TauVector& tau) {
    if (!tau.positive()) throw std::invalid_argument("optimal_rule_from_tau: tau must be positive");
    constexpr double tol = 1e-9;
    TauRule r;
    r.d2_given_a1_plus = tau.at(1, 1) >= tau.at(1, -1) - tol ? 1 : -1;
    r.d2_given_a1_minus = tau.at(-1, 1) >= tau.at(-1, -1) - tol ? 1 : -1;
    const double best_plus = std::max(tau.at(1, 1), tau.at(1, -1));
    const double best_minus = std::max(tau.at(-1, 1), tau.at(-1, -1));
    r.d1 = best_plus >= best_minus - tol ? 1 : -1;
    return r;
}

// ---------------------------------------------------------------------------
// Exact discrete-law functionals
// ---------------------------------------------------------------------------

std::vector<std::string> validate_law(const DiscreteDtr& law) {
    std::vector<std::string> out;
    if (law.points.empty()) out.push_back("empty support");
    double mass = 0.0;
    for (std::size_t i = 0; i < law.points.size(); ++i) {
        const H1Point& p = law.points[i];
        mass += p.prob;
        if (!(p.prob > 0.0)) out.push_back("non-positive h1 mass at point " + std::to_string(i));
        if (!(p.p_a1_plus > 0.0) || !(p.p_a1_plus < 1.0)) {
            out.push_back("a1 propensity outside (0,1) at point " + std::to_string(i));
        }
        for (int ai = 0; ai < 2; ++ai) {
            double tmass = 0.0;
            for (const Stage2Point& t : p.trans[ai]) {
                tmass += t.prob;
                if (!(t.y1 > 0.0)) out.push_back("y1 not positive at point " + std::to_string(i));
                if (!(t.ey2_plus > 0.0) || !(t.ey2_minus > 0.0)) {
                    out.push_back("E[Y2] not positive at point " + std::to_string(i));
                }
                if (!(t.p_a2_plus > 0.0) || !(t.p_a2_plus < 1.0)) {
                    out.push_back("a2 propensity outside (0,1) at point " + std::to_string(i));
                }
            }
            if (std::fabs(tmass - 1.0) > 1e-9) {
                out.push_back("transition mass != 1 at point " + std::to_string(i));
            }
        }
    }
    if (!law.points.empty() && std::fabs(mass - 1.0) > 1e-9) {
        out.push_back("h1 mass != 1");
    }
    return out;
}

ExactValues exact_values_discrete(const DiscreteDtr& law, const DiscreteD1& d1,
                                  const DiscreteD2& d2, const DiscreteF1& f1,
                                  const DiscreteF2& f2, const SurrogateSpec& s) {
    if (!s.is_sigmoid()) {
        throw std::invalid_argument("exact_values_discrete: sigmoid surrogate required");
    }
    ExactValues out;
    for (const H1Point& p : law.points) {
        // Value and optimal value: actions forced, expectation over transitions.
        const int a1_dec = d1(p.h1);
        double val_dec = 0.0;
        double best1 = -1e300;
        for (int a1 : {-1, 1}) {
            double v_a1 = 0.0;
            for (const Stage2Point& t : p.trans[DiscreteDtr::idx(a1)]) {
                const double u2_star = std::max(t.ey2_plus, t.ey2_minus);
                v_a1 += t.prob * (t.y1 + u2_star);
            }
            best1 = std::max(best1, v_a1);
            if (a1 == a1_dec) {
                double v = 0.0;
                for (const Stage2Point& t : p.trans[DiscreteDtr::idx(a1)]) {
                    const int a2_dec = d2(p.h1, t.y1, t.o2, a1);
                    v += t.prob * (t.y1 + (a2_dec == 1 ? t.ey2_plus : t.ey2_minus));
                }
                val_dec = v;
            }
        }
        out.v += p.prob * val_dec;
        out.v_star += p.prob * best1;

        // Surrogate value over the observed law; propensities cancel against
        // the importance weights, leaving a plain sum over action pairs.
        const double s1 = f1(p.h1);
        double vpsi = 0.0;
        for (int a1 : {-1, 1}) {
            for (const Stage2Point& t : p.trans[DiscreteDtr::idx(a1)]) {
                const double s2 = f2(p.h1, t.y1, t.o2, a1);
                for (int a2 : {-1, 1}) {
                    const double reward = t.y1 + (a2 == 1 ? t.ey2_plus : t.ey2_minus);
                    vpsi += p.prob * t.prob * reward * psi_eval(s, a1 * s1, a2 * s2);
                }
            }
        }
        out.v_psi += vpsi;
    }
    // Calibrated limits: phi(a f~) = C_phi when a matches the optimal action
    // and 0 otherwise, so the optimal surrogate value is C_phi^2 V*.
    out.v_psi_star = s.c_phi * s.c_phi * out.v_star;
    return out;
}

DiscreteDtr random_law(CounterRng& rng, int max_h1, int max_trans) {
    DiscreteDtr law;
    const int n1 = 1 + static_cast<int>(rng.below(max_h1));
    std::vector<double> w1(n1);
    double tot = 0.0;
    for (double& w : w1) {
        w = rng.uniform(0.05, 1.0);
        tot += w;
    }
    for (int i = 0; i < n1; ++i) {
        H1Point p;
        p.prob = w1[i] / tot;
        p.h1 = {rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0)};
        p.p_a1_plus = rng.uniform(0.2, 0.8);
        for (int ai = 0; ai < 2; ++ai) {
            const int nt = 1 + static_cast<int>(rng.below(max_trans));
            std::vector<double> wt(nt);
            double tt = 0.0;
            for (double& w : wt) {
                w = rng.uniform(0.05, 1.0);
                tt += w;
            }
            for (int k = 0; k < nt; ++k) {
                Stage2Point t;
                t.prob = wt[k] / tt;
                t.y1 = rng.uniform(0.2, 3.0);
                t.o2 = {rng.uniform(-2.0, 2.0)};
                t.p_a2_plus = rng.uniform(0.2, 0.8);
                t.ey2_plus = rng.uniform(0.2, 3.0);
                t.ey2_minus = rng.uniform(0.2, 3.0);
                p.trans[ai].push_back(std::move(t));
            }
        }
        law.points.push_back(std::move(p));
    }
    return law;
}

}  // namespace dtr
