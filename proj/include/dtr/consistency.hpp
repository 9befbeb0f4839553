#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <vector>

#include "dtr/surrogate.hpp"

namespace dtr {

class CounterRng;

// Weights of the four-term transform, indexed as
// (tau_{+1,+1}, tau_{+1,-1}, tau_{-1,+1}, tau_{-1,-1}): the conditional
// total-reward summaries of a deterministic-transition law, one per
// action combination.
struct TauVector {
    std::array<double, 4> tau{1.0, 1.0, 1.0, 1.0};

    double operator[](int i) const { return tau[i]; }
    // (a1, a2) in {-1,+1}^2 -> component
    double at(int a1, int a2) const {
        return tau[a1 == 1 ? (a2 == 1 ? 0 : 1) : (a2 == 1 ? 2 : 3)];
    }
    bool positive() const {
        return tau[0] > 0 && tau[1] > 0 && tau[2] > 0 && tau[3] > 0;
    }
};

// Psi(t; tau) = tau1 psi(t1,t2) + tau2 psi(t1,-t2)
//             + tau3 psi(-t1,t3) + tau4 psi(-t1,-t3).
double psi_transform(const SurrogateSpec& s, double x, double y, double z,
                     const TauVector& tau);

struct MaximizeResult {
    double x = 0.0, y = 0.0, z = 0.0;
    double value = 0.0;
};

// Box-constrained maximizer of the transform: coarse grid search over
// [-B,B]^3 followed by coordinate-ascent refinement with step halving down
// to 1e-6. Product-form surrogates use the exact branch decomposition
// (each branch is a one-dimensional problem and the weight on the losing
// branch underflows at the box boundary, which would make the generic 3-D
// search's minor coordinates meaningless in floating point). For the
// sigmoid kinds the supremum sits at infinity, so only the signs of the
// returned point are meaningful.
MaximizeResult maximize_psi_transform(const SurrogateSpec& s, const TauVector& tau,
                                      double box_halfwidth = 50.0,
                                      double grid_step = 0.5);

// Witness for the bivariate hinge counterexample: in the region where tau1
// is the unique maximum but tau1 < tau2 + tau3 + tau4, the hinge maximizer
// satisfies x* <= 0 even though the optimal first-stage action is +1.
// Throws outside that precondition region.
bool hinge_sign_check(const TauVector& tau);

struct TauRule {
    int d1 = 1;
    int d2_given_a1_plus = 1;
    int d2_given_a1_minus = 1;

    int d2(int a1) const { return a1 == 1 ? d2_given_a1_plus : d2_given_a1_minus; }
};

// Optimal rule of the deterministic-transition law summarized by tau:
// d1 = argmax_a max(tau_{a,+1}, tau_{a,-1}), d2(.|a1) = argmax_a2 tau_{a1,a2},
// ties to +1 (with 1e-9 comparison tolerance).
TauRule optimal_rule_from_tau(const TauVector& tau);

// ---------------------------------------------------------------------------
// Exact finite-support two-stage law
// ---------------------------------------------------------------------------

// One (y1, o2) transition given (h1, a1), with the stage-2 action propensity
// and the conditional mean rewards E[Y2 | h2, a2] for both actions. Only the
// conditional means enter the value functionals, so they stand in for the
// full Y2 distribution.
struct Stage2Point {
    double prob = 1.0;
    double y1 = 1.0;
    std::vector<double> o2;
    double p_a2_plus = 0.5;             // P(A2=+1 | h2)
    double ey2_plus = 1.0, ey2_minus = 1.0;
};

struct H1Point {
    double prob = 1.0;
    std::vector<double> h1;
    double p_a1_plus = 0.5;             // P(A1=+1 | h1)
    std::array<std::vector<Stage2Point>, 2> trans;  // index 0: a1=-1, 1: a1=+1
};

struct DiscreteDtr {
    std::vector<H1Point> points;

    static int idx(int a) { return a == 1 ? 1 : 0; }
};

struct ExactValues {
    double v = 0.0;        // value of the supplied decisions
    double v_star = 0.0;   // optimal value by backward induction
    double v_psi = 0.0;    // surrogate value of the supplied scores
    double v_psi_star = 0.0;  // calibrated-limit surrogate optimum
};

// Decision/score callbacks receive (h1) or (h1, y1, o2, a1).
using DiscreteD1 = std::function<int(const std::vector<double>&)>;
using DiscreteD2 = std::function<int(const std::vector<double>&, double,
                                     const std::vector<double>&, int)>;
using DiscreteF1 = std::function<double(const std::vector<double>&)>;
using DiscreteF2 = std::function<double(const std::vector<double>&, double,
                                        const std::vector<double>&, int)>;

// Exact expectations by full enumeration of the support. V* uses backward
// induction with ties to +1; V_psi* substitutes the calibrated limits
// phi(+-inf) in {C_phi, 0}, which collapses to C_phi^2 times the optimal
// value. Sigmoid kinds only for the surrogate quantities.
ExactValues exact_values_discrete(const DiscreteDtr& law, const DiscreteD1& d1,
                                  const DiscreteD2& d2, const DiscreteF1& f1,
                                  const DiscreteF2& f2, const SurrogateSpec& s);

// Law with every probability/mean checked; returns violations as strings.
std::vector<std::string> validate_law(const DiscreteDtr& law);

// Random law on a support of at most max_h1 x max_trans points with positive
// rewards, plus random linear scores; used by the regret-inequality sweeps.
DiscreteDtr random_law(CounterRng& rng, int max_h1 = 2, int max_trans = 2);

}  // namespace dtr
