#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "dtr/core.hpp"

namespace dtr {

enum class EstimatorMethod { IpwPlugin, MonteCarlo, DoublyRobust };

const char* estimator_method_key(EstimatorMethod m);

struct ValueEstimate {
    double value = 0.0;
    double sd = 0.0;  // standard error of the point estimate
    EstimatorMethod method = EstimatorMethod::IpwPlugin;
    std::size_t n_used = 0;
};

// Plug-in inverse-propensity estimate: mean over rows of
// (y1+y2) 1[a1 = d1(H1)] 1[a2 = d2(H2)] / (pi1 pi2),
// with the naive per-summand standard error.
ValueEstimate ipw_value(const Dataset& d, const DecisionFn& d1, const DecisionFn& d2);

// Maximum-likelihood logistic model of P(A_t = +1 | [1, H_t]).
struct PropensityModel {
    int stage = 1;
    std::vector<double> weights;
    std::vector<double> se;
    double clip = 0.01;
    bool separation_warning = false;
    int iterations = 0;

    // Clipped to [clip, 1-clip].
    double prob_plus(const History& h) const;
    double prob(const History& h, int a) const;
};

// Damped Newton fit (max 100 iterations, gradient sup-norm tolerance 1e-8).
// Diverging weights (separation) stop the fit and set the warning flag;
// predictions stay clipped either way.
PropensityModel fit_propensity(const Dataset& d, int stage, double clip = 0.01);

// Stage-t outcome model hook for the doubly robust estimator.
using QFn = std::function<double(const History&, int)>;

// Doubly robust estimate: per row
//   q1(H1, d1) + 1[a1=d1]/pi1 * (y1 - (q1 - q2(H2, d2)))
//             + 1[a1=d1, a2=d2]/(pi1 pi2) * (y2 - q2),
// averaged, with propensities taken from the fitted models when supplied
// and from the dataset's stored (known) values otherwise.
ValueEstimate dr_value(const Dataset& d, const DecisionFn& d1, const DecisionFn& d2,
                       const QFn& q1, const QFn& q2,
                       const PropensityModel* pm1 = nullptr,
                       const PropensityModel* pm2 = nullptr);

}  // namespace dtr
