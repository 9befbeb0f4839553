#pragma once

#include <cstdint>
#include <vector>

#include "dtr/core.hpp"
#include "dtr/policy.hpp"
#include "dtr/surrogate.hpp"

namespace dtr {

struct TrainConfig {
    SurrogateKind surrogate = SurrogateKind::ArctanSigmoid;
    int epochs = 20;
    int batch_size = 128;
    double learning_rate = 1e-3;
    double rmsprop_decay = 0.9;
    double rmsprop_eps = 1e-8;
    double l1_lambda = 0.0;
    std::uint64_t seed = 0;
    bool allow_inconsistent_surrogate = false;
};

struct TrainResult {
    PolicyPair pair;
    double initial_objective = 0.0;          // before any update
    std::vector<double> objective_trace;     // full-data value after each epoch
    double final_objective = 0.0;
    TrainConfig config_echo;
};

// Empirical weighted surrogate value
//   (1/n) sum_i (y1+y2) psi(a1 f1(H1), a2 f2(H2)) / (pi1 pi2).
double surrogate_value_hat(const Dataset& d, const SurrogateSpec& s,
                           const PolicyPair& pair);

// Joint gradient of the batch-mean objective with respect to (theta1, theta2).
// With l1_lambda > 0 the lasso subgradient (sign(0) = 0) is subtracted.
// Passing train_rng enables dropout masks for network policies.
struct ObjectiveGrad {
    std::vector<double> g1, g2;
};
ObjectiveGrad objective_grad(const std::vector<const Trajectory*>& batch,
                             const SurrogateSpec& s, const PolicyPair& pair,
                             double l1_lambda = 0.0, CounterRng* train_rng = nullptr);

// Minibatch RMSprop ascent updating both stages from the joint gradient.
// Deterministic per (dataset, classes, config): batches come from seeded
// shuffles and network initialization from the same seed.
TrainResult train(const Dataset& d, PolicyClass class1, PolicyClass class2,
                  const TrainConfig& cfg);

// Same, starting from caller-provided policies (used by the Q-learning
// network fit and by tests).
TrainResult train_pair(const Dataset& d, PolicyPair pair, const TrainConfig& cfg);

// One RMSprop accumulator; ascend() applies theta += lr * g / (sqrt(v)+eps).
struct RmsProp {
    double decay = 0.9;
    double eps = 1e-8;
    double lr = 1e-3;
    std::vector<double> v;

    void init(std::size_t n) { v.assign(n, 0.0); }
    void ascend(std::vector<double>& theta, const std::vector<double>& g);
    void descend(std::vector<double>& theta, const std::vector<double>& g);
};

}  // namespace dtr
