#pragma once

#include <cstdint>
#include <vector>

#include "dtr/core.hpp"
#include "dtr/policy.hpp"

namespace dtr {

enum class QForm { Linear, Mlp };

// Stage-t outcome model. The linear form scores x'theta0 + a * x'theta1
// with x = [1, H_t]; the network form feeds (H_t, A_t) through the same
// architecture as the network policy class.
struct QModel {
    int stage = 2;
    QForm form = QForm::Linear;
    std::vector<double> theta0, theta1;
    Policy net;
    bool fitted = false;

    double q(const History& h, int a) const;
};

struct QFitConfig {
    int epochs = 20;        // network form only
    int batch_size = 128;
    double learning_rate = 1e-3;
    std::uint64_t seed = 0;
    double ridge = 1e-8;    // linear form only
};

// Least-squares fit of Q(H2, A2) against Y2; linear via ridge-stabilized
// normal equations, network via minibatch RMSprop on squared loss.
QModel fit_q2(const Dataset& d, QForm form, const QFitConfig& cfg = {});

// Pseudo outcome y1_i + max_a Q2(H2_i, a).
std::vector<double> pseudo_outcome(const Dataset& d, const QModel& q2);

QModel fit_q1(const Dataset& d, const std::vector<double>& pseudo, QForm form,
              const QFitConfig& cfg = {});

// Greedy rule argmax_a Q_t(H_t, a); exact ties resolve to +1.
struct QPolicy {
    QModel q1, q2;
    int decide(const History& h) const;
};

QPolicy q_policy(QModel q1, QModel q2);

// Backward pipeline: fit stage 2, build pseudo outcomes, fit stage 1.
QPolicy fit_q_learning(const Dataset& d, QForm form, const QFitConfig& cfg = {});

std::string qmodel_to_json(const QModel& m);
QModel qmodel_from_json(const std::string& text);

}  // namespace dtr
