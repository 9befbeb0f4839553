#pragma once

#include <functional>
#include <string>
#include <vector>

namespace dtr {

// One observed two-stage episode. Actions are coded -1/+1, pi1/pi2 are the
// propensities of the *observed* actions given the corresponding history.
struct Trajectory {
    std::vector<double> o1;
    int a1 = 1;
    double y1 = 0.0;
    std::vector<double> o2;
    int a2 = 1;
    double y2 = 0.0;
    double pi1 = 1.0;
    double pi2 = 1.0;
};

// Stage-t decision input. Stage 1: h = o1. Stage 2: h = (o1, y1, o2, a1)
// in that fixed order, so feature indices are stable across policy classes.
struct History {
    int stage = 1;
    std::vector<double> h;
};

struct Dataset {
    std::vector<Trajectory> trajectories;
    int p1 = 0;
    int p2 = 0;
    // Constant already added to both rewards so that they are positive;
    // value estimates on this dataset are on the offset scale.
    double offset = 0.0;
    double positivity_floor = 1e-3;

    std::size_t size() const { return trajectories.size(); }
};

struct Violation {
    std::size_t row = 0;
    std::string field;
    std::string message;
};

// A decision rule maps a stage history to an action in {-1, +1}.
using DecisionFn = std::function<int(const History&)>;

History build_history(const Trajectory& t, int stage);

// Expected length of a stage-2 history for a dataset with dims (p1, p2).
inline int history_dim(int stage, int p1, int p2) {
    return stage == 1 ? p1 : p1 + p2 + 2;
}

// Reports every violation of the identifiability preconditions: binary
// actions, propensities at or above the declared floor, positive rewards,
// covariate dimensions. Empty result means the dataset is usable.
std::vector<Violation> validate(const Dataset& d);

// Shifts both rewards by c and accumulates the offset. Throws if the shifted
// rewards are not strictly positive.
Dataset apply_offset(const Dataset& d, double c);

// CSV layout: o1_0..o1_{p1-1},a1,y1,o2_0..o2_{p2-1},a2,y2,pi1,pi2 with a
// header row, '.' decimal separator, and full round-trip precision.
void write_csv(const Dataset& d, const std::string& path);
Dataset read_csv(const std::string& path, double positivity_floor = 1e-3,
                 double offset = 0.0);

}  // namespace dtr
