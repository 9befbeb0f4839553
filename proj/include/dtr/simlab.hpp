#pragma once

#include <cstdint>

#include "dtr/consistency.hpp"
#include "dtr/core.hpp"
#include "dtr/evalkit.hpp"

namespace dtr {

struct SettingSpec {
    int id = 1;        // 1..5
    std::size_t n = 1;
    std::uint64_t seed = 0;
};

// Draws n trajectories from the requested generating process. Settings 1-4
// assign both treatments with probability 1/2; Setting 5 uses its logistic
// treatment models. Exact propensities of the observed actions are stored.
// Rewards are shifted by the smallest multiple of 0.5 that puts every reward
// at or above 0.1, and the shift is recorded in the offset field.
Dataset generate(const SettingSpec& spec);

// Closed-form (or quadrature-backed) optimal rules of each generating
// process. Decision functions read histories on the raw reward scale
// (feature offset zero).
struct OracleRule {
    int id = 1;
    DecisionFn d1;
    DecisionFn d2;
};

OracleRule oracle_rule(int id);

// Simulates n_eval fresh episodes with both actions forced to the supplied
// decisions and returns the mean raw-scale total reward with its standard
// error. feature_offset shifts the y1 slot of the stage-2 history handed to
// d2, so policies trained on offset data see the scale they were fit on.
ValueEstimate mc_value(int id, const DecisionFn& d1, const DecisionFn& d2,
                       std::size_t n_eval, std::uint64_t seed,
                       double feature_offset = 0.0);

// Setting 1 has finite support, so its optimal value is an exact sum.
double setting1_exact_optimal_value();

// The same law expressed as an enumerable two-stage object (rewards carry
// the given offset so they are positive).
DiscreteDtr setting1_discrete_law(double offset);

}  // namespace dtr
