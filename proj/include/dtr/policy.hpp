#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dtr/core.hpp"

namespace dtr {

enum class PolicyClass { Linear, Spline, Wavelet, Mlp };

PolicyClass policy_class_from_key(const std::string& key);
std::string policy_class_key(PolicyClass c);

// Class-specific feature-map metadata, frozen at construction from the
// training data so that featurize is a pure function afterwards.
struct FeatureMeta {
    int p1 = 0;
    int p2 = 0;
    // Per history coordinate: binary columns skip spline/wavelet expansion
    // and enter linearly.
    std::vector<unsigned char> binary;
    // Spline: deduplicated interior knots per coordinate (empty = linear only).
    std::vector<std::vector<double>> knots;
    // Wavelet: rescale bounds per coordinate, mapping the training range
    // onto [0,1]; evaluation clamps to that interval.
    std::vector<double> lo, hi;
    int wavelet_levels = 5;
    // Mlp: layer sizes {input, 128, 64, 1} and the training dropout rate.
    // Inputs pass through a fixed per-coordinate standardization (training-set
    // mean/sd) before the first layer; empty vectors mean no standardization.
    std::vector<int> layers;
    double dropout = 0.5;
    std::vector<double> in_mean, in_sd;
};

struct Policy {
    int stage = 1;
    PolicyClass kind = PolicyClass::Linear;
    FeatureMeta meta;
    std::vector<double> params;
};

struct PolicyPair {
    Policy f1;
    Policy f2;
};

// Inverted-dropout masks for the two hidden layers; entries are 0 or
// 1/keep_prob so that evaluation needs no rescaling.
struct DropoutMask {
    std::vector<double> m1, m2;
};

class CounterRng;

// Builds a zero-initialized basis policy or a Glorot-initialized network,
// computing knots / rescale bounds / binary flags from the dataset.
Policy make_policy(PolicyClass kind, int stage, const Dataset& d, std::uint64_t seed = 0);

// Network over an arbitrary input dimension (used for score functions on
// H_t and for Q-functions on (H_t, A_t)); optional training inputs fix the
// standardization constants.
Policy make_mlp_policy(int stage, int input_dim, std::uint64_t seed,
                       const std::vector<std::vector<double>>* inputs = nullptr);

int feature_dim(PolicyClass kind, int stage, const FeatureMeta& meta);

std::vector<double> featurize(const Policy& p, const History& h);

double policy_eval(const Policy& p, const History& h);

// Gradient with respect to the parameters; for basis classes this is the
// feature vector, for networks a full backward pass. A non-null mask puts
// the network in training mode.
std::vector<double> policy_grad(const Policy& p, const History& h);

// Fused evaluate + gradient; grad is resized to params.size().
double policy_eval_grad(const Policy& p, const History& h, const DropoutMask* mask,
                        std::vector<double>& grad);

double mlp_forward(const Policy& p, const std::vector<double>& input,
                   const DropoutMask* mask);
double mlp_forward_grad(const Policy& p, const std::vector<double>& input,
                        const DropoutMask* mask, std::vector<double>& grad);

DropoutMask draw_dropout_mask(const Policy& p, CounterRng& rng);

// +1 when the score is >= 0 (ties resolve to +1), else -1.
int decide(const Policy& p, const History& h);

std::string policy_to_json(const Policy& p);
Policy policy_from_json(const std::string& text);

// Pair files additionally carry the reward offset the pair was trained
// under, so that evaluation rebuilds stage-2 histories on the same scale.
std::string pair_to_json(const PolicyPair& pair, double offset);
PolicyPair pair_from_json(const std::string& text, double* offset = nullptr);

// Daubechies-4 scaling/wavelet functions on their support [0,3], evaluated
// from a precomputed dyadic refinement table.
namespace d4 {
double scaling(double x);
double wavelet(double x);
}  // namespace d4

}  // namespace dtr
