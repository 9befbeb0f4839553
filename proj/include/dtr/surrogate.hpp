#pragma once

#include <string>
#include <utility>
#include <vector>

namespace dtr {

// The four sigmoid-shaped losses share the reflection identity
// phi(x) + phi(-x) = C_phi with limits 0 and C_phi and strictly positive
// derivative. The last three kinds are deliberately mis-specified
// comparators used by the consistency lab; the trainer refuses them unless
// explicitly overridden.
enum class SurrogateKind {
    RationalSigmoid,    // 1 + x/(1+|x|)
    ArctanSigmoid,      // 1 + (2/pi) atan(pi x / 2)
    AlgebraicSigmoid,   // 1 + x/sqrt(1+x^2)
    LogisticSigmoid,    // 2/(1+e^-x)
    HingeBivariate,     // psi(x,y) = min(x-1, y-1, 0)
    ExponentialConcave, // psi(x,y) = -exp(-x-y)
    LogisticConcave,    // psi(x,y) = -log(1+e^-x+e^-y)
};

enum class TypeClass { A, B, NotConditionTwo };

struct SurrogateSpec {
    SurrogateKind kind = SurrogateKind::LogisticSigmoid;
    double c_phi = 2.0;     // phi(x) + phi(-x)
    TypeClass type_class = TypeClass::B;
    double b_phi = 2.0;     // derivative envelope constant
    double kappa = 1.0;     // envelope decay exponent

    bool is_sigmoid() const { return type_class != TypeClass::NotConditionTwo; }
};

SurrogateSpec make_surrogate(SurrogateKind kind);

// Lookup by config key: "rational", "arctan", "algebraic", "logistic",
// "hinge", "exp-concave", "logistic-concave". Throws on unknown keys.
SurrogateSpec surrogate_from_key(const std::string& key);
std::string surrogate_key(SurrogateKind kind);

double phi_eval(const SurrogateSpec& s, double x);
double phi_grad(const SurrogateSpec& s, double x);

// 1 + tanh(x) equals the logistic kind evaluated at 2x.
double phi_one_plus_tanh(double x);

double psi_eval(const SurrogateSpec& s, double x, double y);

// (d psi/dx, d psi/dy); sigmoid kinds only.
std::pair<double, double> psi_grad(const SurrogateSpec& s, double x, double y);

struct CheckReport {
    bool passed = true;
    std::vector<std::string> failures;

    void fail(std::string msg) {
        passed = false;
        failures.push_back(std::move(msg));
    }
};

// Grid evidence for the reflection identity, positivity, strict increase and
// the tail limits (checked at |x| = 1e3 with 0.05 slack).
CheckReport check_condition_two(const SurrogateSpec& s, const std::vector<double>& grid);

// Verifies the derivative envelope |phi'| <= B (1+|x|)^-kappa (type A) or
// |phi'| <= B exp(-kappa |x|) (type B) at every nonzero grid point. The
// rational kind meets its envelope with equality, so the comparison is
// non-strict with 1e-12 absolute slack.
CheckReport check_type_bounds(const SurrogateSpec& s, const std::vector<double>& grid);

}  // namespace dtr
