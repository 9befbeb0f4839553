#include "dtr/surrogate.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace dtr {

SurrogateSpec make_surrogate(SurrogateKind kind) {
    SurrogateSpec s;
    s.kind = kind;
    switch (kind) {
        case SurrogateKind::RationalSigmoid:
            s.c_phi = 2.0; s.type_class = TypeClass::A; s.b_phi = 1.0; s.kappa = 2.0;
            break;
        case SurrogateKind::ArctanSigmoid:
            s.c_phi = 2.0; s.type_class = TypeClass::A; s.b_phi = 2.0; s.kappa = 2.0;
            break;
        case SurrogateKind::AlgebraicSigmoid:
            s.c_phi = 2.0; s.type_class = TypeClass::A;
            s.b_phi = std::pow(2.0, 1.5); s.kappa = 3.0;
            break;
        case SurrogateKind::LogisticSigmoid:
            s.c_phi = 2.0; s.type_class = TypeClass::B; s.b_phi = 2.0; s.kappa = 1.0;
            break;
        case SurrogateKind::HingeBivariate:
        case SurrogateKind::ExponentialConcave:
        case SurrogateKind::LogisticConcave:
            s.c_phi = 0.0; s.type_class = TypeClass::NotConditionTwo;
            s.b_phi = 0.0; s.kappa = 0.0;
            break;
    }
    return s;
}

SurrogateSpec surrogate_from_key(const std::string& key) {
    if (key == "rational") return make_surrogate(SurrogateKind::RationalSigmoid);
    if (key == "arctan") return make_surrogate(SurrogateKind::ArctanSigmoid);
    if (key == "algebraic") return make_surrogate(SurrogateKind::AlgebraicSigmoid);
    if (key == "logistic") return make_surrogate(SurrogateKind::LogisticSigmoid);
    if (key == "hinge") return make_surrogate(SurrogateKind::HingeBivariate);
    if (key == "exp-concave") return make_surrogate(SurrogateKind::ExponentialConcave);
    if (key == "logistic-concave") return make_surrogate(SurrogateKind::LogisticConcave);
    throw std::invalid_argument("unknown surrogate key: " + key);
}

std::string surrogate_key(SurrogateKind kind) {
    switch (kind) {
        case SurrogateKind::RationalSigmoid: return "rational";
        case SurrogateKind::ArctanSigmoid: return "arctan";
        case SurrogateKind::AlgebraicSigmoid: return "algebraic";
        case SurrogateKind::LogisticSigmoid: return "logistic";
        case SurrogateKind::HingeBivariate: return "hinge";
        case SurrogateKind::ExponentialConcave: return "exp-concave";
        case SurrogateKind::LogisticConcave: return "logistic-concave";
    }
    return "?";
}

namespace {

[[noreturn]] void unsupported(const SurrogateSpec& s, const char* op) {
    throw std::invalid_argument(std::string(op) + " unsupported for surrogate '" +
                                surrogate_key(s.kind) + "'");
}

}  // namespace

double phi_eval(const SurrogateSpec& s, double x) {
    switch (s.kind) {
        case SurrogateKind::RationalSigmoid:
            return 1.0 + x / (1.0 + std::fabs(x));
        case SurrogateKind::ArctanSigmoid:
            return 1.0 + (2.0 / M_PI) * std::atan(M_PI * x / 2.0);
        case SurrogateKind::AlgebraicSigmoid:
            return 1.0 + x / std::sqrt(1.0 + x * x);
        case SurrogateKind::LogisticSigmoid:
            return 2.0 / (1.0 + std::exp(-x));
        default:
            unsupported(s, "phi_eval");
    }
}

double phi_grad(const SurrogateSpec& s, double x) {
    switch (s.kind) {
        case SurrogateKind::RationalSigmoid: {
            const double d = 1.0 + std::fabs(x);
            return 1.0 / (d * d);
        }
        case SurrogateKind::ArctanSigmoid:
            return 1.0 / (1.0 + M_PI * M_PI * x * x / 4.0);
        case SurrogateKind::AlgebraicSigmoid:
            return std::pow(1.0 + x * x, -1.5);
        case SurrogateKind::LogisticSigmoid: {
            const double e = std::exp(-std::fabs(x));
            const double d = 1.0 + e;
            return 2.0 * e / (d * d);
        }
        default:
            unsupported(s, "phi_grad");
    }
}

double phi_one_plus_tanh(double x) {
    return phi_eval(make_surrogate(SurrogateKind::LogisticSigmoid), 2.0 * x);
}

double psi_eval(const SurrogateSpec& s, double x, double y) {
    switch (s.kind) {
        case SurrogateKind::HingeBivariate:
            return std::min(std::min(x - 1.0, y - 1.0), 0.0);
        case SurrogateKind::ExponentialConcave:
            return -std::exp(-x - y);
        case SurrogateKind::LogisticConcave:
            return -std::log(1.0 + std::exp(-x) + std::exp(-y));
        default:
            return phi_eval(s, x) * phi_eval(s, y);
    }
}

std::pair<double, double> psi_grad(const SurrogateSpec& s, double x, double y) {
    if (!s.is_sigmoid()) unsupported(s, "psi_grad");
    return {phi_grad(s, x) * phi_eval(s, y), phi_eval(s, x) * phi_grad(s, y)};
}

namespace {

std::string at(double x) {
    std::ostringstream os;
    os << " at x=" << x;
    return os.str();
}

}  // namespace

CheckReport check_condition_two(const SurrogateSpec& s, const std::vector<double>& grid) {
    CheckReport r;
    if (!s.is_sigmoid()) {
        r.fail("surrogate is not in the sigmoid family");
        return r;
    }
    double prev = -1.0;
    bool have_prev = false;
    for (double x : grid) {
        const double fx = phi_eval(s, x);
        if (!(fx > 0.0)) r.fail("phi not positive" + at(x));
        if (std::fabs(fx + phi_eval(s, -x) - s.c_phi) > 1e-12) {
            r.fail("reflection identity violated" + at(x));
        }
        if (have_prev && !(fx > prev)) r.fail("not strictly increasing" + at(x));
        prev = fx;
        have_prev = true;
    }
    const double tail = 1e3;
    if (std::fabs(phi_eval(s, tail) - s.c_phi) > 0.05) r.fail("upper tail misses C_phi");
    if (std::fabs(phi_eval(s, -tail)) > 0.05) r.fail("lower tail misses 0");
    return r;
}

CheckReport check_type_bounds(const SurrogateSpec& s, const std::vector<double>& grid) {
    CheckReport r;
    if (!s.is_sigmoid()) {
        r.fail("surrogate is not in the sigmoid family");
        return r;
    }
    for (double x : grid) {
        if (x == 0.0) {
            r.fail("grid contains x=0, excluded by the envelope definition");
            continue;
        }
        const double lhs = std::fabs(phi_grad(s, x));
        const double env = s.type_class == TypeClass::A
                               ? s.b_phi * std::pow(1.0 + std::fabs(x), -s.kappa)
                               : s.b_phi * std::exp(-s.kappa * std::fabs(x));
        if (lhs > env + 1e-12) r.fail("envelope bound violated" + at(x));
    }
    return r;
}

}  // namespace dtr
