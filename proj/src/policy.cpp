#include "dtr/policy.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include <json.hpp>

#include "dtr/rng.hpp"

namespace dtr {

PolicyClass policy_class_from_key(const std::string& key) {
    if (key == "linear") return PolicyClass::Linear;
    if (key == "spline") return PolicyClass::Spline;
    if (key == "wavelet") return PolicyClass::Wavelet;
    if (key == "mlp") return PolicyClass::Mlp;
    throw std::invalid_argument("unknown policy class: " + key);
}

std::string policy_class_key(PolicyClass c) {
    switch (c) {
        case PolicyClass::Linear: return "linear";
        case PolicyClass::Spline: return "spline";
        case PolicyClass::Wavelet: return "wavelet";
        case PolicyClass::Mlp: return "mlp";
    }
    return "?";
}

// ---------------------------------------------------------------------------
// Daubechies-4 refinement tables
// ---------------------------------------------------------------------------

namespace d4 {
namespace {

constexpr int kDepth = 13;  // dyadic resolution 2^-13 on [0,3]

// Two-scale coefficients: phi(x) = sum_k c_k phi(2x - k).
const double kSqrt3 = std::sqrt(3.0);
const double kC[4] = {(1.0 + kSqrt3) / 4.0, (3.0 + kSqrt3) / 4.0,
                      (3.0 - kSqrt3) / 4.0, (1.0 - kSqrt3) / 4.0};

std::vector<double> build_scaling_table() {
    // Exact values at the integers, then dyadic refinement: for odd m,
    // phi(m/2^j) = sum_k c_k phi(m/2^{j-1} - k), which reads level j-1 at
    // integer index m - k*2^{j-1}.
    std::vector<double> prev = {0.0, (1.0 + kSqrt3) / 2.0, (1.0 - kSqrt3) / 2.0, 0.0};
    for (int j = 1; j <= kDepth; ++j) {
        const int unit = 1 << (j - 1);
        std::vector<double> cur(3 * (1 << j) + 1, 0.0);
        for (int m = 0; m < static_cast<int>(cur.size()); ++m) {
            if (m % 2 == 0) {
                cur[m] = prev[m / 2];
                continue;
            }
            double v = 0.0;
            for (int k = 0; k < 4; ++k) {
                const int i = m - k * unit;
                if (i >= 0 && i < static_cast<int>(prev.size())) v += kC[k] * prev[i];
            }
            cur[m] = v;
        }
        prev = std::move(cur);
    }
    return prev;
}

std::vector<double> build_wavelet_table(const std::vector<double>& phi_tab) {
    // psi(x) = sum_k (-1)^k c_{3-k} phi(2x - k); support [0,3].
    const double w[4] = {kC[3], -kC[2], kC[1], -kC[0]};
    const int n = 3 * (1 << kDepth) + 1;
    std::vector<double> tab(n, 0.0);
    for (int m = 0; m < n; ++m) {
        double v = 0.0;
        for (int k = 0; k < 4; ++k) {
            const int i = 2 * m - k * (1 << kDepth);
            if (i >= 0 && i < n) v += w[k] * phi_tab[i];
        }
        tab[m] = v;
    }
    return tab;
}

double interp(const std::vector<double>& tab, double x) {
    if (x <= 0.0 || x >= 3.0) return 0.0;
    const double pos = x * static_cast<double>(1 << kDepth);
    const int i = static_cast<int>(pos);
    const double frac = pos - i;
    if (i + 1 >= static_cast<int>(tab.size())) return tab.back();
    return tab[i] * (1.0 - frac) + tab[i + 1] * frac;
}

const std::vector<double>& scaling_table() {
    static const std::vector<double> tab = build_scaling_table();
    return tab;
}

const std::vector<double>& wavelet_table() {
    static const std::vector<double> tab = build_wavelet_table(scaling_table());
    return tab;
}

}  // namespace

double scaling(double x) { return interp(scaling_table(), x); }
double wavelet(double x) { return interp(wavelet_table(), x); }

}  // namespace d4

// ---------------------------------------------------------------------------
// Feature maps
// ---------------------------------------------------------------------------

namespace {

void check_stage(const Policy& p, const History& h) {
    if (p.stage != h.stage) {
        throw std::invalid_argument("policy/history stage mismatch");
    }
}

// Extra natural-cubic basis functions beyond {1, x} for interior knots
// xi_1 < ... < xi_K: N_k = d_k - d_{K-1} with
// d_k(x) = ((x - xi_k)_+^3 - (x - xi_K)_+^3) / (xi_K - xi_k).
double cube_pos(double v) { return v > 0.0 ? v * v * v : 0.0; }

double natural_d(double x, double xi_k, double xi_last) {
    return (cube_pos(x - xi_k) - cube_pos(x - xi_last)) / (xi_last - xi_k);
}

void spline_features(const std::vector<double>& knots, double x,
                     std::vector<double>& out) {
    out.push_back(x);
    const std::size_t K = knots.size();
    if (K < 3) return;
    const double dlast = natural_d(x, knots[K - 2], knots[K - 1]);
    for (std::size_t k = 0; k + 2 < K; ++k) {
        out.push_back(natural_d(x, knots[k], knots[K - 1]) - dlast);
    }
}

int spline_coord_dim(const std::vector<double>& knots) {
    return knots.size() < 3 ? 1 : 1 + static_cast<int>(knots.size()) - 2;
}

void wavelet_features(double u, int levels, std::vector<double>& out) {
    // u is already rescaled/clamped to [0,1]; scaling translates covering
    // [0,1], then wavelet translates per level.
    for (int k = -2; k <= 0; ++k) out.push_back(d4::scaling(u - k));
    for (int l = 0; l <= levels; ++l) {
        const double scale = std::pow(2.0, 0.5 * l);
        const double arg = std::ldexp(u, l);  // 2^l * u
        for (int k = -2; k < (1 << l); ++k) {
            out.push_back(scale * d4::wavelet(arg - k));
        }
    }
}

int wavelet_coord_dim(int levels) {
    int n = 3;
    for (int l = 0; l <= levels; ++l) n += (1 << l) + 2;
    return n;
}

int mlp_param_count(const std::vector<int>& layers) {
    int n = 0;
    for (std::size_t i = 0; i + 1 < layers.size(); ++i) {
        n += layers[i + 1] * layers[i] + layers[i + 1];
    }
    return n;
}

}  // namespace

int feature_dim(PolicyClass kind, int stage, const FeatureMeta& meta) {
    const int hdim = history_dim(stage, meta.p1, meta.p2);
    switch (kind) {
        case PolicyClass::Linear:
            return stage == 1 ? 1 + hdim : 1 + hdim + meta.p1 * meta.p2 + meta.p1;
        case PolicyClass::Spline: {
            int n = 1;
            for (int c = 0; c < hdim; ++c) {
                n += meta.binary[c] ? 1 : spline_coord_dim(meta.knots[c]);
            }
            return n;
        }
        case PolicyClass::Wavelet: {
            int n = 1;
            for (int c = 0; c < hdim; ++c) {
                n += meta.binary[c] ? 1 : wavelet_coord_dim(meta.wavelet_levels);
            }
            return n;
        }
        case PolicyClass::Mlp:
            return meta.layers.front();
    }
    return 0;
}

std::vector<double> featurize(const Policy& p, const History& h) {
    check_stage(p, h);
    const int hdim = history_dim(p.stage, p.meta.p1, p.meta.p2);
    if (static_cast<int>(h.h.size()) != hdim) {
        throw std::invalid_argument("history length does not match dataset dims");
    }
    std::vector<double> out;
    switch (p.kind) {
        case PolicyClass::Linear: {
            out.reserve(feature_dim(p.kind, p.stage, p.meta));
            out.push_back(1.0);
            out.insert(out.end(), h.h.begin(), h.h.end());
            if (p.stage == 2) {
                const int p1 = p.meta.p1, p2 = p.meta.p2;
                const double a1 = h.h[hdim - 1];
                for (int i = 0; i < p1; ++i) {
                    for (int j = 0; j < p2; ++j) {
                        out.push_back(h.h[i] * h.h[p1 + 1 + j]);
                    }
                }
                for (int i = 0; i < p1; ++i) out.push_back(h.h[i] * a1);
            }
            break;
        }
        case PolicyClass::Spline: {
            out.reserve(feature_dim(p.kind, p.stage, p.meta));
            out.push_back(1.0);
            for (int c = 0; c < hdim; ++c) {
                if (p.meta.binary[c]) {
                    out.push_back(h.h[c]);
                } else {
                    spline_features(p.meta.knots[c], h.h[c], out);
                }
            }
            break;
        }
        case PolicyClass::Wavelet: {
            out.reserve(feature_dim(p.kind, p.stage, p.meta));
            out.push_back(1.0);
            for (int c = 0; c < hdim; ++c) {
                if (p.meta.binary[c]) {
                    out.push_back(h.h[c]);
                } else {
                    const double lo = p.meta.lo[c], hi = p.meta.hi[c];
                    double u = (h.h[c] - lo) / (hi - lo);
                    u = std::min(1.0, std::max(0.0, u));
                    wavelet_features(u, p.meta.wavelet_levels, out);
                }
            }
            break;
        }
        case PolicyClass::Mlp:
            out = h.h;
            break;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Network forward / backward
// ---------------------------------------------------------------------------

namespace {

// Applies the stored standardization; identity when meta carries none.
std::vector<double> standardized(const Policy& p, const std::vector<double>& input) {
    if (p.meta.in_mean.empty()) return input;
    std::vector<double> u(input.size());
    for (std::size_t j = 0; j < input.size(); ++j) {
        u[j] = (input[j] - p.meta.in_mean[j]) / p.meta.in_sd[j];
    }
    return u;
}

}  // namespace

double mlp_forward(const Policy& p, const std::vector<double>& raw_input,
                   const DropoutMask* mask) {
    const std::vector<double> input = standardized(p, raw_input);
    const std::vector<int>& L = p.meta.layers;
    const int in = L[0], n1 = L[1], n2 = L[2];
    const double* w = p.params.data();
    const double* W1 = w;
    const double* b1 = W1 + n1 * in;
    const double* W2 = b1 + n1;
    const double* b2 = W2 + n2 * n1;
    const double* W3 = b2 + n2;
    const double* b3 = W3 + n2;

    std::vector<double> a1v(n1), a2v(n2);
    for (int i = 0; i < n1; ++i) {
        double z = b1[i];
        for (int j = 0; j < in; ++j) z += W1[i * in + j] * input[j];
        double a = z > 0.0 ? z : 0.0;
        if (mask) a *= mask->m1[i];
        a1v[i] = a;
    }
    for (int i = 0; i < n2; ++i) {
        double z = b2[i];
        for (int j = 0; j < n1; ++j) z += W2[i * n1 + j] * a1v[j];
        double a = z > 0.0 ? z : 0.0;
        if (mask) a *= mask->m2[i];
        a2v[i] = a;
    }
    double f = b3[0];
    for (int j = 0; j < n2; ++j) f += W3[j] * a2v[j];
    return f;
}

double mlp_forward_grad(const Policy& p, const std::vector<double>& raw_input,
                        const DropoutMask* mask, std::vector<double>& grad) {
    const std::vector<double> input = standardized(p, raw_input);
    const std::vector<int>& L = p.meta.layers;
    const int in = L[0], n1 = L[1], n2 = L[2];
    const double* w = p.params.data();
    const double* W1 = w;
    const double* b1 = W1 + n1 * in;
    const double* W2 = b1 + n1;
    const double* b2 = W2 + n2 * n1;
    const double* W3 = b2 + n2;
    const double* b3 = W3 + n2;

    std::vector<double> z1(n1), a1v(n1), z2(n2), a2v(n2);
    for (int i = 0; i < n1; ++i) {
        double z = b1[i];
        for (int j = 0; j < in; ++j) z += W1[i * in + j] * input[j];
        z1[i] = z;
        double a = z > 0.0 ? z : 0.0;
        if (mask) a *= mask->m1[i];
        a1v[i] = a;
    }
    for (int i = 0; i < n2; ++i) {
        double z = b2[i];
        for (int j = 0; j < n1; ++j) z += W2[i * n1 + j] * a1v[j];
        z2[i] = z;
        double a = z > 0.0 ? z : 0.0;
        if (mask) a *= mask->m2[i];
        a2v[i] = a;
    }
    double f = b3[0];
    for (int j = 0; j < n2; ++j) f += W3[j] * a2v[j];

    grad.assign(p.params.size(), 0.0);
    double* gW1 = grad.data();
    double* gb1 = gW1 + n1 * in;
    double* gW2 = gb1 + n1;
    double* gb2 = gW2 + n2 * n1;
    double* gW3 = gb2 + n2;
    double* gb3 = gW3 + n2;

    gb3[0] = 1.0;
    for (int j = 0; j < n2; ++j) gW3[j] = a2v[j];

    std::vector<double> d2(n2);
    for (int i = 0; i < n2; ++i) {
        double di = W3[i];
        if (mask) di *= mask->m2[i];
        d2[i] = z2[i] > 0.0 ? di : 0.0;
        gb2[i] = d2[i];
        for (int j = 0; j < n1; ++j) gW2[i * n1 + j] = d2[i] * a1v[j];
    }
    for (int j = 0; j < n1; ++j) {
        double dj = 0.0;
        for (int i = 0; i < n2; ++i) dj += d2[i] * W2[i * n1 + j];
        if (mask) dj *= mask->m1[j];
        dj = z1[j] > 0.0 ? dj : 0.0;
        gb1[j] = dj;
        for (int k = 0; k < in; ++k) gW1[j * in + k] = dj * input[k];
    }
    return f;
}

DropoutMask draw_dropout_mask(const Policy& p, CounterRng& rng) {
    if (p.kind != PolicyClass::Mlp) return {};
    const double keep = 1.0 - p.meta.dropout;
    DropoutMask m;
    m.m1.resize(p.meta.layers[1]);
    m.m2.resize(p.meta.layers[2]);
    for (double& v : m.m1) v = rng.bernoulli(keep) ? 1.0 / keep : 0.0;
    for (double& v : m.m2) v = rng.bernoulli(keep) ? 1.0 / keep : 0.0;
    return m;
}

// ---------------------------------------------------------------------------
// Evaluation entry points
// ---------------------------------------------------------------------------

double policy_eval_grad(const Policy& p, const History& h, const DropoutMask* mask,
                        std::vector<double>& grad) {
    check_stage(p, h);
    if (p.kind == PolicyClass::Mlp) {
        return mlp_forward_grad(p, h.h, mask, grad);
    }
    grad = featurize(p, h);
    double f = 0.0;
    for (std::size_t i = 0; i < grad.size(); ++i) f += p.params[i] * grad[i];
    return f;
}

double policy_eval(const Policy& p, const History& h) {
    check_stage(p, h);
    if (p.kind == PolicyClass::Mlp) return mlp_forward(p, h.h, nullptr);
    const std::vector<double> x = featurize(p, h);
    double f = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) f += p.params[i] * x[i];
    return f;
}

std::vector<double> policy_grad(const Policy& p, const History& h) {
    std::vector<double> g;
    policy_eval_grad(p, h, nullptr, g);
    return g;
}

int decide(const Policy& p, const History& h) {
    return policy_eval(p, h) >= 0.0 ? 1 : -1;
}

// ---------------------------------------------------------------------------
// Construction from data
// ---------------------------------------------------------------------------

namespace {

double quantile(std::vector<double> v, double q) {
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const std::size_t i = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(i);
    if (i + 1 >= v.size()) return v.back();
    return v[i] * (1.0 - frac) + v[i + 1] * frac;
}

void init_mlp(Policy& p, std::uint64_t seed) {
    p.params.assign(mlp_param_count(p.meta.layers), 0.0);
    CounterRng rng(CounterRng::derive(seed, 0x6d6c70));
    double* w = p.params.data();
    for (std::size_t l = 0; l + 1 < p.meta.layers.size(); ++l) {
        const int fan_in = p.meta.layers[l];
        const int fan_out = p.meta.layers[l + 1];
        const double a = std::sqrt(6.0 / (fan_in + fan_out));
        for (int i = 0; i < fan_out * fan_in; ++i) *w++ = rng.uniform(-a, a);
        for (int i = 0; i < fan_out; ++i) *w++ = 0.0;  // biases
    }
}

void set_standardization(Policy& p, const std::vector<std::vector<double>>& inputs) {
    const std::size_t dim = static_cast<std::size_t>(p.meta.layers[0]);
    p.meta.in_mean.assign(dim, 0.0);
    p.meta.in_sd.assign(dim, 1.0);
    if (inputs.empty()) return;
    const double n = static_cast<double>(inputs.size());
    for (const std::vector<double>& x : inputs) {
        for (std::size_t j = 0; j < dim; ++j) p.meta.in_mean[j] += x[j];
    }
    for (double& m : p.meta.in_mean) m /= n;
    std::vector<double> ss(dim, 0.0);
    for (const std::vector<double>& x : inputs) {
        for (std::size_t j = 0; j < dim; ++j) {
            const double c = x[j] - p.meta.in_mean[j];
            ss[j] += c * c;
        }
    }
    for (std::size_t j = 0; j < dim; ++j) {
        const double sd = std::sqrt(ss[j] / n);
        p.meta.in_sd[j] = sd > 1e-12 ? sd : 1.0;  // constant columns stay centered
    }
}

}  // namespace

Policy make_mlp_policy(int stage, int input_dim, std::uint64_t seed,
                       const std::vector<std::vector<double>>* inputs) {
    Policy p;
    p.stage = stage;
    p.kind = PolicyClass::Mlp;
    p.meta.layers = {input_dim, 128, 64, 1};
    p.meta.dropout = 0.5;
    init_mlp(p, seed);
    if (inputs) set_standardization(p, *inputs);
    return p;
}

Policy make_policy(PolicyClass kind, int stage, const Dataset& d, std::uint64_t seed) {
    Policy p;
    p.stage = stage;
    p.kind = kind;
    p.meta.p1 = d.p1;
    p.meta.p2 = d.p2;
    const int hdim = history_dim(stage, d.p1, d.p2);

    if (kind == PolicyClass::Mlp) {
        p.meta.layers = {hdim, 128, 64, 1};
        p.meta.dropout = 0.5;
        init_mlp(p, seed);
        std::vector<std::vector<double>> inputs;
        inputs.reserve(d.trajectories.size());
        for (const Trajectory& t : d.trajectories) {
            inputs.push_back(build_history(t, stage).h);
        }
        set_standardization(p, inputs);
        return p;
    }

    if (kind == PolicyClass::Spline || kind == PolicyClass::Wavelet) {
        if (d.trajectories.empty()) {
            throw std::invalid_argument("basis policy needs data to place knots");
        }
        std::vector<std::vector<double>> cols(hdim);
        for (const Trajectory& t : d.trajectories) {
            const History h = build_history(t, stage);
            for (int c = 0; c < hdim; ++c) cols[c].push_back(h.h[c]);
        }
        p.meta.binary.resize(hdim, 0);
        p.meta.knots.resize(hdim);
        p.meta.lo.resize(hdim, 0.0);
        p.meta.hi.resize(hdim, 1.0);
        for (int c = 0; c < hdim; ++c) {
            std::set<double> distinct(cols[c].begin(), cols[c].end());
            if (distinct.size() <= 2) {
                p.meta.binary[c] = 1;
                continue;
            }
            if (kind == PolicyClass::Spline) {
                std::vector<double> ks = {quantile(cols[c], 0.25),
                                          quantile(cols[c], 0.50),
                                          quantile(cols[c], 0.75)};
                std::sort(ks.begin(), ks.end());
                ks.erase(std::unique(ks.begin(), ks.end(),
                                     [](double a, double b) {
                                         return std::fabs(a - b) < 1e-12;
                                     }),
                         ks.end());
                if (ks.size() < 3) {
                    p.meta.binary[c] = 1;  // too few distinct knots: linear term only
                } else {
                    p.meta.knots[c] = std::move(ks);
                }
            } else {
                const auto [lo, hi] = std::minmax_element(cols[c].begin(), cols[c].end());
                if (*hi - *lo < 1e-12) {
                    p.meta.binary[c] = 1;
                } else {
                    p.meta.lo[c] = *lo;
                    p.meta.hi[c] = *hi;
                }
            }
        }
    }
    p.params.assign(feature_dim(kind, stage, p.meta), 0.0);
    return p;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

namespace {

nlohmann::json meta_to_json(const Policy& p) {
    nlohmann::json m;
    m["p1"] = p.meta.p1;
    m["p2"] = p.meta.p2;
    switch (p.kind) {
        case PolicyClass::Spline:
            m["binary"] = p.meta.binary;
            m["knots"] = p.meta.knots;
            break;
        case PolicyClass::Wavelet:
            m["binary"] = p.meta.binary;
            m["lo"] = p.meta.lo;
            m["hi"] = p.meta.hi;
            m["levels"] = p.meta.wavelet_levels;
            break;
        case PolicyClass::Mlp:
            m["layers"] = p.meta.layers;
            m["dropout"] = p.meta.dropout;
            m["in_mean"] = p.meta.in_mean;
            m["in_sd"] = p.meta.in_sd;
            break;
        case PolicyClass::Linear:
            break;
    }
    return m;
}

Policy policy_from_json_obj(const nlohmann::json& j) {
    Policy p;
    p.stage = j.at("stage").get<int>();
    p.kind = policy_class_from_key(j.at("class_kind").get<std::string>());
    const nlohmann::json& m = j.at("meta");
    p.meta.p1 = m.value("p1", 0);
    p.meta.p2 = m.value("p2", 0);
    if (m.contains("binary")) p.meta.binary = m["binary"].get<std::vector<unsigned char>>();
    if (m.contains("knots")) p.meta.knots = m["knots"].get<std::vector<std::vector<double>>>();
    if (m.contains("lo")) p.meta.lo = m["lo"].get<std::vector<double>>();
    if (m.contains("hi")) p.meta.hi = m["hi"].get<std::vector<double>>();
    if (m.contains("levels")) p.meta.wavelet_levels = m["levels"].get<int>();
    if (m.contains("layers")) p.meta.layers = m["layers"].get<std::vector<int>>();
    if (m.contains("dropout")) p.meta.dropout = m["dropout"].get<double>();
    if (m.contains("in_mean")) p.meta.in_mean = m["in_mean"].get<std::vector<double>>();
    if (m.contains("in_sd")) p.meta.in_sd = m["in_sd"].get<std::vector<double>>();
    p.params = j.at("params").get<std::vector<double>>();
    const std::size_t want = p.kind == PolicyClass::Mlp
        ? static_cast<std::size_t>(mlp_param_count(p.meta.layers))
        : static_cast<std::size_t>(feature_dim(p.kind, p.stage, p.meta));
    if (p.params.size() != want) {
        throw std::runtime_error("policy json: params length does not match meta");
    }
    return p;
}

nlohmann::json policy_to_json_obj(const Policy& p) {
    nlohmann::json j;
    j["stage"] = p.stage;
    j["class_kind"] = policy_class_key(p.kind);
    j["meta"] = meta_to_json(p);
    j["params"] = p.params;
    return j;
}

}  // namespace

std::string policy_to_json(const Policy& p) { return policy_to_json_obj(p).dump(); }

Policy policy_from_json(const std::string& text) {
    return policy_from_json_obj(nlohmann::json::parse(text));
}

std::string pair_to_json(const PolicyPair& pair, double offset) {
    nlohmann::json j;
    j["offset"] = offset;
    j["f1"] = policy_to_json_obj(pair.f1);
    j["f2"] = policy_to_json_obj(pair.f2);
    return j.dump();
}

PolicyPair pair_from_json(const std::string& text, double* offset) {
    const nlohmann::json j = nlohmann::json::parse(text);
    if (offset) *offset = j.value("offset", 0.0);
    PolicyPair pair;
    pair.f1 = policy_from_json_obj(j.at("f1"));
    pair.f2 = policy_from_json_obj(j.at("f2"));
    if (pair.f1.stage != 1 || pair.f2.stage != 2) {
        throw std::runtime_error("pair json: stages must be (1, 2)");
    }
    return pair;
}

}  // namespace dtr
