#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

namespace dtr {

// Solves A x = b for symmetric positive-definite A (row-major, n x n) by
// Cholesky factorization. Throws if a pivot collapses, which after ridge
// regularization signals a genuinely singular design.
inline std::vector<double> solve_spd(std::vector<double> a, std::vector<double> b) {
    const std::size_t n = b.size();
    for (std::size_t j = 0; j < n; ++j) {
        double d = a[j * n + j];
        for (std::size_t k = 0; k < j; ++k) d -= a[j * n + k] * a[j * n + k];
        if (!(d > 0.0) || !std::isfinite(d)) {
            throw std::runtime_error("solve_spd: matrix not positive definite");
        }
        const double ljj = std::sqrt(d);
        a[j * n + j] = ljj;
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a[i * n + j];
            for (std::size_t k = 0; k < j; ++k) s -= a[i * n + k] * a[j * n + k];
            a[i * n + j] = s / ljj;
        }
    }
    // forward then backward substitution
    for (std::size_t i = 0; i < n; ++i) {
        double s = b[i];
        for (std::size_t k = 0; k < i; ++k) s -= a[i * n + k] * b[k];
        b[i] = s / a[i * n + i];
    }
    for (std::size_t ii = n; ii > 0; --ii) {
        const std::size_t i = ii - 1;
        double s = b[i];
        for (std::size_t k = i + 1; k < n; ++k) s -= a[k * n + i] * b[k];
        b[i] = s / a[i * n + i];
    }
    return b;
}

// Inverse of a symmetric positive-definite matrix via repeated solves;
// used only for small Newton Hessians.
inline std::vector<double> invert_spd(const std::vector<double>& a, std::size_t n) {
    std::vector<double> inv(n * n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        std::vector<double> e(n, 0.0);
        e[j] = 1.0;
        const std::vector<double> col = solve_spd(a, e);
        for (std::size_t i = 0; i < n; ++i) inv[i * n + j] = col[i];
    }
    return inv;
}

}  // namespace dtr
