#pragma once

// Test-only reference implementations. These stay independent of the library
// solver paths they are used to check.

#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include "isingdyn/model.hpp"

namespace oracles {

// Golden-section search on [lo, hi] for a unimodal function. The objective
// should evaluate in long double: near-flat minima of the coshine objectives
// are otherwise lost in double rounding before the bracket closes.
template <class F>
double golden_section_minimize(F f, double lo, double hi, double x_tol = 1e-11) {
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    auto fc = f(c);
    auto fd = f(d);
    while (b - a > x_tol) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    return 0.5 * (a + b);
}

// Central finite differences of a scalar function of a parameter vector.
template <class F>
std::vector<double> finite_difference_gradient(F f, std::vector<double> x, double h = 1e-6) {
    std::vector<double> g(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double saved = x[k];
        x[k] = saved + h;
        const double fp = f(x);
        x[k] = saved - h;
        const double fm = f(x);
        x[k] = saved;
        g[k] = (fp - fm) / (2.0 * h);
    }
    return g;
}

// Plain ISTA reference for min f(x) + lambda * sum_{k < penalized_count} |x_k|,
// written independently of the library's proximal-gradient solver. The step
// size adapts by doubling the Lipschitz guess on bound violations. Stops when
// the prox-gradient mapping is below tol.
struct RefProblem {
    std::function<double(const std::vector<double>&)> value;
    std::function<std::vector<double>(const std::vector<double>&)> gradient;
};

inline std::vector<double> reference_ista(const RefProblem& p, std::size_t dim, double lambda,
                                          std::size_t penalized_count, double tol = 1e-10,
                                          std::size_t max_iter = 500000) {
    std::vector<double> x(dim, 0.0);
    double lip = 1.0;
    auto soft = [](double v, double k) { return v > k ? v - k : (v < -k ? v + k : 0.0); };
    for (std::size_t it = 0; it < max_iter; ++it) {
        const std::vector<double> g = p.gradient(x);
        const double fx = p.value(x);
        std::vector<double> y(dim);
        while (true) {
            double quad = 0.0, lin = 0.0;
            for (std::size_t k = 0; k < dim; ++k) {
                double v = x[k] - g[k] / lip;
                if (k < penalized_count) v = soft(v, lambda / lip);
                y[k] = v;
                const double dk = v - x[k];
                lin += g[k] * dk;
                quad += dk * dk;
            }
            if (p.value(y) <= fx + lin + 0.5 * lip * quad) break;
            lip *= 2.0;
        }
        double move = 0.0;
        for (std::size_t k = 0; k < dim; ++k) move = std::max(move, std::abs(y[k] - x[k]) * lip);
        x = y;
        if (move <= tol) break;
        lip *= 0.97;
        if (lip < 1e-8) lip = 1e-8;
    }
    return x;
}

inline std::vector<isingdyn::SpinConfiguration> all_configurations(int n) {
    std::vector<isingdyn::SpinConfiguration> out;
    out.reserve(std::size_t{1} << n);
    for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
        isingdyn::SpinConfiguration sigma(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) sigma[static_cast<std::size_t>(i)] = (mask >> i) & 1u ? 1 : -1;
        out.push_back(std::move(sigma));
    }
    return out;
}

}  // namespace oracles
