#pragma once

// Independent numeric oracles for the test suites. Quadrature-based
// expectations deliberately re-derive the densities instead of calling the
// library, so they cross-check the closed-form moment code rather than
// restating it.

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <variant>

#include "stackmc/distributions.hpp"

namespace oracle {

template <typename F>
double integrate(F f, double a, double b, double tol = 1e-13) {
    double err = 0.0;
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 15, tol, &err);
}

// tanh-sinh over [0,1] for integrands with integrable endpoint
// singularities (beta shapes < 1). The integrand receives accurate
// distances to both endpoints; tanh-sinh reports the distance to the
// nearest one as xc, negative on the left half.
template <typename F>
double integrate_unit_singular(F f, double tol = 1e-13) {
    boost::math::quadrature::tanh_sinh<double> integ;
    return integ.integrate(
        [&](double x, double xc) {
            const double d0 = xc < 0 ? -xc : x;
            const double d1 = xc > 0 ? xc : 1.0 - x;
            return f(x, d0, d1);
        },
        0.0, 1.0, tol);
}

// Beta density written in terms of the distances to the endpoints so it
// stays accurate where 1 - x would cancel.
inline double beta_density_d(double a, double b, double d0, double d1) {
    const double lbeta = std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
    return std::pow(d0, a - 1.0) * std::pow(d1, b - 1.0) / std::exp(lbeta);
}

inline double gaussian_density(double mu, double sigma, double x) {
    const double z = (x - mu) / sigma;
    return std::exp(-0.5 * z * z) / (sigma * std::sqrt(2.0 * std::numbers::pi));
}

// E[f(x)] under one marginal by adaptive quadrature.
inline double marginal_expectation(const stackmc::Marginal& m,
                                   const std::function<double(double)>& f) {
    if (const auto* u = std::get_if<stackmc::UniformBox>(&m)) {
        const double w = u->hi - u->lo;
        return integrate([&](double x) { return f(x) / w; }, u->lo, u->hi);
    }
    if (const auto* g = std::get_if<stackmc::Gaussian>(&m)) {
        const double inf = std::numeric_limits<double>::infinity();
        return integrate([&](double x) { return f(x) * gaussian_density(g->mu, g->sigma, x); },
                         -inf, inf);
    }
    const auto& bt = std::get<stackmc::Beta>(m);
    return integrate_unit_singular(
        [&](double x, double d0, double d1) { return f(x) * beta_density_d(bt.a, bt.b, d0, d1); });
}

// Raw beta moment by quadrature, singularities included.
inline double beta_moment_quadrature(double a, double b, int n) {
    return integrate_unit_singular(
        [&](double x, double d0, double d1) { return std::pow(x, n) * beta_density_d(a, b, d0, d1); });
}

}  // namespace oracle
