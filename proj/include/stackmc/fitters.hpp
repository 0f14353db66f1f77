#pragma once

#include <Eigen/Core>
#include <Eigen/SVD>
#include <cmath>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stackmc/distributions.hpp"
#include "stackmc/error.hpp"

namespace stackmc {

// ---------------------------------------------------------------------------
// Additive linear-basis surrogates. Feature order is fixed so coefficient
// tables are comparable across runs: constant term first, then one block per
// dimension; polynomial blocks hold monomials in ascending degree, Fourier
// blocks hold cos(x), cos(2x), ..., then sin(x), sin(2x), ...
// ---------------------------------------------------------------------------

enum class FitterFamily { Polynomial, Fourier };

struct FitterSpec {
    std::size_t dims = 1;
    FitterFamily family = FitterFamily::Polynomial;
    int order = 3;  // polynomial degree, or harmonic count per trig kind

    FitterSpec() = default;
    FitterSpec(std::size_t d, FitterFamily f, int ord) : dims(d), family(f), order(ord) {
        if (dims < 1) throw ParameterError("fitter needs at least one dimension");
        if (order < 1) throw ParameterError("fitter order must be >= 1");
    }

    std::size_t terms_per_dim() const {
        return family == FitterFamily::Polynomial ? static_cast<std::size_t>(order)
                                                  : 2 * static_cast<std::size_t>(order);
    }
    std::size_t param_count() const { return 1 + dims * terms_per_dim(); }

    // Basis function for local term index m within one dimension block.
    BasisFunction term(std::size_t m) const {
        if (family == FitterFamily::Polynomial) return Monomial{static_cast<int>(m) + 1};
        const int h = order;
        return m < static_cast<std::size_t>(h)
                   ? BasisFunction(Cosine{static_cast<int>(m) + 1})
                   : BasisFunction(Sine{static_cast<int>(m) - h + 1});
    }

    bool operator==(const FitterSpec&) const = default;

    // Grammar: poly(3) or fourier(3); dims supplied by the caller.
    static FitterSpec parse(std::string_view text, std::size_t dims);
    std::string str() const {
        return (family == FitterFamily::Polynomial ? "poly(" : "fourier(") +
               std::to_string(order) + ")";
    }
};

inline FitterSpec FitterSpec::parse(std::string_view text, std::size_t dims) {
    const auto open = text.find('(');
    if (open == std::string_view::npos || text.back() != ')')
        throw ParseError("fitter grammar: expected name(order) in '" + std::string(text) + "'");
    const auto name = text.substr(0, open);
    const auto num = text.substr(open + 1, text.size() - open - 2);
    int ord = 0;
    const auto res = std::from_chars(num.data(), num.data() + num.size(), ord);
    if (res.ec != std::errc{} || res.ptr != num.data() + num.size() || ord < 1)
        throw ParseError("fitter grammar: bad order '" + std::string(num) + "'");
    if (name == "poly") return FitterSpec(dims, FitterFamily::Polynomial, ord);
    if (name == "fourier") return FitterSpec(dims, FitterFamily::Fourier, ord);
    throw ParseError("fitter grammar: unknown family '" + std::string(name) + "'");
}

struct FitModel {
    FitterSpec spec;
    std::vector<double> beta;  // length spec.param_count()
};

inline void fill_feature_row(const FitterSpec& spec, std::span<const double> point,
                             std::span<double> out) {
    if (point.size() != spec.dims)
        throw ShapeError("feature_row: point has " + std::to_string(point.size()) +
                         " entries, fitter expects " + std::to_string(spec.dims));
    out[0] = 1.0;
    std::size_t j = 1;
    for (std::size_t d = 0; d < spec.dims; ++d) {
        const double x = point[d];
        if (spec.family == FitterFamily::Polynomial) {
            double p = 1.0;
            for (int m = 0; m < spec.order; ++m) out[j++] = (p *= x);
        } else {
            for (int h = 1; h <= spec.order; ++h) out[j++] = std::cos(h * x);
            for (int h = 1; h <= spec.order; ++h) out[j++] = std::sin(h * x);
        }
    }
}

inline std::vector<double> feature_row(const FitterSpec& spec, std::span<const double> point) {
    std::vector<double> row(spec.param_count());
    fill_feature_row(spec, point, row);
    return row;
}

// Least squares on a row subset. Rank-revealing SVD with singular values
// below 1e-12 * sigma_max dropped; rank-deficient designs get the
// minimum-norm solution. ridge > 0 adds Tikhonov rows on the non-constant
// columns (off by default).
inline FitModel fit_rows(const FitterSpec& spec, const SampleMatrix& pts,
                         std::span<const std::size_t> rows, std::span<const double> values,
                         double ridge = 0.0) {
    const std::size_t p = spec.param_count();
    const std::size_t n = rows.size();
    if (pts.n_cols != spec.dims)
        throw ShapeError("fit: sample matrix has " + std::to_string(pts.n_cols) +
                         " columns, fitter expects " + std::to_string(spec.dims));
    if (values.size() != n) throw ShapeError("fit: values length does not match point count");
    if (n < p)
        throw InsufficientDataError("fit: " + std::to_string(n) + " points for " +
                                    std::to_string(p) + " parameters");

    const std::size_t extra = ridge > 0.0 ? p - 1 : 0;
    Eigen::MatrixXd design = Eigen::MatrixXd::Zero(n + extra, p);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + extra);
    std::vector<double> row(p);
    for (std::size_t i = 0; i < n; ++i) {
        fill_feature_row(spec, pts.row(rows[i]), row);
        for (std::size_t j = 0; j < p; ++j) design(i, j) = row[j];
        rhs(i) = values[i];
    }
    if (extra > 0) {
        const double s = std::sqrt(ridge);
        for (std::size_t j = 1; j < p; ++j) design(n + j - 1, j) = s;
    }

    Eigen::BDCSVD<Eigen::MatrixXd> svd(design, Eigen::ComputeThinU | Eigen::ComputeThinV);
    svd.setThreshold(1e-12);
    const Eigen::VectorXd beta = svd.solve(rhs);

    FitModel model{spec, std::vector<double>(beta.data(), beta.data() + p)};
    for (const double b : model.beta)
        if (!std::isfinite(b)) throw NumericError("fit produced a non-finite coefficient");
    return model;
}

inline FitModel fit(const FitterSpec& spec, const SampleMatrix& pts,
                    std::span<const double> values, double ridge = 0.0) {
    std::vector<std::size_t> rows(pts.n_rows);
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
    return fit_rows(spec, pts, rows, values, ridge);
}

inline double predict_with_scratch(const FitModel& model, std::span<const double> point,
                                   std::span<double> scratch) {
    fill_feature_row(model.spec, point, scratch);
    double acc = 0.0;
    for (std::size_t j = 0; j < model.beta.size(); ++j) acc += model.beta[j] * scratch[j];
    return acc;
}

inline double predict(const FitModel& model, std::span<const double> point) {
    std::vector<double> scratch(model.spec.param_count());
    return predict_with_scratch(model, point, scratch);
}

// Exact surrogate expectation: additivity plus independent marginals reduce
// the integral to one closed-form moment per basis term.
inline double analytic_expectation(const FitModel& model, const DistributionSpec& dist) {
    if (dist.dims() != model.spec.dims)
        throw ShapeError("analytic_expectation: fitter and distribution dimensions differ");
    double acc = model.beta[0];
    const std::size_t tpd = model.spec.terms_per_dim();
    std::size_t j = 1;
    for (std::size_t d = 0; d < model.spec.dims; ++d)
        for (std::size_t m = 0; m < tpd; ++m, ++j)
            acc += model.beta[j] *
                   basis_expectation(dist.marginals[d], model.spec.term(m), dist.max_monomial_order);
    return acc;
}

inline std::int64_t default_mc_expectation_samples(std::size_t n_data) {
    return std::max<std::int64_t>(100000, 100 * static_cast<std::int64_t>(n_data));
}

// Monte Carlo surrogate expectation over n_g fresh draws; the fallback for
// bases with no closed-form moments under the given marginals.
inline double mc_expectation(const FitModel& model, const DistributionSpec& dist,
                             std::int64_t n_g, std::uint64_t seed) {
    if (n_g < 1) throw ParameterError("mc_expectation requires n_g >= 1");
    if (dist.dims() != model.spec.dims)
        throw ShapeError("mc_expectation: fitter and distribution dimensions differ");
    Philox4x32 g(seed);
    std::vector<double> point(dist.dims()), scratch(model.spec.param_count());
    double acc = 0.0;
    for (std::int64_t i = 0; i < n_g; ++i) {
        draw_point(g, dist, point);
        acc += predict_with_scratch(model, point, scratch);
    }
    return acc / static_cast<double>(n_g);
}

}  // namespace stackmc
