#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stackmc/distributions.hpp"
#include "stackmc/error.hpp"
#include "stackmc/fitters.hpp"

namespace stackmc {

// ---------------------------------------------------------------------------
// Data containers.
// ---------------------------------------------------------------------------

struct Dataset {
    SampleMatrix points;
    std::vector<double> values;

    Dataset() = default;
    Dataset(SampleMatrix pts, std::vector<double> vals)
        : points(std::move(pts)), values(std::move(vals)) {
        if (values.size() != points.n_rows)
            throw ShapeError("dataset: " + std::to_string(points.n_rows) + " points but " +
                             std::to_string(values.size()) + " values");
        for (std::size_t i = 0; i < values.size(); ++i)
            if (!std::isfinite(values[i]))
                throw NumericError("dataset: non-finite value at row " + std::to_string(i + 1));
    }

    std::size_t n() const { return values.size(); }
    std::size_t dims() const { return points.n_cols; }
};

struct FoldPartition {
    std::vector<std::vector<std::size_t>> test_sets;

    std::size_t k() const { return test_sets.size(); }

    // Mutually exclusive, exhaustive over 0..n-1, sizes within one of each other.
    void validate(std::size_t n) const {
        if (k() < 2) throw ParameterError("fold partition needs k >= 2");
        std::vector<char> seen(n, 0);
        std::size_t lo = n, hi = 0, total = 0;
        for (const auto& fold : test_sets) {
            lo = std::min(lo, fold.size());
            hi = std::max(hi, fold.size());
            total += fold.size();
            for (const std::size_t idx : fold) {
                if (idx >= n || seen[idx])
                    throw ParameterError("fold partition is not a disjoint cover of the dataset");
                seen[idx] = 1;
            }
        }
        if (total != n) throw ParameterError("fold partition does not cover the dataset");
        if (hi - lo > 1) throw ParameterError("fold test-set sizes differ by more than one");
    }
};

// Uniform random partition into k test sets; the first n mod k sets get the
// extra point.
inline FoldPartition partition_folds(std::size_t n, std::size_t k, std::uint64_t seed) {
    if (k < 2 || k > n)
        throw ParameterError("partition_folds requires 2 <= k <= n, got k=" + std::to_string(k) +
                             " n=" + std::to_string(n));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Philox4x32 g(seed);
    shuffle(g, std::span<std::size_t>(order));

    FoldPartition part;
    part.test_sets.resize(k);
    const std::size_t base = n / k, extra = n % k;
    std::size_t pos = 0;
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t size = base + (i < extra ? 1 : 0);
        part.test_sets[i].assign(order.begin() + pos, order.begin() + pos + size);
        pos += size;
    }
    return part;
}

// ---------------------------------------------------------------------------
// Building-block estimators.
// ---------------------------------------------------------------------------

struct McStats {
    double mean;
    double sigma;  // sample std, 1/(N-1)
    double eim;    // sigma / sqrt(N), the error in the mean
};

inline McStats mc_estimate(std::span<const double> values) {
    const std::size_t n = values.size();
    if (n < 2) throw InsufficientDataError("mc_estimate needs at least 2 values");
    double mean = 0.0;
    for (const double v : values) mean += v;
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (const double v : values) ss += (v - mean) * (v - mean);
    const double sigma = std::sqrt(ss / static_cast<double>(n - 1));
    return {mean, sigma, sigma / std::sqrt(static_cast<double>(n))};
}

// Importance-sampling estimate: mean of f * p/q over samples drawn from q.
inline double is_estimate(const Dataset& data, const DistributionSpec& p,
                          const DistributionSpec& q) {
    if (data.n() < 1) throw InsufficientDataError("is_estimate needs at least 1 sample");
    double acc = 0.0;
    for (std::size_t i = 0; i < data.n(); ++i) {
        const auto x = data.points.row(i);
        const double qd = pdf(q, x);
        if (!(qd > 0.0))
            throw DegenerateWeightError("sampling density vanishes at sample row " +
                                        std::to_string(i + 1));
        acc += data.values[i] * pdf(p, x) / qd;
    }
    return acc / static_cast<double>(data.n());
}

// Baseline "trust the fit" estimate: one fit to all samples, integrated
// exactly against the input density.
inline double fit_all_estimate(const Dataset& data, const FitterSpec& spec,
                               const DistributionSpec& dist, double ridge = 0.0) {
    return analytic_expectation(fit(spec, data.points, data.values, ridge), dist);
}

// ---------------------------------------------------------------------------
// Control-variate coefficient from held-out predictions.
// ---------------------------------------------------------------------------

struct AlphaStats {
    double mu_f = 0, mu_g = 0;
    double sigma_f = 0, sigma_g = 0;
    double cov_fg = 0;
    double rho = 0;
    double alpha = 0;
    // sigma_f == 0: the sample values are constant and mu_f already is the answer.
    bool constant_values = false;
};

// All N held-out (prediction, truth) pairs enter; every sample has exactly
// one held-out prediction. Variances and the covariance use 1/(N-1).
inline AlphaStats compute_alpha(std::span<const double> heldout_pred,
                                std::span<const double> truths) {
    const std::size_t n = truths.size();
    if (heldout_pred.size() != n)
        throw ShapeError("compute_alpha: prediction/truth lengths differ");
    if (n < 2) throw InsufficientDataError("compute_alpha needs at least 2 pairs");

    AlphaStats s;
    for (std::size_t i = 0; i < n; ++i) {
        s.mu_f += truths[i];
        s.mu_g += heldout_pred[i];
    }
    s.mu_f /= static_cast<double>(n);
    s.mu_g /= static_cast<double>(n);

    double ss_f = 0, ss_g = 0, ss_fg = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double df = truths[i] - s.mu_f;
        const double dg = heldout_pred[i] - s.mu_g;
        ss_f += df * df;
        ss_g += dg * dg;
        ss_fg += df * dg;
    }
    const double inv = 1.0 / static_cast<double>(n - 1);
    s.sigma_f = std::sqrt(ss_f * inv);
    s.sigma_g = std::sqrt(ss_g * inv);
    s.cov_fg = ss_fg * inv;
    s.constant_values = (s.sigma_f == 0.0);

    if (s.sigma_f > 0.0 && s.sigma_g > 0.0) {
        s.rho = s.cov_fg / (s.sigma_f * s.sigma_g);
        s.alpha = s.rho * s.sigma_f / s.sigma_g;
    } else {
        s.rho = 0.0;
        s.alpha = 0.0;
    }
    return s;
}

// ---------------------------------------------------------------------------
// Error-in-the-mean guard.
// ---------------------------------------------------------------------------

struct GuardResult {
    bool triggered = false;
    std::vector<double> likelihoods;  // L_i = |g_hat_i - f_hat_mc| / eim
};

// Raw fold expectations enter unscaled. With eim == 0 any disagreement
// between a fold expectation and the sample mean trips the guard.
inline GuardResult eim_guard(std::span<const double> g_hats, double f_hat_mc, double eim,
                             double c_guard) {
    if (eim < 0.0) throw ParameterError("eim_guard requires eim >= 0");
    GuardResult r;
    r.likelihoods.reserve(g_hats.size());
    double max_l = 0.0;
    for (const double gh : g_hats) {
        double l;
        if (eim > 0.0)
            l = std::abs(gh - f_hat_mc) / eim;
        else
            l = (gh == f_hat_mc) ? 0.0 : std::numeric_limits<double>::infinity();
        r.likelihoods.push_back(l);
        max_l = std::max(max_l, l);
    }
    r.triggered = max_l > c_guard;
    return r;
}

// ---------------------------------------------------------------------------
// The stacked estimator.
// ---------------------------------------------------------------------------

struct FoldReport {
    std::vector<std::size_t> test_indices;
    std::vector<double> beta;
    double g_hat = 0;        // expectation of this fold's surrogate
    double correction = 0;   // mean over the fold's test points of f - alpha*g
    double corrected = 0;    // alpha*g_hat + correction
    double likelihood = 0;   // guard L_i
    bool mc_fallback = false;
};

struct StackReport {
    double f_hat_mc = 0;
    double f_hat_fit = 0;
    double f_hat_smc = 0;
    AlphaStats alpha;
    double eim = 0;
    std::vector<FoldReport> folds;
    bool guard_triggered = false;
    std::size_t n = 0;
    std::size_t k = 0;
    std::uint64_t seed = 0;

    std::string to_kv() const;
};

struct StackOptions {
    std::size_t k = 10;
    double c_guard = 5.0;
    std::uint64_t seed = 0;
    // Explicit partition; bypasses random fold assignment when set.
    std::optional<FoldPartition> folds;
    // Diagnostics hooks, not exposed on the CLI.
    std::optional<double> alpha_override;
    double ghat_offset = 0.0;
    // Sample count for Monte Carlo surrogate integration; 0 = max(1e5, 100 N).
    std::int64_t n_g = 0;
    double ridge = 0.0;
};

namespace detail {

inline double surrogate_expectation(const FitModel& model, const DistributionSpec& dist,
                                    std::int64_t n_g, std::uint64_t seed, bool& fell_back) {
    try {
        fell_back = false;
        return analytic_expectation(model, dist);
    } catch (const UnsupportedIntegralError&) {
        fell_back = true;
        return mc_expectation(model, dist, n_g, seed);
    }
}

// Shared pipeline: plain StackMC runs it on the raw f values and integrates
// against the sampling density; the importance-sampling variant runs it on
// the weighted values f*p/q and integrates against q.
inline StackReport run_stack_pipeline(const SampleMatrix& pts, std::span<const double> targets,
                                      const DistributionSpec& integ_dist, const FitterSpec& spec,
                                      const StackOptions& opt) {
    const std::size_t n = targets.size();
    if (pts.n_rows != n) throw ShapeError("stackmc: point/value counts differ");
    if (n < 2) throw InsufficientDataError("stackmc needs at least 2 samples");
    for (std::size_t i = 0; i < n; ++i)
        if (!std::isfinite(targets[i]))
            throw NumericError("stackmc: non-finite target at row " + std::to_string(i + 1));

    FoldPartition part = opt.folds ? *opt.folds
                                   : partition_folds(n, opt.k, derive_seed(opt.seed, kSeedFolds));
    part.validate(n);
    const std::size_t k = part.k();
    const std::size_t p = spec.param_count();
    const std::int64_t n_g = opt.n_g > 0 ? opt.n_g : default_mc_expectation_samples(n);

    // Per-fold fits and held-out predictions; each sample is predicted by the
    // one fold that held it out.
    std::vector<FitModel> models;
    models.reserve(k);
    std::vector<double> heldout(n, 0.0);
    std::vector<char> in_test(n, 0);
    std::vector<double> scratch(p);
    for (std::size_t i = 0; i < k; ++i) {
        for (const std::size_t idx : part.test_sets[i]) in_test[idx] = 1;
        std::vector<std::size_t> train;
        train.reserve(n - part.test_sets[i].size());
        std::vector<double> train_vals;
        train_vals.reserve(n - part.test_sets[i].size());
        for (std::size_t j = 0; j < n; ++j)
            if (!in_test[j]) {
                train.push_back(j);
                train_vals.push_back(targets[j]);
            }
        for (const std::size_t idx : part.test_sets[i]) in_test[idx] = 0;

        if (train.size() < p)
            throw InsufficientDataError(
                "stackmc: fold " + std::to_string(i + 1) + " training set has " +
                std::to_string(train.size()) + " points for " + std::to_string(p) +
                " parameters; reduce the fitter order or k");

        models.push_back(fit_rows(spec, pts, train, train_vals, opt.ridge));
        for (const std::size_t idx : part.test_sets[i]) {
            const double pred = predict_with_scratch(models.back(), pts.row(idx), scratch);
            if (!std::isfinite(pred))
                throw NumericError("stackmc: non-finite prediction in fold " +
                                   std::to_string(i + 1));
            heldout[idx] = pred;
        }
    }

    AlphaStats alpha_stats = compute_alpha(heldout, targets);
    if (opt.alpha_override) alpha_stats.alpha = *opt.alpha_override;
    const double alpha = alpha_stats.alpha;

    const McStats mc = mc_estimate(targets);

    StackReport rep;
    rep.alpha = alpha_stats;
    rep.f_hat_mc = mc.mean;
    rep.eim = mc.eim;
    rep.n = n;
    rep.k = k;
    rep.seed = opt.seed;
    rep.folds.resize(k);

    std::vector<double> g_hats(k, 0.0);
    double smc_sum = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        FoldReport& fr = rep.folds[i];
        fr.test_indices = part.test_sets[i];
        fr.beta = models[i].beta;
        fr.g_hat = surrogate_expectation(models[i], integ_dist, n_g,
                                         derive_seed(opt.seed, kSeedSurrogateMc, i),
                                         fr.mc_fallback) +
                   opt.ghat_offset;
        double corr = 0.0;
        for (const std::size_t idx : part.test_sets[i]) corr += targets[idx] - alpha * heldout[idx];
        fr.correction = corr / static_cast<double>(part.test_sets[i].size());
        fr.corrected = alpha * fr.g_hat + fr.correction;
        if (!std::isfinite(fr.corrected))
            throw NumericError("stackmc: non-finite fold estimate in fold " + std::to_string(i + 1));
        g_hats[i] = fr.g_hat;
        smc_sum += fr.corrected;
    }
    rep.f_hat_smc = smc_sum / static_cast<double>(k);

    const GuardResult guard = eim_guard(g_hats, rep.f_hat_mc, rep.eim, opt.c_guard);
    rep.guard_triggered = guard.triggered;
    for (std::size_t i = 0; i < k; ++i) rep.folds[i].likelihood = guard.likelihoods[i];
    if (rep.guard_triggered) rep.f_hat_smc = rep.f_hat_mc;

    // Fit-to-everything baseline rides along in the report.
    bool fit_fell_back = false;
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), std::size_t{0});
    const FitModel full = fit_rows(spec, pts, all, targets, opt.ridge);
    rep.f_hat_fit = surrogate_expectation(full, integ_dist, n_g,
                                          derive_seed(opt.seed, kSeedSurrogateMc, k), fit_fell_back);
    return rep;
}

}  // namespace detail

inline StackReport stackmc_estimate(const Dataset& data, const DistributionSpec& dist,
                                    const FitterSpec& spec, const StackOptions& opt = {}) {
    return detail::run_stack_pipeline(data.points, data.values, dist, spec, opt);
}

// Samples drawn from q instead of p: the pipeline runs on the weighted
// values f*p/q (fit targets, alpha statistics, corrections, MC baseline) and
// surrogate expectations integrate against q.
inline StackReport stackmc_is_estimate(const Dataset& data, const DistributionSpec& p,
                                       const DistributionSpec& q, const FitterSpec& spec,
                                       const StackOptions& opt = {}) {
    std::vector<double> weighted(data.n());
    for (std::size_t i = 0; i < data.n(); ++i) {
        const auto x = data.points.row(i);
        const double qd = pdf(q, x);
        if (!(qd > 0.0))
            throw DegenerateWeightError("sampling density vanishes at sample row " +
                                        std::to_string(i + 1));
        weighted[i] = data.values[i] * pdf(p, x) / qd;
        if (!std::isfinite(weighted[i]))
            throw NumericError("stackmc: non-finite importance weight at row " +
                               std::to_string(i + 1));
    }
    return detail::run_stack_pipeline(data.points, weighted, q, spec, opt);
}

inline std::string StackReport::to_kv() const {
    using detail::format_double;
    std::string out;
    auto put = [&out](const std::string& key, const std::string& val) {
        out += key;
        out += " = ";
        out += val;
        out += "\n";
    };
    put("n", std::to_string(n));
    put("k", std::to_string(k));
    put("seed", std::to_string(seed));
    put("f_hat_mc", format_double(f_hat_mc));
    put("f_hat_fit", format_double(f_hat_fit));
    put("f_hat_smc", format_double(f_hat_smc));
    put("alpha", format_double(alpha.alpha));
    put("rho", format_double(alpha.rho));
    put("mu_f", format_double(alpha.mu_f));
    put("mu_g", format_double(alpha.mu_g));
    put("sigma_f", format_double(alpha.sigma_f));
    put("sigma_g", format_double(alpha.sigma_g));
    put("cov_fg", format_double(alpha.cov_fg));
    put("eim", format_double(eim));
    put("guard_triggered", guard_triggered ? "true" : "false");
    for (std::size_t i = 0; i < folds.size(); ++i) {
        const std::string tag = "fold_" + std::to_string(i + 1) + "_";
        put(tag + "g_hat", format_double(folds[i].g_hat));
        put(tag + "correction", format_double(folds[i].correction));
        put(tag + "corrected", format_double(folds[i].corrected));
        put(tag + "likelihood", format_double(folds[i].likelihood));
        if (folds[i].mc_fallback) put(tag + "mc_fallback", "true");
    }
    return out;
}

}  // namespace stackmc
