// Acceptance suite: exercises every graduation criterion at its stated
// tolerance and prints one pass/fail line per criterion.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "stackmc/stackmc.hpp"

using namespace stackmc;

namespace {

struct Welford {
    std::size_t n = 0;
    double mean = 0, m2 = 0;
    void add(double x) {
        ++n;
        const double d = x - mean;
        mean += d / static_cast<double>(n);
        m2 += d * (x - mean);
    }
    double sigma() const { return std::sqrt(m2 / static_cast<double>(n - 1)); }
    double eim() const { return sigma() / std::sqrt(static_cast<double>(n)); }
};

Welford stats_of(const std::vector<ResultRow>& rows, std::size_t n,
                 double ResultRow::*field) {
    Welford w;
    for (const auto& r : rows)
        if (r.n == n) w.add(r.*field);
    return w;
}

ExperimentConfig base_config(const std::string& fn, const std::string& dist,
                             const std::string& fitter) {
    ExperimentConfig cfg;
    cfg.function = fn;
    cfg.dist = DistributionSpec::parse(dist);
    cfg.fitter = FitterSpec::parse(fitter, cfg.dist.dims());
    cfg.trials = 2000;
    cfg.seed = 20260810;
    return cfg;
}

// 10^7-sample Monte Carlo confirmation of one registered reference value.
bool confirm_truth_by_sampling(const std::string& name, const DistributionSpec& dist,
                               std::string& detail) {
    const auto fn = make_test_function(name, dist.dims());
    const double truth = true_expectation(fn, dist);
    const std::size_t n = 10000000;
    Philox4x32 g(derive_seed(991, std::hash<std::string>{}(name)));
    std::vector<double> point(dist.dims());
    Welford w;
    for (std::size_t i = 0; i < n; ++i) {
        draw_point(g, dist, point);
        w.add(fn.eval(point));
    }
    const double dev = std::abs(w.mean - truth);
    const bool ok = dev < 4.0 * w.eim();
    detail += name + ": |mc-truth|=" + std::to_string(dev) +
              " vs 4*eim=" + std::to_string(4.0 * w.eim()) + (ok ? "; " : " FAILED; ");
    return ok;
}

struct Criterion {
    int id;
    std::string label;
    std::function<bool(std::string&)> run;
};

}  // namespace

int main() {
    std::vector<Criterion> criteria;

    // ------------------------------------------------------------------ 1
    criteria.push_back({1, "worked-example golden reproduction", [](std::string& detail) {
        const auto t0 = std::chrono::steady_clock::now();
        const auto result = worked_example::run_checks();
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::size_t failed = 0;
        for (const auto& row : result.rows)
            if (!row.pass) {
                ++failed;
                detail += row.name + " got " + std::to_string(row.got) + " want " +
                          std::to_string(row.want) + "; ";
            }
        detail += std::to_string(result.rows.size()) + " checks, " + std::to_string(failed) +
                  " failed, " + std::to_string(secs) + " s";
        return result.all_pass && secs < 1.0;
    }});

    // ------------------------------------------------------------------ 2
    criteria.push_back({2, "unbiasedness at N=20, k=5, 2000 trials", [](std::string& detail) {
        auto cfg = base_config("poly1d", "uniform(-1,1)", "poly(3)");
        cfg.k = 5;
        cfg.n_values = {20};
        const auto sweep = run_sweep(cfg);
        const auto w = stats_of(sweep.rows, 20, &ResultRow::f_hat_smc);
        const double dev = std::abs(w.mean - 0.7069);
        const double band = 4.0 * w.eim();
        detail = "|mean-0.7069|=" + std::to_string(dev) + " vs " + std::to_string(band);

        // Control run with the control-variate coefficient pinned: isolates
        // the small-N coupling between the data-driven coefficient and the
        // held-out corrections. See tests/test_estimators.cpp for the
        // companion checks (pinned coefficient at N=20, free at N=160).
        const auto u = DistributionSpec::parse("uniform(-1,1)");
        const auto spec = FitterSpec(1, FitterFamily::Polynomial, 3);
        Welford fixed;
        for (std::size_t t = 0; t < 2000; ++t) {
            const std::uint64_t child = derive_seed(cfg.seed, 20, t);
            auto pts = sample(u, 20, derive_seed(child, kSeedSamples));
            std::vector<double> vals(20);
            for (std::size_t i = 0; i < 20; ++i) vals[i] = eval_poly1d(pts.at(i, 0));
            StackOptions opt;
            opt.k = 5;
            opt.seed = child;
            opt.alpha_override = 0.8;
            fixed.add(stackmc_estimate(Dataset(std::move(pts), std::move(vals)), u, spec, opt)
                          .f_hat_smc);
        }
        detail += "; pinned-alpha control |mean-0.7069|=" +
                  std::to_string(std::abs(fixed.mean - 0.7069)) + " vs " +
                  std::to_string(4.0 * fixed.eim());
        return dev < band;
    }});

    // ---------------------------------------------------------------- 3+4
    // The Rosenbrock sweeps back both the dominance and the bias-removal
    // criteria; reference truths come from exact moment algebra, confirmed
    // against quadrature and sampling oracles elsewhere in the suite.
    auto rosen_sweep = std::make_shared<SweepResult>();
    criteria.push_back({3, "StackMC MSE dominance on 10-D Rosenbrock", [rosen_sweep](std::string& detail) {
        bool ok = true;
        for (const std::string dist : {"uniform(-3,3)^10", "gauss(0,2)^10"}) {
            auto cfg = base_config("rosenbrock", dist, "poly(3)");
            cfg.n_values = {50, 200, 1000};
            const auto sweep = run_sweep(cfg);
            if (dist[0] == 'u') *rosen_sweep = sweep;
            detail += dist + " truth=" + std::to_string(sweep.truth) + ": ";
            for (const auto& s : sweep.summary) {
                const double best = std::min(s.mse_mc, s.mse_fit);
                const bool here = s.mse_smc <= 1.1 * best;
                ok = ok && here;
                detail += "N=" + std::to_string(s.n) + " smc/best=" +
                          std::to_string(s.mse_smc / best) + (here ? " " : " FAILED ");
            }
        }
        return ok;
    }});

    criteria.push_back({4, "fit biased at N=50 while StackMC is not", [rosen_sweep](std::string& detail) {
        const double truth = rosen_sweep->truth;
        const auto fit_w = stats_of(rosen_sweep->rows, 50, &ResultRow::f_hat_fit);
        const auto smc_w = stats_of(rosen_sweep->rows, 50, &ResultRow::f_hat_smc);
        const double fit_dev = std::abs(fit_w.mean - truth);
        const double smc_dev = std::abs(smc_w.mean - truth);
        detail = "fit: " + std::to_string(fit_dev) + " vs " + std::to_string(4.0 * fit_w.eim()) +
                 "; smc: " + std::to_string(smc_dev) + " vs " + std::to_string(4.0 * smc_w.eim());
        return fit_dev > 4.0 * fit_w.eim() && smc_dev <= 4.0 * smc_w.eim();
    }});

    // ------------------------------------------------------------------ 5
    criteria.push_back({5, "MC error follows the 1/N law", [](std::string& detail) {
        auto cfg = base_config("poly1d", "uniform(-1,1)", "poly(3)");
        cfg.k = 5;
        cfg.n_values = {20, 2000};
        const auto sweep = run_sweep(cfg);
        const double ratio = sweep.summary[0].mse_mc / sweep.summary[1].mse_mc;
        detail = "mse_mc(20)/mse_mc(2000) = " + std::to_string(ratio);
        return ratio >= 50.0 && ratio <= 200.0;
    }});

    // ------------------------------------------------------------------ 6
    criteria.push_back({6, "moment oracles: beta grid and sampled truths", [](std::string& detail) {
        bool ok = true;
        double worst = 0;
        for (const double a : {0.5, 1.0, 2.0, 5.0})
            for (const double b : {0.5, 1.0, 2.0, 5.0})
                for (int n = 0; n <= 6; ++n) {
                    const double closed = beta_raw_moment(a, b, n);
                    const double quad = oracle::beta_moment_quadrature(a, b, n);
                    const double rel = std::abs(closed - quad) / std::abs(quad);
                    worst = std::max(worst, rel);
                    ok = ok && rel <= 1e-10;
                }
        char buf[40];
        std::snprintf(buf, sizeof buf, "beta grid worst rel err %.2e; ", worst);
        detail = buf;
        ok = confirm_truth_by_sampling("poly1d", DistributionSpec::parse("uniform(-1,1)"), detail) && ok;
        ok = confirm_truth_by_sampling("poly1d_prose", DistributionSpec::parse("uniform(-3,3)"), detail) && ok;
        ok = confirm_truth_by_sampling("rosenbrock", DistributionSpec::parse("uniform(-3,3)^10"), detail) && ok;
        ok = confirm_truth_by_sampling("rosenbrock", DistributionSpec::parse("gauss(0,2)^10"), detail) && ok;
        ok = confirm_truth_by_sampling("btbutterfly", DistributionSpec::parse("uniform(-3,3)^20"), detail) && ok;
        return ok;
    }});

    // ------------------------------------------------------------------ 7
    criteria.push_back({7, "scale and shift equivariance", [](std::string& detail) {
        const auto u = DistributionSpec::parse("uniform(-1,1)");
        const auto spec = FitterSpec(1, FitterFamily::Polynomial, 3);
        bool ok = true;
        double worst = 0;
        for (std::uint64_t trial = 0; trial < 20; ++trial) {
            const auto pts = sample(u, 24, derive_seed(7001, trial));
            std::vector<double> vals(24);
            for (std::size_t i = 0; i < 24; ++i) vals[i] = eval_poly1d(pts.at(i, 0));
            const Dataset data(pts, vals);
            StackOptions opt;
            opt.k = 4;
            opt.seed = derive_seed(7002, trial);
            const auto r0 = stackmc_estimate(data, u, spec, opt);

            const double c = 2.0 + 0.25 * static_cast<double>(trial);
            const double a = -3.0 + 0.5 * static_cast<double>(trial);
            std::vector<double> scaled(vals), shifted(vals);
            for (auto& v : scaled) v *= c;
            for (auto& v : shifted) v += a;
            const auto rs = stackmc_estimate(Dataset(pts, scaled), u, spec, opt);
            const auto rt = stackmc_estimate(Dataset(pts, shifted), u, spec, opt);

            auto rel = [](double x, double y) {
                return std::abs(x - y) / std::max(1.0, std::max(std::abs(x), std::abs(y)));
            };
            worst = std::max({worst, rel(rs.f_hat_smc, c * r0.f_hat_smc),
                              rel(rt.f_hat_smc, r0.f_hat_smc + a),
                              rel(rs.alpha.alpha, r0.alpha.alpha),
                              rel(rt.alpha.alpha, r0.alpha.alpha)});
            ok = ok && rs.guard_triggered == r0.guard_triggered &&
                 rt.guard_triggered == r0.guard_triggered;
        }
        detail = "worst relative deviation " + std::to_string(worst);
        return ok && worst <= 1e-10;
    }});

    // ------------------------------------------------------------------ 8
    criteria.push_back({8, "pathological surrogate expectation always trips the guard", [](std::string& detail) {
        const auto u = DistributionSpec::parse("uniform(-1,1)");
        const auto spec = FitterSpec(1, FitterFamily::Polynomial, 3);
        std::size_t triggered = 0, exact = 0;
        const std::size_t trials = 500;
        for (std::size_t t = 0; t < trials; ++t) {
            const auto pts = sample(u, 40, derive_seed(8001, t));
            std::vector<double> vals(40);
            for (std::size_t i = 0; i < 40; ++i) vals[i] = eval_poly1d(pts.at(i, 0));
            const Dataset data(pts, vals);
            StackOptions opt;
            opt.k = 10;
            opt.seed = derive_seed(8002, t);
            opt.ghat_offset = 100.0 * mc_estimate(vals).sigma;
            const auto rep = stackmc_estimate(data, u, spec, opt);
            triggered += rep.guard_triggered ? 1 : 0;
            exact += (rep.guard_triggered && rep.f_hat_smc == rep.f_hat_mc) ? 1 : 0;
        }
        detail = std::to_string(triggered) + "/" + std::to_string(trials) + " triggered, " +
                 std::to_string(exact) + " bit-exact fallbacks";
        return triggered == trials && exact == trials;
    }});

    // ------------------------------------------------------------------ 9
    criteria.push_back({9, "importance-sampling variant reduces to the plain one at q = p", [](std::string& detail) {
        double worst = 0;
        for (const std::string dist : {"beta(2,5)", "uniform(-1,1)", "gauss(0.5,1.5)"}) {
            const auto p = DistributionSpec::parse(dist);
            const auto pts = sample(p, 30, derive_seed(9001, std::hash<std::string>{}(dist)));
            std::vector<double> vals(30);
            for (std::size_t i = 0; i < 30; ++i)
                vals[i] = pts.at(i, 0) * pts.at(i, 0) - 0.25 * pts.at(i, 0);
            const Dataset data(pts, vals);
            StackOptions opt;
            opt.k = 5;
            opt.seed = 42;
            const auto plain = stackmc_estimate(data, p, FitterSpec(1, FitterFamily::Polynomial, 3), opt);
            const auto is = stackmc_is_estimate(data, p, p, FitterSpec(1, FitterFamily::Polynomial, 3), opt);
            worst = std::max({worst, std::abs(plain.f_hat_smc - is.f_hat_smc),
                              std::abs(plain.f_hat_mc - is.f_hat_mc),
                              std::abs(plain.alpha.alpha - is.alpha.alpha)});
        }
        detail = "worst abs deviation " + std::to_string(worst);
        return worst < 1e-12;
    }});

    int failures = 0;
    for (auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        std::string detail;
        bool ok = false;
        try {
            ok = c.run(detail);
        } catch (const std::exception& e) {
            detail = std::string("exception: ") + e.what();
        }
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("[%s] criterion %d: %s (%s) [%.1f s]\n", ok ? "PASS" : "FAIL", c.id,
                    c.label.c_str(), detail.c_str(), secs);
        std::fflush(stdout);
        failures += ok ? 0 : 1;
    }
    if (failures) std::printf("%d criterion(s) failed\n", failures);
    return failures == 0 ? 0 : 1;
}
