// Command-line front end: single-dataset estimates, repeated-trial MSE
// sweeps, the bundled golden-example reproduction, and two-pass mean/std.
//
// Exit codes: 0 success, 2 configuration error, 3 numeric failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "stackmc/stackmc.hpp"

namespace {

using namespace stackmc;

struct CommonFlags {
    std::string dist;
    std::string fitter = "poly(3)";
    std::size_t k = 10;
    double c_guard = 5.0;
    std::uint64_t seed = 0;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--dist", flags.dist,
                    "input density, e.g. 'uniform(-3,3)^10' or 'beta(2,5)*beta(1,3)'")
        ->required();
    cmd->add_option("--fitter", flags.fitter, "surrogate family: poly(N) or fourier(N)");
    cmd->add_option("--k", flags.k, "number of cross-validation folds");
    cmd->add_option("--c", flags.c_guard, "guard threshold on the fold likelihoods");
    cmd->add_option("--seed", flags.seed, "root seed");
}

Dataset dataset_from_function(const std::string& fn_name, const DistributionSpec& dist,
                              std::size_t n, std::uint64_t seed) {
    const auto fn = make_test_function(fn_name, dist.dims());
    auto pts = sample(dist, n, derive_seed(seed, kSeedSamples));
    std::vector<double> vals(n);
    for (std::size_t i = 0; i < n; ++i) vals[i] = fn.eval(pts.row(i));
    return Dataset(std::move(pts), std::move(vals));
}

void append_result_csv(const std::string& path, const ResultRow& row) {
    const bool fresh = !std::filesystem::exists(path);
    std::ofstream out(path, std::ios::binary | std::ios::app);
    if (!out) throw IoError("cannot open for writing: " + path);
    if (fresh) out << kRowsHeader << "\n";
    append_row_csv(out, row);
}

int run_estimate(const CommonFlags& flags, const std::string& data_path,
                 const std::string& csv_path) {
    const auto data = ingest_samples(data_path);
    const auto dist = DistributionSpec::parse(flags.dist);
    if (dist.dims() != data.dims())
        throw ParameterError("distribution has " + std::to_string(dist.dims()) +
                             " dimensions but the data file has " + std::to_string(data.dims()));
    const auto fitter = FitterSpec::parse(flags.fitter, dist.dims());

    StackOptions opt;
    opt.k = flags.k;
    opt.c_guard = flags.c_guard;
    opt.seed = flags.seed;
    const auto report = stackmc_estimate(data, dist, fitter, opt);
    std::fputs(report.to_kv().c_str(), stdout);

    if (!csv_path.empty()) {
        ResultRow row;
        row.n = report.n;
        row.trial = 0;
        row.seed = report.seed;
        row.f_hat_mc = report.f_hat_mc;
        row.f_hat_fit = report.f_hat_fit;
        row.f_hat_smc = report.f_hat_smc;
        row.alpha = report.alpha.alpha;
        row.rho = report.alpha.rho;
        row.guard_triggered = report.guard_triggered;
        append_result_csv(csv_path, row);
    }
    return 0;
}

int run_sweep_cmd(const CommonFlags& flags, const std::string& fn_name,
                  const std::string& data_path, const std::vector<std::size_t>& n_values,
                  std::size_t trials, const std::string& out_dir, int threads) {
    ExperimentConfig cfg;
    cfg.function = fn_name;
    cfg.data_path = data_path;
    cfg.dist = DistributionSpec::parse(flags.dist);
    cfg.fitter = FitterSpec::parse(flags.fitter, cfg.dist.dims());
    cfg.k = flags.k;
    cfg.c_guard = flags.c_guard;
    cfg.n_values = n_values;
    cfg.trials = trials;
    cfg.seed = flags.seed;
    cfg.out_dir = out_dir;
    cfg.threads = threads;

    const auto result = run_sweep(cfg);
    emit_outputs(result.rows, result.summary, out_dir);

    std::printf("truth = %.17g\n", result.truth);
    std::printf("%10s %14s %14s %14s %12s\n", "n", "mse_mc", "mse_fit", "mse_smc", "guard_rate");
    for (const auto& s : result.summary)
        std::printf("%10zu %14.6g %14.6g %14.6g %12.4f\n", s.n, s.mse_mc, s.mse_fit, s.mse_smc,
                    s.guard_rate);
    std::printf("wrote rows.csv, summary.csv, medians.csv, plot.gp to %s\n", out_dir.c_str());
    return 0;
}

int run_worked_example() {
    const auto result = worked_example::run_checks();
    std::printf("%-18s %12s %12s %8s  %s\n", "quantity", "got", "reference", "tol", "status");
    for (const auto& row : result.rows)
        std::printf("%-18s %12.4f %12.4f %8.0e  %s\n", row.name.c_str(), row.got, row.want,
                    row.tol, row.pass ? "ok" : "MISMATCH");
    std::printf("f_hat_smc = %.6f (reference %.4f, truth %.4f)\n", result.report.f_hat_smc,
                worked_example::kFHatSmc, worked_example::kTruth);
    std::printf(result.all_pass ? "all checks passed\n" : "some checks FAILED\n");
    return result.all_pass ? 0 : 3;
}

int run_std_cmd(const CommonFlags& flags, const std::string& fn_name,
                const std::string& data_path, std::size_t n) {
    if (fn_name.empty() == data_path.empty())
        throw ParameterError("std needs exactly one of --fn or --data");
    const auto dist = DistributionSpec::parse(flags.dist);
    Dataset data;
    if (!data_path.empty()) {
        data = ingest_samples(data_path);
        if (dist.dims() != data.dims())
            throw ParameterError("distribution/data dimension mismatch");
    } else {
        data = dataset_from_function(fn_name, dist, n, flags.seed);
    }
    const auto fitter = FitterSpec::parse(flags.fitter, dist.dims());
    StackOptions opt;
    opt.k = flags.k;
    opt.c_guard = flags.c_guard;
    opt.seed = flags.seed;
    const auto est = estimate_std(data, dist, fitter, opt);
    std::printf("mean = %.17g\n", est.mean);
    std::printf("std = %.17g\n", est.stddev);
    std::printf("second_moment = %.17g\n", est.square_report.f_hat_smc);
    if (est.clamped) std::printf("warning = radicand was negative; std clamped to zero\n");
    return 0;
}

int classify_error(const std::exception& e) {
    if (dynamic_cast<const ParameterError*>(&e) || dynamic_cast<const ParseError*>(&e) ||
        dynamic_cast<const ShapeError*>(&e) || dynamic_cast<const NotAvailableError*>(&e) ||
        dynamic_cast<const InsufficientDataError*>(&e))
        return 2;
    return 3;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"stacked Monte Carlo integral estimation"};
    app.require_subcommand(1);

    CommonFlags est_flags;
    std::string est_data, est_csv;
    auto* est = app.add_subcommand("estimate", "one dataset -> one stacked estimate report");
    est->add_option("--data", est_data, "CSV sample file (x1..xD,f)")->required();
    add_common(est, est_flags);
    est->add_option("--csv", est_csv, "append the result as one CSV row to this file");

    CommonFlags sweep_flags;
    std::string sweep_fn, sweep_data, sweep_out;
    std::vector<std::size_t> sweep_n;
    std::size_t sweep_trials = 2000;
    int sweep_threads = 0;
    auto* sw = app.add_subcommand("sweep", "repeated-trial MSE comparison over sample counts");
    sw->add_option("--fn", sweep_fn,
                   "test function: poly1d, poly1d_prose, rosenbrock, btbutterfly");
    sw->add_option("--data", sweep_data, "CSV sample pool to subsample instead of a function");
    add_common(sw, sweep_flags);
    sw->add_option("--n", sweep_n, "sample counts (repeat or comma-separate)")
        ->required()
        ->delimiter(',');
    sw->add_option("--trials", sweep_trials, "trials per sample count");
    sw->add_option("--out", sweep_out, "output directory")->required();
    sw->add_option("--threads", sweep_threads, "worker threads (0 = all cores)");

    auto* we = app.add_subcommand("worked-example",
                                  "reproduce the bundled 20-point golden example and diff it");

    CommonFlags std_flags;
    std::string std_fn, std_data;
    std::size_t std_n = 1000;
    auto* sd = app.add_subcommand("std", "two-pass stacked estimate of mean and std");
    sd->add_option("--fn", std_fn, "test function to sample");
    sd->add_option("--data", std_data, "CSV sample file");
    add_common(sd, std_flags);
    sd->add_option("--n", std_n, "sample count when --fn is used");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (est->parsed()) return run_estimate(est_flags, est_data, est_csv);
        if (sw->parsed())
            return run_sweep_cmd(sweep_flags, sweep_fn, sweep_data, sweep_n, sweep_trials,
                                 sweep_out, sweep_threads);
        if (we->parsed()) return run_worked_example();
        if (sd->parsed()) return run_std_cmd(std_flags, std_fn, std_data, std_n);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return classify_error(e);
    }
    return 2;
}
