#pragma once

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <numeric>
#include <string>
#include <thread>
#include <vector>

#include "stackmc/distributions.hpp"
#include "stackmc/error.hpp"
#include "stackmc/estimators.hpp"
#include "stackmc/fitters.hpp"
#include "stackmc/testfunctions.hpp"

namespace stackmc {

// ---------------------------------------------------------------------------
// Experiment configuration.
// ---------------------------------------------------------------------------

struct ExperimentConfig {
    // Either a registered function name or a CSV pool of externally
    // generated samples; exactly one must be set.
    std::string function;
    std::string data_path;

    DistributionSpec dist;
    FitterSpec fitter;
    std::size_t k = 10;
    double c_guard = 5.0;
    std::vector<std::size_t> n_values;
    std::size_t trials = 2000;
    std::uint64_t seed = 0;
    std::string out_dir;
    int threads = 0;  // 0 = hardware concurrency

    void validate() const {
        if (function.empty() == data_path.empty())
            throw ParameterError("config: exactly one of function name or data file must be set");
        if (trials < 1) throw ParameterError("config: trials must be >= 1");
        if (n_values.empty()) throw ParameterError("config: no sample counts given");
        if (fitter.dims != dist.dims())
            throw ParameterError("config: fitter and distribution dimensions differ");
        const std::size_t p = fitter.param_count();
        for (const std::size_t n : n_values) {
            if (k < 2 || k > n)
                throw ParameterError("config: need 2 <= k <= n, got k=" + std::to_string(k) +
                                     " n=" + std::to_string(n));
            const std::size_t max_test = (n + k - 1) / k;
            if (n - max_test < p)
                throw ParameterError("config: n=" + std::to_string(n) + " with k=" +
                                     std::to_string(k) + " leaves fold training sets below " +
                                     std::to_string(p) + " parameters");
        }
    }
};

struct ResultRow {
    std::size_t n = 0;
    std::size_t trial = 0;
    std::uint64_t seed = 0;
    double f_hat_mc = 0;
    double f_hat_fit = 0;
    double f_hat_smc = 0;
    double alpha = 0;
    double rho = 0;
    bool guard_triggered = false;
};

struct SummaryRow {
    std::size_t n = 0;
    double mse_mc = 0;
    double mse_fit = 0;
    double mse_smc = 0;
    double guard_rate = 0;
    // Medians of the squared errors; diagnostics only.
    double med_se_mc = 0;
    double med_se_fit = 0;
    double med_se_smc = 0;
};

struct SweepResult {
    std::vector<ResultRow> rows;
    std::vector<SummaryRow> summary;
    double truth = 0;
};

// ---------------------------------------------------------------------------
// CSV plumbing (RFC 4180 quoting on emission, 17 significant digits).
// ---------------------------------------------------------------------------

namespace detail {

inline std::string g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\n") == std::string::npos) return field;
    std::string out = "\"";
    for (const char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    for (const char c : line) {
        if (c == ',') {
            cells.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    cells.push_back(cur);
    return cells;
}

inline double parse_csv_double(const std::string& cell, std::size_t line_no) {
    double v = 0.0;
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    while (first != last && *first == ' ') ++first;
    const auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc{} || res.ptr != last)
        throw ParseError("line " + std::to_string(line_no) + ": bad number '" + cell + "'");
    return v;
}

inline std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    return out;
}

// Fixed-size worker pool over an index range; every task writes its own
// slot, so results do not depend on scheduling.
inline void parallel_for(std::size_t count, int threads,
                         const std::function<void(std::size_t)>& body) {
    int t = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
    t = std::max(1, std::min<int>(t, static_cast<int>(count)));
    if (t == 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::mutex err_mutex;
    std::exception_ptr first_error;
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mutex);
                if (!first_error) first_error = std::current_exception();
                next.store(count);
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(t);
    for (int i = 0; i < t; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

inline double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Sample-file ingestion and emission. Schema: header x1,...,xD,f, then one
// decimal row per sample.
// ---------------------------------------------------------------------------

inline Dataset ingest_samples(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for reading: " + path);
    std::string line;
    if (!std::getline(in, line)) throw ParseError("line 1: empty file");
    const auto header = detail::split_csv_line(line);
    if (header.size() < 2 || header.back() != "f")
        throw ParseError("line 1: header must be x1,...,xD,f");
    const std::size_t dims = header.size() - 1;
    for (std::size_t d = 0; d < dims; ++d)
        if (header[d] != "x" + std::to_string(d + 1))
            throw ParseError("line 1: expected column x" + std::to_string(d + 1) + ", found '" +
                             header[d] + "'");

    std::vector<double> flat, values;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || (line.size() == 1 && line[0] == '\r')) continue;
        const auto cells = detail::split_csv_line(line);
        if (cells.size() != dims + 1)
            throw ParseError("line " + std::to_string(line_no) + ": expected " +
                             std::to_string(dims + 1) + " cells, found " +
                             std::to_string(cells.size()));
        for (std::size_t d = 0; d < dims; ++d)
            flat.push_back(detail::parse_csv_double(cells[d], line_no));
        values.push_back(detail::parse_csv_double(cells.back(), line_no));
    }
    if (values.empty()) throw ParseError("no data rows in " + path);

    SampleMatrix pts(values.size(), dims, 0);
    pts.data = std::move(flat);
    return Dataset(std::move(pts), std::move(values));
}

inline void write_dataset(const Dataset& data, const std::string& path) {
    auto out = detail::open_out(path);
    for (std::size_t d = 0; d < data.dims(); ++d) out << "x" << (d + 1) << ",";
    out << "f\n";
    for (std::size_t i = 0; i < data.n(); ++i) {
        for (std::size_t d = 0; d < data.dims(); ++d)
            out << detail::g17(data.points.at(i, d)) << ",";
        out << detail::g17(data.values[i]) << "\n";
    }
    if (!out) throw IoError("write failed: " + path);
}

// ---------------------------------------------------------------------------
// Result emission: rows.csv, summary.csv, medians.csv and a self-contained
// gnuplot script with the three-curve log-log MSE figure.
// ---------------------------------------------------------------------------

inline void append_row_csv(std::ostream& out, const ResultRow& r) {
    using detail::g17;
    out << r.n << "," << r.trial << "," << r.seed << "," << g17(r.f_hat_mc) << ","
        << g17(r.f_hat_fit) << "," << g17(r.f_hat_smc) << "," << g17(r.alpha) << ","
        << g17(r.rho) << "," << (r.guard_triggered ? 1 : 0) << "\n";
}

inline constexpr const char* kRowsHeader =
    "n,trial,seed,f_hat_mc,f_hat_fit,f_hat_smc,alpha,rho,guard_triggered";

inline void emit_outputs(const std::vector<ResultRow>& rows,
                         const std::vector<SummaryRow>& summary, const std::string& dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory: " + dir);

    {
        auto out = detail::open_out((fs::path(dir) / "rows.csv").string());
        out << kRowsHeader << "\n";
        for (const auto& r : rows) append_row_csv(out, r);
    }
    {
        auto out = detail::open_out((fs::path(dir) / "summary.csv").string());
        out << "n,mse_mc,mse_fit,mse_smc,guard_rate\n";
        for (const auto& s : summary)
            out << s.n << "," << detail::g17(s.mse_mc) << "," << detail::g17(s.mse_fit) << ","
                << detail::g17(s.mse_smc) << "," << detail::g17(s.guard_rate) << "\n";
    }
    {
        auto out = detail::open_out((fs::path(dir) / "medians.csv").string());
        out << "n,med_se_mc,med_se_fit,med_se_smc\n";
        for (const auto& s : summary)
            out << s.n << "," << detail::g17(s.med_se_mc) << "," << detail::g17(s.med_se_fit)
                << "," << detail::g17(s.med_se_smc) << "\n";
    }
    {
        auto out = detail::open_out((fs::path(dir) / "plot.gp").string());
        out << "# mean squared error vs sample count, one line per estimator\n"
            << "set terminal pngcairo size 900,600\n"
            << "set output 'mse.png'\n"
            << "set logscale xy\n"
            << "set xlabel 'number of samples N'\n"
            << "set ylabel 'mean squared error'\n"
            << "set key top right\n"
            << "$summary << EOD\n";
        for (const auto& s : summary)
            out << s.n << " " << detail::g17(s.mse_mc) << " " << detail::g17(s.mse_fit) << " "
                << detail::g17(s.mse_smc) << "\n";
        out << "EOD\n"
            << "plot $summary using 1:2 with linespoints lc rgb 'green' pt 7 title 'MC', \\\n"
            << "     $summary using 1:3 with linespoints lc rgb 'red' pt 5 title 'fit', \\\n"
            << "     $summary using 1:4 with linespoints lc rgb 'blue' pt 9 title 'StackMC'\n";
        if (!out) throw IoError("write failed: " + dir + "/plot.gp");
    }
}

// Reads rows.csv back; inverse of the rows emission above.
inline std::vector<ResultRow> read_rows(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for reading: " + path);
    std::string line;
    if (!std::getline(in, line) || detail::split_csv_line(line).size() != 9)
        throw ParseError("line 1: unexpected rows.csv header");
    std::vector<ResultRow> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || (line.size() == 1 && line[0] == '\r')) continue;
        const auto cells = detail::split_csv_line(line);
        if (cells.size() != 9)
            throw ParseError("line " + std::to_string(line_no) + ": expected 9 cells");
        ResultRow r;
        r.n = static_cast<std::size_t>(detail::parse_csv_double(cells[0], line_no));
        r.trial = static_cast<std::size_t>(detail::parse_csv_double(cells[1], line_no));
        r.seed = static_cast<std::uint64_t>(detail::parse_csv_double(cells[2], line_no));
        r.f_hat_mc = detail::parse_csv_double(cells[3], line_no);
        r.f_hat_fit = detail::parse_csv_double(cells[4], line_no);
        r.f_hat_smc = detail::parse_csv_double(cells[5], line_no);
        r.alpha = detail::parse_csv_double(cells[6], line_no);
        r.rho = detail::parse_csv_double(cells[7], line_no);
        r.guard_triggered = detail::parse_csv_double(cells[8], line_no) != 0.0;
        rows.push_back(r);
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Repeated-trial sweep.
// ---------------------------------------------------------------------------

namespace detail {

// Draws n distinct rows from an external sample pool, order fixed by seed.
inline Dataset draw_from_pool(const Dataset& pool, std::size_t n, std::uint64_t seed) {
    if (n > pool.n())
        throw ParameterError("config: n=" + std::to_string(n) + " exceeds pool size " +
                             std::to_string(pool.n()));
    std::vector<std::size_t> order(pool.n());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Philox4x32 g(seed);
    shuffle(g, std::span<std::size_t>(order));
    SampleMatrix pts(n, pool.dims(), seed);
    std::vector<double> vals(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t d = 0; d < pool.dims(); ++d)
            pts.at(i, d) = pool.points.at(order[i], d);
        vals[i] = pool.values[order[i]];
    }
    return Dataset(std::move(pts), std::move(vals));
}

}  // namespace detail

// Per-trial child seeds depend only on (root seed, n, trial), so adding
// sample counts or reordering execution never perturbs existing trials.
inline SweepResult run_sweep(const ExperimentConfig& config) {
    config.validate();

    Dataset pool;
    TestFunction fn;
    double truth = 0.0;
    if (!config.function.empty()) {
        fn = make_test_function(config.function, config.dist.dims());
        truth = true_expectation(fn, config.dist);
    } else {
        pool = ingest_samples(config.data_path);
        if (pool.dims() != config.dist.dims())
            throw ParameterError("config: pool has " + std::to_string(pool.dims()) +
                                 " input columns, distribution has " +
                                 std::to_string(config.dist.dims()));
        truth = mc_estimate(pool.values).mean;
    }

    SweepResult result;
    result.truth = truth;
    result.rows.resize(config.n_values.size() * config.trials);

    detail::parallel_for(result.rows.size(), config.threads, [&](std::size_t task) {
        const std::size_t n_idx = task / config.trials;
        const std::size_t trial = task % config.trials;
        const std::size_t n = config.n_values[n_idx];
        const std::uint64_t child = derive_seed(config.seed, n, trial);

        Dataset data;
        if (!config.function.empty()) {
            SampleMatrix pts = sample(config.dist, n, derive_seed(child, kSeedSamples));
            std::vector<double> vals(n);
            for (std::size_t i = 0; i < n; ++i) vals[i] = fn.eval(pts.row(i));
            data = Dataset(std::move(pts), std::move(vals));
        } else {
            data = detail::draw_from_pool(pool, n, derive_seed(child, kSeedPoolDraw));
        }

        StackOptions opt;
        opt.k = config.k;
        opt.c_guard = config.c_guard;
        opt.seed = child;
        const StackReport rep = stackmc_estimate(data, config.dist, config.fitter, opt);

        ResultRow& row = result.rows[task];
        row.n = n;
        row.trial = trial;
        row.seed = child;
        row.f_hat_mc = rep.f_hat_mc;
        row.f_hat_fit = rep.f_hat_fit;
        row.f_hat_smc = rep.f_hat_smc;
        row.alpha = rep.alpha.alpha;
        row.rho = rep.alpha.rho;
        row.guard_triggered = rep.guard_triggered;
    });

    for (std::size_t n_idx = 0; n_idx < config.n_values.size(); ++n_idx) {
        SummaryRow s;
        s.n = config.n_values[n_idx];
        std::vector<double> se_mc, se_fit, se_smc;
        se_mc.reserve(config.trials);
        se_fit.reserve(config.trials);
        se_smc.reserve(config.trials);
        std::size_t guards = 0;
        for (std::size_t t = 0; t < config.trials; ++t) {
            const ResultRow& r = result.rows[n_idx * config.trials + t];
            se_mc.push_back((r.f_hat_mc - truth) * (r.f_hat_mc - truth));
            se_fit.push_back((r.f_hat_fit - truth) * (r.f_hat_fit - truth));
            se_smc.push_back((r.f_hat_smc - truth) * (r.f_hat_smc - truth));
            guards += r.guard_triggered ? 1 : 0;
        }
        const double inv = 1.0 / static_cast<double>(config.trials);
        s.mse_mc = std::accumulate(se_mc.begin(), se_mc.end(), 0.0) * inv;
        s.mse_fit = std::accumulate(se_fit.begin(), se_fit.end(), 0.0) * inv;
        s.mse_smc = std::accumulate(se_smc.begin(), se_smc.end(), 0.0) * inv;
        s.guard_rate = static_cast<double>(guards) * inv;
        s.med_se_mc = detail::median_of(se_mc);
        s.med_se_fit = detail::median_of(se_fit);
        s.med_se_smc = detail::median_of(se_smc);
        result.summary.push_back(s);
    }
    return result;
}

// ---------------------------------------------------------------------------
// Two-pass standard deviation: one stacked run on f, one on f^2, combined as
// sqrt(E[f^2] - E[f]^2). The squared pass doubles the basis order so squares
// of in-family surrogates stay in family.
// ---------------------------------------------------------------------------

struct StdEstimate {
    double mean = 0;
    double stddev = 0;
    bool clamped = false;  // sampling noise made the radicand negative
    StackReport mean_report;
    StackReport square_report;
};

inline StdEstimate estimate_std(const Dataset& data, const DistributionSpec& dist,
                                const FitterSpec& fitter, const StackOptions& opt = {}) {
    StdEstimate est;
    est.mean_report = stackmc_estimate(data, dist, fitter, opt);
    est.mean = est.mean_report.f_hat_smc;

    std::vector<double> squared(data.n());
    for (std::size_t i = 0; i < data.n(); ++i) squared[i] = data.values[i] * data.values[i];
    const FitterSpec doubled(fitter.dims, fitter.family, 2 * fitter.order);
    est.square_report =
        stackmc_estimate(Dataset(data.points, std::move(squared)), dist, doubled, opt);

    const double radicand = est.square_report.f_hat_smc - est.mean * est.mean;
    est.clamped = radicand < 0.0;
    est.stddev = est.clamped ? 0.0 : std::sqrt(radicand);
    return est;
}

}  // namespace stackmc
