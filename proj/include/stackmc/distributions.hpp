#pragma once

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "stackmc/error.hpp"
#include "stackmc/rng.hpp"

namespace stackmc {

// ---------------------------------------------------------------------------
// Marginals. Input densities are products of independent 1-D marginals.
// ---------------------------------------------------------------------------

struct UniformBox {
    double lo, hi;
    bool operator==(const UniformBox&) const = default;
};

struct Gaussian {
    double mu, sigma;
    bool operator==(const Gaussian&) const = default;
};

// Shape parameters a, b on support [0, 1].
struct Beta {
    double a, b;
    bool operator==(const Beta&) const = default;
};

using Marginal = std::variant<UniformBox, Gaussian, Beta>;

inline void validate(const Marginal& m) {
    if (const auto* u = std::get_if<UniformBox>(&m)) {
        if (!(u->lo < u->hi))
            throw ParameterError("uniform marginal requires lo < hi");
        if (!std::isfinite(u->lo) || !std::isfinite(u->hi))
            throw ParameterError("uniform marginal bounds must be finite");
    } else if (const auto* gsn = std::get_if<Gaussian>(&m)) {
        if (!(gsn->sigma > 0.0) || !std::isfinite(gsn->sigma) || !std::isfinite(gsn->mu))
            throw ParameterError("gaussian marginal requires finite mu and sigma > 0");
    } else {
        const auto& bt = std::get<Beta>(m);
        if (!(bt.a > 0.0) || !(bt.b > 0.0) || !std::isfinite(bt.a) || !std::isfinite(bt.b))
            throw ParameterError("beta marginal requires shape parameters a, b > 0");
    }
}

// Raw moment E[x^n] of Beta(a, b): prod_{i=1..n} (a+i-1) / (a+b+i-1).
inline double beta_raw_moment(double a, double b, int n) {
    if (!(a > 0.0) || !(b > 0.0))
        throw ParameterError("beta_raw_moment requires a, b > 0");
    if (n < 0) throw ParameterError("beta_raw_moment requires n >= 0");
    double m = 1.0;
    for (int i = 1; i <= n; ++i) m *= (a + i - 1) / (a + b + i - 1);
    return m;
}

namespace detail {

inline double uniform_monomial_moment(double lo, double hi, int n) {
    // (hi^{n+1} - lo^{n+1}) / ((n+1)(hi-lo))
    return (std::pow(hi, n + 1) - std::pow(lo, n + 1)) / ((n + 1) * (hi - lo));
}

inline double gaussian_raw_moment(double mu, double sigma, int n) {
    // M_n = mu M_{n-1} + (n-1) sigma^2 M_{n-2}
    double prev = 1.0, cur = mu;
    if (n == 0) return prev;
    for (int i = 2; i <= n; ++i) {
        const double next = mu * cur + (i - 1) * sigma * sigma * prev;
        prev = cur;
        cur = next;
    }
    return cur;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Basis functions whose marginal expectations have closed forms.
// ---------------------------------------------------------------------------

struct Monomial {
    int degree;
};
struct Cosine {
    int freq;  // cos(freq * x)
};
struct Sine {
    int freq;  // sin(freq * x)
};

using BasisFunction = std::variant<Monomial, Cosine, Sine>;

inline double eval_basis(const BasisFunction& b, double x) {
    if (const auto* m = std::get_if<Monomial>(&b)) return std::pow(x, m->degree);
    if (const auto* c = std::get_if<Cosine>(&b)) return std::cos(c->freq * x);
    return std::sin(std::get<Sine>(b).freq * x);
}

// Exact E[basis(x)] under one marginal. Supported pairs: monomials of degree
// <= max_monomial_order under uniform/gaussian/beta, trig under uniform.
// Anything else throws UnsupportedIntegralError so callers can fall back to
// Monte Carlo integration of the surrogate.
inline double basis_expectation(const Marginal& m, const BasisFunction& b,
                                int max_monomial_order = 8) {
    if (const auto* mono = std::get_if<Monomial>(&b)) {
        const int n = mono->degree;
        if (n < 0) throw ParameterError("monomial degree must be >= 0");
        if (n > max_monomial_order)
            throw UnsupportedIntegralError("monomial degree " + std::to_string(n) +
                                           " above configured maximum " +
                                           std::to_string(max_monomial_order));
        if (const auto* u = std::get_if<UniformBox>(&m))
            return detail::uniform_monomial_moment(u->lo, u->hi, n);
        if (const auto* g = std::get_if<Gaussian>(&m))
            return detail::gaussian_raw_moment(g->mu, g->sigma, n);
        const auto& bt = std::get<Beta>(m);
        return beta_raw_moment(bt.a, bt.b, n);
    }
    const int k = std::holds_alternative<Cosine>(b) ? std::get<Cosine>(b).freq
                                                    : std::get<Sine>(b).freq;
    if (k < 1) throw ParameterError("trig basis frequency must be >= 1");
    if (const auto* u = std::get_if<UniformBox>(&m)) {
        const double w = k * (u->hi - u->lo);
        if (std::holds_alternative<Cosine>(b))
            return (std::sin(k * u->hi) - std::sin(k * u->lo)) / w;
        return (std::cos(k * u->lo) - std::cos(k * u->hi)) / w;
    }
    throw UnsupportedIntegralError("trig basis integrable only against uniform marginals");
}

inline double marginal_pdf(const Marginal& m, double x) {
    if (const auto* u = std::get_if<UniformBox>(&m))
        return (x < u->lo || x > u->hi) ? 0.0 : 1.0 / (u->hi - u->lo);
    if (const auto* g = std::get_if<Gaussian>(&m)) {
        const double z = (x - g->mu) / g->sigma;
        return std::exp(-0.5 * z * z) / (g->sigma * std::sqrt(2.0 * std::numbers::pi));
    }
    const auto& bt = std::get<Beta>(m);
    if (x < 0.0 || x > 1.0) return 0.0;
    const double lbeta = std::lgamma(bt.a) + std::lgamma(bt.b) - std::lgamma(bt.a + bt.b);
    return std::pow(x, bt.a - 1.0) * std::pow(1.0 - x, bt.b - 1.0) / std::exp(lbeta);
}

inline double marginal_sample(Philox4x32& g, const Marginal& m) {
    if (const auto* u = std::get_if<UniformBox>(&m)) return uniform_real(g, u->lo, u->hi);
    if (const auto* gsn = std::get_if<Gaussian>(&m)) return gsn->mu + gsn->sigma * normal01(g);
    const auto& bt = std::get<Beta>(m);
    return beta_sample(g, bt.a, bt.b);
}

// ---------------------------------------------------------------------------
// DistributionSpec: a product of independent marginals, parsed from and
// formatted to the compact grammar  uniform(-3,3)^10 * beta(2,5).
// ---------------------------------------------------------------------------

struct DistributionSpec {
    std::vector<Marginal> marginals;
    int max_monomial_order = 8;

    DistributionSpec() = default;
    explicit DistributionSpec(std::vector<Marginal> ms, int max_order = 8)
        : marginals(std::move(ms)), max_monomial_order(max_order) {
        if (marginals.empty()) throw ParameterError("distribution needs at least one marginal");
        for (const auto& m : marginals) validate(m);
    }

    std::size_t dims() const { return marginals.size(); }

    bool operator==(const DistributionSpec& o) const { return marginals == o.marginals; }

    static DistributionSpec parse(std::string_view text);
    std::string str() const;
};

namespace detail {

inline std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline double parse_double_token(std::string_view tok, std::string_view context) {
    double v = 0.0;
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size())
        throw ParseError("bad number '" + std::string(tok) + "' in " + std::string(context));
    return v;
}

struct GrammarCursor {
    std::string_view text;
    std::size_t pos = 0;

    void skip_ws() {
        while (pos < text.size() && text[pos] == ' ') ++pos;
    }
    bool eat(char c) {
        skip_ws();
        if (pos < text.size() && text[pos] == c) {
            ++pos;
            return true;
        }
        return false;
    }
    [[noreturn]] void fail(const std::string& what) const {
        throw ParseError("distribution grammar: " + what + " at position " +
                         std::to_string(pos) + " in '" + std::string(text) + "'");
    }
};

inline std::string_view lex_ident(GrammarCursor& c) {
    c.skip_ws();
    const std::size_t start = c.pos;
    while (c.pos < c.text.size() && std::isalpha(static_cast<unsigned char>(c.text[c.pos]))) ++c.pos;
    if (c.pos == start) c.fail("expected marginal name");
    return c.text.substr(start, c.pos - start);
}

inline std::string_view lex_number(GrammarCursor& c) {
    c.skip_ws();
    const std::size_t start = c.pos;
    auto is_num = [&](char ch) {
        return std::isdigit(static_cast<unsigned char>(ch)) || ch == '+' || ch == '-' ||
               ch == '.' || ch == 'e' || ch == 'E';
    };
    while (c.pos < c.text.size() && is_num(c.text[c.pos])) ++c.pos;
    if (c.pos == start) c.fail("expected number");
    return c.text.substr(start, c.pos - start);
}

}  // namespace detail

inline DistributionSpec DistributionSpec::parse(std::string_view text) {
    detail::GrammarCursor cur{text};
    std::vector<Marginal> ms;
    for (;;) {
        const auto name = detail::lex_ident(cur);
        if (!cur.eat('(')) cur.fail("expected '('");
        const double p0 = detail::parse_double_token(detail::lex_number(cur), text);
        if (!cur.eat(',')) cur.fail("expected ','");
        const double p1 = detail::parse_double_token(detail::lex_number(cur), text);
        if (!cur.eat(')')) cur.fail("expected ')'");

        Marginal m;
        if (name == "uniform")
            m = UniformBox{p0, p1};
        else if (name == "gauss")
            m = Gaussian{p0, p1};
        else if (name == "beta")
            m = Beta{p0, p1};
        else
            cur.fail("unknown marginal '" + std::string(name) + "'");

        std::size_t repeat = 1;
        if (cur.eat('^')) {
            const auto tok = detail::lex_number(cur);
            int r = 0;
            const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), r);
            if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size() || r < 1)
                cur.fail("repeat count must be a positive integer");
            repeat = static_cast<std::size_t>(r);
        }
        for (std::size_t i = 0; i < repeat; ++i) ms.push_back(m);

        if (!cur.eat('*')) break;
    }
    cur.skip_ws();
    if (cur.pos != text.size()) cur.fail("trailing input");
    return DistributionSpec(std::move(ms));
}

inline std::string DistributionSpec::str() const {
    using detail::format_double;
    auto one = [](const Marginal& m) -> std::string {
        if (const auto* u = std::get_if<UniformBox>(&m))
            return "uniform(" + format_double(u->lo) + "," + format_double(u->hi) + ")";
        if (const auto* g = std::get_if<Gaussian>(&m))
            return "gauss(" + format_double(g->mu) + "," + format_double(g->sigma) + ")";
        const auto& bt = std::get<Beta>(m);
        return "beta(" + format_double(bt.a) + "," + format_double(bt.b) + ")";
    };
    std::string out;
    std::size_t i = 0;
    while (i < marginals.size()) {
        std::size_t run = 1;
        while (i + run < marginals.size() && marginals[i + run] == marginals[i]) ++run;
        if (!out.empty()) out += "*";
        out += one(marginals[i]);
        if (run > 1) out += "^" + std::to_string(run);
        i += run;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Sampling.
// ---------------------------------------------------------------------------

// N x D sample matrix, row-major, tagged with the seed that produced it.
struct SampleMatrix {
    std::size_t n_rows = 0;
    std::size_t n_cols = 0;
    std::uint64_t seed = 0;
    std::vector<double> data;

    SampleMatrix() = default;
    SampleMatrix(std::size_t rows, std::size_t cols, std::uint64_t s = 0)
        : n_rows(rows), n_cols(cols), seed(s), data(rows * cols, 0.0) {}

    double& at(std::size_t r, std::size_t c) { return data[r * n_cols + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * n_cols + c]; }
    std::span<const double> row(std::size_t r) const {
        return std::span<const double>(data).subspan(r * n_cols, n_cols);
    }
};

// Fills one point; draw order is dimension-major within a point so the same
// stream yields the same matrix whether drawn in bulk or streamed.
inline void draw_point(Philox4x32& g, const DistributionSpec& dist, std::span<double> out) {
    for (std::size_t d = 0; d < dist.dims(); ++d) out[d] = marginal_sample(g, dist.marginals[d]);
}

inline SampleMatrix sample(const DistributionSpec& dist, std::size_t n, std::uint64_t seed) {
    if (n < 1) throw ParameterError("sample requires n >= 1");
    SampleMatrix m(n, dist.dims(), seed);
    Philox4x32 g(seed);
    for (std::size_t i = 0; i < n; ++i)
        draw_point(g, dist, std::span<double>(m.data).subspan(i * m.n_cols, m.n_cols));
    return m;
}

// Joint density: product of marginal densities, zero outside support.
inline double pdf(const DistributionSpec& dist, std::span<const double> point) {
    if (point.size() != dist.dims())
        throw ShapeError("pdf: point has " + std::to_string(point.size()) +
                         " entries, distribution has " + std::to_string(dist.dims()));
    double p = 1.0;
    for (std::size_t d = 0; d < dist.dims(); ++d) p *= marginal_pdf(dist.marginals[d], point[d]);
    return p;
}

}  // namespace stackmc
