#include "bval/numerics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "bval/error.hpp"

namespace bval {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

// Wichura's AS 241 (PPND16), about 1e-16 relative accuracy.
double ppnd16(double p) {
    const double q = p - 0.5;
    if (std::fabs(q) <= 0.425) {
        const double r = 0.180625 - q * q;
        const double num =
            (((((((2509.0809287301226727 * r + 33430.575583588128105) * r + 67265.770927008700853) * r +
                 45921.953931549871457) * r + 13731.693765509461125) * r + 1971.5909503065514427) * r +
              133.14166789178437745) * r + 3.387132872796366608);
        const double den =
            (((((((5226.495278852545925 * r + 28729.085735721942674) * r + 39307.89580009271061) * r +
                 21213.794301586595867) * r + 5394.1960214247511077) * r + 687.1870074920579083) * r +
              42.313330701600911252) * r + 1.0);
        return q * num / den;
    }
    double r = q < 0 ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    double val;
    if (r <= 5.0) {
        r -= 1.6;
        const double num =
            (((((((7.7454501427834140764e-4 * r + 0.0227238449892691845833) * r + 0.24178072517745061177) * r +
                 1.27045825245236838258) * r + 3.64784832476320460504) * r + 5.7694972214606914055) * r +
              4.6303378461565452959) * r + 1.42343711074968357734);
        const double den =
            (((((((1.05075007164441684324e-9 * r + 5.475938084995344946e-4) * r + 0.0151986665636164571966) * r +
                 0.14810397642748007459) * r + 0.68976733498510000455) * r + 1.6763848301838038494) * r +
              2.05319162663775882187) * r + 1.0);
        val = num / den;
    } else {
        r -= 5.0;
        const double num =
            (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r + 0.0012426609473880784386) * r +
                 0.026532189526576123093) * r + 0.29656057182850489123) * r + 1.7848265399172913358) * r +
              5.4637849111641143699) * r + 6.6579046435011037772);
        const double den =
            (((((((2.04426310338993978564e-15 * r + 1.4215117583164458887e-7) * r + 1.8463183175100546818e-5) * r +
                 7.868691311456132591e-4) * r + 0.0148753612908506148525) * r + 0.13692988092273580531) * r +
              0.59983220655588793769) * r + 1.0);
        val = num / den;
    }
    return q < 0 ? -val : val;
}

// QUADPACK qk21 constants.
constexpr std::array<double, 11> kXgk = {
    0.995657163025808080735527280689003, 0.973906528517171720077964012084452,
    0.930157491355708226001207180059508, 0.865063366688984510732096688423493,
    0.780817726586416897063717578345042, 0.679409568299024406234327365114874,
    0.562757134668604683339000099272694, 0.433395394129247190799265943165784,
    0.294392862701460198131126603103866, 0.148874338981631210884826001129720,
    0.0};
constexpr std::array<double, 11> kWgk = {
    0.011694638867371874278064396062192, 0.032558162307964727478818972459390,
    0.054755896574351996031381300244580, 0.075039674810919952767043140916190,
    0.093125454583697605535065465083366, 0.109387158802297641899210590325805,
    0.123491976262065851077958109831074, 0.134709217311473325928054001771707,
    0.142775938577060080797094273138717, 0.147739104901338491374841515972068,
    0.149445554002916905664936468389821};
constexpr std::array<double, 5> kWg = {
    0.066671344308688137593568809893332, 0.149451349150580593145776339657697,
    0.219086362515982043995534934228163, 0.269266719309996355091226921569469,
    0.295524224714752870173892994651338};

struct Gk21 {
    double result;
    double error;
};

Gk21 gk21(const ScalarFn& f, double a, double b) {
    const double center = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    const double fc = f(center);
    double resk = kWgk[10] * fc;
    double resg = 0.0;
    bool finite = std::isfinite(fc);
    for (int j = 0; j < 10; ++j) {
        const double dx = half * kXgk[j];
        const double f1 = f(center - dx);
        const double f2 = f(center + dx);
        finite = finite && std::isfinite(f1) && std::isfinite(f2);
        resk += kWgk[j] * (f1 + f2);
        if (j % 2 == 1) resg += kWg[j / 2] * (f1 + f2);
    }
    if (!finite) throw IntegrationError("integrand returned a non-finite value");
    return {resk * half, std::fabs((resk - resg) * half)};
}

double adapt(const ScalarFn& f, double a, double b, double tol, int depth, const Gk21& whole) {
    const double eps_floor = 64.0 * std::numeric_limits<double>::epsilon() * std::fabs(whole.result);
    if (whole.error <= std::max(tol, eps_floor) || depth >= 48 || b - a < 1e-13) return whole.result;
    const double mid = 0.5 * (a + b);
    const Gk21 left = gk21(f, a, mid);
    const Gk21 right = gk21(f, mid, b);
    return adapt(f, a, mid, 0.5 * tol, depth + 1, left) + adapt(f, mid, b, 0.5 * tol, depth + 1, right);
}

// Joe & Kuo primitive polynomials and initial direction numbers, dims 2..10.
struct SobolPoly {
    unsigned s;
    unsigned a;
    std::array<std::uint32_t, 5> m;
};
constexpr std::array<SobolPoly, kSobolMaxDim - 1> kSobolPolys = {{
    {1, 0, {1, 0, 0, 0, 0}},
    {2, 1, {1, 3, 0, 0, 0}},
    {3, 1, {1, 3, 1, 0, 0}},
    {3, 2, {1, 1, 1, 0, 0}},
    {4, 1, {1, 1, 3, 3, 0}},
    {4, 4, {1, 3, 5, 13, 0}},
    {5, 2, {1, 1, 5, 5, 17}},
    {5, 4, {1, 1, 5, 5, 5}},
    {5, 7, {1, 1, 7, 11, 19}},
}};

constexpr unsigned kSobolBits = 32;

std::vector<std::array<std::uint32_t, kSobolBits>> sobol_directions(std::size_t dim) {
    std::vector<std::array<std::uint32_t, kSobolBits>> v(dim);
    for (unsigned k = 0; k < kSobolBits; ++k) v[0][k] = std::uint32_t{1} << (31 - k);
    for (std::size_t j = 1; j < dim; ++j) {
        const SobolPoly& poly = kSobolPolys[j - 1];
        const unsigned s = poly.s;
        for (unsigned k = 0; k < s; ++k) v[j][k] = poly.m[k] << (31 - k);
        for (unsigned k = s; k < kSobolBits; ++k) {
            std::uint32_t x = v[j][k - s] ^ (v[j][k - s] >> s);
            for (unsigned i = 1; i < s; ++i) {
                if ((poly.a >> (s - 1 - i)) & 1u) x ^= v[j][k - i];
            }
            v[j][k] = x;
        }
    }
    return v;
}

unsigned rightmost_zero_bit(std::uint64_t i) {
    unsigned c = 0;
    while (i & 1u) {
        i >>= 1;
        ++c;
    }
    return c;
}

}  // namespace

void Tolerance::validate() const {
    if (!(abs_tol > 0.0)) throw DomainError("tolerance must be positive");
    if (max_iter < 1) throw DomainError("max_iter must be at least 1");
}

void QmcConfig::validate() const {
    if (dim < 1) throw DomainError("QMC dimension must be at least 1");
    if (dim > kSobolMaxDim) throw DimensionError("QMC dimension exceeds the Sobol table");
    if (n_points == 0 || (n_points & (n_points - 1)) != 0)
        throw DomainError("QMC n_points must be a power of two");
    if (replicates < 2 || n_points % replicates != 0)
        throw DomainError("QMC replicates must divide n_points");
}

double normal_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

double normal_cdf(double x) { return 0.5 * std::erfc(-x * kInvSqrt2); }

double normal_sf(double x) { return 0.5 * std::erfc(x * kInvSqrt2); }

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw DomainError("normal_quantile: p must lie in (0, 1)");
    double x = ppnd16(p);
    // One Newton step against the erfc-based CDF, using the smaller tail.
    const double err = p < 0.5 ? normal_cdf(x) - p : (1.0 - p) - normal_sf(x);
    const double pdf = normal_pdf(x);
    if (pdf > 0.0) x += (p < 0.5 ? -err : err) / pdf;
    return x;
}

double noncentral_chisq_cdf(double x, int d, double lambda) {
    if (d < 1) throw DomainError("noncentral_chisq_cdf: d must be >= 1");
    if (!(lambda >= 0.0)) throw DomainError("noncentral_chisq_cdf: lambda must be >= 0");
    if (std::isnan(x)) return x;
    if (x <= 0.0) return 0.0;
    if (std::isinf(x)) return 1.0;
    if (d == 1) {
        const double rx = std::sqrt(x);
        const double rl = std::sqrt(lambda);
        return std::clamp(normal_cdf(rx - rl) - normal_sf(rx + rl), 0.0, 1.0);
    }
    const double a = 0.5 * d;
    const double y = 0.5 * x;
    if (lambda == 0.0) return boost::math::gamma_p(a, y);

    const double mu = 0.5 * lambda;
    const double mode = std::floor(mu);
    const double w_mode = std::exp(-mu + mode * std::log(mu) - std::lgamma(mode + 1.0));
    const double p_mode = boost::math::gamma_p(a + mode, y);
    constexpr double kTail = 1e-15;

    double sum = w_mode * p_mode;

    // Upward: P(a+j+1, y) = P(a+j, y) - y^(a+j) e^-y / Gamma(a+j+1).
    {
        double w = w_mode;
        double p = p_mode;
        double step = boost::math::gamma_p_derivative(a + mode + 1.0, y);
        for (double j = mode + 1.0;; j += 1.0) {
            p = std::max(p - step, 0.0);
            step *= y / (a + j);
            w *= mu / j;
            sum += w * p;
            const double ratio = mu / (j + 1.0);
            if (ratio < 1.0 && w * ratio / (1.0 - ratio) < kTail) break;
            if (p == 0.0 && ratio < 1.0) break;
            if (j > mode + 1e7) break;
        }
    }
    // Downward: P(a+j-1, y) = P(a+j, y) + y^(a+j-1) e^-y / Gamma(a+j).
    {
        double w = w_mode;
        double p = p_mode;
        double step = boost::math::gamma_p_derivative(a + mode, y);
        for (double j = mode; j >= 1.0; j -= 1.0) {
            p = std::min(p + step, 1.0);
            step *= (a + j - 1.0) / y;
            w *= j / mu;
            sum += w * p;
            const double ratio = (j - 1.0) / mu;
            if (ratio < 1.0 && w * ratio / (1.0 - ratio) < kTail) break;
        }
    }
    return std::clamp(sum, 0.0, 1.0);
}

double noncentral_chisq_quantile(double p, int d, double lambda) {
    if (!(p > 0.0 && p < 1.0)) throw DomainError("noncentral_chisq_quantile: p must lie in (0, 1)");
    if (d < 1) throw DomainError("noncentral_chisq_quantile: d must be >= 1");
    if (!(lambda >= 0.0)) throw DomainError("noncentral_chisq_quantile: lambda must be >= 0");
    double hi = d + lambda + 10.0 * std::sqrt(2.0 * (d + 2.0 * lambda)) + 10.0;
    while (noncentral_chisq_cdf(hi, d, lambda) < p) hi *= 2.0;
    const auto g = [&](double v) { return noncentral_chisq_cdf(v, d, lambda) - p; };
    return find_root_monotone(g, 0.0, hi, {1e-12 * std::max(1.0, hi), 400}).x;
}

double integrate(const ScalarFn& f, double lo, double hi, double abs_tol,
                 std::span<const double> breakpoints) {
    if (!(lo <= hi)) throw DomainError("integrate: lo must not exceed hi");
    if (!std::isfinite(lo) || !std::isfinite(hi)) throw DomainError("integrate: limits must be finite");
    if (lo == hi) return 0.0;
    std::vector<double> cuts{lo};
    for (double bp : breakpoints)
        if (bp > lo && bp < hi) cuts.push_back(bp);
    cuts.push_back(hi);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    const double piece_tol = abs_tol / static_cast<double>(cuts.size() - 1);
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const Gk21 whole = gk21(f, cuts[i], cuts[i + 1]);
        total += adapt(f, cuts[i], cuts[i + 1], piece_tol, 0, whole);
    }
    return total;
}

double gauss_weighted_integral(const ScalarFn& f, double lo, double hi, Tolerance tol,
                               std::span<const double> breakpoints) {
    tol.validate();
    if (std::isnan(lo) || std::isnan(hi)) throw DomainError("gauss_weighted_integral: NaN limit");
    if (!(lo < hi)) {
        if (lo == hi) return 0.0;
        throw DomainError("gauss_weighted_integral: lo must be below hi");
    }
    const double a = std::max(lo, -kNormalCut);
    const double b = std::min(hi, kNormalCut);
    if (a >= b) return 0.0;
    const auto weighted = [&f](double u) { return f(u) * normal_pdf(u); };
    return integrate(weighted, a, b, tol.abs_tol, breakpoints);
}

RootResult find_root_monotone(const ScalarFn& g, double lo, double hi, Tolerance tol) {
    tol.validate();
    if (!(lo <= hi)) throw DomainError("find_root_monotone: lo must not exceed hi");
    double a = lo;
    double b = hi;
    double fa = g(a);
    double fb = g(b);
    if (std::isnan(fa) || std::isnan(fb)) throw BracketError("find_root_monotone: NaN at bracket end");
    if (fa > 0.0 || fb < 0.0) throw BracketError("find_root_monotone: no sign change in bracket");
    if (fa == 0.0) return {a, 0};
    if (fb == 0.0) return {b, 0};

    // Brent (zeroin) keeping [a, b] as a sign-changing bracket.
    double c = a;
    double fc = fa;
    double d = b - a;
    double e = d;
    int it = 0;
    for (; it < tol.max_iter; ++it) {
        if ((fb > 0.0 && fc > 0.0) || (fb < 0.0 && fc < 0.0)) {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if (std::fabs(fc) < std::fabs(fb)) {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        const double tol1 = 0.5 * tol.abs_tol;
        const double xm = 0.5 * (c - b);
        if (std::fabs(xm) <= tol1 || fb == 0.0) break;
        if (std::fabs(e) >= tol1 && std::fabs(fa) > std::fabs(fb)) {
            double p;
            double q;
            const double s = fb / fa;
            if (a == c) {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                const double qq = fa / fc;
                const double r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if (p > 0.0) q = -q;
            p = std::fabs(p);
            if (2.0 * p < std::min(3.0 * xm * q - std::fabs(tol1 * q), std::fabs(e * q))) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += std::fabs(d) > tol1 ? d : (xm > 0.0 ? tol1 : -tol1);
        fb = g(b);
        if (std::isnan(fb)) throw BracketError("find_root_monotone: NaN inside bracket");
    }
    return {b, it};
}

MinResult minimize_on_interval(const ScalarFn& f, double lo, double hi, int grid, double x_tol) {
    if (lo > hi) throw DomainError("minimize_on_interval: lo must not exceed hi");
    if (grid < 2) throw DomainError("minimize_on_interval: grid needs at least 2 points");
    if (lo == hi) return {lo, f(lo)};
    const double h = (hi - lo) / (grid - 1);
    int best = 0;
    double best_val = std::numeric_limits<double>::infinity();
    for (int i = 0; i < grid; ++i) {
        const double x = i == grid - 1 ? hi : lo + i * h;
        const double v = f(x);
        if (v < best_val) {
            best_val = v;
            best = i;
        }
    }
    MinResult out{best == grid - 1 ? hi : lo + best * h, best_val};

    double a = lo + std::max(best - 1, 0) * h;
    double b = best + 1 >= grid ? hi : lo + (best + 1) * h;
    constexpr double kInvPhi = 0.61803398874989484820;
    double x1 = b - kInvPhi * (b - a);
    double x2 = a + kInvPhi * (b - a);
    double f1 = f(x1);
    double f2 = f(x2);
    const double stop = x_tol > 0.0 ? x_tol : 1e-12 * std::max(1.0, std::fabs(a) + std::fabs(b));
    for (int it = 0; it < 200 && (b - a) > stop; ++it) {
        if (f1 <= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - kInvPhi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + kInvPhi * (b - a);
            f2 = f(x2);
        }
    }
    const double xg = f1 <= f2 ? x1 : x2;
    const double fg = std::min(f1, f2);
    if (fg < out.min) out = {xg, fg};
    return out;
}

std::vector<double> sobol_points(std::size_t n, std::size_t dim) {
    if (dim < 1 || dim > kSobolMaxDim) throw DimensionError("sobol_points: unsupported dimension");
    const auto v = sobol_directions(dim);
    std::vector<double> out(n * dim);
    std::vector<std::uint32_t> x(dim, 0);
    constexpr double kScale = 1.0 / 4294967296.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (i > 0) {
            const unsigned c = rightmost_zero_bit(i - 1);
            for (std::size_t j = 0; j < dim; ++j) x[j] ^= v[j][c];
        }
        for (std::size_t j = 0; j < dim; ++j) out[i * dim + j] = x[j] * kScale;
    }
    return out;
}

QmcResult qmc_integrate(const VectorFn& f, const QmcConfig& cfg) {
    cfg.validate();
    const std::size_t dim = cfg.dim;
    const std::size_t per_rep = cfg.n_points / cfg.replicates;
    const auto v = sobol_directions(dim);
    std::mt19937_64 rng(cfg.seed);
    std::vector<double> rep_means(cfg.replicates, 0.0);
    std::vector<std::uint32_t> x(dim);
    std::vector<std::uint32_t> shift(dim);
    std::vector<double> z(dim);
    constexpr double kScale = 1.0 / 4294967296.0;
    for (std::size_t r = 0; r < cfg.replicates; ++r) {
        for (auto& s : shift) s = static_cast<std::uint32_t>(rng() >> 32);
        std::fill(x.begin(), x.end(), 0u);
        double acc = 0.0;
        for (std::size_t i = 0; i < per_rep; ++i) {
            if (i > 0) {
                const unsigned c = rightmost_zero_bit(i - 1);
                for (std::size_t j = 0; j < dim; ++j) x[j] ^= v[j][c];
            }
            for (std::size_t j = 0; j < dim; ++j) {
                const double uj = ((x[j] ^ shift[j]) + 0.5) * kScale;
                z[j] = normal_quantile(uj);
            }
            const double val = f(std::span<const double>(z));
            if (!std::isfinite(val)) throw IntegrationError("qmc_integrate: non-finite integrand");
            acc += val;
        }
        rep_means[r] = acc / static_cast<double>(per_rep);
    }
    double mean = 0.0;
    for (double m : rep_means) mean += m;
    mean /= static_cast<double>(cfg.replicates);
    double ss = 0.0;
    for (double m : rep_means) ss += (m - mean) * (m - mean);
    const double var = ss / static_cast<double>(cfg.replicates - 1);
    return {mean, std::sqrt(var / static_cast<double>(cfg.replicates))};
}

}  // namespace bval
