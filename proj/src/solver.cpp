#include "bval/solver.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <thread>

#include "bval/error.hpp"
#include "bval/numerics.hpp"

namespace bval {

bool RegionResult::contains(const Eigen::VectorXd& tau) const {
    const Eigen::VectorXd e = center - tau;
    return e.dot(metric * e) <= M;
}

void check_level(double p, const char* name) {
    if (!(p > 0.0 && p < 1.0)) throw DomainError(std::string(name) + " must lie in (0, 1)");
}

namespace {

constexpr int kMaxRounds = 60;
constexpr double kCoverageSlack = 1e-11;

void check_bound(double b) {
    if (!(b >= 0.0) || !std::isfinite(b)) throw DomainError("bias bound must be a finite nonnegative number");
}

// Smallest x >= lo with g(x) >= 0 for nondecreasing g, growing hi until it brackets.
double solve_increasing(const ScalarFn& g, double lo, double hi, double tol) {
    if (g(lo) >= 0.0) return lo;
    hi = std::max(hi, lo + 1.0);
    for (int i = 0;; ++i) {
        if (g(hi) >= 0.0) break;
        if (i > 80) throw BracketError("no upper bracket for the half-length");
        lo = hi;
        hi *= 2.0;
    }
    return find_root_monotone(g, lo, hi, {tol, 400}).x;
}

using Point = std::vector<double>;
using CoverageFn = std::function<double(double, const Point&)>;

using Worst = WorstCase;
using WorstFinder = std::function<Worst(double)>;

struct Solved {
    double length = 0.0;
    Worst worst;
    int rounds = 0;
};

// Smallest length whose worst-case coverage reaches target. Alternates between
// solving for the length at the current worst bias and searching the bias set
// for a new worst case at that length; the lengths increase monotonically
// towards the answer from below.
Solved solve_worst_case(const CoverageFn& cov, const WorstFinder& finder, Point t, double target,
                        double lo, double hi_guess, double tol) {
    double length = lo;
    for (int round = 1; round <= kMaxRounds; ++round) {
        const double next = solve_increasing([&](double x) { return cov(x, t) - target; }, length,
                                             std::max(hi_guess, length + 1.0), tol);
        const Worst w = finder(next);
        if (w.coverage >= target - kCoverageSlack || (round > 1 && next <= length)) return {next, w, round};
        length = next;
        t = w.t;
    }
    throw BracketError("worst-case search did not settle");
}

struct UnivariateShape {
    double accept_slope;
    double pw_slope;
    double cut;
    // Beyond this |t| the pretest accepts with probability below Phi(-9) and the
    // coverage no longer depends on t.
    double reach;

    UnivariateShape(double gamma, double alpha)
        : accept_slope(std::sqrt(gamma / (1.0 + gamma))),
          pw_slope(gamma / std::sqrt(1.0 + gamma)),
          cut(upper_quantile(alpha / 2.0)),
          reach((cut + 9.0) / accept_slope) {}
};

Worst univariate_pt_worst(Side side, double L, double b, double gamma, double alpha) {
    const UnivariateShape shape(gamma, alpha);
    const auto f = [&](double t) { return coverage_univariate(Kind::PT, side, L, t, gamma, alpha); };
    const double hi = std::min(b, shape.reach);
    // The two-sided coverage is symmetric in t; the one-sided one is not.
    const double lo = side == Side::TwoSided ? 0.0 : -hi;
    const int grid = static_cast<int>(std::clamp(std::ceil((hi - lo) * shape.pw_slope * 8.0), 512.0, 20000.0));
    const MinResult m = minimize_on_interval(f, lo, hi, grid);
    Worst w{{m.argmin}, m.min};
    if (b > hi) {
        for (double t : {b, side == Side::TwoSided ? b : -b}) {
            const double v = f(t);
            if (v < w.coverage) w = {{t}, v};
        }
    }
    return w;
}

IntervalResult make_result(Kind kind, Side side, double b, const Solved& s, double unit) {
    IntervalResult r;
    r.kind = kind;
    r.side = side;
    r.half_length_raw = s.length;
    r.half_length_scaled = s.length * unit;
    r.bound_b = {b};
    r.worst_case_t = s.worst.t;
    r.diagnostics.rounds = s.rounds;
    r.diagnostics.coverage = s.worst.coverage;
    return r;
}

}  // namespace

double half_length_pw(double b, double zeta, double gamma) {
    check_bound(b);
    check_level(zeta, "zeta");
    if (!(gamma > 0.0)) throw DomainError("gamma must be positive");
    const double shift = gamma / std::sqrt(1.0 + gamma) * b;
    const double target = 1.0 - zeta;
    const auto g = [&](double L) { return coverage_pw(L, b, gamma) - target; };
    return find_root_monotone(g, 0.0, upper_quantile(zeta / 2.0) + shift + 1.0, {1e-13, 400}).x;
}

IntervalResult solve_half_length(Kind kind, Side side, double b, double zeta, double gamma, double alpha,
                                 double L_floor) {
    check_bound(b);
    check_level(zeta, "zeta");
    if (!(gamma > 0.0) || !std::isfinite(gamma)) throw DomainError("gamma must be positive");
    if (kind != Kind::PW) check_level(alpha, "alpha");
    const double target = 1.0 - zeta;
    const double unit = 1.0 / std::sqrt(1.0 + gamma);
    const double shift = gamma / std::sqrt(1.0 + gamma) * b;
    const double quantile = upper_quantile(side == Side::TwoSided ? zeta / 2.0 : zeta);
    const CoverageFn cov = [&](double L, const Point& t) {
        return coverage_univariate(kind, side, L, t[0], gamma, alpha);
    };
    // PW and ST attain their worst case at the bound itself.
    const WorstFinder at_bound = [&](double L) { return Worst{{b}, cov(L, {b})}; };
    const WorstFinder pt_search = [&](double L) { return univariate_pt_worst(side, L, b, gamma, alpha); };
    const double alpha_used = kind == Kind::PW ? 0.05 : alpha;
    const double hi_guess = quantile + shift + std::sqrt(gamma) * (upper_quantile(alpha_used / 2.0) + 10.0);
    const Solved s = solve_worst_case(cov, kind == Kind::PT ? pt_search : at_bound, {b}, target,
                                      std::max(L_floor, 0.0), hi_guess, 1e-12);
    return make_result(kind, side, b, s, unit);
}

IntervalResult half_length_pt(double b, double zeta, double gamma, double alpha) {
    return solve_half_length(Kind::PT, Side::TwoSided, b, zeta, gamma, alpha);
}

IntervalResult half_length_st(double b, double zeta, double gamma, double alpha) {
    return solve_half_length(Kind::ST, Side::TwoSided, b, zeta, gamma, alpha);
}

IntervalResult half_length_one_sided(Kind kind, double b, double zeta, double gamma, double alpha) {
    return solve_half_length(kind, Side::Lower, b, zeta, gamma, alpha);
}

IntervalResult interval(Kind kind, Side side, const EstimatorPair& pair, double b, double zeta, double alpha) {
    pair.validate();
    if (pair.rho != 0.0) throw PreconditionError("correlated pair: decorrelate before solving (rho != 0)");
    IntervalResult r = solve_half_length(kind, side, b, zeta, pair.gamma(), alpha);
    r.center = point_estimate(kind, pair, alpha);
    r.half_length_scaled = r.half_length_raw * pair.pw_scale();
    return r;
}

IntervalResult unbiased_interval(Side side, const EstimatorPair& pair, double zeta) {
    pair.validate();
    check_level(zeta, "zeta");
    IntervalResult r;
    r.side = side;
    r.center = pair.tau0_hat;
    r.half_length_raw = upper_quantile(side == Side::TwoSided ? zeta / 2.0 : zeta);
    r.half_length_scaled = r.half_length_raw * pair.sigma0();
    r.diagnostics.coverage = 1.0 - zeta;
    r.diagnostics.note = "unbiased reference";
    return r;
}

namespace {

// Sign vertices b * s with s_0 = +1; the PT/ST coverages are invariant under t -> -t.
std::vector<Point> half_vertices(const Point& b) {
    const std::size_t d = b.size();
    std::vector<Point> out;
    for (std::size_t mask = 0; mask < (std::size_t{1} << (d - 1)); ++mask) {
        Point v(d);
        v[0] = b[0];
        for (std::size_t j = 1; j < d; ++j) v[j] = (mask >> (j - 1)) & 1u ? -b[j] : b[j];
        out.push_back(v);
    }
    return out;
}

Worst min_over(const std::function<double(const Point&)>& f, const std::vector<Point>& pts) {
    Worst w{pts.front(), std::numeric_limits<double>::infinity()};
    for (const Point& p : pts) {
        const double v = f(p);
        if (v < w.coverage) w = {p, v};
    }
    return w;
}

// Worst case over the box [-b, b] modulo t -> -t (first coordinate kept >= 0):
// vertices, a Latin-hypercube sample, then coordinate descent from the best start.
Worst box_search(const std::function<double(const Point&)>& f, const Point& b) {
    const std::size_t d = b.size();
    std::vector<Point> starts = half_vertices(b);
    starts.push_back(Point(d, 0.0));
    const std::size_t n_lhs = std::min<std::size_t>(static_cast<std::size_t>(std::pow(9.0, d)), 48);
    std::mt19937_64 rng(20240601);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<std::vector<std::size_t>> perm(d);
    for (std::size_t j = 0; j < d; ++j) {
        perm[j].resize(n_lhs);
        for (std::size_t i = 0; i < n_lhs; ++i) perm[j][i] = i;
        std::shuffle(perm[j].begin(), perm[j].end(), rng);
    }
    for (std::size_t i = 0; i < n_lhs; ++i) {
        Point p(d);
        for (std::size_t j = 0; j < d; ++j) {
            const double cell = (perm[j][i] + unif(rng)) / static_cast<double>(n_lhs);
            p[j] = j == 0 ? cell * b[0] : (2.0 * cell - 1.0) * b[j];
        }
        starts.push_back(p);
    }
    Worst best = min_over(f, starts);
    for (int sweep = 0; sweep < 2; ++sweep) {
        for (std::size_t j = 0; j < d; ++j) {
            if (b[j] == 0.0) continue;
            Point p = best.t;
            const auto along = [&](double x) {
                p[j] = x;
                return f(p);
            };
            const MinResult m = minimize_on_interval(along, j == 0 ? 0.0 : -b[j], b[j], 24, 1e-6 * b[j]);
            if (m.min < best.coverage) {
                best.t[j] = m.argmin;
                best.coverage = m.min;
            }
        }
    }
    return best;
}

}  // namespace

WorstCase worst_case_univariate(Kind kind, Side side, double L, double b, double gamma, double alpha) {
    check_bound(b);
    if (kind == Kind::PT) return univariate_pt_worst(side, L, b, gamma, alpha);
    return {{b}, coverage_univariate(kind, side, L, b, gamma, alpha)};
}

WorstCase worst_case_region(Kind kind, double M, const Eigen::VectorXd& b, const MultiProblem& problem,
                            const MultiGeometry& geom) {
    const int d = geom.dim;
    if (b.size() != d) throw DimensionError("bias bound vector has the wrong length");
    for (int j = 0; j < d; ++j) check_bound(b(j));
    const Point bound(b.data(), b.data() + d);
    const auto to_vec = [](const Point& p) { return Eigen::Map<const Eigen::VectorXd>(p.data(), p.size()); };
    const auto cov = [&](const Point& t) { return coverage_multivariate(kind, M, to_vec(t), problem, geom).value; };
    if (kind == Kind::PW) {
        // The PW coverage falls with the noncentrality, which is convex in t:
        // the worst case sits at a vertex.
        Point worst = bound;
        double lambda = -1.0;
        for (const Point& v : half_vertices(bound)) {
            const double l = (geom.leverage * geom.noise * to_vec(v)).squaredNorm();
            if (l > lambda) {
                lambda = l;
                worst = v;
            }
        }
        return {worst, noncentral_chisq_cdf(M, d, lambda)};
    }
    if (kind == Kind::ST) return min_over(cov, half_vertices(bound));
    if (d == 1) {
        const double reach = (std::sqrt(geom.q) + 9.0) / std::fabs(geom.noise(0, 0));
        const double slope = std::fabs(geom.leverage(0, 0) * geom.noise(0, 0));
        const double hi = std::min(bound[0], reach);
        const int grid = static_cast<int>(std::clamp(std::ceil(hi * slope * 8.0), 512.0, 20000.0));
        const MinResult m = minimize_on_interval([&](double x) { return cov({x}); }, 0.0, hi, grid);
        Worst w{{m.argmin}, m.min};
        if (bound[0] > hi) {
            const double v = cov(bound);
            if (v < w.coverage) w = {bound, v};
        }
        return w;
    }
    return box_search(cov, bound);
}

WorstCase worst_case_fusion(Kind kind, double L, const std::vector<double>& b, const FusionProblem& problem,
                            double alpha) {
    if (b.size() != problem.size()) throw DimensionError("bias bound vector length must equal the number of sources");
    for (double v : b) check_bound(v);
    const auto cov = [&](const Point& t) { return coverage_fusion(kind, L, t, problem, alpha); };
    // PW and ST are worst at t = b (equivalently -b).
    if (kind != Kind::PT) return {b, cov(b)};
    if (b.size() == 1) {
        const Worst w = univariate_pt_worst(Side::TwoSided, L, b[0], problem.gammas()[0], alpha);
        return {w.t, cov(w.t)};
    }
    return box_search(cov, b);
}

RegionResult region_radius(Kind kind, const Eigen::VectorXd& b, double zeta, const MultiProblem& problem) {
    check_level(zeta, "zeta");
    problem.validate();
    const int d = problem.dim();
    if (b.size() != d) throw DimensionError("bias bound vector has the wrong length");
    if (d > 8) throw DimensionError("regions are supported up to d = 8");
    for (int j = 0; j < d; ++j) check_bound(b(j));
    const MultiGeometry geom = MultiGeometry::from(problem);
    const double target = 1.0 - zeta;
    const Point bound(b.data(), b.data() + d);
    const auto to_vec = [](const Point& p) { return Eigen::Map<const Eigen::VectorXd>(p.data(), p.size()); };

    RegionResult r;
    r.kind = kind;
    r.center = point_multivariate(kind, problem);
    r.metric = geom.metric;
    r.bound_b = b;

    if (kind == Kind::PW) {
        const Worst w = worst_case_region(kind, 1.0, b, problem, geom);
        const double lambda = (geom.leverage * geom.noise * to_vec(w.t)).squaredNorm();
        r.M = noncentral_chisq_quantile(target, d, lambda);
        r.worst_case_t = to_vec(w.t);
        r.diagnostics.coverage = noncentral_chisq_cdf(r.M, d, lambda);
        r.diagnostics.rounds = 1;
        return r;
    }

    MultiCoverage last;
    const CoverageFn cov = [&](double M, const Point& t) {
        last = coverage_multivariate(kind, M, to_vec(t), problem, geom);
        return last.value;
    };
    const WorstFinder finder = [&](double M) { return worst_case_region(kind, M, b, problem, geom); };
    const double pw_guess = noncentral_chisq_quantile(target, d, (geom.leverage * geom.noise * b).squaredNorm());
    const double tol = 1e-11 * std::max(1.0, pw_guess);
    const Solved s = solve_worst_case(cov, finder, bound, target, 0.0, std::max(pw_guess, geom.q) * 4.0, tol);
    r.M = s.length;
    r.worst_case_t = to_vec(s.worst.t);
    r.diagnostics.rounds = s.rounds;
    r.diagnostics.coverage = s.worst.coverage;
    cov(r.M, s.worst.t);
    r.diagnostics.std_error = last.std_error;
    r.diagnostics.accuracy_warning = last.accuracy_warning;
    if (last.accuracy_warning) r.diagnostics.note = "QMC standard error above 1e-4";
    return r;
}

IntervalResult half_length_fusion(Kind kind, const std::vector<double>& b, double zeta,
                                  const FusionProblem& problem, double alpha) {
    check_level(zeta, "zeta");
    problem.validate();
    if (kind != Kind::PW) check_level(alpha, "alpha");
    const std::size_t K = problem.size();
    if (b.size() != K) throw DimensionError("bias bound vector length must equal the number of sources");
    for (double v : b) check_bound(v);
    if (kind != Kind::PW && K > kFusionMaxSources)
        throw DimensionError("fusion PT/ST intervals support at most 8 biased sources");
    const double target = 1.0 - zeta;
    const CoverageFn cov = [&](double L, const Point& t) { return coverage_fusion(kind, L, t, problem, alpha); };
    const WorstFinder finder = [&](double L) { return worst_case_fusion(kind, L, b, problem, alpha); };
    double shift = 0.0;
    for (std::size_t j = 0; j < K; ++j) shift += problem.gammas()[j] * b[j];
    const double s = std::sqrt(1.0 + problem.gamma_l1());
    const double hi_guess = upper_quantile(zeta / 2.0) + shift / s + 1.0 +
                            (kind == Kind::PW ? 0.0 : s * (upper_quantile(alpha / 2.0) + 10.0));
    const Solved sol = solve_worst_case(cov, finder, b, target, 0.0, hi_guess, 1e-11);
    IntervalResult r;
    r.kind = kind;
    r.center = point_fusion(kind, problem, alpha);
    r.half_length_raw = sol.length;
    r.half_length_scaled = sol.length * problem.pw_scale();
    r.bound_b = b;
    r.worst_case_t = sol.worst.t;
    r.diagnostics.rounds = sol.rounds;
    r.diagnostics.coverage = sol.worst.coverage;
    return r;
}

SensitivityCurve sensitivity_curve(Kind kind, Side side, const std::vector<double>& b_grid,
                                   const EstimatorPair& pair, double zeta, double alpha, int threads) {
    pair.validate();
    if (pair.rho != 0.0) throw PreconditionError("correlated pair: decorrelate before solving (rho != 0)");
    for (std::size_t i = 0; i < b_grid.size(); ++i) {
        check_bound(b_grid[i]);
        if (i > 0 && b_grid[i] < b_grid[i - 1]) throw DomainError("b_grid must be ascending");
    }
    SensitivityCurve curve;
    curve.kind = kind;
    curve.side = side;
    curve.reference = unbiased_interval(side, pair, zeta);
    curve.points.resize(b_grid.size());
    const double center = point_estimate(kind, pair, alpha);

    const auto solve_one = [&](std::size_t i, double floor) {
        CurvePoint& pt = curve.points[i];
        pt.b = b_grid[i];
        try {
            pt.result = solve_half_length(kind, side, b_grid[i], zeta, pair.gamma(), alpha, floor);
            pt.result.center = center;
            pt.result.half_length_scaled = pt.result.half_length_raw * pair.pw_scale();
        } catch (const Error& e) {
            pt.error = e.what();
            pt.error_code = static_cast<int>(e.code());
        }
    };

    const std::size_t n = b_grid.size();
    const std::size_t workers = std::min<std::size_t>(threads > 1 ? threads : 1, std::max<std::size_t>(n, 1));
    if (workers <= 1) {
        // Lengths are nondecreasing in b, so the previous length bounds the next from below.
        double floor = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            solve_one(i, floor);
            if (curve.points[i].error.empty()) floor = curve.points[i].result.half_length_raw;
        }
        return curve;
    }
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (std::size_t i = w; i < n; i += workers) solve_one(i, 0.0);
        });
    }
    for (auto& th : pool) th.join();
    return curve;
}

}  // namespace bval
