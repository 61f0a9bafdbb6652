#include "bval/coverage.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "bval/error.hpp"
#include "bval/numerics.hpp"

namespace bval {

const char* to_string(Side side) { return side == Side::TwoSided ? "two_sided" : "lower"; }

Side side_from_string(const std::string& name) {
    if (name == "two_sided" || name == "two-sided") return Side::TwoSided;
    if (name == "lower") return Side::Lower;
    throw DomainError("unknown side '" + name + "' (expected two_sided or lower)");
}

namespace {

constexpr double kQuadTol = 1e-13;

// P(lo < Z < hi) without cancellation in either tail.
double normal_between(double lo, double hi) {
    if (!(hi > lo)) return 0.0;
    if (lo > 0.0) return normal_sf(lo) - normal_sf(hi);
    return normal_cdf(hi) - normal_cdf(lo);
}

// Gaussian-weighted integral over (lo, hi); empty when the range is empty.
double weighted(const ScalarFn& f, double lo, double hi, double tol = kQuadTol) {
    if (!(hi > lo)) return 0.0;
    return gauss_weighted_integral(f, lo, hi, {tol, 2000});
}

void check_univariate(double L, double gamma) {
    if (!(L >= 0.0)) throw DomainError("half-length must be nonnegative");
    if (!(gamma > 0.0) || !std::isfinite(gamma)) throw DomainError("gamma must be positive");
}

void check_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0, 1)");
}

struct Univariate {
    double accept_slope;  // sqrt(gamma / (1 + gamma)): mean of the standardized pretest statistic per unit t
    double pw_slope;      // gamma / sqrt(1 + gamma): PW mean shift per unit t
    double root_gamma;
    double cut;           // c_{alpha/2}

    Univariate(double gamma, double alpha)
        : accept_slope(std::sqrt(gamma / (1.0 + gamma))),
          pw_slope(gamma / std::sqrt(1.0 + gamma)),
          root_gamma(std::sqrt(gamma)),
          cut(upper_quantile(alpha / 2.0)) {}
};

// Pretest-reject branches: the standardized estimator error is W - sqrt(gamma) (u - shift)
// with W ~ N(0, 1) independent of the pretest noise u.
double reject_tails(Kind kind, Side side, double L, double t, const Univariate& u) {
    const double g = u.root_gamma;
    const double lower_end = -u.cut - u.accept_slope * t;
    const double upper_end = u.cut - u.accept_slope * t;
    const double shift = kind == Kind::ST ? u.cut : 0.0;
    auto mass = [&](double v) {
        return side == Side::TwoSided ? normal_between(-L + g * v, L + g * v) : normal_cdf(L + g * v);
    };
    const double lower = weighted([&](double x) { return mass(x + shift); }, -kNormalCut, lower_end);
    const double upper = weighted([&](double x) { return mass(x - shift); }, upper_end, kNormalCut);
    return lower + upper;
}

double pretest_coverage(Kind kind, Side side, double L, double t, double gamma, double alpha) {
    check_univariate(L, gamma);
    check_alpha(alpha);
    if (!std::isfinite(t)) throw DomainError("relative bias must be finite");
    const Univariate u(gamma, alpha);
    const double accept = normal_between(-u.cut - u.accept_slope * t, u.cut - u.accept_slope * t);
    const double shift = u.pw_slope * t;
    const double pw = side == Side::TwoSided ? normal_between(-L - shift, L - shift) : normal_cdf(L - shift);
    return std::clamp(accept * pw + reject_tails(kind, side, L, t, u), 0.0, 1.0);
}

}  // namespace

double coverage_pw(double L, double t, double gamma) {
    check_univariate(L, gamma);
    const double shift = gamma / std::sqrt(1.0 + gamma) * t;
    return normal_between(-L - shift, L - shift);
}

double coverage_pt(double L, double t, double gamma, double alpha) {
    return pretest_coverage(Kind::PT, Side::TwoSided, L, t, gamma, alpha);
}

double coverage_st(double L, double t, double gamma, double alpha) {
    return pretest_coverage(Kind::ST, Side::TwoSided, L, t, gamma, alpha);
}

double coverage_one_sided(Kind kind, double L, double t, double gamma, double alpha) {
    if (kind == Kind::PW) {
        check_univariate(L, gamma);
        return normal_cdf(L - gamma / std::sqrt(1.0 + gamma) * t);
    }
    return pretest_coverage(kind, Side::Lower, L, t, gamma, alpha);
}

double coverage_univariate(Kind kind, Side side, double L, double t, double gamma, double alpha) {
    if (side == Side::Lower) return coverage_one_sided(kind, L, t, gamma, alpha);
    switch (kind) {
        case Kind::PW: return coverage_pw(L, t, gamma);
        case Kind::PT: return coverage_pt(L, t, gamma, alpha);
        case Kind::ST: return coverage_st(L, t, gamma, alpha);
    }
    throw DomainError("unknown estimator kind");
}

double coverage_st_limit(Side side, double L, double gamma, double alpha) {
    check_univariate(L, gamma);
    check_alpha(alpha);
    // Far beyond the threshold the ST error is N(sqrt(gamma) c, 1 + gamma).
    const double spread = std::sqrt(1.0 + gamma);
    const double center = std::sqrt(gamma) * upper_quantile(alpha / 2.0);
    if (side == Side::Lower) return normal_cdf((L - center) / spread);
    return normal_between((-L - center) / spread, (L - center) / spread);
}

MultiGeometry MultiGeometry::from(const MultiProblem& problem) {
    problem.validate();
    MultiGeometry g;
    g.dim = problem.dim();
    const Eigen::MatrixXd total = problem.Sigma0 + problem.Sigma1;
    const Eigen::MatrixXd p1 = linalg::spd_inverse(problem.Sigma1);
    g.metric = linalg::spd_inverse(problem.Sigma0) + p1;
    const Eigen::MatrixXd w = linalg::spd_inverse(g.metric);
    g.noise = linalg::sym_inv_sqrt(total) * linalg::sym_sqrt(problem.scale());
    g.leverage = linalg::sym_sqrt(w) * p1 * linalg::sym_sqrt(total);
    g.q = problem.q;
    return g;
}

namespace {

// Reject-branch integrand: Psi_d(M; ||leverage (mu - f(||u||^2) u)||^2) with f = 1 (PT)
// or 1 - h(||u||^2) (ST).
struct RejectIntegrand {
    Kind kind;
    double M;
    const MultiProblem& problem;
    const MultiGeometry& geom;
    Eigen::VectorXd mu;

    double factor(double r2) const { return kind == Kind::PT ? 1.0 : 1.0 - problem.h(r2); }

    double operator()(const Eigen::VectorXd& u) const {
        const double r2 = u.squaredNorm();
        const Eigen::VectorXd v = geom.leverage * (mu - factor(r2) * u);
        return noncentral_chisq_cdf(M, geom.dim, v.squaredNorm());
    }
};

double reject_1d(const RejectIntegrand& f) {
    const double mu = f.mu(0);
    const double root_q = std::sqrt(f.geom.q);
    Eigen::VectorXd u(1);
    const auto g = [&](double v) {
        u(0) = v + mu;
        return f(u);
    };
    return weighted(g, -kNormalCut, -root_q - mu) + weighted(g, root_q - mu, kNormalCut);
}

// Polar coordinates around the origin; the angular integral of a periodic analytic
// function uses the trapezoid rule with doubling until two levels agree.
double reject_2d(const RejectIntegrand& f) {
    const double mnorm = f.mu.norm();
    const double theta_mu = mnorm > 0.0 ? std::atan2(f.mu(1), f.mu(0)) : 0.0;
    const double r_lo = std::sqrt(f.geom.q);
    const double r_hi = mnorm + kNormalCut + 1.0;
    if (r_lo >= r_hi) return 0.0;
    Eigen::VectorXd u(2);
    const auto angular = [&](double r) {
        const double radial = std::exp(-0.5 * (r - mnorm) * (r - mnorm)) * r / (2.0 * std::numbers::pi);
        if (radial == 0.0) return 0.0;
        const double conc = r * mnorm;
        auto point = [&](double phi) {
            u(0) = r * std::cos(theta_mu + phi);
            u(1) = r * std::sin(theta_mu + phi);
            return f(u) * std::exp(-conc * (1.0 - std::cos(phi)));
        };
        std::size_t n = 32;
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) sum += point(2.0 * std::numbers::pi * i / n);
        double prev = sum / n;
        for (; n < (1u << 15); n *= 2) {
            // New nodes sit halfway between the old ones.
            double add = 0.0;
            for (std::size_t i = 0; i < n; ++i) add += point(2.0 * std::numbers::pi * (i + 0.5) / n);
            sum += add;
            const double cur = sum / (2 * n);
            if (std::fabs(cur - prev) <= 1e-12 * std::max(cur, 1e-3)) return radial * 2.0 * std::numbers::pi * cur;
            prev = cur;
        }
        return radial * 2.0 * std::numbers::pi * prev;
    };
    const std::array<double, 1> bp{mnorm};
    return integrate(angular, r_lo, r_hi, 1e-11, bp);
}

MultiCoverage reject_qmc(const RejectIntegrand& f) {
    QmcConfig cfg;
    cfg.dim = static_cast<std::size_t>(f.geom.dim);
    Eigen::VectorXd u(f.geom.dim);
    const double q = f.geom.q;
    const auto g = [&](std::span<const double> z) {
        for (int i = 0; i < f.geom.dim; ++i) u(i) = f.mu(i) + z[i];
        if (u.squaredNorm() <= q) return 0.0;
        return f(u);
    };
    const QmcResult r = qmc_integrate(g, cfg);
    return {r.value, r.std_error, r.std_error > kQmcWarnStdError};
}

}  // namespace

MultiCoverage coverage_multivariate(Kind kind, double M, const Eigen::VectorXd& t,
                                    const MultiProblem& problem) {
    return coverage_multivariate(kind, M, t, problem, MultiGeometry::from(problem));
}

MultiCoverage coverage_multivariate(Kind kind, double M, const Eigen::VectorXd& t,
                                    const MultiProblem& problem, const MultiGeometry& geom) {
    if (!(M >= 0.0)) throw DomainError("region radius M must be nonnegative");
    if (t.size() != geom.dim) throw DimensionError("bias vector has the wrong length");
    if (!t.allFinite()) throw DomainError("bias vector must be finite");
    const Eigen::VectorXd mu = geom.noise * t;
    const double pw = noncentral_chisq_cdf(M, geom.dim, (geom.leverage * mu).squaredNorm());
    if (kind == Kind::PW) return {pw, 0.0, false};
    const double accept = pw * noncentral_chisq_cdf(geom.q, geom.dim, mu.squaredNorm());
    const RejectIntegrand f{kind, M, problem, geom, mu};
    MultiCoverage out;
    if (geom.dim == 1) {
        out.value = accept + reject_1d(f);
    } else if (geom.dim == 2) {
        out.value = accept + reject_2d(f);
    } else {
        out = reject_qmc(f);
        out.value += accept;
    }
    out.value = std::clamp(out.value, 0.0, 1.0);
    return out;
}

namespace {

// Conditional on the unbiased estimator's noise z, the standardized pretest
// differences u_j = t_j - z + eta_j / sqrt(gamma_j) are independent. Each source
// contributes a discrete distribution of the shrinkage gap delta_j = u_j - u'_j:
// an atom at zero for the accept branch and Gauss-Legendre nodes on each reject tail.
struct Node {
    double delta;
    double weight;
};

constexpr std::array<double, 8> kGl8X = {
    -0.9602898564975363, -0.7966664774136267, -0.5255324099163290, -0.1834346424956498,
    0.1834346424956498,  0.5255324099163290,  0.7966664774136267,  0.9602898564975363};
constexpr std::array<double, 8> kGl8W = {
    0.1012285362903763, 0.2223810344533745, 0.3137066458778873, 0.3626837833783620,
    0.3626837833783620, 0.3137066458778873, 0.2223810344533745, 0.1012285362903763};
constexpr double kInnerCut = 7.5;
constexpr double kPanelWidth = 2.0;
constexpr double kNegligible = 1e-16;

struct FusionSetup {
    std::vector<double> gamma;
    std::vector<double> cut;  // accept threshold on u_j
    double s = 1.0;           // sqrt(1 + ||gamma||_1)
    double pw_shift = 0.0;    // <gamma, t> / s
};

FusionSetup fusion_setup(const std::vector<double>& t, const FusionProblem& problem, double alpha) {
    FusionSetup fs;
    fs.gamma = problem.gammas();
    fs.s = std::sqrt(1.0 + problem.gamma_l1());
    const double c = upper_quantile(alpha / 2.0);
    for (std::size_t j = 0; j < t.size(); ++j) {
        fs.cut.push_back(std::sqrt(1.0 + 1.0 / fs.gamma[j]) * c);
        fs.pw_shift += fs.gamma[j] * t[j] / fs.s;
    }
    return fs;
}

double shrink_gap(Kind kind, double u, double cut) {
    if (std::fabs(u) <= cut) return 0.0;
    return kind == Kind::PT ? u : u - std::copysign(cut, u);
}

void reject_nodes(Kind kind, double mean, double sd, double cut, double lo, double hi,
                  std::vector<Node>& out) {
    // lo, hi in units of eta, the standardized noise of u_j.
    lo = std::max(lo, -kInnerCut);
    hi = std::min(hi, kInnerCut);
    if (!(hi > lo) || normal_between(lo, hi) < kNegligible) return;
    const int panels = static_cast<int>(std::ceil((hi - lo) / kPanelWidth));
    const double width = (hi - lo) / panels;
    for (int p = 0; p < panels; ++p) {
        const double center = lo + (p + 0.5) * width;
        for (std::size_t i = 0; i < kGl8X.size(); ++i) {
            const double eta = center + 0.5 * width * kGl8X[i];
            out.push_back({shrink_gap(kind, mean + sd * eta, cut), 0.5 * width * kGl8W[i] * normal_pdf(eta)});
        }
    }
}

double conditional_coverage(Kind kind, double L, double z, const std::vector<double>& t,
                            const FusionSetup& fs) {
    const std::size_t K = t.size();
    std::vector<std::vector<Node>> nodes(K);
    for (std::size_t j = 0; j < K; ++j) {
        const double mean = t[j] - z;
        const double sd = 1.0 / std::sqrt(fs.gamma[j]);
        const double lo = (-fs.cut[j] - mean) / sd;
        const double hi = (fs.cut[j] - mean) / sd;
        const double accept = normal_between(lo, hi);
        if (accept > 0.0) nodes[j].push_back({0.0, accept});
        reject_nodes(kind, mean, sd, fs.cut[j], -kNormalCut, lo, nodes[j]);
        reject_nodes(kind, mean, sd, fs.cut[j], hi, kNormalCut, nodes[j]);
    }
    // Tensor enumeration over the per-source node sets; the integrand depends
    // only on the weighted sum of the gaps.
    double total = 0.0;
    auto recurse = [&](auto&& self, std::size_t j, double shift, double weight) -> void {
        if (weight < 1e-300) return;
        if (j == K) {
            const double m = fs.pw_shift - shift;
            total += weight * normal_between(-L - m, L - m);
            return;
        }
        const double coef = fs.gamma[j] / fs.s;
        for (const Node& nd : nodes[j]) self(self, j + 1, shift + coef * nd.delta, weight * nd.weight);
    };
    recurse(recurse, 0, 0.0, 1.0);
    return total;
}

double fusion_single(Kind kind, double L, double t, const FusionSetup& fs) {
    // u ~ N(t, 1 + 1/gamma); v is its standardized noise.
    const double sd = std::sqrt(1.0 + 1.0 / fs.gamma[0]);
    const double coef = fs.gamma[0] / fs.s;
    const double lo = (-fs.cut[0] - t) / sd;
    const double hi = (fs.cut[0] - t) / sd;
    const auto reject = [&](double v) {
        const double m = fs.pw_shift - coef * shrink_gap(kind, t + sd * v, fs.cut[0]);
        return normal_between(-L - m, L - m);
    };
    const double accept = normal_between(lo, hi) * normal_between(-L - fs.pw_shift, L - fs.pw_shift);
    return accept + weighted(reject, -kNormalCut, lo) + weighted(reject, hi, kNormalCut);
}

double fusion_qmc(Kind kind, double L, const std::vector<double>& t, const FusionSetup& fs) {
    const std::size_t K = t.size();
    QmcConfig cfg;
    cfg.dim = K + 1;
    const auto g = [&](std::span<const double> x) {
        double shift = 0.0;
        for (std::size_t j = 0; j < K; ++j) {
            const double u = t[j] - x[0] + x[j + 1] / std::sqrt(fs.gamma[j]);
            shift += fs.gamma[j] / fs.s * shrink_gap(kind, u, fs.cut[j]);
        }
        const double m = fs.pw_shift - shift;
        return normal_between(-L - m, L - m);
    };
    return qmc_integrate(g, cfg).value;
}

}  // namespace

double coverage_fusion(Kind kind, double L, const std::vector<double>& t,
                       const FusionProblem& problem, double alpha) {
    problem.validate();
    if (!(L >= 0.0)) throw DomainError("half-length must be nonnegative");
    if (t.size() != problem.size()) throw DimensionError("bias vector length must equal the number of sources");
    for (double v : t)
        if (!std::isfinite(v)) throw DomainError("bias vector must be finite");
    if (kind != Kind::PW) check_alpha(alpha);
    const FusionSetup fs = fusion_setup(t, problem, kind == Kind::PW ? 0.5 : alpha);
    if (kind == Kind::PW) return normal_between(-L - fs.pw_shift, L - fs.pw_shift);
    const std::size_t K = t.size();
    if (K > kFusionMaxSources)
        throw DimensionError("fusion PT/ST coverage supports at most 8 biased sources");
    double value;
    if (K == 1) {
        value = fusion_single(kind, L, t[0], fs);
    } else if (K <= 3) {
        const auto outer = [&](double z) { return conditional_coverage(kind, L, z, t, fs); };
        value = weighted(outer, -kNormalCut, kNormalCut, 1e-11);
    } else {
        value = fusion_qmc(kind, L, t, fs);
    }
    return std::clamp(value, 0.0, 1.0);
}

}  // namespace bval
