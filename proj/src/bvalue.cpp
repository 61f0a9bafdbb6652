#include "bval/bvalue.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

#include "bval/error.hpp"
#include "bval/numerics.hpp"
#include "bval/solver.hpp"

namespace bval {

const char* to_string(BValueCase c) {
    switch (c) {
        case BValueCase::Zero: return "zero";
        case BValueCase::Finite: return "finite";
        case BValueCase::Infinite: return "infinite";
    }
    return "?";
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Root {
    double value = 0.0;
    double residual = 0.0;
    int evaluations = 0;
    bool reached = true;
};

// worst(.) is nonincreasing with worst(0) > target. Finds the smallest b with
// worst(b) <= target, searching up to cap.
Root first_crossing(const std::function<double(double)>& worst, double target, double cap, double hi = 1.0) {
    Root out;
    double lo = 0.0;
    hi = std::min(hi, cap);
    for (;;) {
        ++out.evaluations;
        if (worst(hi) <= target) break;
        if (hi >= cap) {
            out.reached = false;
            return out;
        }
        lo = hi;
        hi = std::min(2.0 * hi, cap);
    }
    const auto g = [&](double b) {
        ++out.evaluations;
        return target - worst(b);
    };
    out.value = find_root_monotone(g, lo, hi, {1e-12 * std::max(1.0, hi), 400}).x;
    out.residual = worst(out.value) - target;
    return out;
}

void set_finite(BValue& r, const Root& root) {
    r.kase = BValueCase::Finite;
    r.value = root.value;
    r.residual = root.residual;
    r.evaluations += root.evaluations;
}

void set_infinite(BValue& r, const std::string& note) {
    r.kase = BValueCase::Infinite;
    r.value = kInf;
    r.note = note;
}

std::vector<double> unit_direction(const std::vector<double>& e, std::size_t dim) {
    if (e.size() != dim) throw DimensionError("direction has the wrong length");
    double norm = 0.0;
    for (double v : e) {
        if (!(v >= 0.0) || !std::isfinite(v)) throw DomainError("directions must have finite nonnegative entries");
        norm += v * v;
    }
    if (norm == 0.0) throw DomainError("direction must be nonzero");
    std::vector<double> u(e);
    for (double& v : u) v /= std::sqrt(norm);
    return u;
}

// Runs one ray per direction; a failure stays local to its ray.
BSurface trace(Kind kind, double zeta, const std::vector<std::vector<double>>& directions, std::size_t dim,
               int threads, const std::function<void(SurfaceRay&)>& solve_ray) {
    BSurface s;
    s.kind = kind;
    s.zeta = zeta;
    s.rays.resize(directions.size());
    const auto one = [&](std::size_t i) {
        SurfaceRay& ray = s.rays[i];
        try {
            ray.direction = unit_direction(directions[i], dim);
            solve_ray(ray);
        } catch (const Error& e) {
            ray.radius = std::numeric_limits<double>::quiet_NaN();
            ray.error = e.what();
            ray.error_code = static_cast<int>(e.code());
        }
    };
    const std::size_t n = directions.size();
    const std::size_t workers = std::min<std::size_t>(threads > 1 ? threads : 1, std::max<std::size_t>(n, 1));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) one(i);
        return s;
    }
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&, w] {
            for (std::size_t i = w; i < n; i += workers) one(i);
        });
    for (auto& th : pool) th.join();
    return s;
}

// Radius along a ray for a nonincreasing worst-case coverage worst(r).
void solve_along(SurfaceRay& ray, const std::function<double(double)>& worst, double target) {
    const double w0 = worst(0.0);
    if (w0 <= target) {
        ray.kase = BValueCase::Zero;
        ray.radius = 0.0;
        ray.residual = w0 - target;
        return;
    }
    const Root root = first_crossing(worst, target, kBValueCap);
    if (!root.reached) {
        ray.kase = BValueCase::Infinite;
        ray.radius = kInf;
        return;
    }
    ray.kase = BValueCase::Finite;
    ray.radius = root.value;
    ray.residual = root.residual;
    if (worst(root.value * (1.0 + 1e-3)) >= target - 1e-12)
        ray.note = "coverage flat at the target past this radius; infimum reported";
}

}  // namespace

BValue b_value(Kind kind, const EstimatorPair& pair, double zeta, double alpha, Side side) {
    pair.validate();
    if (pair.rho != 0.0) throw PreconditionError("correlated pair: decorrelate before computing the b-value (rho != 0)");
    check_level(zeta, "zeta");
    if (kind != Kind::PW) check_level(alpha, "alpha");
    const double gamma = pair.gamma();
    const double tau = point_estimate(kind, pair, alpha);
    const double L_obs = (side == Side::TwoSided ? std::fabs(tau) : tau) / pair.pw_scale();
    const double target = 1.0 - zeta;

    BValue r;
    r.kind = kind;
    r.zeta = zeta;
    if (L_obs <= 0.0) {
        r.residual = -target;
        r.note = "estimate on the null side of 0";
        return r;
    }
    const auto worst = [&](double b) {
        return worst_case_univariate(kind, side, L_obs, b, gamma, alpha).coverage;
    };
    const double w0 = worst(0.0);
    r.evaluations = 1;
    if (w0 <= target) {
        r.residual = w0 - target;
        return r;
    }
    double cap = kBValueCap;
    if (kind == Kind::ST) {
        if (coverage_st_limit(side, L_obs, gamma, alpha) >= target) {
            set_infinite(r, "coverage limit as t -> infinity stays above 1 - zeta");
            return r;
        }
    } else if (kind == Kind::PT) {
        const double reach = (upper_quantile(alpha / 2.0) + 9.0) / std::sqrt(gamma / (1.0 + gamma));
        cap = std::max(kPretestInfinityProbe, reach);
        ++r.evaluations;
        if (worst(cap) > target) {
            set_infinite(r, "coverage stays above 1 - zeta for every bias");
            return r;
        }
    }
    const Root root = first_crossing(worst, target, cap);
    if (!root.reached) {
        set_infinite(r, "no crossing below the radius cap");
        return r;
    }
    set_finite(r, root);
    return r;
}

BValue b_value_generic(const std::function<double(double)>& curve, double observed, double tol) {
    if (!(observed >= 0.0) || !std::isfinite(observed)) throw DomainError("observed value must be finite and nonnegative");
    BValue r;
    std::vector<std::pair<double, double>> seen;
    const auto eval = [&](double b) {
        const double c = curve(b);
        ++r.evaluations;
        const double slack = 1e-9 * std::max(1.0, std::fabs(c));
        for (const auto& [bi, ci] : seen) {
            if ((bi < b && c < ci - slack) || (bi > b && c > ci + slack))
                throw ContractError("curve decreases in b");
        }
        seen.emplace_back(b, c);
        return c;
    };
    const double c0 = eval(0.0);
    if (observed <= c0) {
        r.residual = c0 - observed;
        return r;
    }
    if (eval(kBValueCap) < observed) {
        set_infinite(r, "curve stays below the observed value up to the cap");
        return r;
    }
    double lo = 0.0, hi = 1.0;
    while (eval(hi) < observed) {
        lo = hi;
        hi *= 2.0;
    }
    const auto g = [&](double b) { return eval(b) - observed; };
    r.kase = BValueCase::Finite;
    r.value = find_root_monotone(g, lo, hi, {tol * std::max(1.0, hi), 400}).x;
    r.residual = eval(r.value) - observed;
    return r;
}

BValue b_value_by_curve(Kind kind, const EstimatorPair& pair, double zeta, double alpha, Side side) {
    pair.validate();
    if (pair.rho != 0.0) throw PreconditionError("correlated pair: decorrelate before computing the b-value (rho != 0)");
    const double tau = point_estimate(kind, pair, alpha);
    const double L_obs = (side == Side::TwoSided ? std::fabs(tau) : tau) / pair.pw_scale();
    const double gamma = pair.gamma();
    const auto curve = [&](double b) { return solve_half_length(kind, side, b, zeta, gamma, alpha).half_length_raw; };
    BValue r = b_value_generic(curve, std::max(L_obs, 0.0));
    r.kind = kind;
    r.zeta = zeta;
    return r;
}

std::vector<std::vector<double>> default_directions(int dim, int n_rays) {
    if (dim == 1) return {{1.0}};
    if (dim != 2) throw DimensionError("default directions exist for dim 1 and 2; pass a direction list");
    if (n_rays < 2) throw DomainError("need at least two rays");
    std::vector<std::vector<double>> out;
    const double pi = std::acos(-1.0);
    for (int i = 0; i < n_rays; ++i) {
        const double a = 0.5 * pi * i / (n_rays - 1);
        // exact axes, so the end rays carry a zero bound on the other coordinate
        out.push_back({i == n_rays - 1 ? 0.0 : std::cos(a), i == 0 ? 0.0 : std::sin(a)});
    }
    return out;
}

BSurface b_surface(Kind kind, const MultiProblem& problem, double zeta,
                   const std::vector<std::vector<double>>& directions, int threads) {
    check_level(zeta, "zeta");
    problem.validate();
    const int d = problem.dim();
    if (d > 8) throw DimensionError("regions are supported up to d = 8");
    const MultiGeometry geom = MultiGeometry::from(problem);
    const Eigen::VectorXd center = point_multivariate(kind, problem);
    const double M_obs = center.dot(geom.metric * center);
    const double target = 1.0 - zeta;

    if (kind == Kind::PW) {
        // Coverage at the worst vertex is Psi_d(M_obs; lambda) with lambda = r^2 * peak;
        // solve for lambda once, then each ray is closed form.
        const auto psi = [&](double lambda) { return noncentral_chisq_cdf(M_obs, d, lambda); };
        const double p0 = psi(0.0);
        double lambda_star = 0.0;
        if (p0 > target) {
            double hi = 1.0;
            while (psi(hi) > target) hi *= 2.0;
            lambda_star = find_root_monotone([&](double l) { return target - psi(l); }, 0.0, hi,
                                             {1e-13 * std::max(1.0, hi), 400}).x;
        }
        const Eigen::MatrixXd A = geom.leverage * geom.noise;
        return trace(kind, zeta, directions, d, 1, [&](SurfaceRay& ray) {
            if (p0 <= target) {
                ray.kase = BValueCase::Zero;
                ray.residual = p0 - target;
                return;
            }
            double peak = 0.0;
            for (std::size_t mask = 0; mask < (std::size_t{1} << (d - 1)); ++mask) {
                Eigen::VectorXd v(d);
                for (int j = 0; j < d; ++j) v(j) = j > 0 && ((mask >> (j - 1)) & 1u) ? -ray.direction[j] : ray.direction[j];
                peak = std::max(peak, (A * v).squaredNorm());
            }
            const double radius = peak > 0.0 ? std::sqrt(lambda_star / peak) : kInf;
            if (!(radius <= kBValueCap)) {
                ray.kase = BValueCase::Infinite;
                ray.radius = kInf;
                return;
            }
            ray.kase = BValueCase::Finite;
            ray.radius = radius;
            ray.residual = psi(radius * radius * peak) - target;
        });
    }

    return trace(kind, zeta, directions, d, threads, [&](SurfaceRay& ray) {
        const Eigen::Map<const Eigen::VectorXd> e(ray.direction.data(), d);
        const auto worst = [&](double r) {
            const Eigen::VectorXd b = r * e;
            return worst_case_region(kind, M_obs, b, problem, geom).coverage;
        };
        solve_along(ray, worst, target);
    });
}

BSurface b_surface(Kind kind, const FusionProblem& problem, double zeta, double alpha,
                   const std::vector<std::vector<double>>& directions, int threads) {
    check_level(zeta, "zeta");
    problem.validate();
    if (kind != Kind::PW) check_level(alpha, "alpha");
    const std::size_t K = problem.size();
    if (kind != Kind::PW && K > kFusionMaxSources)
        throw DimensionError("fusion PT/ST surfaces support at most 8 biased sources");
    const double L_obs = std::fabs(point_fusion(kind, problem, alpha)) / problem.pw_scale();
    const double target = 1.0 - zeta;
    return trace(kind, zeta, directions, K, threads, [&](SurfaceRay& ray) {
        const auto worst = [&](double r) {
            std::vector<double> b(ray.direction);
            for (double& v : b) v *= r;
            return worst_case_fusion(kind, L_obs, b, problem, alpha).coverage;
        };
        solve_along(ray, worst, target);
    });
}

}  // namespace bval
