#include "bvalue.h"

#include <exception>
#include <string>

#include "bval/bvalue.hpp"
#include "bval/dependence.hpp"
#include "bval/error.hpp"
#include "bval/oracle.hpp"
#include "bval/solver.hpp"

struct bv_pair {
    bval::EstimatorPair pair;
};

struct bv_multi {
    bval::MultiProblem problem;
};

struct bv_fusion {
    bval::FusionProblem problem;
};

namespace {

thread_local std::string g_last_error;

struct NullArgument {};

template <class F>
bv_status guard(F&& f) {
    try {
        f();
        g_last_error.clear();
        return BV_OK;
    } catch (const bval::Error& e) {
        g_last_error = e.what();
        return static_cast<bv_status>(e.code());
    } catch (const NullArgument&) {
        g_last_error = "null argument";
        return BV_NULL_ARGUMENT;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return BV_INTERNAL;
    } catch (...) {
        g_last_error = "unknown failure";
        return BV_INTERNAL;
    }
}

template <class... P>
void need(const P*... ptrs) {
    if (((ptrs == nullptr) || ...)) throw NullArgument{};
}

bval::Kind kind_of(bv_kind k) {
    switch (k) {
        case BV_PW: return bval::Kind::PW;
        case BV_PT: return bval::Kind::PT;
        case BV_ST: return bval::Kind::ST;
    }
    throw bval::DomainError("unknown estimator kind");
}

bval::Side side_of(bv_side s) {
    switch (s) {
        case BV_TWO_SIDED: return bval::Side::TwoSided;
        case BV_LOWER: return bval::Side::Lower;
    }
    throw bval::DomainError("unknown side");
}

bv_bcase case_of(bval::BValueCase c) {
    switch (c) {
        case bval::BValueCase::Zero: return BV_ZERO;
        case bval::BValueCase::Finite: return BV_FINITE;
        case bval::BValueCase::Infinite: return BV_INFINITE;
    }
    return BV_ZERO;
}

// Bias of the original pair behind a relative bias t' of the decorrelated one.
double original_delta(const bval::DecorrelationMap& m, double t_prime) {
    return t_prime * m.pair_prime.sigma0() * (1.0 - m.kappa);
}

bv_interval fill(const bval::IntervalResult& r) {
    bv_interval out{};
    out.center = r.center;
    out.lower = r.lower();
    out.upper = r.upper();
    out.half_length_raw = r.half_length_raw;
    out.half_length_scaled = r.half_length_scaled;
    out.worst_case_t = r.worst_case_t.empty() ? 0.0 : r.worst_case_t.front();
    out.coverage = r.diagnostics.coverage;
    out.std_error = r.diagnostics.std_error;
    out.rounds = r.diagnostics.rounds;
    return out;
}

bv_interval fill(const bval::IntervalResult& r, const bval::DecorrelationMap& m) {
    bv_interval out = fill(r);
    out.worst_case_delta = original_delta(m, out.worst_case_t);
    out.ill_conditioned = m.ill_conditioned ? 1 : 0;
    return out;
}

bval::McConfig config_of(const bv_mc_config* cfg) {
    bval::McConfig c;
    if (cfg) {
        c.n_draws = cfg->n_draws;
        c.seed = cfg->seed;
        c.antithetic = cfg->antithetic != 0;
        c.threads = cfg->threads;
    }
    return c;
}

void fill(const bval::McEstimate& e, bv_mc_estimate* out) {
    out->value = e.value;
    out->std_error = e.std_error;
    out->n = e.n;
}

std::vector<std::vector<double>> rows(const double* data, std::size_t n, std::size_t d) {
    std::vector<std::vector<double>> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i].assign(data + i * d, data + (i + 1) * d);
    return out;
}

void fill(const bval::BSurface& s, bv_ray* out) {
    for (std::size_t i = 0; i < s.rays.size(); ++i) {
        const bval::SurfaceRay& r = s.rays[i];
        out[i].radius = r.radius;
        out[i].kase = case_of(r.kase);
        out[i].residual = r.residual;
        out[i].status = r.error.empty() ? BV_OK : static_cast<int>(r.error_code);
    }
}

Eigen::MatrixXd matrix(const double* data, int d) {
    Eigen::MatrixXd m(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) m(i, j) = data[i * d + j];
    return m;
}

}  // namespace

extern "C" {

const char* bv_last_error(void) { return g_last_error.c_str(); }

const char* bv_version(void) { return "1.0.0"; }

bv_status bv_pair_create(double tau0_hat, double tau1_hat, double sigma0_sq, double sigma1_sq, double rho,
                         bv_pair** out) {
    return guard([&] {
        need(out);
        bval::EstimatorPair p{tau0_hat, tau1_hat, sigma0_sq, sigma1_sq, rho};
        p.validate();
        *out = new bv_pair{p};
    });
}

void bv_pair_destroy(bv_pair* pair) { delete pair; }

bv_status bv_point_estimate(const bv_pair* pair, bv_kind kind, double alpha, double* out) {
    return guard([&] {
        need(pair, out);
        const bval::DecorrelationMap m = bval::decorrelate(pair->pair);
        *out = bval::point_estimate(kind_of(kind), m.pair_prime, alpha);
    });
}

bv_status bv_interval_solve(const bv_pair* pair, bv_kind kind, bv_side side, double b, double zeta, double alpha,
                            bv_interval* out) {
    return guard([&] {
        need(pair, out);
        const bval::DecorrelationMap m = bval::decorrelate(pair->pair);
        const bval::IntervalResult r = bval::interval_dependent(kind_of(kind), side_of(side), pair->pair, b, zeta, alpha);
        *out = fill(r, m);
    });
}

bv_status bv_unbiased_interval(const bv_pair* pair, bv_side side, double zeta, bv_interval* out) {
    return guard([&] {
        need(pair, out);
        *out = fill(bval::unbiased_interval(side_of(side), pair->pair, zeta));
    });
}

bv_status bv_half_length(bv_kind kind, bv_side side, double b, double zeta, double gamma, double alpha, double* L) {
    return guard([&] {
        need(L);
        *L = bval::solve_half_length(kind_of(kind), side_of(side), b, zeta, gamma, alpha).half_length_raw;
    });
}

bv_status bv_coverage(bv_kind kind, bv_side side, double L, double t, double gamma, double alpha, double* out) {
    return guard([&] {
        need(out);
        *out = bval::coverage_univariate(kind_of(kind), side_of(side), L, t, gamma, alpha);
    });
}

bv_status bv_curve(const bv_pair* pair, bv_kind kind, bv_side side, const double* b_grid, size_t n, double zeta,
                   double alpha, int threads, bv_interval* out, int* point_status) {
    return guard([&] {
        need(pair);
        if (n == 0) return;
        need(b_grid, out);
        const bval::DecorrelationMap m = bval::decorrelate(pair->pair);
        std::vector<double> grid(n);
        for (std::size_t i = 0; i < n; ++i) grid[i] = bval::map_bias_bound(b_grid[i], m, bval::MapDirection::ToPrime);
        const bval::SensitivityCurve c =
            bval::sensitivity_curve(kind_of(kind), side_of(side), grid, m.pair_prime, zeta, alpha, threads);
        for (std::size_t i = 0; i < n; ++i) {
            const bval::CurvePoint& pt = c.points[i];
            out[i] = pt.error.empty() ? fill(pt.result, m) : bv_interval{};
            if (point_status) point_status[i] = pt.error.empty() ? BV_OK : pt.error_code;
        }
    });
}

bv_status bv_bvalue_compute(const bv_pair* pair, bv_kind kind, bv_side side, double zeta, double alpha,
                            bv_bvalue* out) {
    return guard([&] {
        need(pair, out);
        const bval::DependentBValue r = bval::b_value_dependent(kind_of(kind), pair->pair, zeta, alpha, side_of(side));
        out->value = r.original.value;
        out->kase = case_of(r.original.kase);
        out->residual = r.original.residual;
        out->value_prime = r.prime.value;
        out->scale = r.map.scale;
        out->ill_conditioned = r.map.ill_conditioned ? 1 : 0;
    });
}

bv_status bv_bvalue_by_curve(const bv_pair* pair, bv_kind kind, bv_side side, double zeta, double alpha,
                             bv_bvalue* out) {
    return guard([&] {
        need(pair, out);
        const bval::DecorrelationMap m = bval::decorrelate(pair->pair);
        const bval::BValue r = bval::b_value_by_curve(kind_of(kind), m.pair_prime, zeta, alpha, side_of(side));
        out->value_prime = r.value;
        out->value = r.kase == bval::BValueCase::Finite
                         ? bval::map_bias_bound(r.value, m, bval::MapDirection::FromPrime)
                         : r.value;
        out->kase = case_of(r.kase);
        out->residual = r.residual;
        out->scale = m.scale;
        out->ill_conditioned = m.ill_conditioned ? 1 : 0;
    });
}

bv_status bv_decorrelate(const bv_pair* pair, bv_pair** out_prime, double* scale) {
    return guard([&] {
        need(pair, out_prime, scale);
        const bval::DecorrelationMap m = bval::decorrelate(pair->pair);
        *scale = m.scale;
        *out_prime = new bv_pair{m.pair_prime};
    });
}

bv_status bv_multi_create(int d, const double* tau0_hat, const double* tau1_hat, const double* Sigma0,
                          const double* Sigma1, const double* Sigma_scale, double q, double alpha,
                          bv_shrinkage shrinkage, bv_multi** out) {
    return guard([&] {
        need(tau0_hat, tau1_hat, Sigma0, Sigma1, out);
        if (d < 1) throw bval::DimensionError("dimension must be at least 1");
        bval::MultiProblem p;
        p.tau0_hat = Eigen::Map<const Eigen::VectorXd>(tau0_hat, d);
        p.tau1_hat = Eigen::Map<const Eigen::VectorXd>(tau1_hat, d);
        p.Sigma0 = matrix(Sigma0, d);
        p.Sigma1 = matrix(Sigma1, d);
        if (Sigma_scale) p.Sigma_scale = matrix(Sigma_scale, d);
        p.q = q > 0.0 ? q : bval::default_threshold(d, alpha);
        const bval::ShrinkageKind sk =
            shrinkage == BV_SHRINK_RATIO ? bval::ShrinkageKind::Ratio : bval::ShrinkageKind::SqrtRatio;
        p.h_star = bval::builtin_shrinkage(sk, p.q);
        p.validate();
        *out = new bv_multi{p};
    });
}

void bv_multi_destroy(bv_multi* problem) { delete problem; }

int bv_multi_dim(const bv_multi* problem) { return problem ? problem->problem.dim() : 0; }

double bv_multi_threshold(const bv_multi* problem) { return problem ? problem->problem.q : 0.0; }

bv_status bv_region_solve(const bv_multi* problem, bv_kind kind, const double* b, double zeta, bv_region* out,
                          double* center, double* worst_t) {
    return guard([&] {
        need(problem, b, out);
        const int d = problem->problem.dim();
        const bval::RegionResult r =
            bval::region_radius(kind_of(kind), Eigen::Map<const Eigen::VectorXd>(b, d), zeta, problem->problem);
        out->M = r.M;
        out->coverage = r.diagnostics.coverage;
        out->std_error = r.diagnostics.std_error;
        out->accuracy_warning = r.diagnostics.accuracy_warning ? 1 : 0;
        out->rounds = r.diagnostics.rounds;
        for (int j = 0; j < d; ++j) {
            if (center) center[j] = r.center(j);
            if (worst_t) worst_t[j] = r.worst_case_t(j);
        }
    });
}

bv_status bv_multi_bias(const bv_multi* problem, const double* t, double* delta) {
    return guard([&] {
        need(problem, t, delta);
        const int d = problem->problem.dim();
        const Eigen::VectorXd v =
            bval::linalg::sym_sqrt(problem->problem.scale()) * Eigen::Map<const Eigen::VectorXd>(t, d);
        for (int j = 0; j < d; ++j) delta[j] = v(j);
    });
}

bv_status bv_default_directions(int d, int n_rays, double* out) {
    return guard([&] {
        need(out);
        const auto dirs = bval::default_directions(d, n_rays);
        std::size_t k = 0;
        for (const auto& e : dirs)
            for (double v : e) out[k++] = v;
    });
}

bv_status bv_multi_surface(const bv_multi* problem, bv_kind kind, double zeta, const double* directions, size_t n,
                           int threads, bv_ray* out) {
    return guard([&] {
        need(problem);
        if (n == 0) return;
        need(directions, out);
        const auto dirs = rows(directions, n, static_cast<std::size_t>(problem->problem.dim()));
        fill(bval::b_surface(kind_of(kind), problem->problem, zeta, dirs, threads), out);
    });
}

bv_status bv_fusion_create(double tau0_hat, double sigma0_sq, size_t K, const double* tau_hat,
                           const double* sigma_sq, bv_fusion** out) {
    return guard([&] {
        need(out);
        if (K > 0) need(tau_hat, sigma_sq);
        bval::FusionProblem p;
        p.tau0_hat = tau0_hat;
        p.sigma0_sq = sigma0_sq;
        for (std::size_t j = 0; j < K; ++j) p.biased.push_back({tau_hat[j], sigma_sq[j]});
        p.validate();
        *out = new bv_fusion{p};
    });
}

void bv_fusion_destroy(bv_fusion* problem) { delete problem; }

size_t bv_fusion_size(const bv_fusion* problem) { return problem ? problem->problem.size() : 0; }

bv_status bv_fusion_bias(const bv_fusion* problem, const double* t, double* delta) {
    return guard([&] {
        need(problem, t, delta);
        for (std::size_t j = 0; j < problem->problem.size(); ++j) delta[j] = t[j] * problem->problem.sigma0();
    });
}

bv_status bv_fusion_solve(const bv_fusion* problem, bv_kind kind, const double* b, double zeta, double alpha,
                          bv_interval* out, double* worst_t) {
    return guard([&] {
        need(problem, b, out);
        const std::size_t K = problem->problem.size();
        const bval::IntervalResult r =
            bval::half_length_fusion(kind_of(kind), std::vector<double>(b, b + K), zeta, problem->problem, alpha);
        *out = fill(r);
        out->worst_case_delta = out->worst_case_t * problem->problem.sigma0();
        if (worst_t)
            for (std::size_t j = 0; j < K; ++j) worst_t[j] = r.worst_case_t[j];
    });
}

bv_status bv_fusion_surface(const bv_fusion* problem, bv_kind kind, double zeta, double alpha,
                            const double* directions, size_t n, int threads, bv_ray* out) {
    return guard([&] {
        need(problem);
        if (n == 0) return;
        need(directions, out);
        const auto dirs = rows(directions, n, problem->problem.size());
        fill(bval::b_surface(kind_of(kind), problem->problem, zeta, alpha, dirs, threads), out);
    });
}

void bv_mc_config_default(bv_mc_config* cfg) {
    if (!cfg) return;
    const bval::McConfig c;
    cfg->n_draws = c.n_draws;
    cfg->seed = c.seed;
    cfg->antithetic = c.antithetic ? 1 : 0;
    cfg->threads = c.threads;
}

bv_status bv_mc_coverage_univariate(bv_kind kind, bv_side side, double sigma0_sq, double sigma1_sq, double rho,
                                    double delta, double half_length_scaled, double alpha, const bv_mc_config* cfg,
                                    int representation, bv_mc_estimate* out) {
    return guard([&] {
        need(out);
        const bval::UnivariateModel model{sigma0_sq, sigma1_sq, rho, delta};
        fill(bval::mc_coverage_univariate(kind_of(kind), side_of(side), model, half_length_scaled, alpha,
                                          config_of(cfg),
                                          representation ? bval::McRoute::Representation : bval::McRoute::Direct),
             out);
    });
}

bv_status bv_mc_coverage_region(const bv_multi* problem, bv_kind kind, const double* delta, double M,
                                const bv_mc_config* cfg, bv_mc_estimate* out) {
    return guard([&] {
        need(problem, delta, out);
        const Eigen::Map<const Eigen::VectorXd> dv(delta, problem->problem.dim());
        fill(bval::mc_coverage_region(kind_of(kind), problem->problem, dv, M, config_of(cfg)), out);
    });
}

bv_status bv_mc_coverage_fusion(const bv_fusion* problem, bv_kind kind, const double* delta,
                                double half_length_scaled, double alpha, const bv_mc_config* cfg,
                                bv_mc_estimate* out) {
    return guard([&] {
        need(problem, delta, out);
        const std::vector<double> dv(delta, delta + problem->problem.size());
        fill(bval::mc_coverage_fusion(kind_of(kind), problem->problem, dv, half_length_scaled, alpha, config_of(cfg)),
             out);
    });
}

}  // extern "C"
