// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "bval/bvalue.hpp"
#include "bval/dependence.hpp"
#include "bval/numerics.hpp"
#include "bval/oracle.hpp"
#include "bval/solver.hpp"

using namespace bval;

namespace {

constexpr double kZeta = 0.05;
constexpr double kAlpha = 0.05;
constexpr Kind kKinds[] = {Kind::PW, Kind::PT, Kind::ST};

// Collects the first few failure messages of one criterion.
struct Check {
    int failures = 0;
    std::ostringstream log;

    void expect(bool ok, const std::string& what) {
        if (ok) return;
        if (failures < 5) log << "\n    " << what;
        ++failures;
    }
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c, d);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

UnivariateModel model(double gamma, double delta, double rho = 0.0) {
    return UnivariateModel{1.0, 1.0 / gamma, rho, delta};
}

MultiProblem scalar_problem(double s0, double s1) {
    MultiProblem p;
    p.tau0_hat = Eigen::VectorXd::Zero(1);
    p.tau1_hat = Eigen::VectorXd::Zero(1);
    p.Sigma0 = Eigen::MatrixXd::Constant(1, 1, s0);
    p.Sigma1 = Eigen::MatrixXd::Constant(1, 1, s1);
    p.q = default_threshold(1, kAlpha);
    p.h_star = builtin_shrinkage(ShrinkageKind::SqrtRatio, p.q);
    return p;
}

// Zero-bias identities.
void zero_bias(Check& c) {
    const auto t0 = std::chrono::steady_clock::now();
    const double cz = upper_quantile(kZeta / 2.0);
    for (double g : {0.1, 1.0, 10.0, 100.0}) {
        const double L = half_length_pw(0.0, kZeta, g);
        c.expect(std::fabs(L - cz) <= 1e-6, fmt("L_PW(0) = %.10f at gamma %g", L, g));
    }
    for (int d : {1, 2, 3}) {
        MultiProblem p;
        p.tau0_hat = Eigen::VectorXd::Zero(d);
        p.tau1_hat = Eigen::VectorXd::Zero(d);
        p.Sigma0 = Eigen::MatrixXd::Identity(d, d);
        p.Sigma1 = 0.1 * Eigen::MatrixXd::Identity(d, d);
        p.q = default_threshold(d, kAlpha);
        p.h_star = builtin_shrinkage(ShrinkageKind::SqrtRatio, p.q);
        const double M = region_radius(Kind::PW, Eigen::VectorXd::Zero(d), kZeta, p).M;
        const double chi = noncentral_chisq_quantile(1.0 - kZeta, d, 0.0);
        c.expect(std::fabs(M - chi) <= 1e-4, fmt("M_PW = %.8f vs %.8f at d %g", M, chi, d));
    }
    const double elapsed = seconds_since(t0);
    c.expect(elapsed < 1.0, fmt("runtime %.2f s", elapsed));
}

// PW length over the unbiased length at zero bias.
void efficiency_gain(Check& c) {
    for (double g : {10.0, 100.0}) {
        EstimatorPair p{1.0, 2.0, 1.0, 1.0 / g, 0.0};
        const double pw = interval(Kind::PW, Side::TwoSided, p, 0.0, kZeta, kAlpha).half_length_scaled;
        const double ub = unbiased_interval(Side::TwoSided, p, kZeta).half_length_scaled;
        const double want = 1.0 / std::sqrt(1.0 + g);
        c.expect(std::fabs(pw / ub - want) <= 1e-9, fmt("ratio %.12f vs %.12f at gamma %g", pw / ub, want, g));
    }
}

// Empirical coverage of a solved interval at its worst-case bias sits in 1 - zeta +- 3 se.
void certify(Check& c, Side side) {
    McConfig cfg;
    for (Kind k : kKinds) {
        if (side == Side::Lower && k == Kind::PW) continue;
        for (double g : {10.0, 100.0}) {
            for (double b : {0.0, 0.5, 2.0}) {
                const auto r = solve_half_length(k, side, b, kZeta, g, kAlpha);
                const double t = r.worst_case_t.empty() ? 0.0 : r.worst_case_t[0];
                const auto mc = mc_coverage_univariate(k, side, model(g, t), r.half_length_scaled, kAlpha, cfg);
                const bool ok = std::fabs(mc.value - (1.0 - kZeta)) <= 3.0 * mc.std_error;
                c.expect(ok, std::string(to_string(k)) + fmt(" gamma %g b %g: mc %.5f se %.5f", g, b, mc.value,
                                                             mc.std_error));
            }
        }
    }
}

void mc_certification(Check& c) {
    const auto t0 = std::chrono::steady_clock::now();
    certify(c, Side::TwoSided);
    const double elapsed = seconds_since(t0);
    c.expect(elapsed < 120.0, fmt("runtime %.1f s", elapsed));
}

// Symmetry and monotonicity of the ST coverage in the bias.
void st_shape(Check& c) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> uL(0.5, 5.0), ug(0.2, 100.0), ua(0.01, 0.5);
    for (int i = 0; i < 5; ++i) {
        const double L = uL(rng), g = ug(rng), a = ua(rng);
        double prev = 2.0;
        for (int j = 0; j <= 100; ++j) {
            const double t = 0.05 * j;
            const double v = coverage_st(L, t, g, a);
            const double w = coverage_st(L, -t, g, a);
            c.expect(std::fabs(v - w) <= 1e-10, fmt("asymmetric at t %g: %.3e (L %g gamma %g)", t, v - w, L, g));
            c.expect(v <= prev + 1e-12, fmt("increase at t %g by %.3e (L %g gamma %g)", t, v - prev, L, g));
            prev = v;
        }
    }
}

// Qualitative shape of the two-estimator example.
void figure_shape(Check& c) {
    const auto t0 = std::chrono::steady_clock::now();
    for (double g : {10.0, 100.0}) {
        EstimatorPair p{1.0, 2.0, 1.0, 1.0 / g, 0.0};
        const double st0 = interval(Kind::ST, Side::TwoSided, p, 0.0, kZeta, kAlpha).half_length_scaled;
        const double pt0 = interval(Kind::PT, Side::TwoSided, p, 0.0, kZeta, kAlpha).half_length_scaled;
        c.expect(st0 < pt0, fmt("gamma %g: ST %.6f not below PT %.6f at b = 0", g, st0, pt0));
        const double pw100 = interval(Kind::PW, Side::TwoSided, p, 100.0, kZeta, kAlpha).half_length_scaled;
        const double st100 = interval(Kind::ST, Side::TwoSided, p, 100.0, kZeta, kAlpha).half_length_scaled;
        c.expect(pw100 > 5.0 * st100, fmt("gamma %g: PW %.4f vs ST %.4f at b = 100", g, pw100, st100));
        const double st1000 = interval(Kind::ST, Side::TwoSided, p, 1000.0, kZeta, kAlpha).half_length_scaled;
        c.expect(std::fabs(st1000 - st100) < 1e-2, fmt("gamma %g: ST grows by %.3e from b = 100 to 1000", g,
                                                      st1000 - st100));
    }
    const double elapsed = seconds_since(t0);
    c.expect(elapsed < 30.0, fmt("runtime %.1f s", elapsed));
}

// d = 1 regions and K = 1 fusion reproduce the univariate half-lengths.
void reductions(Check& c) {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> us0(0.2, 4.0), ug(0.3, 80.0), ub(0.0, 2.5);
    for (int i = 0; i < 20; ++i) {
        const double s0 = us0(rng), g = ug(rng), b = ub(rng);
        const auto multi = scalar_problem(s0, s0 / g);
        FusionProblem fusion{0.0, s0, {{0.0, s0 / g}}};
        for (Kind k : kKinds) {
            const double L = solve_half_length(k, Side::TwoSided, b, kZeta, g, kAlpha).half_length_raw;
            const double rootM = std::sqrt(region_radius(k, Eigen::VectorXd::Constant(1, b), kZeta, multi).M);
            const double Lf = half_length_fusion(k, {b}, kZeta, fusion, kAlpha).half_length_raw;
            c.expect(std::fabs(rootM - L) <= 1e-6,
                     std::string(to_string(k)) + fmt(" region: sqrt M %.9f vs L %.9f (gamma %g b %g)", rootM, L, g, b));
            c.expect(std::fabs(Lf - L) <= 1e-6,
                     std::string(to_string(k)) + fmt(" fusion: %.9f vs L %.9f (gamma %g b %g)", Lf, L, g, b));
        }
    }
}

// Specialized b-values agree with bisection on the half-length curve, and membership flips at b*.
void bvalue_consistency(Check& c) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> ut0(-0.5, 3.0), ut1(-1.0, 5.0), us0(0.3, 2.0), ug(0.5, 60.0);
    int finite = 0;
    for (int i = 0; i < 20; ++i) {
        EstimatorPair p;
        p.tau0_hat = ut0(rng);
        p.tau1_hat = ut1(rng);
        p.sigma0_sq = us0(rng);
        p.sigma1_sq = p.sigma0_sq / ug(rng);
        for (Kind k : kKinds) {
            const auto fast = b_value(k, p, kZeta, kAlpha);
            const auto slow = b_value_by_curve(k, p, kZeta, kAlpha);
            const std::string tag = std::string(to_string(k)) + fmt(" config %g", i);
            c.expect(fast.kase == slow.kase, tag + ": cases differ");
            if (fast.kase != BValueCase::Finite || slow.kase != BValueCase::Finite) continue;
            ++finite;
            c.expect(std::fabs(fast.value - slow.value) <= 1e-6,
                     tag + fmt(": %.10f vs %.10f", fast.value, slow.value));
            const bool below = interval(k, Side::TwoSided, p, fast.value * (1.0 - 1e-4), kZeta, kAlpha).contains(0.0);
            const bool above = interval(k, Side::TwoSided, p, fast.value * (1.0 + 1e-4), kZeta, kAlpha).contains(0.0);
            c.expect(!below && above, tag + fmt(": membership below %g above %g", below, above));
        }
    }
    c.expect(finite >= 20, fmt("only %g finite b-values exercised", finite));
}

// Correlated pairs: exact rescaling of b* and coverage of the mapped interval.
void dependence(Check& c) {
    McConfig cfg;
    for (double rho : {-0.5, 0.3, 0.9}) {
        EstimatorPair p{1.0, 2.0, 1.0, 0.1, rho};
        for (Kind k : kKinds) {
            const std::string tag = std::string(to_string(k)) + fmt(" rho %g", rho);
            const auto bv = b_value_dependent(k, p, kZeta, kAlpha);
            if (bv.prime.kase == BValueCase::Finite)
                c.expect(bv.original.value == bv.map.scale * bv.prime.value, tag + ": b* is not scale * b*'");
            for (double b : {0.5, 1.0}) {
                const auto r = interval_dependent(k, Side::TwoSided, p, b, kZeta, kAlpha);
                const double t_prime = r.worst_case_t.empty() ? 0.0 : r.worst_case_t[0];
                // Delta = (1 - kappa) Delta' with Delta' = t' sigma0
                const double delta = t_prime * (1.0 - bv.map.kappa);
                const auto mc = mc_coverage_univariate(k, Side::TwoSided, model(10.0, delta, rho),
                                                       r.half_length_scaled, kAlpha, cfg);
                c.expect(mc.value >= 1.0 - kZeta - 3.0 * mc.std_error,
                         tag + fmt(" b %g: mc %.5f se %.5f", b, mc.value, mc.std_error));
                c.expect(std::fabs(delta) <= b + 1e-12, tag + fmt(" bias %g outside the bound %g", delta, b));
            }
        }
    }
}

// One-sided PW closed form, and MC coverage of the one-sided PT/ST bounds.
void one_sided(Check& c) {
    for (double g : {1.0, 10.0, 100.0}) {
        for (double b : {0.0, 0.5, 2.0}) {
            const double closed = upper_quantile(kZeta) + g * b / std::sqrt(1.0 + g);
            const double L = half_length_one_sided(Kind::PW, b, kZeta, g, kAlpha).half_length_raw;
            c.expect(std::fabs(L - closed) <= 1e-9, fmt("PW gamma %g b %g: %.12f vs %.12f", g, b, L, closed));
        }
    }
    certify(c, Side::Lower);
}

// Direct simulation and the mixture representation agree.
void dual_oracle(Check& c) {
    McConfig cfg;
    std::mt19937_64 rng(10);
    std::uniform_real_distribution<double> ug(0.3, 80.0), ut(-2.5, 2.5), ua(0.01, 0.3), uL(0.5, 5.0), u01(0.0, 1.0);
    for (int i = 0; i < 10; ++i) {
        const double g = ug(rng), t = ut(rng), a = ua(rng), L = uL(rng);
        const Side side = u01(rng) < 0.3 ? Side::Lower : Side::TwoSided;
        const double scaled = L / std::sqrt(1.0 + g);
        for (Kind k : kKinds) {
            const auto direct = mc_coverage_univariate(k, side, model(g, t), scaled, a, cfg, McRoute::Direct);
            const auto rep = mc_coverage_univariate(k, side, model(g, t), scaled, a, cfg, McRoute::Representation);
            const double se = std::hypot(direct.std_error, rep.std_error);
            c.expect(std::fabs(direct.value - rep.value) <= 4.0 * se,
                     std::string(to_string(k)) + fmt(" point %g: %.5f vs %.5f (se %.5f)", i, direct.value, rep.value, se));
        }
    }
}

}  // namespace

int main() {
    std::setvbuf(stdout, nullptr, _IONBF, 0);
    const std::vector<std::pair<const char*, std::function<void(Check&)>>> criteria{
        {"zero-bias identities", zero_bias},
        {"efficiency gain at zero bias", efficiency_gain},
        {"Monte Carlo coverage certification", mc_certification},
        {"ST coverage symmetric and monotone", st_shape},
        {"two-estimator example shape", figure_shape},
        {"d = 1 and K = 1 reductions", reductions},
        {"b-value consistency", bvalue_consistency},
        {"dependence round trip", dependence},
        {"one-sided intervals", one_sided},
        {"dual Monte Carlo routes agree", dual_oracle},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Check c;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            criteria[i].second(c);
        } catch (const std::exception& e) {
            c.expect(false, std::string("exception: ") + e.what());
        }
        const double elapsed = seconds_since(t0);
        std::printf("%s criterion %zu: %s (%.1f s)%s\n", c.failures ? "FAIL" : "PASS", i + 1, criteria[i].first, elapsed,
                    c.log.str().c_str());
        failed += c.failures > 0;
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed ? 1 : 0;
}
