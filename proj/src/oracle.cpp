#include "bval/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <thread>

#include "bval/dependence.hpp"
#include "bval/error.hpp"
#include "bval/numerics.hpp"

namespace bval {

void McConfig::validate() const {
    if (n_draws < 1000) throw DomainError("n_draws must be at least 1000");
    if (threads < 1) throw DomainError("threads must be at least 1");
}

namespace {

std::uint64_t splitmix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// value(unit index, sign) for each unit; sign flips every normal when antithetic.
using Sampler = std::function<double(std::uint64_t, double)>;

std::vector<double> unit_values(const McConfig& cfg, const Sampler& sample) {
    cfg.validate();
    const std::size_t units = cfg.antithetic ? (cfg.n_draws + 1) / 2 : cfg.n_draws;
    std::vector<double> vals(units);
    const auto fill = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i)
            vals[i] = cfg.antithetic ? 0.5 * (sample(i, 1.0) + sample(i, -1.0)) : sample(i, 1.0);
    };
    const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(cfg.threads), units);
    if (workers <= 1) {
        fill(0, units);
    } else {
        std::vector<std::thread> pool;
        const std::size_t chunk = (units + workers - 1) / workers;
        for (std::size_t w = 0; w < workers; ++w)
            pool.emplace_back(fill, std::min(units, w * chunk), std::min(units, (w + 1) * chunk));
        for (auto& th : pool) th.join();
    }
    return vals;
}

McEstimate summarize(const McConfig& cfg, const std::vector<double>& vals) {
    const double n = static_cast<double>(vals.size());
    double sum = 0.0;
    for (double v : vals) sum += v;
    McEstimate out;
    out.value = sum / n;
    out.n = cfg.antithetic ? 2 * vals.size() : vals.size();
    if (cfg.antithetic) {
        double ss = 0.0;
        for (double v : vals) ss += (v - out.value) * (v - out.value);
        out.std_error = std::sqrt(ss / (n - 1.0) / n);
    } else {
        out.std_error = std::sqrt(out.value * (1.0 - out.value) / n);
    }
    return out;
}

McEstimate run(const McConfig& cfg, const Sampler& sample) { return summarize(cfg, unit_values(cfg, sample)); }

void check_model(const UnivariateModel& m) {
    if (!(m.sigma0_sq > 0.0) || !(m.sigma1_sq > 0.0)) throw DomainError("variances must be positive");
    if (!(m.rho > -1.0 && m.rho < 1.0)) throw DomainError("rho must lie in (-1, 1)");
    if (!std::isfinite(m.delta)) throw DomainError("delta must be finite");
}

// tau_hat - tau for one direct draw of the univariate model.
struct DirectDraw {
    Kind kind;
    UnivariateModel model;
    double alpha;
    double kappa = 0.0;
    double sigma1_prime_sq;

    DirectDraw(Kind k, const UnivariateModel& m, double a) : kind(k), model(m), alpha(a), sigma1_prime_sq(m.sigma1_sq) {
        check_model(m);
        if (m.rho != 0.0) {
            const DecorrelationMap map = decorrelate({0.0, 0.0, m.sigma0_sq, m.sigma1_sq, m.rho});
            kappa = map.kappa;
            sigma1_prime_sq = map.pair_prime.sigma1_sq;
        }
    }

    double operator()(std::uint64_t seed, std::uint64_t i, double sign) const {
        const double z0 = sign * counter_normal(seed, i, 0);
        const double z1 = sign * counter_normal(seed, i, 1);
        const double tau0 = std::sqrt(model.sigma0_sq) * z0;
        const double tau1 =
            model.delta + std::sqrt(model.sigma1_sq) * (model.rho * z0 + std::sqrt(1.0 - model.rho * model.rho) * z1);
        EstimatorPair pair{tau0, tau1, model.sigma0_sq, sigma1_prime_sq, 0.0};
        if (model.rho != 0.0) pair.tau1_hat = (tau1 - kappa * tau0) / (1.0 - kappa);
        return point_estimate(kind, pair, alpha);
    }
};

// Error as a normal plus a term driven by the pretest statistic Z2 + a t.
struct RepresentationDraw {
    Kind kind;
    double sigma0, gamma, a, t, c, delta;

    RepresentationDraw(Kind k, const UnivariateModel& m, double alpha) : kind(k) {
        check_model(m);
        if (m.rho != 0.0) throw DomainError("the representation route needs an independent pair (rho = 0)");
        sigma0 = std::sqrt(m.sigma0_sq);
        gamma = m.sigma0_sq / m.sigma1_sq;
        a = std::sqrt(gamma / (1.0 + gamma));
        t = m.delta / sigma0;
        c = upper_quantile(alpha / 2.0);
        delta = m.delta;
    }

    double operator()(std::uint64_t seed, std::uint64_t i, double sign) const {
        const double z1 = sign * counter_normal(seed, i, 0);
        const double z2 = sign * counter_normal(seed, i, 1);
        const double base = sigma0 * z1 / std::sqrt(1.0 + gamma);
        const double stat = z2 + a * t;
        if (kind == Kind::PW || std::fabs(stat) <= c) return base + gamma * delta / (1.0 + gamma);
        if (kind == Kind::PT) return base - a * sigma0 * z2;
        return base - a * sigma0 * (z2 - c * std::copysign(1.0, stat));
    }
};

bool covered(Side side, double err, double h) { return side == Side::TwoSided ? std::fabs(err) <= h : err - h <= 0.0; }

}  // namespace

double counter_normal(std::uint64_t seed, std::uint64_t index, std::uint32_t stream) {
    const std::uint64_t h = splitmix(seed ^ splitmix(index ^ splitmix(stream + 0x632be59bd9b4e019ULL)));
    const double u = (static_cast<double>(h >> 11) + 0.5) * 0x1.0p-53;
    return normal_quantile(u);
}

McEstimate mc_coverage_univariate(Kind kind, Side side, const UnivariateModel& model, double half_length_scaled,
                                  double alpha, const McConfig& cfg, McRoute route) {
    if (kind != Kind::PW) check_level(alpha, "alpha");
    if (!(half_length_scaled >= 0.0)) throw DomainError("half-length must be nonnegative");
    const double h = half_length_scaled;
    if (route == McRoute::Representation) {
        const RepresentationDraw draw(kind, model, alpha);
        return run(cfg, [&](std::uint64_t i, double s) { return covered(side, draw(cfg.seed, i, s), h) ? 1.0 : 0.0; });
    }
    const DirectDraw draw(kind, model, alpha);
    return run(cfg, [&](std::uint64_t i, double s) { return covered(side, draw(cfg.seed, i, s), h) ? 1.0 : 0.0; });
}

McEstimate mc_coverage_region(Kind kind, const MultiProblem& problem, const Eigen::VectorXd& delta, double M,
                              const McConfig& cfg) {
    problem.validate();
    const int d = problem.dim();
    if (delta.size() != d) throw DimensionError("delta has the wrong length");
    const Eigen::MatrixXd p0 = linalg::spd_inverse(problem.Sigma0);
    const Eigen::MatrixXd p1 = linalg::spd_inverse(problem.Sigma1);
    const Eigen::MatrixXd metric = p0 + p1;
    const Eigen::MatrixXd gain = linalg::spd_inverse(metric) * p1;
    const Eigen::MatrixXd whiten = linalg::sym_inv_sqrt(problem.Sigma0 + problem.Sigma1);
    const Eigen::MatrixXd l0 = problem.Sigma0.llt().matrixL();
    const Eigen::MatrixXd l1 = problem.Sigma1.llt().matrixL();
    return run(cfg, [&](std::uint64_t i, double s) {
        Eigen::VectorXd z0(d), z1(d);
        for (int j = 0; j < d; ++j) {
            z0(j) = s * counter_normal(cfg.seed, i, static_cast<std::uint32_t>(j));
            z1(j) = s * counter_normal(cfg.seed, i, static_cast<std::uint32_t>(d + j));
        }
        const Eigen::VectorXd tau0 = l0 * z0;
        const Eigen::VectorXd diff = delta + l1 * z1 - tau0;
        double weight = 1.0;
        if (kind != Kind::PW) {
            const double r = (whiten * diff).squaredNorm();
            weight = kind == Kind::PT ? (r <= problem.q ? 1.0 : 0.0) : problem.h(r);
        }
        const Eigen::VectorXd center = tau0 + weight * (gain * diff);
        return center.dot(metric * center) <= M ? 1.0 : 0.0;
    });
}

McEstimate mc_coverage_fusion(Kind kind, const FusionProblem& problem, const std::vector<double>& delta,
                              double half_length_scaled, double alpha, const McConfig& cfg) {
    problem.validate();
    if (delta.size() != problem.size()) throw DimensionError("delta length must equal the number of sources");
    const double s0 = problem.sigma0();
    return run(cfg, [&](std::uint64_t i, double s) {
        FusionProblem draw = problem;
        draw.tau0_hat = s0 * s * counter_normal(cfg.seed, i, 0);
        for (std::size_t j = 0; j < problem.size(); ++j)
            draw.biased[j].tau_hat = delta[j] + std::sqrt(problem.biased[j].sigma_sq) * s *
                                                    counter_normal(cfg.seed, i, static_cast<std::uint32_t>(j + 1));
        return std::fabs(point_fusion(kind, draw, alpha)) <= half_length_scaled ? 1.0 : 0.0;
    });
}

double mc_quantile(const QuantileSpec& spec, double p, const McConfig& cfg) {
    check_level(p, "p");
    cfg.validate();
    std::function<double(std::uint64_t, double)> sample;
    if (spec.dist == QuantileDist::FoldedNormal) {
        sample = [&](std::uint64_t i, double s) { return std::fabs(spec.shift + s * counter_normal(cfg.seed, i, 0)); };
    } else if (spec.dist == QuantileDist::NoncentralChisq) {
        if (spec.dof < 1 || !(spec.lambda >= 0.0)) throw DomainError("need dof >= 1 and lambda >= 0");
        const double mu = std::sqrt(spec.lambda);
        sample = [&, mu](std::uint64_t i, double s) {
            double x = 0.0;
            for (int j = 0; j < spec.dof; ++j) {
                const double z = s * counter_normal(cfg.seed, i, static_cast<std::uint32_t>(j)) + (j == 0 ? mu : 0.0);
                x += z * z;
            }
            return x;
        };
    } else {
        auto draw = std::make_shared<DirectDraw>(spec.kind, spec.model, spec.alpha);
        sample = [&, draw](std::uint64_t i, double s) { return std::fabs((*draw)(cfg.seed, i, s)); };
    }
    const std::size_t units = cfg.antithetic ? (cfg.n_draws + 1) / 2 : cfg.n_draws;
    std::vector<double> xs;
    xs.reserve(cfg.antithetic ? 2 * units : units);
    for (std::size_t i = 0; i < units; ++i) {
        xs.push_back(sample(i, 1.0));
        if (cfg.antithetic) xs.push_back(sample(i, -1.0));
    }
    const std::size_t k = static_cast<std::size_t>(std::ceil(p * static_cast<double>(xs.size()))) - 1;
    std::nth_element(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(k), xs.end());
    return xs[k];
}

}  // namespace bval
