// bvalue: bias-aware intervals, sensitivity curves, b-values and Monte Carlo
// checks from summary statistics. Reads one JSON request (--input or stdin).

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <iterator>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "bvalue.h"

using json = nlohmann::ordered_json;

namespace {

constexpr int kExitSchema = 2;
constexpr int kExitSolver = 3;
constexpr const char* kSchemaVersion = "1";

struct SchemaError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SolverError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void check(bv_status s, const std::string& what) {
    if (s == BV_OK) return;
    const std::string msg = what + ": " + bv_last_error();
    if (s == BV_DOMAIN || s == BV_DIMENSION || s == BV_NULL_ARGUMENT || s == BV_SINGULAR || s == BV_PRECONDITION)
        throw SchemaError(msg);
    throw SolverError(msg);
}

// ---- output ---------------------------------------------------------------

std::string fmt(double x) {
    if (std::isnan(x)) return "\"nan\"";
    if (std::isinf(x)) return x > 0 ? "\"inf\"" : "\"-inf\"";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string csv_num(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

// nlohmann prints the shortest round-trip form; reports use a fixed 17 digits.
void write(std::ostream& os, const json& j, int indent = 0) {
    const std::string pad(indent + 2, ' '), end_pad(indent, ' ');
    switch (j.type()) {
        case json::value_t::object: {
            if (j.empty()) {
                os << "{}";
                return;
            }
            os << "{\n";
            bool first = true;
            for (auto it = j.begin(); it != j.end(); ++it) {
                if (!first) os << ",\n";
                first = false;
                os << pad << json(it.key()).dump() << ": ";
                write(os, it.value(), indent + 2);
            }
            os << "\n" << end_pad << "}";
            return;
        }
        case json::value_t::array: {
            if (j.empty()) {
                os << "[]";
                return;
            }
            os << "[\n";
            for (std::size_t i = 0; i < j.size(); ++i) {
                if (i) os << ",\n";
                os << pad;
                write(os, j[i], indent + 2);
            }
            os << "\n" << end_pad << "]";
            return;
        }
        case json::value_t::number_float:
            os << fmt(j.get<double>());
            return;
        default:
            os << j.dump();
    }
}

json num(double x) {
    if (std::isfinite(x)) return x;
    return std::isnan(x) ? json("nan") : json(x > 0 ? "inf" : "-inf");
}

json vec(const std::vector<double>& v) {
    json a = json::array();
    for (double x : v) a.push_back(num(x));
    return a;
}

// ---- request --------------------------------------------------------------

const std::set<std::string> kFields = {"version", "setting",  "zeta",      "alpha",     "kinds",     "side",
                                       "b",       "b_grid",   "rays",      "tau0_hat",  "tau1_hat",  "sigma0_sq",
                                       "sigma1_sq", "rho",    "biased",    "Sigma0",    "Sigma1",    "Sigma_scale",
                                       "q",       "h_star"};

enum class Setting { Univariate, Multivariate, Fusion };

struct Request {
    Setting setting = Setting::Univariate;
    double zeta = 0.05;
    double alpha = 0.05;
    std::vector<std::string> kinds;
    bv_side side = BV_TWO_SIDED;
    json raw;
};

double number(const json& j, const char* name) {
    if (!j.contains(name)) throw SchemaError(std::string("missing field '") + name + "'");
    if (!j[name].is_number()) throw SchemaError(std::string("field '") + name + "' must be a number");
    return j[name].get<double>();
}

double number_or(const json& j, const char* name, double fallback) {
    return j.contains(name) ? number(j, name) : fallback;
}

std::vector<double> numbers(const json& v, const char* name) {
    if (!v.is_array()) throw SchemaError(std::string("field '") + name + "' must be an array of numbers");
    std::vector<double> out;
    for (const auto& x : v) {
        if (!x.is_number()) throw SchemaError(std::string("field '") + name + "' must hold numbers only");
        out.push_back(x.get<double>());
    }
    return out;
}

// Scalar or array; a scalar is repeated to length n.
std::vector<double> numbers_n(const json& j, const char* name, std::size_t n) {
    if (!j.contains(name)) throw SchemaError(std::string("missing field '") + name + "'");
    if (j[name].is_number()) return std::vector<double>(n, j[name].get<double>());
    std::vector<double> v = numbers(j[name], name);
    if (v.size() != n)
        throw SchemaError(std::string("field '") + name + "' must have " + std::to_string(n) + " entries");
    return v;
}

std::vector<double> matrix(const json& j, const char* name, std::size_t d) {
    if (!j[name].is_array() || j[name].size() != d)
        throw SchemaError(std::string("field '") + name + "' must be a " + std::to_string(d) + "x" +
                          std::to_string(d) + " array");
    std::vector<double> out;
    for (const auto& row : j[name]) {
        const std::vector<double> r = numbers(row, name);
        if (r.size() != d) throw SchemaError(std::string("field '") + name + "' has a row of the wrong length");
        out.insert(out.end(), r.begin(), r.end());
    }
    return out;
}

bv_kind kind_of(const std::string& k) {
    if (k == "PW") return BV_PW;
    if (k == "PT") return BV_PT;
    if (k == "ST") return BV_ST;
    throw SchemaError("unknown kind '" + k + "'");
}

Request parse(const json& j) {
    if (!j.is_object()) throw SchemaError("request must be a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!kFields.count(it.key())) throw SchemaError("unknown field '" + it.key() + "'");
    Request r;
    r.raw = j;
    if (j.contains("version") && !(j["version"].is_string() && j["version"] == kSchemaVersion))
        throw SchemaError(std::string("unsupported schema version; expected \"") + kSchemaVersion + "\"");
    const std::string setting = j.value("setting", std::string("univariate"));
    if (setting == "univariate")
        r.setting = Setting::Univariate;
    else if (setting == "multivariate")
        r.setting = Setting::Multivariate;
    else if (setting == "fusion")
        r.setting = Setting::Fusion;
    else
        throw SchemaError("setting must be univariate, multivariate or fusion");
    r.zeta = number_or(j, "zeta", 0.05);
    r.alpha = number_or(j, "alpha", 0.05);
    if (!(r.zeta > 0 && r.zeta < 1) || !(r.alpha > 0 && r.alpha < 1))
        throw SchemaError("zeta and alpha must lie in (0, 1)");
    if (j.contains("kinds")) {
        if (!j["kinds"].is_array()) throw SchemaError("field 'kinds' must be an array");
        for (const auto& k : j["kinds"]) {
            if (!k.is_string()) throw SchemaError("kinds must be strings");
            const std::string s = k.get<std::string>();
            if (s != "unbiased") kind_of(s);
            r.kinds.push_back(s);
        }
    } else {
        r.kinds = {"PW", "PT", "ST"};
        if (r.setting == Setting::Univariate) r.kinds.insert(r.kinds.begin(), "unbiased");
    }
    if (r.setting != Setting::Univariate)
        for (const auto& k : r.kinds)
            if (k == "unbiased") throw SchemaError("kind 'unbiased' is available for the univariate setting only");
    const std::string side = j.value("side", std::string("two_sided"));
    if (side == "two_sided")
        r.side = BV_TWO_SIDED;
    else if (side == "lower")
        r.side = BV_LOWER;
    else
        throw SchemaError("side must be two_sided or lower");
    if (r.setting != Setting::Univariate && r.side != BV_TWO_SIDED)
        throw SchemaError("one-sided intervals are available for the univariate setting only");
    return r;
}

// ---- problem handles --------------------------------------------------------

struct PairHandle {
    bv_pair* p = nullptr;
    ~PairHandle() { bv_pair_destroy(p); }
};

struct MultiHandle {
    bv_multi* p = nullptr;
    int d = 0;
    ~MultiHandle() { bv_multi_destroy(p); }
};

struct FusionHandle {
    bv_fusion* p = nullptr;
    std::size_t K = 0;
    ~FusionHandle() { bv_fusion_destroy(p); }
};

std::unique_ptr<PairHandle> make_pair(const Request& r) {
    auto h = std::make_unique<PairHandle>();
    const json& j = r.raw;
    check(bv_pair_create(number(j, "tau0_hat"), number(j, "tau1_hat"), number(j, "sigma0_sq"), number(j, "sigma1_sq"),
                         number_or(j, "rho", 0.0), &h->p),
          "estimator pair");
    return h;
}

std::unique_ptr<MultiHandle> make_multi(const Request& r) {
    auto h = std::make_unique<MultiHandle>();
    const json& j = r.raw;
    if (!j.contains("tau0_hat") || !j["tau0_hat"].is_array()) throw SchemaError("tau0_hat must be an array");
    const std::vector<double> t0 = numbers(j["tau0_hat"], "tau0_hat");
    const std::size_t d = t0.size();
    const std::vector<double> t1 = numbers_n(j, "tau1_hat", d);
    for (const char* f : {"Sigma0", "Sigma1"})
        if (!j.contains(f)) throw SchemaError(std::string("missing field '") + f + "'");
    const std::vector<double> s0 = matrix(j, "Sigma0", d), s1 = matrix(j, "Sigma1", d);
    std::vector<double> ss;
    if (j.contains("Sigma_scale")) ss = matrix(j, "Sigma_scale", d);
    bv_shrinkage shrink = BV_SHRINK_SQRT_RATIO;
    if (j.contains("h_star")) {
        const std::string h_star = j["h_star"].is_string() ? j["h_star"].get<std::string>() : "";
        if (h_star == "ratio")
            shrink = BV_SHRINK_RATIO;
        else if (h_star != "sqrt_ratio")
            throw SchemaError("h_star must be \"sqrt_ratio\" or \"ratio\"");
    }
    check(bv_multi_create(static_cast<int>(d), t0.data(), t1.data(), s0.data(), s1.data(),
                          ss.empty() ? nullptr : ss.data(), number_or(j, "q", 0.0), r.alpha, shrink, &h->p),
          "multivariate problem");
    h->d = static_cast<int>(d);
    return h;
}

std::unique_ptr<FusionHandle> make_fusion(const Request& r) {
    auto h = std::make_unique<FusionHandle>();
    const json& j = r.raw;
    if (!j.contains("biased") || !j["biased"].is_array()) throw SchemaError("fusion needs a 'biased' array");
    std::vector<double> tau, var;
    for (const auto& src : j["biased"]) {
        if (!src.is_object()) throw SchemaError("biased entries must be objects {tau_hat, sigma_sq}");
        tau.push_back(number(src, "tau_hat"));
        var.push_back(number(src, "sigma_sq"));
    }
    check(bv_fusion_create(number(j, "tau0_hat"), number(j, "sigma0_sq"), tau.size(), tau.data(), var.data(), &h->p),
          "fusion problem");
    h->K = tau.size();
    return h;
}

std::vector<double> bound_vector(const Request& r, std::size_t n) {
    if (!r.raw.contains("b")) throw SchemaError("missing field 'b'");
    return numbers_n(r.raw, "b", n);
}

double bound_scalar(const Request& r) {
    if (!r.raw.contains("b")) throw SchemaError("missing field 'b'");
    if (!r.raw["b"].is_number()) throw SchemaError("univariate 'b' must be a number");
    return r.raw["b"].get<double>();
}

int worker_count() {
    if (const char* env = std::getenv("BVAL_THREADS")) {
        const int n = std::atoi(env);
        if (n >= 1) return n;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw ? static_cast<int>(hw) : 1;
}

const char* case_name(bv_bcase c) {
    switch (c) {
        case BV_ZERO: return "zero";
        case BV_FINITE: return "finite";
        case BV_INFINITE: return "infinite";
    }
    return "?";
}

json interval_json(const std::string& kind, const bv_interval& iv) {
    json o;
    o["kind"] = kind;
    o["center"] = num(iv.center);
    o["lower"] = num(iv.lower);
    o["upper"] = num(iv.upper);
    o["half_length_raw"] = num(iv.half_length_raw);
    o["half_length_scaled"] = num(iv.half_length_scaled);
    return o;
}

// ---- commands -------------------------------------------------------------

json cmd_interval(const Request& r) {
    json out;
    out["setting"] = r.raw.value("setting", std::string("univariate"));
    out["zeta"] = r.zeta;
    out["alpha"] = r.alpha;
    json results = json::array();
    if (r.setting == Setting::Univariate) {
        const auto pair = make_pair(r);
        const double b = bound_scalar(r);
        out["side"] = r.side == BV_TWO_SIDED ? "two_sided" : "lower";
        out["b"] = b;
        for (const auto& k : r.kinds) {
            bv_interval iv{};
            if (k == "unbiased") {
                check(bv_unbiased_interval(pair->p, r.side, r.zeta, &iv), "unbiased interval");
                results.push_back(interval_json(k, iv));
                continue;
            }
            check(bv_interval_solve(pair->p, kind_of(k), r.side, b, r.zeta, r.alpha, &iv), k + " interval");
            json o = interval_json(k, iv);
            o["worst_case_t"] = num(iv.worst_case_t);
            o["diagnostics"] = {{"coverage", num(iv.coverage)}, {"rounds", iv.rounds},
                                {"ill_conditioned", iv.ill_conditioned != 0}};
            results.push_back(o);
        }
        if (number_or(r.raw, "rho", 0.0) != 0.0) {
            bv_pair* prime = nullptr;
            double scale = 0.0;
            check(bv_decorrelate(pair->p, &prime, &scale), "decorrelation");
            bv_pair_destroy(prime);
            out["decorrelation"] = {{"scale", scale}};
        }
    } else if (r.setting == Setting::Multivariate) {
        const auto multi = make_multi(r);
        const std::vector<double> b = bound_vector(r, multi->d);
        out["b"] = vec(b);
        out["q"] = bv_multi_threshold(multi->p);
        for (const auto& k : r.kinds) {
            bv_region reg{};
            std::vector<double> center(multi->d), worst(multi->d);
            check(bv_region_solve(multi->p, kind_of(k), b.data(), r.zeta, &reg, center.data(), worst.data()),
                  k + " region");
            json o;
            o["kind"] = k;
            o["center"] = vec(center);
            o["M"] = num(reg.M);
            o["worst_case_t"] = vec(worst);
            o["diagnostics"] = {{"coverage", num(reg.coverage)},
                                {"std_error", num(reg.std_error)},
                                {"accuracy_warning", reg.accuracy_warning != 0},
                                {"rounds", reg.rounds}};
            results.push_back(o);
        }
    } else {
        const auto fusion = make_fusion(r);
        const std::vector<double> b = bound_vector(r, fusion->K);
        out["b"] = vec(b);
        for (const auto& k : r.kinds) {
            bv_interval iv{};
            std::vector<double> worst(fusion->K);
            check(bv_fusion_solve(fusion->p, kind_of(k), b.data(), r.zeta, r.alpha, &iv, worst.data()),
                  k + " fusion interval");
            json o = interval_json(k, iv);
            o["worst_case_t"] = vec(worst);
            o["diagnostics"] = {{"coverage", num(iv.coverage)}, {"rounds", iv.rounds}};
            results.push_back(o);
        }
    }
    out["results"] = results;
    return out;
}

struct CurveRow {
    std::string kind;
    double b;
    bv_interval iv;
    int status;
};

std::vector<CurveRow> curve_rows(const Request& r) {
    if (r.setting != Setting::Univariate) throw SchemaError("curves are available for the univariate setting only");
    if (!r.raw.contains("b_grid")) throw SchemaError("missing field 'b_grid'");
    const std::vector<double> grid = numbers(r.raw["b_grid"], "b_grid");
    if (grid.empty()) throw SchemaError("b_grid must not be empty");
    for (std::size_t i = 0; i < grid.size(); ++i)
        if (!(grid[i] >= 0.0) || (i && grid[i] < grid[i - 1]))
            throw SchemaError("b_grid must be ascending and nonnegative");
    const auto pair = make_pair(r);
    std::vector<CurveRow> rows;
    for (const auto& k : r.kinds) {
        if (k == "unbiased") {
            bv_interval iv{};
            check(bv_unbiased_interval(pair->p, r.side, r.zeta, &iv), "unbiased interval");
            for (double b : grid) rows.push_back({k, b, iv, BV_OK});
            continue;
        }
        std::vector<bv_interval> out(grid.size());
        std::vector<int> status(grid.size());
        check(bv_curve(pair->p, kind_of(k), r.side, grid.data(), grid.size(), r.zeta, r.alpha, worker_count(),
                       out.data(), status.data()),
              k + " curve");
        for (std::size_t i = 0; i < grid.size(); ++i) rows.push_back({k, grid[i], out[i], status[i]});
    }
    return rows;
}

json cmd_curve_json(const std::vector<CurveRow>& rows, bool& failed) {
    json arr = json::array();
    for (const auto& row : rows) {
        json o = interval_json(row.kind, row.iv);
        o["b"] = row.b;
        o["worst_case_t"] = row.kind == "unbiased" ? json(nullptr) : num(row.iv.worst_case_t);
        if (row.status != BV_OK) {
            o["status"] = row.status;
            failed = true;
        }
        arr.push_back(o);
    }
    return json{{"curve", arr}};
}

void cmd_curve_csv(std::ostream& os, const std::vector<CurveRow>& rows, bool& failed) {
    os << "kind,b,center,lower,upper,half_length_raw,worst_case_t\n";
    for (const auto& row : rows) {
        if (row.status != BV_OK) failed = true;
        const double nan = std::nan("");
        const bool ok = row.status == BV_OK;
        os << row.kind << ',' << csv_num(row.b) << ',' << csv_num(ok ? row.iv.center : nan) << ','
           << csv_num(ok ? row.iv.lower : nan) << ',' << csv_num(ok ? row.iv.upper : nan) << ','
           << csv_num(ok ? row.iv.half_length_raw : nan) << ','
           << (row.kind == "unbiased" ? std::string() : csv_num(ok ? row.iv.worst_case_t : nan)) << '\n';
    }
}

std::vector<double> directions(const Request& r, std::size_t dim, std::size_t& n) {
    std::vector<double> flat;
    const json& j = r.raw;
    if (j.contains("rays") && j["rays"].is_array()) {
        for (const auto& d : j["rays"]) {
            const std::vector<double> v = numbers(d, "rays");
            if (v.size() != dim) throw SchemaError("each ray direction needs " + std::to_string(dim) + " entries");
            flat.insert(flat.end(), v.begin(), v.end());
        }
        n = j["rays"].size();
        return flat;
    }
    int count = 33;
    if (j.contains("rays")) {
        if (!j["rays"].is_number_integer()) throw SchemaError("rays must be a count or a list of directions");
        count = j["rays"].get<int>();
    }
    if (dim > 2) throw SchemaError("pass explicit ray directions when the dimension exceeds 2");
    n = dim == 1 ? 1 : static_cast<std::size_t>(std::max(count, 0));
    flat.resize(n * dim);
    check(bv_default_directions(static_cast<int>(dim), count, flat.data()), "ray directions");
    return flat;
}

json ray_table(const std::vector<double>& dirs, std::size_t dim, const std::vector<bv_ray>& rays, bool& failed) {
    json arr = json::array();
    for (std::size_t i = 0; i < rays.size(); ++i) {
        json o;
        o["direction"] = vec(std::vector<double>(dirs.begin() + i * dim, dirs.begin() + (i + 1) * dim));
        o["radius"] = num(rays[i].radius);
        o["case"] = case_name(rays[i].kase);
        o["residual"] = num(rays[i].residual);
        if (rays[i].status != BV_OK) {
            o["status"] = rays[i].status;
            failed = true;
        }
        arr.push_back(o);
    }
    return arr;
}

json cmd_bvalue(const Request& r, bool generic, bool& failed) {
    json out;
    out["setting"] = r.raw.value("setting", std::string("univariate"));
    out["zeta"] = r.zeta;
    out["alpha"] = r.alpha;
    json results = json::array();
    if (r.setting == Setting::Univariate) {
        const auto pair = make_pair(r);
        const bool correlated = number_or(r.raw, "rho", 0.0) != 0.0;
        for (const auto& k : r.kinds) {
            if (k == "unbiased") continue;
            bv_bvalue bv{};
            check(bv_bvalue_compute(pair->p, kind_of(k), r.side, r.zeta, r.alpha, &bv), k + " b-value");
            json o;
            o["kind"] = k;
            o["value"] = num(bv.value);
            o["case"] = case_name(bv.kase);
            o["residual"] = num(bv.residual);
            if (correlated) {
                o["value_prime"] = num(bv.value_prime);
                o["scale"] = num(bv.scale);
                o["ill_conditioned"] = bv.ill_conditioned != 0;
            }
            if (generic) {
                bv_bvalue g{};
                check(bv_bvalue_by_curve(pair->p, kind_of(k), r.side, r.zeta, r.alpha, &g), k + " curve b-value");
                o["generic_value"] = num(g.value);
            }
            results.push_back(o);
        }
    } else {
        std::unique_ptr<MultiHandle> multi;
        std::unique_ptr<FusionHandle> fusion;
        std::size_t dim = 0;
        if (r.setting == Setting::Multivariate) {
            multi = make_multi(r);
            dim = static_cast<std::size_t>(multi->d);
        } else {
            fusion = make_fusion(r);
            dim = fusion->K;
        }
        std::size_t n = 0;
        const std::vector<double> dirs = directions(r, dim, n);
        for (const auto& k : r.kinds) {
            std::vector<bv_ray> rays(n);
            if (multi)
                check(bv_multi_surface(multi->p, kind_of(k), r.zeta, dirs.data(), n, worker_count(), rays.data()),
                      k + " surface");
            else
                check(bv_fusion_surface(fusion->p, kind_of(k), r.zeta, r.alpha, dirs.data(), n, worker_count(),
                                        rays.data()),
                      k + " surface");
            results.push_back({{"kind", k}, {"rays", ray_table(dirs, dim, rays, failed)}});
        }
    }
    out["results"] = results;
    return out;
}

json mc_json(const bv_mc_estimate& e) { return {{"coverage", num(e.value)}, {"std_error", num(e.std_error)}, {"n", e.n}}; }

// Coverage guarantee at 3 standard errors; the band flags a tight worst case.
void verdict(json& o, const bv_mc_estimate& e, double target) {
    o["pass"] = e.value >= target - 3.0 * e.std_error;
    o["within_band"] = std::fabs(e.value - target) <= 3.0 * e.std_error;
}

json cmd_oracle(const Request& r, const bv_mc_config& cfg, double inflate) {
    json out;
    out["setting"] = r.raw.value("setting", std::string("univariate"));
    out["zeta"] = r.zeta;
    out["alpha"] = r.alpha;
    out["inflate"] = inflate;
    out["n_draws"] = cfg.n_draws;
    out["seed"] = cfg.seed;
    const double target = 1.0 - r.zeta;
    json results = json::array();
    if (r.setting == Setting::Univariate) {
        const auto pair = make_pair(r);
        const double b = bound_scalar(r);
        const json& j = r.raw;
        const double rho = number_or(j, "rho", 0.0);
        for (const auto& k : r.kinds) {
            if (k == "unbiased") continue;
            bv_interval iv{};
            check(bv_interval_solve(pair->p, kind_of(k), r.side, b, r.zeta, r.alpha, &iv), k + " interval");
            const double h = iv.half_length_scaled * inflate;
            bv_mc_estimate direct{};
            check(bv_mc_coverage_univariate(kind_of(k), r.side, number(j, "sigma0_sq"), number(j, "sigma1_sq"), rho,
                                            iv.worst_case_delta, h, r.alpha, &cfg, 0, &direct),
                  "Monte Carlo");
            json o;
            o["kind"] = k;
            o["half_length_scaled"] = num(h);
            o["worst_case_delta"] = num(iv.worst_case_delta);
            o["direct"] = mc_json(direct);
            verdict(o, direct, target);
            if (rho == 0.0) {
                bv_mc_estimate rep{};
                check(bv_mc_coverage_univariate(kind_of(k), r.side, number(j, "sigma0_sq"), number(j, "sigma1_sq"),
                                                0.0, iv.worst_case_delta, h, r.alpha, &cfg, 1, &rep),
                      "Monte Carlo");
                o["representation"] = mc_json(rep);
                const double se = std::hypot(direct.std_error, rep.std_error);
                o["routes_agree"] = std::fabs(direct.value - rep.value) <= 4.0 * se;
                if (!o["routes_agree"].get<bool>()) o["pass"] = false;
            }
            results.push_back(o);
        }
    } else if (r.setting == Setting::Multivariate) {
        const auto multi = make_multi(r);
        const std::vector<double> b = bound_vector(r, multi->d);
        for (const auto& k : r.kinds) {
            bv_region reg{};
            std::vector<double> worst(multi->d), delta(multi->d);
            check(bv_region_solve(multi->p, kind_of(k), b.data(), r.zeta, &reg, nullptr, worst.data()), k + " region");
            check(bv_multi_bias(multi->p, worst.data(), delta.data()), "bias");
            bv_mc_estimate e{};
            check(bv_mc_coverage_region(multi->p, kind_of(k), delta.data(), reg.M * inflate, &cfg, &e), "Monte Carlo");
            json o;
            o["kind"] = k;
            o["M"] = num(reg.M * inflate);
            o["worst_case_delta"] = vec(delta);
            o["direct"] = mc_json(e);
            verdict(o, e, target);
            results.push_back(o);
        }
    } else {
        const auto fusion = make_fusion(r);
        const std::vector<double> b = bound_vector(r, fusion->K);
        for (const auto& k : r.kinds) {
            bv_interval iv{};
            std::vector<double> worst(fusion->K), delta(fusion->K);
            check(bv_fusion_solve(fusion->p, kind_of(k), b.data(), r.zeta, r.alpha, &iv, worst.data()),
                  k + " fusion interval");
            check(bv_fusion_bias(fusion->p, worst.data(), delta.data()), "bias");
            const double h = iv.half_length_scaled * inflate;
            bv_mc_estimate e{};
            check(bv_mc_coverage_fusion(fusion->p, kind_of(k), delta.data(), h, r.alpha, &cfg, &e), "Monte Carlo");
            json o;
            o["kind"] = k;
            o["half_length_scaled"] = num(h);
            o["worst_case_delta"] = vec(delta);
            o["direct"] = mc_json(e);
            verdict(o, e, target);
            results.push_back(o);
        }
    }
    out["results"] = results;
    return out;
}

json read_request(const std::string& path) {
    std::string text;
    if (path.empty() || path == "-") {
        text.assign(std::istreambuf_iterator<char>(std::cin), std::istreambuf_iterator<char>());
    } else {
        std::ifstream f(path);
        if (!f) throw SchemaError("cannot open " + path);
        text.assign(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
    }
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw SchemaError(std::string("invalid JSON: ") + e.what());
    }
}

std::vector<std::string> split(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(item);
    return out;
}

json parse_number_list(const std::string& s, const char* flag) {
    json arr = json::array();
    for (const auto& item : split(s)) {
        try {
            std::size_t used = 0;
            const double v = std::stod(item, &used);
            if (used != item.size()) throw std::invalid_argument(item);
            arr.push_back(v);
        } catch (const std::exception&) {
            throw SchemaError(std::string("bad number in ") + flag + ": " + item);
        }
    }
    return arr;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bias-aware confidence intervals and b-values from summary statistics"};
    app.require_subcommand(1);
    std::string input, kinds, side, b, b_grid, format = "json";
    std::optional<double> zeta, alpha;
    std::optional<int> rays;
    std::size_t draws = 0;
    std::uint64_t seed = 42;
    double inflate = 1.0;
    bool plain = false, generic = false;

    const auto common = [&](CLI::App* sub) {
        sub->add_option("-i,--input", input, "request JSON file ('-' or omitted: stdin)");
        sub->add_option("--zeta", zeta, "interval level 1 - zeta");
        sub->add_option("--alpha", alpha, "pretest level");
        sub->add_option("--kinds", kinds, "comma list of PW,PT,ST,unbiased");
        sub->add_option("--side", side, "two_sided or lower");
    };
    CLI::App* interval = app.add_subcommand("interval", "intervals or regions at one bias bound");
    common(interval);
    interval->add_option("--b", b, "bias bound (comma list for vectors)");
    CLI::App* curve = app.add_subcommand("curve", "sensitivity curve over a grid of bias bounds");
    common(curve);
    curve->add_option("--b-grid", b_grid, "comma list of bias bounds");
    curve->add_option("--format", format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
    CLI::App* bvalue = app.add_subcommand("bvalue", "b-values, or boundary rays for vector bounds");
    common(bvalue);
    bvalue->add_option("--rays", rays, "number of rays for two-dimensional bounds");
    bvalue->add_flag("--generic", generic, "also report the b-value from curve bisection");
    CLI::App* oracle = app.add_subcommand("oracle", "Monte Carlo check of solved intervals");
    common(oracle);
    oracle->add_option("--b", b, "bias bound (comma list for vectors)");
    oracle->add_option("--draws", draws, "Monte Carlo draws (default 200000)");
    oracle->add_option("--seed", seed, "Monte Carlo seed");
    oracle->add_option("--inflate", inflate, "multiply the solved length before checking")->check(CLI::PositiveNumber);
    oracle->add_flag("--no-antithetic", plain, "independent draws only");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitSchema;
    }

    try {
        json j = read_request(input);
        if (!j.is_object()) throw SchemaError("request must be a JSON object");
        if (zeta) j["zeta"] = *zeta;
        if (alpha) j["alpha"] = *alpha;
        if (!kinds.empty()) j["kinds"] = split(kinds);
        if (!side.empty()) j["side"] = side;
        if (!b.empty()) {
            const json v = parse_number_list(b, "--b");
            j["b"] = v.size() == 1 ? v[0] : v;
        }
        if (!b_grid.empty()) j["b_grid"] = parse_number_list(b_grid, "--b-grid");
        if (rays) j["rays"] = *rays;
        const Request req = parse(j);

        bool failed = false;
        std::ostringstream os;
        if (interval->parsed()) {
            write(os, cmd_interval(req));
            os << '\n';
        } else if (curve->parsed()) {
            const std::vector<CurveRow> rows = curve_rows(req);
            if (format == "csv") {
                cmd_curve_csv(os, rows, failed);
            } else {
                write(os, cmd_curve_json(rows, failed));
                os << '\n';
            }
        } else if (bvalue->parsed()) {
            write(os, cmd_bvalue(req, generic, failed));
            os << '\n';
        } else {
            bv_mc_config cfg;
            bv_mc_config_default(&cfg);
            if (draws) cfg.n_draws = draws;
            cfg.seed = seed;
            cfg.antithetic = plain ? 0 : 1;
            cfg.threads = worker_count();
            write(os, cmd_oracle(req, cfg, inflate));
            os << '\n';
        }
        std::cout << os.str();
        return failed ? kExitSolver : 0;
    } catch (const SchemaError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitSchema;
    } catch (const SolverError& e) {
        std::cerr << "solver failure: " << e.what() << '\n';
        return kExitSolver;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitSchema;
    }
}
