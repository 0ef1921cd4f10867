#include "sforge/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <map>
#include <sstream>

#include "sforge/classification.hpp"
#include "sforge/errors.hpp"
#include "sforge/kernels.hpp"
#include "sforge/solver.hpp"
#include "sforge/verify.hpp"

namespace sforge {

using nlohmann::json;

namespace {

const std::vector<std::string> kSubcommands = {"classify", "construct", "verify",
                                               "sweep",    "tables",    "appendix"};
const std::vector<std::string> kFamilies = {"power", "power_sum", "power_log", "power_exp_log",
                                            "power_sum_log"};

bool needs_r(const std::string& family) { return family != "power"; }

// ---------------------------------------------------------------- JSON ----

json config_to_json(const RunConfig& c) {
    json j;
    j["subcommand"] = c.subcommand;
    j["N"] = c.N;
    j["family"] = c.family;
    j["p"] = c.p;
    j["r"] = c.r;
    j["log_exp"] = c.log_exp;
    j["rho0"] = c.rho0;
    j["rho_max"] = c.rho_max ? json(*c.rho_max) : json(nullptr);
    j["fixed_rho0"] = c.fixed_rho0;
    j["M"] = c.M;
    j["tol"] = c.tol;
    j["max_iter"] = c.max_iter;
    std::vector<double> a, b;
    for (const auto& [x, y] : c.pairs) {
        a.push_back(x);
        b.push_back(y);
    }
    j["alpha"] = a;
    j["beta"] = b;
    j["sigma"] = c.sigma;
    j["format"] = c.format;
    return j;
}

std::vector<double> number_list(const json& v, const std::string& field) {
    if (v.is_number()) return {v.get<double>()};
    if (v.is_array()) {
        std::vector<double> out;
        for (const auto& e : v) {
            if (!e.is_number()) throw ConfigError(field, field + " must be a number or list of numbers");
            out.push_back(e.get<double>());
        }
        return out;
    }
    throw ConfigError(field, field + " must be a number or list of numbers");
}

template <class T>
T get_field(const json& j, const std::string& field) {
    try {
        return j.at(field).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(field, field + " has the wrong type");
    }
}

/// Copies recognised keys of a config object into cfg; returns the keys present.
std::vector<std::string> config_from_json(const json& j, RunConfig& cfg) {
    if (!j.is_object()) throw ConfigError("config", "config file must hold a JSON object");
    std::vector<std::string> present;
    auto has = [&](const char* k) {
        if (j.contains(k) && !j.at(k).is_null()) {
            present.emplace_back(k);
            return true;
        }
        return false;
    };
    if (has("N")) {
        const double n = get_field<double>(j, "N");
        if (n != std::floor(n)) throw ConfigError("N", "N must be an integer >= 3");
        cfg.N = static_cast<int>(n);
    }
    if (has("family")) cfg.family = get_field<std::string>(j, "family");
    if (has("p")) cfg.p = number_list(j.at("p"), "p");
    if (has("r")) cfg.r = number_list(j.at("r"), "r");
    if (has("log_exp")) cfg.log_exp = get_field<double>(j, "log_exp");
    if (has("rho0")) cfg.rho0 = get_field<double>(j, "rho0");
    if (has("rho_max")) cfg.rho_max = get_field<double>(j, "rho_max");
    if (has("fixed_rho0")) cfg.fixed_rho0 = get_field<bool>(j, "fixed_rho0");
    if (has("M")) {
        const double m = get_field<double>(j, "M");
        if (m < 0 || m != std::floor(m)) throw ConfigError("M", "M must be a positive integer");
        cfg.M = static_cast<std::size_t>(m);
    }
    if (has("tol")) cfg.tol = get_field<double>(j, "tol");
    if (has("max_iter")) cfg.max_iter = get_field<int>(j, "max_iter");
    if (has("sigma")) cfg.sigma = number_list(j.at("sigma"), "sigma");
    if (has("out")) cfg.out = get_field<std::string>(j, "out");
    if (has("format")) cfg.format = get_field<std::string>(j, "format");
    const bool ha = has("alpha"), hb = has("beta");
    if (ha || hb) {
        const auto a = ha ? number_list(j.at("alpha"), "alpha") : std::vector<double>{0.0};
        const auto b = hb ? number_list(j.at("beta"), "beta") : std::vector<double>{0.0};
        cfg.pairs.clear();
        const std::size_t n = std::max(a.size(), b.size());
        if (a.size() != n && a.size() != 1) throw ConfigError("alpha", "alpha and beta lists differ in length");
        if (b.size() != n && b.size() != 1) throw ConfigError("beta", "alpha and beta lists differ in length");
        for (std::size_t i = 0; i < n; ++i) {
            cfg.pairs.emplace_back(a.size() == 1 ? a[0] : a[i], b.size() == 1 ? b[0] : b[i]);
        }
    }
    return present;
}

json regime_json(const Classification& c) {
    json j;
    j["name"] = regime_name(c.regime);
    if (const auto* t = std::get_if<TwoRealRoots>(&c.regime)) {
        j["lambda1"] = t->lambda1;
        j["lambda2"] = t->lambda2;
    } else if (const auto* d = std::get_if<DoubleRoot>(&c.regime)) {
        j["lambda_star"] = d->lambda_star;
    } else if (const auto* k = std::get_if<ComplexRoots>(&c.regime)) {
        j["a_half"] = k->a_half;
        j["k"] = k->k;
    } else {
        j["reason"] = to_string(std::get<OutOfScope>(c.regime).reason);
    }
    return j;
}

json classification_json(const Classification& c, const RunConfig& cfg) {
    json j;
    j["N"] = c.N;
    j["q_f"] = c.q_f;
    j["p_f"] = c.p_f;
    j["m"] = c.m;
    j["p_c"] = c.p_c;
    j["p_S"] = c.p_S;
    j["p_star"] = c.p_star;
    j["a"] = c.a;
    j["b"] = c.b;
    j["regime"] = regime_json(c);
    j["in_scope"] = c.in_scope();
    if (c.in_scope()) {
        j["Lambda"] = c.Lambda;
        const double p = cfg.p.front();
        j["r_star"] = threshold_rstar(c, p);
        j["r_star_literal"] = threshold_rstar_literal(c, p);
    }
    return j;
}

json fit_json(const DecayFit& f) {
    return json{{"lambda", f.lambda},         {"power", f.power},
                {"intercept", f.intercept},   {"stderr_lambda", f.stderr_lambda},
                {"stderr_power", f.stderr_power}, {"points", f.points},
                {"oscillatory", f.oscillatory}};
}

json solution_json(const RemainderSolution& s) {
    json j;
    j["alpha"] = s.alpha;
    j["beta"] = s.beta;
    j["delta"] = s.delta;
    j["rho0"] = s.rho0;
    j["status"] = to_string(s.status);
    j["converged"] = s.converged();
    j["iterations"] = s.iterations;
    j["final_change"] = s.final_change;
    j["contraction_ratio"] = s.contraction_ratio;
    j["changes"] = s.changes;
    j["weighted_norm"] = s.weighted_norm;
    j["case"] = s.case_tag;
    j["eta_rho0"] = s.eta.empty() ? 0.0 : s.eta.front();
    j["eta_prime_rho0"] = s.eta_prime.empty() ? 0.0 : s.eta_prime.front();
    if (!s.message.empty()) j["message"] = s.message;
    return j;
}

json cell_json(const CellReport& c) {
    json j;
    j["family"] = c.spec.family;
    j["N"] = c.spec.N;
    j["p"] = c.spec.p;
    j["r"] = c.spec.r;
    j["alpha"] = c.spec.alpha;
    j["beta"] = c.spec.beta;
    j["regime"] = c.regime;
    j["r_star"] = c.r_star;
    j["r_star_literal"] = c.r_star_literal;
    j["predicted"] = json{{"lambda", c.prediction.lambda},
                          {"power", c.prediction.power},
                          {"row", c.prediction.row},
                          {"degenerate", c.prediction.degenerate},
                          {"note", c.prediction.note}};
    j["predicted_literal"] = json{{"lambda", c.literal_prediction.lambda},
                                  {"power", c.literal_prediction.power},
                                  {"row", c.literal_prediction.row}};
    j["supported_threshold"] = c.supported_threshold;
    j["rho0"] = c.rho0;
    j["converged"] = c.converged;
    j["iterations"] = c.iterations;
    j["case"] = c.case_tag;
    j["fit"] = fit_json(c.fit);
    j["lambda_ok"] = c.lambda_ok;
    j["power_ok"] = c.power_ok;
    j["label"] = c.label;
    j["pass"] = c.pass;
    if (!c.error.empty()) j["error"] = c.error;
    return j;
}

// -------------------------------------------------------------- output ----

bool want_csv(const RunConfig& c) { return c.format == "csv" || c.format == "both"; }

void write_json_file(const std::string& path, const json& j) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open " + path + " for writing");
    os << j.dump(2) << '\n';
    if (!os) throw std::runtime_error("write failed for " + path);
}

std::string profile_name(std::size_t k, std::size_t n) {
    if (n == 1) return "profile.csv";
    char buf[32];
    std::snprintf(buf, sizeof buf, "profile_%03zu.csv", k);
    return buf;
}

Nonlinearity make_nl(const RunConfig& cfg, double p, double r) {
    return make_nonlinearity(cfg.family, p, r, cfg.log_exp);
}

double first_r(const RunConfig& cfg) { return cfg.r.empty() ? 0.0 : cfg.r.front(); }

SolverOptions solver_options(const RunConfig& cfg) {
    SolverOptions o;
    o.tol = cfg.tol;
    o.max_iter = cfg.max_iter;
    return o;
}

struct Prepared {
    Classification cls;
    json summary;
};

// Shared front part of construct/verify/sweep. Returns an exit code when the
// run stops early.
std::optional<int> choose_context(const RunConfig& cfg, const Nonlinearity& nl,
                                  const Classification& cls, json& summary,
                                  std::optional<ProfileContext>& ctx) {
    double amax = 0.0, bmax = 0.0;
    for (const auto& [a, b] : cfg.pairs) {
        amax = std::max(amax, a);
        bmax = std::max(bmax, b);
    }
    double rho0 = cfg.rho0;
    if (!cfg.fixed_rho0) {
        try {
            rho0 = select_rho0(nl, cls, amax, bmax, GridSpec{cfg.rho0, cfg.span(), cfg.M},
                               solver_options(cfg));
        } catch (const NoContractionError& e) {
            summary["error"] = e.what();
            return ConvergenceFailure;
        }
    }
    ctx.emplace(build_context(nl, cls, rho0, rho0 + cfg.span(), cfg.M));
    summary["grid"] = json{{"rho0", rho0}, {"rho_max", rho0 + cfg.span()}, {"M", cfg.M},
                           {"h", ctx->h()}};
    return std::nullopt;
}

int finish(const RunConfig& cfg, json& summary, int code) {
    summary["exit_code"] = code;
    if (cfg.format != "csv") {
        std::filesystem::create_directories(cfg.out);
        write_json_file((std::filesystem::path(cfg.out) / "summary.json").string(), summary);
    }
    return code;
}

int run_classify(const RunConfig& cfg, json& summary) {
    const auto nl = make_nl(cfg, cfg.p.front(), first_r(cfg));
    const auto cls = classify(nl, cfg.N);
    summary["classification"] = classification_json(cls, cfg);
    std::cout << summary["classification"].dump(2) << '\n';
    return finish(cfg, summary, cls.in_scope() ? Success : OutOfRegime);
}

int run_construct(const RunConfig& cfg, json& summary, bool verify) {
    const auto nl = make_nl(cfg, cfg.p.front(), first_r(cfg));
    const auto cls = classify(nl, cfg.N);
    summary["classification"] = classification_json(cls, cfg);
    if (!cls.in_scope()) return finish(cfg, summary, OutOfRegime);

    std::optional<ProfileContext> ctx;
    if (auto code = choose_context(cfg, nl, cls, summary, ctx)) return finish(cfg, summary, *code);
    const KernelSet ks(cls);
    const auto opts = solver_options(cfg);

    int code = Success;
    json runs = json::array();
    std::vector<RemainderSolution> sols;
    if (cfg.subcommand == "sweep") {
        auto sw = sweep(*ctx, ks, cfg.pairs, opts);
        summary["sweep"] = json{{"converged", sw.converged},
                                {"pairs", cfg.pairs.size()},
                                {"boundary_distinct", sw.boundary_distinct},
                                {"separation", sw.separation}};
        sols = std::move(sw.solutions);
    } else {
        for (const auto& [a, b] : cfg.pairs) sols.push_back(picard_iterate(*ctx, ks, a, b, opts));
    }
    const auto case_report = case_classify(*ctx, cls.Lambda);
    summary["case"] = json{{"tag", case_report.tag},
                           {"increments", case_report.increments},
                           {"ratios", case_report.ratios}};

    for (std::size_t k = 0; k < sols.size(); ++k) {
        const auto& sol = sols[k];
        json run = solution_json(sol);
        if (!sol.converged()) {
            code = ConvergenceFailure;
            runs.push_back(run);
            continue;
        }
        const auto profile = to_radial(*ctx, sol.eta, sol.eta_prime);
        const std::string name = profile_name(k, sols.size());
        if (want_csv(cfg)) {
            std::filesystem::create_directories(cfg.out);
            write_profile_csv((std::filesystem::path(cfg.out) / name).string(), profile);
            run["profile"] = name;
        }
        run["radial_residual_max"] = ode_residual_radial(profile);
        run["eta_residual_max"] = ode_residual_eta(sol, *ctx);
        try {
            run["fit"] = fit_json(decay_fit(sol, *ctx));
        } catch (const FitError& e) {
            run["fit"] = json{{"error", e.what()}};
        }
        runs.push_back(run);
    }
    summary["runs"] = runs;

    if (verify) {
        json v;
        const auto lim = limit_diagnostics(*ctx);
        json lj = json::object();
        for (const auto& q : lim.quantities) {
            lj[q.name] = json{{"tail", q.tail}, {"window_max", q.window_max},
                              {"decreasing", q.decreasing}};
        }
        v["limit_diagnostics"] = lj;
        v["limit_diagnostics_pass"] = lim.all_decreasing();
        v["lipschitz_max_ratio"] = lipschitz_check(*ctx, 10000);
        v["lipschitz_cap"] = lipschitz_cap(*ctx);
        double norm_max = 0.0;
        bool boundary = true;
        for (const auto& s : sols) {
            if (!s.converged()) continue;
            norm_max = std::max(norm_max, s.weighted_norm);
            boundary = boundary && s.eta.front() == s.alpha && s.eta_prime.front() == s.beta;
        }
        v["weighted_norm_max"] = norm_max;
        v["weighted_norm_pass"] = norm_max <= 2.0;
        v["boundary_data_exact"] = boundary;
        summary["verification"] = v;
    }
    return finish(cfg, summary, code);
}

int run_tables(const RunConfig& cfg, json& summary) {
    std::vector<CellSpec> cells;
    bool out_of_scope = false;
    json skipped = json::array();
    for (double p : cfg.p) {
        Classification cls;
        try {
            cls = classify(p / (p - 1.0), cfg.N);
        } catch (const DomainError& e) {
            throw ConfigError("p", e.what());
        }
        if (!cls.in_scope()) {
            out_of_scope = true;
            skipped.push_back(json{{"p", p}, {"regime", regime_json(cls)}});
            continue;
        }
        std::vector<double> rs = cfg.r;
        if (rs.empty()) {
            if (cfg.family == "power_sum" || cfg.family == "power_sum_log") {
                rs = default_r_list(cfg.N, p);
            } else {
                rs = {0.5};
            }
        }
        for (double r : rs) {
            CellSpec s;
            s.N = cfg.N;
            s.family = cfg.family;
            s.p = p;
            s.r = r;
            s.log_exp = cfg.log_exp;
            if (cfg.pairs.size() != 1 || cfg.pairs.front() != std::pair<double, double>{0.0, 0.0}) {
                s.alpha = cfg.pairs.front().first;
                s.beta = cfg.pairs.front().second;
            }
            s.grid = GridSpec{cfg.rho0, cfg.span(), cfg.M};
            s.auto_rho0 = !cfg.fixed_rho0;
            s.solver = solver_options(cfg);
            cells.push_back(s);
        }
    }
    const auto reports = table_report(cells);
    json arr = json::array();
    bool failed = false;
    for (const auto& c : reports) {
        arr.push_back(cell_json(c));
        failed = failed || !c.error.empty();
        std::cout << "p=" << c.spec.p << " r=" << c.spec.r << " lambda_fit=" << c.fit.lambda
                  << " predicted=" << c.prediction.lambda << " " << c.label << '\n';
    }
    summary["cells"] = arr;
    if (!skipped.empty()) summary["out_of_scope"] = skipped;
    return finish(cfg, summary, failed ? ConvergenceFailure : out_of_scope ? OutOfRegime : Success);
}

int run_appendix(const RunConfig& cfg, json& summary) {
    const auto rep = appendix_check(cfg.p.front(), first_r(cfg), cfg.sigma);
    summary["appendix"] = json{{"p", cfg.p.front()},
                               {"r", first_r(cfg)},
                               {"sigma", rep.sigma},
                               {"scaled_remainder", rep.scaled_remainder},
                               {"max_scaled_remainder", rep.max_scaled_remainder}};
    std::cout << "max scaled remainder " << rep.max_scaled_remainder << '\n';
    return finish(cfg, summary, Success);
}

std::vector<double> parse_list(const std::string& text, const std::string& field) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw ConfigError(field, field + " must be a number or comma-separated list");
        }
    }
    if (out.empty()) throw ConfigError(field, field + " must not be empty");
    return out;
}

}  // namespace

double RunConfig::span() const {
    if (rho_max) return *rho_max - rho0;
    return subcommand == "tables" ? 60.0 : 40.0;
}

void validate(const RunConfig& c) {
    if (std::find(kSubcommands.begin(), kSubcommands.end(), c.subcommand) == kSubcommands.end()) {
        throw ConfigError("subcommand", "unknown subcommand '" + c.subcommand + "'");
    }
    if (c.N < 3) throw ConfigError("N", "N must be an integer >= 3");
    if (std::find(kFamilies.begin(), kFamilies.end(), c.family) == kFamilies.end()) {
        throw ConfigError("family", "unknown family '" + c.family + "'");
    }
    if (c.p.empty()) throw ConfigError("p", "p is required");
    for (double p : c.p) {
        if (!(p > 1.0) || !std::isfinite(p)) throw ConfigError("p", "p must exceed 1");
    }
    if (c.p.size() > 1 && c.subcommand != "tables") {
        throw ConfigError("p", "several p values are only accepted by tables");
    }
    const bool r_required = c.subcommand == "appendix" ||
                            (needs_r(c.family) && c.subcommand != "tables");
    if (r_required && c.r.empty()) throw ConfigError("r", "r is required for family " + c.family);
    if (c.r.size() > 1 && c.subcommand != "tables") {
        throw ConfigError("r", "several r values are only accepted by tables");
    }
    for (double r : c.r) {
        if (!std::isfinite(r)) throw ConfigError("r", "r must be finite");
        for (double p : c.p) {
            const bool sum = c.family == "power_sum" || c.family == "power_sum_log" ||
                             c.subcommand == "appendix";
            if (sum && !(r > 0.0 && r < p)) throw ConfigError("r", "r must satisfy 0 < r < p");
            if (c.family == "power_exp_log" && !(r > 0.0 && r < 1.0)) {
                throw ConfigError("r", "r must satisfy 0 < r < 1");
            }
        }
    }
    if (!std::isfinite(c.log_exp)) throw ConfigError("log_exp", "log_exp must be finite");
    if (!std::isfinite(c.rho0)) throw ConfigError("rho0", "rho0 must be finite");
    if (c.rho_max && !(*c.rho_max > c.rho0 + 8.0)) {
        throw ConfigError("rho_max", "rho_max must exceed rho0 + 8");
    }
    if (c.M < 64) throw ConfigError("M", "M must be at least 64");
    if (!(c.tol > 0.0)) throw ConfigError("tol", "tol must be positive");
    if (c.max_iter < 1) throw ConfigError("max_iter", "max_iter must be positive");
    if (c.pairs.empty()) throw ConfigError("alpha", "at least one (alpha, beta) pair is required");
    for (const auto& [a, b] : c.pairs) {
        if (!(a >= 0.0) || !std::isfinite(a)) throw ConfigError("alpha", "alpha must be non-negative");
        if (!(b >= 0.0) || !std::isfinite(b)) throw ConfigError("beta", "beta must be non-negative");
    }
    for (double s : c.sigma) {
        if (!(s > 0.0 && s <= 0.1)) throw ConfigError("sigma", "sigma values must lie in (0, 0.1]");
    }
    if (c.format != "csv" && c.format != "json" && c.format != "both") {
        throw ConfigError("format", "format must be csv, json or both");
    }
    if (c.out.empty()) throw ConfigError("out", "out must name a directory");
    if (c.subcommand != "tables" && c.subcommand != "appendix") {
        try {
            (void)make_nonlinearity(c.family, c.p.front(), c.r.empty() ? 0.0 : c.r.front(),
                                    c.log_exp);
        } catch (const DomainError& e) {
            throw ConfigError("family", e.what());
        }
    }
}

RunConfig load_config(int argc, const char* const* argv) {
    CLI::App app{"Singular radial solutions of -Laplace(u) = f(u)", "singular-forge"};
    app.require_subcommand(1, 1);

    struct Raw {
        int N = 5;
        std::string family, p, r, alpha, beta, sigma, out, format, config;
        double log_exp = 0.0, rho0 = 3.0, rho_max = 0.0, tol = 1e-10;
        std::size_t M = 4096;
        int max_iter = 200;
        bool fixed_rho0 = false;
    } raw;
    std::map<std::string, std::map<std::string, CLI::Option*>> opts;
    for (const auto& name : kSubcommands) {
        static const std::map<std::string, std::string> about = {
            {"classify", "Classify f and report the asymptotic constants"},
            {"construct", "Solve for the remainder and write the profile"},
            {"verify", "Construct and run the residual and limit checks"},
            {"sweep", "Construct one solution per (alpha, beta) pair"},
            {"tables", "Measure and predict decay rates over a (p, r) grid"},
            {"appendix", "Check F^-1 asymptotics over a sigma list"},
        };
        auto* sub = app.add_subcommand(name, about.at(name));
        auto& o = opts[name];
        o["N"] = sub->add_option("--N", raw.N, "Dimension (integer >= 3)");
        o["family"] = sub->add_option("--family", raw.family,
                                      "power | power_sum | power_log | power_exp_log | power_sum_log");
        o["p"] = sub->add_option("--p", raw.p, "Exponent p (comma list for tables)");
        o["r"] = sub->add_option("--r", raw.r, "Secondary exponent r (comma list for tables)");
        o["log_exp"] = sub->add_option("--log-exp", raw.log_exp, "Log power of power_sum_log");
        o["rho0"] = sub->add_option("--rho0", raw.rho0, "Initial rho0");
        o["rho_max"] = sub->add_option("--rho-max", raw.rho_max, "Right end of the rho grid");
        o["fixed_rho0"] = sub->add_flag("--fixed-rho0", raw.fixed_rho0, "Skip the rho0 search");
        o["M"] = sub->add_option("--M", raw.M, "Grid nodes");
        o["alpha"] = sub->add_option("--alpha", raw.alpha, "eta(rho0) (comma list)");
        o["beta"] = sub->add_option("--beta", raw.beta, "eta'(rho0) (comma list)");
        o["tol"] = sub->add_option("--tol", raw.tol, "Picard tolerance");
        o["max_iter"] = sub->add_option("--max-iter", raw.max_iter, "Picard iteration cap");
        o["sigma"] = sub->add_option("--sigma", raw.sigma, "Appendix sigma list");
        o["out"] = sub->add_option("--out", raw.out, "Output directory");
        o["format"] = sub->add_option("--format", raw.format, "csv | json | both");
        o["config"] = sub->add_option("--config", raw.config, "JSON config or summary file");
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        std::cout << app.help();
        throw;
    } catch (const CLI::ParseError& e) {
        throw ConfigError("arguments", e.what());
    }

    RunConfig cfg;
    std::string chosen;
    for (const auto* sub : app.get_subcommands()) chosen = sub->get_name();
    cfg.subcommand = chosen;
    auto& o = opts.at(chosen);
    auto given = [&](const char* k) { return o.at(k)->count() > 0; };

    bool family_set = false;
    if (given("config")) {
        std::ifstream is(raw.config);
        if (!is) throw ConfigError("config", "cannot read config file " + raw.config);
        json j;
        try {
            j = json::parse(is);
        } catch (const json::exception& e) {
            throw ConfigError("config", std::string("invalid JSON: ") + e.what());
        }
        if (j.is_object() && j.contains("config")) j = j.at("config");
        const auto present = config_from_json(j, cfg);
        family_set = std::find(present.begin(), present.end(), "family") != present.end();
    }
    if (given("N")) cfg.N = raw.N;
    if (given("family")) {
        cfg.family = raw.family;
        family_set = true;
    }
    if (!family_set && chosen == "tables") cfg.family = "power_sum";
    if (!family_set && chosen == "appendix") cfg.family = "power_sum";
    if (given("p")) cfg.p = parse_list(raw.p, "p");
    if (given("r")) cfg.r = parse_list(raw.r, "r");
    if (given("log_exp")) cfg.log_exp = raw.log_exp;
    if (given("rho0")) cfg.rho0 = raw.rho0;
    if (given("rho_max")) cfg.rho_max = raw.rho_max;
    if (given("fixed_rho0")) cfg.fixed_rho0 = raw.fixed_rho0;
    if (given("M")) cfg.M = raw.M;
    if (given("tol")) cfg.tol = raw.tol;
    if (given("max_iter")) cfg.max_iter = raw.max_iter;
    if (given("sigma")) cfg.sigma = parse_list(raw.sigma, "sigma");
    if (given("out")) cfg.out = raw.out;
    if (given("format")) cfg.format = raw.format;
    if (given("alpha") || given("beta")) {
        std::vector<double> a{0.0}, b{0.0};
        if (given("alpha")) {
            a = parse_list(raw.alpha, "alpha");
        } else if (!cfg.pairs.empty()) {
            a = {cfg.pairs.front().first};
        }
        if (given("beta")) {
            b = parse_list(raw.beta, "beta");
        } else if (!cfg.pairs.empty()) {
            b = {cfg.pairs.front().second};
        }
        const std::size_t n = std::max(a.size(), b.size());
        if (a.size() != n && a.size() != 1) throw ConfigError("alpha", "alpha and beta lists differ in length");
        if (b.size() != n && b.size() != 1) throw ConfigError("beta", "alpha and beta lists differ in length");
        cfg.pairs.clear();
        for (std::size_t i = 0; i < n; ++i) {
            cfg.pairs.emplace_back(a.size() == 1 ? a[0] : a[i], b.size() == 1 ? b[0] : b[i]);
        }
    }
    validate(cfg);
    return cfg;
}

void write_profile_csv(const std::string& path, const SolutionProfile& pr) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open " + path + " for writing");
    os << "rho,r,phi,I,eta,eta_prime,theta,u,tilde_u,residual\n";
    char buf[512];
    for (std::size_t i = 0; i < pr.rho.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                      pr.rho[i], pr.r[i], pr.phi[i], pr.I[i], pr.eta[i], pr.eta_prime[i],
                      pr.theta[i], pr.u[i], pr.tilde_u[i], pr.residual[i]);
        os << buf;
    }
    if (!os) throw std::runtime_error("write failed for " + path);
}

int run(const RunConfig& cfg) {
    validate(cfg);
    json summary;
    summary["config"] = config_to_json(cfg);
    if (cfg.subcommand == "classify") return run_classify(cfg, summary);
    if (cfg.subcommand == "tables") return run_tables(cfg, summary);
    if (cfg.subcommand == "appendix") return run_appendix(cfg, summary);
    return run_construct(cfg, summary, cfg.subcommand == "verify");
}

int cli_main(int argc, const char* const* argv) {
    RunConfig cfg;
    try {
        cfg = load_config(argc, argv);
    } catch (const CLI::CallForHelp&) {
        return Success;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.field() << ": " << e.what() << '\n';
        return ConfigFailure;
    }
    try {
        return run(cfg);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.field() << ": " << e.what() << '\n';
        return ConfigFailure;
    } catch (const ConvergenceError& e) {
        std::cerr << "convergence failure: " << e.what() << '\n';
        return ConvergenceFailure;
    } catch (const NoContractionError& e) {
        std::cerr << "convergence failure: " << e.what() << '\n';
        return ConvergenceFailure;
    } catch (const NoLimitError& e) {
        std::cerr << "out of regime: " << e.what() << '\n';
        return OutOfRegime;
    } catch (const GridError& e) {
        std::cerr << "config error: grid: " << e.what() << '\n';
        return ConfigFailure;
    } catch (const DomainError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return ConfigFailure;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return ConvergenceFailure;
    }
}

}  // namespace sforge
