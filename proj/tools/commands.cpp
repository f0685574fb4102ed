#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "twospine/analysis.hpp"
#include "twospine/error.hpp"
#include "twospine/exact.hpp"
#include "twospine/io.hpp"
#include "twospine/sampler.hpp"
#include "twospine/tree.hpp"

namespace twospine::cli {

namespace {

using nlohmann::json;

template <typename T>
T typed(const json& j, const std::string& key) {
    try {
        return j.get<T>();
    } catch (const json::exception&) {
        throw ConfigError("config key '" + key + "' has the wrong type");
    }
}

}  // namespace

void apply_config_json(ExperimentConfig& cfg, const json& j) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    for (const auto& [key, v] : j.items()) {
        if (key == "offspring") cfg.offspring = v;
        else if (key == "n") cfg.n = typed<std::size_t>(v, key);
        else if (key == "n_schedule") cfg.n_schedule = typed<std::vector<std::size_t>>(v, key);
        else if (key == "samples") cfg.samples = typed<std::size_t>(v, key);
        else if (key == "survivors") cfg.survivors = typed<std::size_t>(v, key);
        else if (key == "mc_n") cfg.mc_n = typed<std::size_t>(v, key);
        else if (key == "lambda_grid") cfg.lambda_grid = typed<std::vector<double>>(v, key);
        else if (key == "grid_size") cfg.grid_size = typed<std::size_t>(v, key);
        else if (key == "lambda_max") cfg.lambda_max = typed<double>(v, key);
        else if (key == "seed") cfg.seed = typed<std::uint64_t>(v, key);
        else if (key == "workers") cfg.workers = typed<unsigned>(v, key);
        else if (key == "tolerance") cfg.tolerance = typed<double>(v, key);
        else if (key == "mc_sigmas") cfg.mc_sigmas = typed<double>(v, key);
        else if (key == "out_dir") cfg.out_dir = typed<std::string>(v, key);
        else if (key == "order") cfg.order = typed<int>(v, key);
        else if (key == "functionals") cfg.functionals = typed<std::size_t>(v, key);
        else if (key == "law") cfg.law = v;
        else if (key == "sampler") cfg.sampler = typed<std::string>(v, key);
        else if (key == "keep_trees") cfg.keep_trees = typed<bool>(v, key);
        else if (key == "enumeration_cap") cfg.enumeration_cap = typed<double>(v, key);
        else throw ConfigError("unknown config key '" + key + "'");
    }
}

namespace {

struct Context {
    ExperimentConfig cfg;
    std::string command;
    std::ostream& out;
};

OffspringDistribution offspring(const ExperimentConfig& cfg) {
    if (cfg.offspring.is_null()) return binary_distribution();
    return offspring_from_json(cfg.offspring);
}

OffspringDistribution critical_offspring(const ExperimentConfig& cfg) {
    auto d = offspring(cfg);
    if (!d.is_critical())
        throw InvalidDistribution("offspring law is not critical (mean " + std::to_string(d.mean()) +
                                  ", sigma^2 " + std::to_string(d.variance()) + ")");
    return d;
}

std::vector<double> grid_or(const ExperimentConfig& cfg, std::vector<double> fallback) {
    std::vector<double> g;
    if (cfg.lambda_grid) g = *cfg.lambda_grid;
    else if (cfg.grid_size) g = linear_grid(0.0, cfg.lambda_max.value_or(10.0), *cfg.grid_size);
    else g = std::move(fallback);
    if (g.empty()) throw ConfigError("empty lambda grid");
    for (double l : g)
        if (!(l >= 0.0) || !std::isfinite(l)) throw ConfigError("lambda grid values must be finite and >= 0");
    return g;
}

MonteCarloPlan plan_of(const ExperimentConfig& cfg) {
    MonteCarloPlan p;
    p.seed = cfg.seed;
    p.workers = cfg.workers;
    return p;
}

std::string fmt(double x) {
    std::ostringstream s;
    s << std::setprecision(17) << x;
    return s.str();
}

std::string header(const Context& ctx, std::vector<std::pair<std::string, std::string>> extra = {}) {
    std::vector<std::pair<std::string, std::string>> f{{"command", ctx.command},
                                                       {"seed", std::to_string(ctx.cfg.seed)}};
    f.insert(f.end(), extra.begin(), extra.end());
    return csv_header_comment(f);
}

std::ofstream open_output(const Context& ctx, const std::string& name) {
    std::filesystem::create_directories(ctx.cfg.out_dir);
    const auto path = std::filesystem::path(ctx.cfg.out_dir) / name;
    std::ofstream os(path);
    if (!os) throw ConfigError("cannot write " + path.string());
    return os;
}

int write_verdict(const Context& ctx, const std::vector<ComparisonReport>& checks) {
    bool all = true;
    json arr = json::array();
    for (const auto& c : checks) {
        all = all && c.passed;
        arr.push_back(report_to_json(c));
    }
    json verdict{{"command", ctx.command}, {"seed", ctx.cfg.seed}, {"passed", all}, {"checks", arr}};
    open_output(ctx, ctx.command + ".verdict.json") << verdict.dump(2) << '\n';
    for (const auto& c : checks)
        ctx.out << (c.passed ? "PASS " : "FAIL ") << c.name << ' ' << c.metric << '=' << fmt(c.value)
                << " threshold=" << fmt(c.threshold) << '\n';
    return all ? kPass : kVerificationFailed;
}

ComparisonReport check(std::string name, std::string metric, double value, double threshold) {
    ComparisonReport r;
    r.name = std::move(name);
    r.metric = std::move(metric);
    r.value = value;
    r.threshold = threshold;
    r.settle();
    return r;
}

int cmd_kolmogorov(Context& ctx) {
    const auto d = critical_offspring(ctx.cfg);
    std::vector<std::size_t> schedule = ctx.cfg.n_schedule;
    if (schedule.empty()) schedule.push_back(ctx.cfg.n.value_or(100000));
    std::sort(schedule.begin(), schedule.end());
    const double tol = ctx.cfg.tolerance.value_or(0.01);
    const auto seq = kolmogorov_sequence(d, schedule.back());

    auto os = open_output(ctx, "kolmogorov.csv");
    os << header(ctx) << '\n' << "n,n_p_n_sigma2_over_2\n";
    for (std::size_t n : schedule) os << n << ',' << fmt(seq[n]) << '\n';
    return write_verdict(ctx, {check("kolmogorov_n=" + std::to_string(schedule.back()), "abs_gap_to_1",
                                     std::abs(seq[schedule.back()] - 1.0), tol)});
}

int cmd_yaglom(Context& ctx) {
    const auto d = critical_offspring(ctx.cfg);
    const std::size_t n = ctx.cfg.n.value_or(10000);
    if (n == 0) throw DomainError("yaglom needs n >= 1");
    const auto grid = grid_or(ctx.cfg, {0.0, 0.5, 1.0, 2.0, 4.0});
    const double tol = ctx.cfg.tolerance.value_or(0.01);
    const std::size_t mc_n = ctx.cfg.mc_n.value_or(std::min<std::size_t>(n, 2000));
    const std::size_t survivors = ctx.cfg.survivors.value_or(ctx.cfg.samples.value_or(20000));

    std::vector<ComparisonReport> checks;
    std::optional<TransformTable> mc;
    if (survivors > 0) {
        const auto sample = sample_conditioned(d, mc_n, survivors, plan_of(ctx.cfg));
        SampleSet s;
        s.provenance = "conditioned_plain_n=" + std::to_string(mc_n);
        s.seed = ctx.cfg.seed;
        for (auto z : sample.final_sizes) s.values.push_back(static_cast<double>(z) / static_cast<double>(mc_n));
        mc = empirical_laplace(s, grid);
        checks.push_back(yaglom_ks_report(sample, mc_n, d.variance()));
    }
    const auto exact = transform_table(d, n, TransformKind::conditional, grid);
    double gap = 0.0;
    auto os = open_output(ctx, "yaglom.csv");
    os << header(ctx, {{"n", std::to_string(n)}, {"mc_n", std::to_string(mc_n)}}) << '\n'
       << "lambda,exact_conditional,monte_carlo_conditional,exponential_limit,abs_gap\n";
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double lim = exponential_limit(d, grid[i]);
        gap = std::max(gap, std::abs(exact.values[i] - lim));
        os << fmt(grid[i]) << ',' << fmt(exact.values[i]) << ',' << (mc ? fmt(mc->values[i]) : "") << ','
           << fmt(lim) << ',' << fmt(std::abs(exact.values[i] - lim)) << '\n';
    }
    checks.insert(checks.begin(), check("yaglom_exact_n=" + std::to_string(n), "sup_gap_to_limit", gap, tol));
    return write_verdict(ctx, checks);
}

// Random bounded functional: a coefficient in [-1, 1] on the indicator of
// each population path in `paths`; zero elsewhere.
PathFunctional random_functional(const std::vector<std::vector<std::uint64_t>>& paths, Rng& rng) {
    auto coef = std::make_shared<std::map<std::vector<std::uint64_t>, double>>();
    for (const auto& p : paths) (*coef)[p] = 2.0 * uniform01(rng) - 1.0;
    return [coef](std::span<const std::uint64_t> z) {
        auto it = coef->find(std::vector<std::uint64_t>(z.begin(), z.end()));
        return it == coef->end() ? 0.0 : it->second;
    };
}

int cmd_change_of_measure(Context& ctx) {
    const auto d = critical_offspring(ctx.cfg);
    const std::size_t n = ctx.cfg.n.value_or(2);
    const int order = ctx.cfg.order.value_or(2);
    if (order != 1 && order != 2) throw DomainError("order must be 1 or 2");
    if (n == 0) throw DomainError("change-of-measure needs n >= 1");
    const double tol = ctx.cfg.tolerance.value_or(1e-10);
    const double cap = ctx.cfg.enumeration_cap.value_or(kDefaultEnumerationCap);

    const auto report = measure_report(d, n, cap);
    auto csv = open_output(ctx, "change_of_measure.csv");
    write_measure_csv(csv, report,
                      header(ctx, {{"n", std::to_string(n)}, {"order", std::to_string(order)}}));

    std::set<std::vector<std::uint64_t>> path_set;
    for (const Tree& t : enumerate_trees(n, support_of(d), cap)) {
        auto z = t.populations();
        path_set.emplace(z.begin() + 1, z.end());
    }
    const std::vector<std::vector<std::uint64_t>> paths(path_set.begin(), path_set.end());
    Rng rng = make_stream(ctx.cfg.seed, 0);
    double worst = verify_change_of_measure(d, n, [](auto) { return 1.0; }, order, cap).gap;
    for (std::size_t i = 0; i < ctx.cfg.functionals.value_or(20); ++i)
        worst = std::max(worst, verify_change_of_measure(d, n, random_functional(paths, rng), order, cap).gap);

    return write_verdict(ctx, {check("change_of_measure_order=" + std::to_string(order), "max_gap", worst, tol),
                               check("mass_G_n", "abs_gap_to_1", std::abs(report.total_gw - 1.0), tol),
                               check("mass_G_n_size_biased", "abs_gap_to_1",
                                     std::abs(report.total_size_biased - 1.0), tol),
                               check("mass_G_n_two_spine", "abs_gap_to_1",
                                     std::abs(report.total_two_spine - 1.0), tol)});
}

int cmd_two_spine(Context& ctx) {
    const auto d = critical_offspring(ctx.cfg);
    const std::size_t n = ctx.cfg.n.value_or(50);
    if (n == 0) throw DomainError("two-spine needs n >= 1");
    const auto grid = grid_or(ctx.cfg, {0.0, 0.01, 0.02, 0.05, 0.1});
    const double tol = ctx.cfg.tolerance.value_or(1e-10);
    const double sigmas = ctx.cfg.mc_sigmas.value_or(3.0);
    const std::size_t samples = ctx.cfg.samples.value_or(100000);

    std::vector<double> finals;
    if (samples > 0) {
        finals = run_chunked<double>(samples, plan_of(ctx.cfg),
                                     [&](Rng& rng, std::size_t, std::vector<double>& o) {
                                         o.push_back(static_cast<double>(
                                             sample_two_spined_path(d, n, rng).path.final_size()));
                                     });
    }
    double exact_gap = 0.0, mc_excess = 0.0;
    auto os = open_output(ctx, "two_spine.csv");
    os << header(ctx, {{"n", std::to_string(n)}, {"samples", std::to_string(samples)}}) << '\n'
       << "lambda,decomposition,factorial_moment,monte_carlo,mc_stderr\n";
    for (double l : grid) {
        const double dec = laplace_two_spine(d, n, l, TwoSpineMethod::decomposition);
        const double fm = laplace_two_spine(d, n, l, TwoSpineMethod::factorial_moment);
        exact_gap = std::max(exact_gap, std::abs(dec - fm));
        os << fmt(l) << ',' << fmt(dec) << ',' << fmt(fm) << ',';
        if (!finals.empty()) {
            double s1 = 0.0, s2 = 0.0;
            for (double z : finals) {
                const double e = std::exp(-l * z);
                s1 += e;
                s2 += e * e;
            }
            const double m = s1 / static_cast<double>(finals.size());
            const double se = std::sqrt(std::max(0.0, s2 / static_cast<double>(finals.size()) - m * m) /
                                        static_cast<double>(finals.size()));
            mc_excess = std::max(mc_excess, std::abs(m - dec) - sigmas * se - 1e-12);
            os << fmt(m) << ',' << fmt(se);
        } else {
            os << ',';
        }
        os << '\n';
    }
    std::vector<ComparisonReport> checks{check("two_spine_identity_n=" + std::to_string(n),
                                               "max_method_gap", exact_gap, tol)};
    if (!finals.empty())
        checks.push_back(check("two_spine_monte_carlo", "excess_over_" + fmt(sigmas) + "_sigma", mc_excess, 0.0));
    return write_verdict(ctx, checks);
}

std::unique_ptr<PositiveLaw> law_of(const ExperimentConfig& cfg) {
    if (cfg.law.is_null()) return exponential_law(1.0);
    const json& j = cfg.law;
    if (!j.is_object() || !j.contains("type") || !j["type"].is_string())
        throw ConfigError("law must be an object with a string 'type'");
    const auto type = j["type"].get<std::string>();
    auto num = [&](const char* key, double fallback) {
        if (!j.contains(key)) return fallback;
        if (!j[key].is_number()) throw ConfigError(std::string("law '") + key + "' must be a number");
        return j[key].get<double>();
    };
    auto only = [&](std::set<std::string> keys) {
        keys.insert("type");
        for (const auto& [k, v] : j.items())
            if (!keys.contains(k)) throw ConfigError("unknown key '" + k + "' in law");
    };
    if (type == "exponential") return only({"mean"}), exponential_law(num("mean", 1.0));
    if (type == "uniform") return only({"lo", "hi"}), uniform_law(num("lo", 0.0), num("hi", 1.0));
    if (type == "constant") return only({"value"}), constant_law(num("value", 1.0));
    if (type == "gamma") return only({"shape", "scale"}), gamma_law(num("shape", 2.0), num("scale", 1.0));
    throw ConfigError("unknown law type '" + type + "'");
}

int cmd_characterize(Context& ctx) {
    const auto law = law_of(ctx.cfg);
    CharacterizationOptions opt;
    opt.grid = grid_or(ctx.cfg, linear_grid(0.0, 10.0, 101));
    opt.samples = ctx.cfg.samples.value_or(1'000'000);
    opt.seed = ctx.cfg.seed;
    if (ctx.cfg.tolerance) opt.analytic_tolerance = *ctx.cfg.tolerance;
    if (opt.samples == 0) throw ConfigError("characterize needs samples >= 1");

    std::vector<ComparisonReport> checks;
    json results = json::array();
    for (auto c : {Characterization::x2, Characterization::lyons, Characterization::geiger}) {
        const auto r = check_characterization(*law, c, opt);
        checks.push_back(r.analytic);
        checks.back().name += ":analytic";
        checks.push_back(r.empirical);
        checks.back().name += ":empirical";
        results.push_back({{"equation", to_string(c)},
                           {"passed", r.passed()},
                           {"analytic", report_to_json(r.analytic)},
                           {"empirical", report_to_json(r.empirical)}});
    }
    open_output(ctx, "characterize.json")
        << json{{"law", law->name()}, {"seed", ctx.cfg.seed}, {"equations", results}}.dump(2) << '\n';
    return write_verdict(ctx, checks);
}

int cmd_simulate(Context& ctx) {
    const auto d = offspring(ctx.cfg);
    const std::size_t n = ctx.cfg.n.value_or(10);
    const std::size_t runs = ctx.cfg.samples.value_or(1000);
    const std::string kind = ctx.cfg.sampler;
    if (kind != "plain" && kind != "size_biased" && kind != "two_spine")
        throw ConfigError("sampler must be plain, size_biased or two_spine");
    if (kind == "two_spine" && n == 0) throw DomainError("the two-spine tree needs n >= 1");
    if (ctx.cfg.keep_trees && n > 20) throw ConfigError("--keep-trees is limited to n <= 20");

    struct Row {
        std::size_t run;
        std::uint64_t z;
        std::optional<std::size_t> split;
        json tree;
    };
    const bool keep = ctx.cfg.keep_trees;
    const auto rows = run_chunked<Row>(runs, plan_of(ctx.cfg), [&](Rng& rng, std::size_t r, std::vector<Row>& o) {
        if (kind == "plain") {
            if (keep) {
                const Tree t = sample_tree(d, n, rng);
                o.push_back({r, t.population(n), std::nullopt, tree_to_json(t)});
            } else {
                o.push_back({r, sample_path(d, n, rng).final_size(), std::nullopt, {}});
            }
        } else if (kind == "size_biased") {
            if (keep) {
                const auto t = sample_spined(d, n, rng);
                o.push_back({r, t.tree.population(n), std::nullopt, tree_to_json(t)});
            } else {
                o.push_back({r, sample_spined_path(d, n, rng).final_size(), std::nullopt, {}});
            }
        } else {
            if (keep) {
                const auto t = sample_two_spined(d, n, rng);
                o.push_back({r, t.tree.population(n), t.split, tree_to_json(t)});
            } else {
                const auto p = sample_two_spined_path(d, n, rng);
                o.push_back({r, p.path.final_size(), p.split, {}});
            }
        }
    });
    auto os = open_output(ctx, "simulate.csv");
    os << header(ctx, {{"sampler", kind}, {"n", std::to_string(n)}}) << '\n' << "run_id,n,Z_n,survived,K_n\n";
    for (const auto& r : rows)
        os << r.run << ',' << n << ',' << r.z << ',' << (r.z > 0 ? 1 : 0) << ','
           << (r.split ? std::to_string(*r.split) : "") << '\n';
    if (keep) {
        json trees = json::array();
        for (const auto& r : rows) trees.push_back(r.tree);
        open_output(ctx, "trees.json") << json{{"seed", ctx.cfg.seed}, {"sampler", kind}, {"trees", trees}}.dump()
                                       << '\n';
    }
    ctx.out << "simulated " << rows.size() << " runs\n";
    return kPass;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Critical Galton-Watson trees: exact transforms, spine samplers and limit checks", "twospine"};
    app.require_subcommand(1);

    std::string config_path, offspring_text, law_text, out_dir, sampler;
    std::uint64_t seed = 1;
    unsigned workers = 0;
    std::size_t n = 0, samples = 0, survivors = 0, mc_n = 0, functionals = 0;
    std::vector<std::size_t> schedule;
    std::vector<double> grid;
    double tolerance = 0.0;
    int order = 2;
    bool keep_trees = false;

    auto* o_config = app.add_option("--config", config_path, "JSON experiment manifest");
    auto* o_seed = app.add_option("--seed", seed, "master seed");
    auto* o_workers = app.add_option("--workers", workers, "worker threads (0: all cores)");
    auto* o_out = app.add_option("--out-dir", out_dir, "directory for CSV/JSON outputs");

    struct Flags {
        CLI::Option *offspring, *n, *schedule, *samples, *survivors, *mc_n, *grid, *tol, *order, *law,
            *sampler, *keep, *functionals;
    };
    std::map<std::string, Flags> flags;
    const std::pair<const char*, const char*> commands[] = {
        {"kolmogorov", "n p_n sigma^2/2 along a schedule of n"},
        {"yaglom", "conditional transform of Z_n/n given survival, exact and Monte Carlo"},
        {"change-of-measure", "enumeration check of the biased tree measures"},
        {"two-spine", "two-spine transform by decomposition, factorial moments and simulation"},
        {"characterize", "exponential characterization equations for a law"},
        {"simulate", "sample plain, size-biased or two-spine trees"},
    };
    for (const auto& [name, description] : commands) {
        auto* sub = app.add_subcommand(name, description);
        Flags f{};
        f.offspring = sub->add_option("--offspring", offspring_text, "offspring spec as JSON");
        f.n = sub->add_option("--n", n, "generation number");
        f.grid = sub->add_option("--lambda", grid, "lambda grid")->delimiter(',');
        f.tol = sub->add_option("--tolerance", tolerance, "pass/fail tolerance");
        f.samples = sub->add_option("--samples", samples, "Monte Carlo sample count");
        f.schedule = sub->add_option("--n-schedule", schedule, "generation numbers")->delimiter(',');
        f.survivors = sub->add_option("--survivors", survivors, "surviving runs to collect");
        f.mc_n = sub->add_option("--mc-n", mc_n, "generation number of the Monte Carlo sample");
        f.order = sub->add_option("--order", order, "bias order (1 or 2)");
        f.functionals = sub->add_option("--functionals", functionals, "random functionals to test");
        f.law = sub->add_option("--law", law_text, "law spec as JSON");
        f.sampler = sub->add_option("--sampler", sampler, "plain | size_biased | two_spine");
        f.keep = sub->add_flag("--keep-trees", keep_trees, "export full trees as JSON");
        flags[name] = f;
    }

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kPass;
    } catch (const CLI::ParseError& e) {
        err << e.what() << '\n';
        return kInvalidInput;
    }

    Context ctx{ExperimentConfig{}, app.get_subcommands().front()->get_name(), out};
    try {
        ExperimentConfig& cfg = ctx.cfg;
        if (o_config->count()) {
            std::ifstream is(config_path);
            if (!is) throw ConfigError("cannot read config " + config_path);
            json j;
            try {
                j = json::parse(is);
            } catch (const json::parse_error& e) {
                throw ConfigError(std::string("config is not valid JSON: ") + e.what());
            }
            apply_config_json(cfg, j);
        }
        auto parse_json = [](const std::string& text, const char* what) {
            try {
                return json::parse(text);
            } catch (const json::parse_error&) {
                throw ConfigError(std::string(what) + " is not valid JSON");
            }
        };
        const Flags& f = flags.at(ctx.command);
        if (o_seed->count()) cfg.seed = seed;
        if (o_workers->count()) cfg.workers = workers;
        if (o_out->count()) cfg.out_dir = out_dir;
        if (f.offspring->count()) cfg.offspring = parse_json(offspring_text, "--offspring");
        if (f.law->count()) cfg.law = parse_json(law_text, "--law");
        if (f.n->count()) cfg.n = n;
        if (f.schedule->count()) cfg.n_schedule = schedule;
        if (f.samples->count()) cfg.samples = samples;
        if (f.survivors->count()) cfg.survivors = survivors;
        if (f.mc_n->count()) cfg.mc_n = mc_n;
        if (f.grid->count()) cfg.lambda_grid = grid;
        if (f.tol->count()) cfg.tolerance = tolerance;
        if (f.order->count()) cfg.order = order;
        if (f.functionals->count()) cfg.functionals = functionals;
        if (f.sampler->count()) cfg.sampler = sampler;
        if (f.keep->count()) cfg.keep_trees = keep_trees;

        if (ctx.command == "kolmogorov") return cmd_kolmogorov(ctx);
        if (ctx.command == "yaglom") return cmd_yaglom(ctx);
        if (ctx.command == "change-of-measure") return cmd_change_of_measure(ctx);
        if (ctx.command == "two-spine") return cmd_two_spine(ctx);
        if (ctx.command == "characterize") return cmd_characterize(ctx);
        return cmd_simulate(ctx);
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kInvalidInput;
    }
}

}  // namespace twospine::cli
