#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "assouadlab/cmaps.hpp"
#include "assouadlab/dimension.hpp"
#include "assouadlab/errors.hpp"
#include "assouadlab/harness.hpp"
#include "assouadlab/pointset.hpp"
#include "assouadlab/porosity.hpp"
#include "assouadlab/refine.hpp"

namespace al = assouadlab;
using nlohmann::json;

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Globals {
    std::string config;
    unsigned threads = 0;
    bool no_timestamp = false;
    bool quiet = false;
};

struct EstimatorFlags {
    std::size_t centers = 0;
    int m_max = 0;
    double c_res = 0.0;
    std::uint64_t threshold = 0;
    double min_side = 0.0;
};

json read_config(const std::string& path) {
    if (path.empty()) return json::object();
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open config " + path);
    try {
        return json::parse(in);
    } catch (const json::exception& ex) {
        throw UsageError("config " + path + ": " + ex.what());
    }
}

unsigned resolve_thread_flag(const CLI::App& app, const Globals& g, const json& cfg) {
    if (app.count("--threads") > 0) return g.threads;
    if (cfg.contains("threads")) return cfg["threads"].get<unsigned>();
    if (const char* env = std::getenv("ASSOUADLAB_THREADS")) {
        try {
            return static_cast<unsigned>(std::stoul(env));
        } catch (const std::exception&) {
            throw UsageError("ASSOUADLAB_THREADS must be a non-negative integer");
        }
    }
    return 0;
}

al::EstimatorParams estimator_params(const json& cfg, const CLI::App& sub, const EstimatorFlags& f, unsigned threads) {
    al::EstimatorParams p;
    if (cfg.contains("estimator")) {
        const json& e = cfg["estimator"];
        p.center_budget = e.value("center_budget", p.center_budget);
        p.m_max = e.value("m_max", p.m_max);
        p.c_res = e.value("c_res", p.c_res);
        p.count_threshold = e.value("count_threshold", p.count_threshold);
        if (e.contains("min_side")) p.min_side = e["min_side"].get<double>();
        if (e.contains("R_grid")) p.R_grid = e["R_grid"].get<std::vector<double>>();
    }
    if (sub.count("--centers")) p.center_budget = f.centers;
    if (sub.count("--m-max")) p.m_max = f.m_max;
    if (sub.count("--c-res")) p.c_res = f.c_res;
    if (sub.count("--threshold")) p.count_threshold = f.threshold;
    if (sub.count("--min-side")) p.min_side = f.min_side;
    p.threads = threads;
    return p;
}

json describe(const al::EstimatorParams& p) {
    return {{"center_budget", p.center_budget}, {"m_max", p.m_max},     {"c_res", p.c_res},
            {"count_threshold", p.count_threshold}, {"R_grid", p.R_grid}, {"threads", p.threads},
            {"min_side", p.min_side ? json(*p.min_side) : json(nullptr)}};
}

al::PorosityParams porosity_params(const json& cfg, unsigned threads) {
    al::PorosityParams p;
    if (cfg.contains("porosity")) {
        const json& e = cfg["porosity"];
        p.center_budget = e.value("center_budget", p.center_budget);
        p.c_res = e.value("c_res", p.c_res);
        p.lattice = e.value("lattice", p.lattice);
        p.refine_factor = e.value("refine_factor", p.refine_factor);
        p.lambda_min = e.value("lambda_min", p.lambda_min);
        if (e.contains("r_grid")) p.r_grid = e["r_grid"].get<std::vector<double>>();
    }
    p.threads = threads;
    return p;
}

json describe(const al::PorosityParams& p) {
    return {{"center_budget", p.center_budget}, {"c_res", p.c_res}, {"lattice", p.lattice},
            {"refine_factor", p.refine_factor}, {"lambda_min", p.lambda_min}, {"r_grid", p.r_grid},
            {"threads", p.threads}};
}

void log_params(const Globals& g, const std::string& cmd, const json& params) {
    if (g.quiet) return;
    std::cerr << "assouadlab " << cmd << ": " << params.dump() << '\n';
}

std::string timestamp() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void stamp(json& j, const Globals& g) {
    if (!g.no_timestamp) j["timestamp"] = timestamp();
}

void emit(const std::string& text, const std::string& path) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw UsageError("cannot write " + path);
    out << text;
}

al::PointSet load_input(const std::string& path) {
    if (!std::filesystem::exists(path)) throw UsageError("cannot read " + path);
    return al::load(path);
}

json similarity_json(const al::Similarity& s) {
    return {{"scale", s.scale}, {"shift", {s.shift.real(), s.shift.imag()}}};
}

void add_estimator_flags(CLI::App* sub, EstimatorFlags& f) {
    sub->add_option("--centers", f.centers, "Center budget");
    sub->add_option("--m-max", f.m_max, "Deepest dyadic level");
    sub->add_option("--c-res", f.c_res, "Smallest cell side as a multiple of the resolution");
    sub->add_option("--threshold", f.threshold, "Minimum count for a pair to enter the max");
    sub->add_option("--min-side", f.min_side, "Smallest cell side (overrides --c-res)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Assouad dimension and spectrum estimation for planar point sets"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--config", g.config, "JSON file with estimator and porosity defaults");
    app.add_option("--threads", g.threads, "Worker threads (0 = all cores; env ASSOUADLAB_THREADS)");
    app.add_flag("--no-timestamp", g.no_timestamp, "Omit the timestamp field from JSON output");
    app.add_flag("-q,--quiet", g.quiet, "Do not log resolved parameters to stderr");

    std::string set_spec, map_text, in_path, out_path, theta_text, suite, csv_path, minors_path;
    std::size_t count = 0;
    bool as_json = false, witnesses = false;
    double alpha = 1.0, p = 10.0, Rprime = 0.125, exclusion = -1.0;
    int jmax = 9, jmin = 0;
    std::optional<double> theta;
    EstimatorFlags ef;

    auto* gen = app.add_subcommand("gen", "Generate a point set");
    gen->add_option("--set", set_spec, "seq:p | geom:q | cantor:r:depth | grid:n | spiral:p:tmax:step | file:path")
        ->required();
    gen->add_option("--count", count, "Number of generated elements")->required();
    gen->add_option("-o,--output", out_path, "Point file")->required();

    auto* map = app.add_subcommand("map", "Apply a map expression to a point set");
    map->add_option("--map", map_text, "e.g. \"stretch(2)|pow(3)\"")->required();
    map->add_option("-i,--input", in_path)->required();
    map->add_option("-o,--output", out_path)->required();
    map->add_option("--exclusion", exclusion, "Singularity exclusion radius (default 1e-9 x diameter)");

    auto* dim = app.add_subcommand("dim", "Estimate the Assouad dimension");
    dim->add_option("-i,--input", in_path)->required();
    dim->add_flag("--json", as_json, "Emit the full estimate as JSON");
    dim->add_option("-o,--output", out_path);
    add_estimator_flags(dim, ef);

    auto* spec = app.add_subcommand("spectrum", "Estimate the regularized spectrum on a theta grid");
    spec->add_option("-i,--input", in_path)->required();
    spec->add_option("--theta", theta_text, "a:b:step or a single value")->required();
    spec->add_option("-o,--output", out_path, "CSV file (stdout when omitted)");
    add_estimator_flags(spec, ef);

    auto* ref = app.add_subcommand("refine", "Major/minor dyadic refinement rate sweep");
    ref->add_option("--map", map_text, "Holomorphic map expression")->required();
    ref->add_option("--alpha", alpha)->required();
    ref->add_option("--p", p)->required();
    ref->add_option("--Rprime", Rprime)->required();
    ref->add_option("--jmax", jmax)->required();
    ref->add_option("--jmin", jmin, "First j (default j0)");
    ref->add_option("--theta", theta, "Optional spectrum constraint for j0");
    ref->add_option("--set", set_spec, "Source set refined from (default seq:1)");
    ref->add_option("--count", count, "Source sample size (default 10000)");
    ref->add_option("--minors", minors_path, "CSV of minor squares for j = jmax");
    ref->add_option("-o,--output", out_path, "JSON file (stdout when omitted)");

    auto* por = app.add_subcommand("porosity", "Estimate a porosity constant");
    por->add_option("-i,--input", in_path)->required();
    por->add_flag("--witnesses", witnesses, "Include every probe witness");
    por->add_option("-o,--output", out_path);

    auto* ver = app.add_subcommand("verify", "Run a verification suite");
    ver->add_option("--suite", suite, "holo-noincrease | qr-bound | spectrum-bound | porosity-preserve | "
                                      "counterexamples | sharpness-sequences | all")
        ->required();
    ver->add_option("-o,--output", out_path, "JSON report (stdout when omitted)");
    ver->add_option("--csv", csv_path, "CSV summary");
    ver->add_option("--count", count, "Sequence sample size (default 10000)");
    add_estimator_flags(ver, ef);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        const json cfg = read_config(g.config);
        const unsigned threads = resolve_thread_flag(app, g, cfg);

        if (*gen) {
            log_params(g, "gen", {{"set", set_spec}, {"count", count}});
            al::save(al::generate(al::parse_set_spec(set_spec), count), out_path);
            return 0;
        }
        if (*map) {
            const al::MapExpr expr = al::parse_map(map_text);
            const al::PointSet e = load_input(in_path);
            const double eps = exclusion >= 0.0 ? exclusion : al::default_exclusion(e);
            log_params(g, "map", {{"map", al::to_string(expr)}, {"exclusion", eps}});
            al::ApplyInfo info;
            const al::PointSet img = al::apply(expr, e, eps, &info);
            al::save(img, out_path);
            if (!g.quiet) {
                std::cerr << "assouadlab map: " << img.size() << " points, " << info.duplicates_dropped
                          << " duplicates dropped, resolution is a consecutive-gap heuristic\n";
            }
            return 0;
        }
        if (*dim) {
            const auto params = estimator_params(cfg, *dim, ef, threads);
            log_params(g, "dim", describe(params));
            const auto n = al::normalize(load_input(in_path));
            const al::DimEstimate d = al::estimate_assouad(n.set, params);
            if (as_json) {
                json j = al::to_json(d);
                j["similarity"] = similarity_json(n.similarity);
                j["params"] = describe(params);
                stamp(j, g);
                emit(j.dump(2) + "\n", out_path);
            } else {
                emit(al::format_double(d.value) + "\n", out_path);
            }
            return 0;
        }
        if (*spec) {
            const auto params = estimator_params(cfg, *spec, ef, threads);
            log_params(g, "spectrum", describe(params));
            const auto thetas = al::parse_theta_range(theta_text);
            const auto n = al::normalize(load_input(in_path));
            const auto curve = al::estimate_spectrum(n.set, thetas, params);
            std::ostringstream os;
            al::write_spectrum_csv(os, curve);
            emit(os.str(), out_path);
            return 0;
        }
        if (*ref) {
            const al::MapExpr h = al::parse_map(map_text);
            if (!h.holomorphic()) throw UsageError("refine needs a holomorphic map expression");
            const al::RefineSchedule s(Rprime, h.holomorphic_degree(), alpha, p, theta);
            const std::string src = set_spec.empty() ? "seq:1" : set_spec;
            const std::size_t n = count == 0 ? 10000 : count;
            const int j_lo = jmin > 0 ? jmin : s.j0();
            log_params(g, "refine", {{"schedule", al::to_json(s)}, {"set", src}, {"count", n}, {"jmin", j_lo},
                                     {"jmax", jmax}, {"threads", threads}});
            const al::PointSet e = al::generate(al::parse_set_spec(src), n);
            const al::RateSweep sweep = al::rate_sweep(h, e, s, j_lo, jmax, threads);
            json j{{"map", al::to_string(h)}, {"set", src}, {"count", n}, {"schedule", al::to_json(s)},
                   {"sweep", al::to_json(sweep)}};
            if (!minors_path.empty()) {
                const al::Square root{{0.0, 0.0}, s.R()};
                al::RefineOptions o;
                o.start = al::occupied_dyadic(root, e.points(), jmax);
                o.threads = threads;
                const al::RefineResult r = al::refine(h, root, s.r_prime(jmax), o);
                std::ostringstream os;
                al::write_minors_csv(os, r);
                emit(os.str(), minors_path);
                j["last"] = al::to_json(r);
            }
            stamp(j, g);
            emit(j.dump(2) + "\n", out_path);
            return 0;
        }
        if (*por) {
            al::PorosityParams params = porosity_params(cfg, threads);
            params.keep_witnesses = witnesses;
            log_params(g, "porosity", describe(params));
            const auto n = al::normalize(load_input(in_path));
            const al::PorosityReport r = al::estimate_porosity(n.set, params);
            json j = al::to_json(r, witnesses);
            j["similarity"] = similarity_json(n.similarity);
            stamp(j, g);
            emit(j.dump(2) + "\n", out_path);
            return 0;
        }
        if (*ver) {
            al::SuiteOptions opt;
            opt.threads = threads;
            if (count > 0) opt.sequence_count = count;
            opt.estimator = estimator_params(cfg, *ver, ef, threads);
            opt.porosity = porosity_params(cfg, threads);
            log_params(g, "verify", {{"suite", suite}, {"sequence_count", opt.sequence_count},
                                     {"estimator", describe(opt.estimator)}, {"porosity", describe(opt.porosity)}});
            std::vector<std::string> names;
            if (suite == "all") {
                names = al::suite_names();
            } else {
                const auto known = al::suite_names();
                if (std::find(known.begin(), known.end(), suite) == known.end()) {
                    throw UsageError("unknown suite '" + suite + "'");
                }
                names = {suite};
            }
            al::SuiteRunner runner(opt);
            std::vector<al::BoundReport> reports;
            for (const auto& name : names) {
                auto rows = runner.run(name);
                reports.insert(reports.end(), rows.begin(), rows.end());
            }
            json arr = json::array();
            for (const auto& r : reports) arr.push_back(al::to_json(r));
            json j{{"reports", arr}, {"all_expected", al::all_expected(reports)}};
            stamp(j, g);
            emit(j.dump(2) + "\n", out_path);
            if (!csv_path.empty()) {
                std::ostringstream os;
                al::write_report_csv(os, reports);
                emit(os.str(), csv_path);
            }
            return al::all_expected(reports) ? 0 : 1;
        }
    } catch (const UsageError& ex) {
        std::cerr << "assouadlab: " << ex.what() << '\n';
        return 2;
    } catch (const al::ParseError& ex) {
        std::cerr << "assouadlab: " << ex.what() << '\n';
        return 2;
    } catch (const al::ParameterError& ex) {
        std::cerr << "assouadlab: " << ex.what() << '\n';
        return 2;
    } catch (const std::exception& ex) {
        std::cerr << "assouadlab: " << ex.what() << '\n';
        return 1;
    }
    return 2;
}
