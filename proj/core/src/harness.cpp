#include "assouadlab/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include <nlohmann/json.hpp>

#include "assouadlab/errors.hpp"

namespace assouadlab {

namespace {

/// The bound formula with alpha clamped to [0, 2].
double qr_formula(double alpha, double K) {
    alpha = std::clamp(alpha, 0.0, 2.0);
    return 2.0 * K * alpha / (2.0 + (K - 1.0) * alpha);
}

std::string key_of(const SuiteSet& s, const MapExpr& m) {
    return s.spec + "#" + std::to_string(s.count) + "|" + to_string(m);
}

std::string map_text(const MapExpr& m) { return m.empty() ? "id" : to_string(m); }

double spectrum_at(const CountTable& t, double theta) {
    const double th[1] = {theta};
    return estimate_spectrum(t, th).samples.front().alpha;
}

BoundReport upper_row(std::string suite, std::string tag, const SuiteSet& src, const MapExpr& map, double K,
                      double alpha_src, double bound, double alpha_img, double tol) {
    BoundReport r;
    r.suite = std::move(suite);
    r.tag = std::move(tag);
    r.set = src.spec;
    r.map = map_text(map);
    r.K = K;
    r.alpha_src = alpha_src;
    r.bound = bound;
    r.alpha_img = alpha_img;
    r.tolerance = tol;
    r.slack = bound + tol - alpha_img;
    r.verdict = r.slack >= 0.0 ? Verdict::pass : Verdict::fail;
    return r;
}

void number_rows(std::vector<BoundReport>& rows) {
    for (std::size_t i = 0; i < rows.size(); ++i) {
        char buf[16];
        std::snprintf(buf, sizeof buf, "%03zu", i + 1);
        rows[i].row = rows[i].suite + "/" + buf;
    }
}

}  // namespace

double predict_qr_bound(double alpha, double K) {
    if (!(alpha > 0.0 && alpha < 2.0)) throw ParameterError("predict_qr_bound requires 0 < alpha < 2");
    if (!(K >= 1.0) || !std::isfinite(K)) throw ParameterError("predict_qr_bound requires finite K >= 1");
    return qr_formula(alpha, K);
}

double theta_of_t(double t) {
    if (!(t > 0.0) || !std::isfinite(t)) throw ParameterError("theta_of_t requires finite t > 0");
    return 1.0 / (1.0 + t);
}

double source_theta(double t, double K) {
    if (!(t > 0.0) || !std::isfinite(t)) throw ParameterError("source_theta requires finite t > 0");
    if (!(K >= 1.0) || !std::isfinite(K)) throw ParameterError("source_theta requires finite K >= 1");
    return K / (K + t);
}

SpectrumBound predict_spectrum_bound(double t, double K, double alpha_source) {
    return {theta_of_t(t), predict_qr_bound(alpha_source, K)};
}

double beta_intermediate(double p, double alpha) {
    if (!(p > 2.0) || !std::isfinite(p)) throw ParameterError("beta_intermediate requires finite p > 2");
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ParameterError("beta_intermediate requires alpha > 0");
    return p * alpha / (p - 2.0 + alpha);
}

std::vector<std::string> suite_names() {
    return {"holo-noincrease", "qr-bound", "spectrum-bound", "porosity-preserve", "counterexamples",
            "sharpness-sequences"};
}

std::vector<SuiteSet> suite_sources(const SuiteOptions& opt) {
    return {{"seq:1", opt.sequence_count},
            {"seq:2", opt.sequence_count},
            {"cantor:" + format_double(1.0 / 3.0) + ":8", 256},
            {"geom:0.5", 40}};
}

std::vector<MapExpr> holomorphic_suite_maps() {
    return {parse_map("pow(2)"), parse_map("pow(3)"), parse_map("poly(0,1,1)")};
}

std::vector<MapExpr> quasiregular_suite_maps() {
    std::vector<MapExpr> out;
    for (double K : {1.5, 2.0, 4.0}) {
        for (int d : {2, 3}) out.push_back(MapExpr({Primitive::stretch(K), Primitive::power(d)}));
    }
    return out;
}

std::vector<double> suite_thetas() { return {0.25, 0.5, 0.75}; }
std::vector<double> suite_ts() { return {1.0 / 3.0, 1.0, 3.0}; }

struct SuiteRunner::Entry {
    std::optional<PointSet> set;
    std::unique_ptr<CountTable> table;
    std::optional<PorosityReport> por;
};

SuiteRunner::SuiteRunner(SuiteOptions opt) : opt_(std::move(opt)) {}
SuiteRunner::~SuiteRunner() = default;

SuiteRunner::Entry& SuiteRunner::entry(const SuiteSet& src, const MapExpr& map) {
    auto& slot = cache_[key_of(src, map)];
    if (!slot) slot = std::make_unique<Entry>();
    return *slot;
}

const PointSet& SuiteRunner::normalized(const SuiteSet& src, const MapExpr& map) {
    Entry& e = entry(src, map);
    if (!e.set) {
        PointSet raw = generate(parse_set_spec(src.spec), src.count);
        if (!map.empty()) raw = apply(map, raw);
        e.set = normalize(raw).set;
    }
    return *e.set;
}

const CountTable& SuiteRunner::table(const SuiteSet& src, const MapExpr& map) {
    Entry& e = entry(src, map);
    if (!e.table) {
        EstimatorParams p = opt_.estimator;
        if (p.threads == 0) p.threads = opt_.threads;
        if (src.spec.rfind("grid:", 0) == 0) p.center_budget = std::min(p.center_budget, opt_.lattice_centers);
        e.table = std::make_unique<CountTable>(normalized(src, map), p);
    }
    return *e.table;
}

const PorosityReport& SuiteRunner::porosity(const SuiteSet& src, const MapExpr& map) {
    Entry& e = entry(src, map);
    if (!e.por) {
        PorosityParams p = opt_.porosity;
        if (p.threads == 0) p.threads = opt_.threads;
        e.por = estimate_porosity(normalized(src, map), p);
    }
    return *e.por;
}

std::vector<BoundReport> SuiteRunner::run(const std::string& name) {
    std::vector<BoundReport> rows;
    if (name == "holo-noincrease") rows = holo_noincrease();
    else if (name == "qr-bound") rows = qr_bound();
    else if (name == "spectrum-bound") rows = spectrum_bound();
    else if (name == "porosity-preserve") rows = porosity_preserve();
    else if (name == "counterexamples") rows = counterexamples();
    else if (name == "sharpness-sequences") rows = sharpness_sequences();
    else throw ParameterError("unknown suite '" + name + "'");
    number_rows(rows);
    return rows;
}

std::vector<BoundReport> SuiteRunner::holo_noincrease() {
    std::vector<BoundReport> rows;
    const MapExpr id;
    for (const auto& src : suite_sources(opt_)) {
        for (const auto& map : holomorphic_suite_maps()) {
            try {
                const CountTable& ts = table(src, id);
                const CountTable& ti = table(src, map);
                const double a = estimate_assouad(ts).value;
                rows.push_back(upper_row("holo-noincrease", "holo-assouad", src, map, 1.0, a, a,
                                         estimate_assouad(ti).value, opt_.tolerance));
                for (double th : suite_thetas()) {
                    const double s = spectrum_at(ts, th);
                    auto r = upper_row("holo-noincrease", "holo-spectrum", src, map, 1.0, s, s, spectrum_at(ti, th),
                                       opt_.tolerance);
                    r.theta = th;
                    rows.push_back(std::move(r));
                }
            } catch (const Error& ex) {
                throw Error("holo-noincrease row (" + src.spec + ", " + to_string(map) + "): " + ex.what());
            }
        }
    }
    return rows;
}

std::vector<BoundReport> SuiteRunner::qr_bound() {
    std::vector<BoundReport> rows;
    const MapExpr id;
    for (const auto& src : suite_sources(opt_)) {
        for (const auto& map : quasiregular_suite_maps()) {
            try {
                const double K = map.declared_K();
                const double a = estimate_assouad(table(src, id)).value;
                rows.push_back(upper_row("qr-bound", "qr-assouad", src, map, K, a, qr_formula(a, K),
                                         estimate_assouad(table(src, map)).value, opt_.tolerance));
            } catch (const Error& ex) {
                throw Error("qr-bound row (" + src.spec + ", " + to_string(map) + "): " + ex.what());
            }
        }
    }
    return rows;
}

std::vector<BoundReport> SuiteRunner::spectrum_bound() {
    std::vector<BoundReport> rows;
    const MapExpr id;
    for (const auto& src : suite_sources(opt_)) {
        for (const auto& map : quasiregular_suite_maps()) {
            try {
                const double K = map.declared_K();
                for (double t : suite_ts()) {
                    const double th = theta_of_t(t);
                    const double s = spectrum_at(table(src, id), source_theta(t, K));
                    auto r = upper_row("spectrum-bound", "qr-spectrum", src, map, K, s, qr_formula(s, K),
                                       spectrum_at(table(src, map), th), opt_.tolerance);
                    r.theta = th;
                    r.t = t;
                    r.note = "source read at theta=" + format_double(source_theta(t, K));
                    rows.push_back(std::move(r));
                }
            } catch (const Error& ex) {
                throw Error("spectrum-bound row (" + src.spec + ", " + to_string(map) + "): " + ex.what());
            }
        }
    }
    return rows;
}

std::vector<BoundReport> SuiteRunner::porosity_preserve() {
    std::vector<BoundReport> rows;
    const MapExpr id;
    std::vector<MapExpr> maps = holomorphic_suite_maps();
    for (const auto& m : quasiregular_suite_maps()) maps.push_back(m);
    const double lmin = opt_.porosity.lambda_min;

    auto luukkainen_row = [&](const SuiteSet& src, const MapExpr& map) {
        const DimEstimate dim = estimate_assouad(table(src, map));
        const PorosityReport& por = porosity(src, map);
        const Consistency c = check_luukkainen(dim, por, opt_.margin);
        BoundReport r;
        r.suite = "porosity-preserve";
        r.tag = "luukkainen";
        r.set = src.spec;
        r.map = map_text(map);
        r.K = map.declared_K();
        r.alpha_src = dim.value;
        r.bound = 2.0 - opt_.margin;
        r.alpha_img = por.lambda_hat;
        r.slack = por.verdict == PorosityVerdict::porous ? r.bound - dim.value : dim.value - r.bound;
        r.verdict = c == Consistency::consistent ? Verdict::pass : Verdict::fail;
        r.note = to_string(c) + " (" + to_string(por.verdict) + ")";
        return r;
    };

    for (const auto& src : suite_sources(opt_)) {
        try {
            const PorosityReport& ps = porosity(src, id);
            rows.push_back(luukkainen_row(src, id));
            for (const auto& map : maps) {
                const PorosityReport& pi = porosity(src, map);
                BoundReport r;
                r.suite = "porosity-preserve";
                r.tag = "porosity";
                r.set = src.spec;
                r.map = map_text(map);
                r.K = map.declared_K();
                r.alpha_src = ps.lambda_hat;
                r.bound = lmin;
                r.alpha_img = pi.lambda_hat;
                r.slack = pi.lambda_hat - lmin;
                if (ps.verdict != PorosityVerdict::porous) {
                    r.verdict = Verdict::pass;
                    r.note = "source not porous; nothing to preserve";
                } else {
                    r.verdict = pi.verdict == PorosityVerdict::porous ? Verdict::pass : Verdict::fail;
                    r.note = "image " + to_string(pi.verdict);
                }
                rows.push_back(std::move(r));
                rows.push_back(luukkainen_row(src, map));
            }
        } catch (const Error& ex) {
            throw Error("porosity-preserve rows for " + src.spec + ": " + ex.what());
        }
    }
    const SuiteSet lattice{"grid:512", 512u * 512u};
    try {
        rows.push_back(luukkainen_row(lattice, id));
    } catch (const Error& ex) {
        throw Error("porosity-preserve row for grid:512: " + std::string(ex.what()));
    }
    return rows;
}

std::vector<BoundReport> SuiteRunner::counterexamples() {
    std::vector<BoundReport> rows;
    const MapExpr id;
    auto classify_row = [](BoundReport& r, const std::string& reproduced) {
        if (r.slack < 0.0) {
            r.verdict = Verdict::expected_violation;
            r.note = reproduced;
        } else {
            r.verdict = Verdict::fail;
            r.note = "violation not reproduced";
        }
    };

    const SuiteSet geo{"geom:" + format_double(std::exp(-1.0)), 30};
    const MapExpr neglog({Primitive::neglog()});
    try {
        const double a = estimate_assouad(table(geo, id)).value;
        Entry& img = entry(geo, neglog);
        if (!img.set) img.set = normalize(apply(neglog, generate(parse_set_spec(geo.spec), geo.count), 0.0)).set;
        auto r = upper_row("counterexamples", "counterexample", geo, neglog, 1.0, a, a,
                           estimate_assouad(table(geo, neglog)).value, opt_.tolerance);
        classify_row(r, "holomorphic image of a set accumulating at the boundary of the domain gains dimension");
        r.note += "; exclusion 0";
        rows.push_back(std::move(r));
    } catch (const Error& ex) {
        throw Error("counterexamples row (neglog): " + std::string(ex.what()));
    }

    try {
        std::vector<Point> nat;
        for (std::size_t n = 1; n <= opt_.sequence_count; ++n) nat.emplace_back(static_cast<double>(n), 0.0);
        const PointSet naturals(std::move(nat), 1.0, "naturals");
        EstimatorParams raw = opt_.estimator;
        raw.require_normalized = false;
        if (raw.threads == 0) raw.threads = opt_.threads;
        const CountTable src_table(naturals, raw);

        EstimatorParams img = opt_.estimator;
        if (img.threads == 0) img.threads = opt_.threads;
        const MapExpr recip({Primitive::recip()});
        const CountTable img_table(normalize(apply(recip, naturals)).set, img);
        const SuiteSet label{"naturals", opt_.sequence_count};
        for (double th : suite_thetas()) {
            const double s = spectrum_at(src_table, th);
            auto r = upper_row("counterexamples", "counterexample", label, recip, 1.0, s, s, spectrum_at(img_table, th),
                               opt_.tolerance);
            r.theta = th;
            classify_row(r, "image of an unbounded set exceeds the spectrum bound");
            rows.push_back(std::move(r));
        }
    } catch (const Error& ex) {
        throw Error("counterexamples row (recip): " + std::string(ex.what()));
    }
    return rows;
}

std::vector<BoundReport> SuiteRunner::sharpness_sequences() {
    std::vector<BoundReport> rows;
    const SuiteSet src{"seq:1", opt_.sequence_count};
    for (double K : {1.0, 1.5, 2.0, 4.0}) {
        const MapExpr map({Primitive::stretch(K)});
        try {
            const CountTable& ti = table(src, map);
            for (double th : suite_thetas()) {
                const double target = std::min(1.0 / ((1.0 / K + 1.0) * (1.0 - th)), 1.0);
                const double img = spectrum_at(ti, th);
                BoundReport r;
                r.suite = "sharpness-sequences";
                r.tag = "sharpness";
                r.set = src.spec;
                r.map = map_text(map);
                r.K = K;
                r.theta = th;
                r.alpha_src = spectrum_at(table(src, MapExpr{}), th);
                r.bound = target;
                r.alpha_img = img;
                r.tolerance = opt_.tolerance;
                r.slack = opt_.tolerance - std::abs(img - target);
                r.verdict = r.slack >= 0.0 ? Verdict::pass : Verdict::fail;
                r.note = "two-sided: |image - target| <= tolerance";
                rows.push_back(std::move(r));
            }
        } catch (const Error& ex) {
            throw Error("sharpness-sequences row (K=" + format_double(K) + "): " + ex.what());
        }
    }
    return rows;
}

std::vector<BoundReport> run_suite(const std::string& name, const SuiteOptions& opt) {
    SuiteRunner runner(opt);
    return runner.run(name);
}

std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::pass: return "PASS";
        case Verdict::fail: return "FAIL";
        case Verdict::expected_violation: return "EXPECTED-VIOLATION";
    }
    return "?";
}

nlohmann::json to_json(const BoundReport& r) {
    nlohmann::json j{{"suite", r.suite},         {"row", r.row},           {"tag", r.tag},
                     {"set", r.set},             {"map", r.map},           {"K", r.K},
                     {"alpha_src", r.alpha_src}, {"bound", r.bound},       {"alpha_img", r.alpha_img},
                     {"tolerance", r.tolerance}, {"slack", r.slack},       {"verdict", to_string(r.verdict)},
                     {"note", r.note}};
    j["theta"] = r.theta ? nlohmann::json(*r.theta) : nlohmann::json(nullptr);
    j["t"] = r.t ? nlohmann::json(*r.t) : nlohmann::json(nullptr);
    return j;
}

void write_report_csv(std::ostream& os, const std::vector<BoundReport>& reports) {
    os << "suite,row,alpha_src,bound,alpha_img,slack,verdict\n";
    for (const auto& r : reports) {
        os << r.suite << ',' << r.row << ',' << format_double(r.alpha_src) << ',' << format_double(r.bound) << ','
           << format_double(r.alpha_img) << ',' << format_double(r.slack) << ',' << to_string(r.verdict) << '\n';
    }
}

bool all_expected(const std::vector<BoundReport>& reports) {
    return std::none_of(reports.begin(), reports.end(), [](const BoundReport& r) { return r.verdict == Verdict::fail; });
}

}  // namespace assouadlab
