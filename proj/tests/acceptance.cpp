#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "assouadlab/cmaps.hpp"
#include "assouadlab/covering.hpp"
#include "assouadlab/dimension.hpp"
#include "assouadlab/errors.hpp"
#include "assouadlab/harness.hpp"
#include "assouadlab/pointset.hpp"
#include "assouadlab/porosity.hpp"
#include "assouadlab/refine.hpp"

using namespace assouadlab;

namespace {

constexpr double kBand = 0.1;
constexpr std::size_t kSequenceCount = 10000;
constexpr double kHoloTol = 0.1;
constexpr double kQrTol = 0.1;
constexpr double kRateTol = 0.15;
constexpr double kLuukkainenMargin = 0.15;
constexpr double kIdentityTol = 1e-12;
constexpr double kCounterSourceMax = 0.2;
constexpr double kCounterImageMin = 0.8;
constexpr int kOracleInstances = 50;
constexpr std::size_t kOracleMaxPoints = 500;

struct Outcome {
    bool ok = true;
    std::string detail;
};

void fail(Outcome& o, const std::string& what) {
    if (o.ok) o.detail = what;
    o.ok = false;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

double spectrum_of(const CountTable& t, double theta) {
    const double th[1] = {theta};
    return estimate_spectrum(t, th).samples.front().alpha;
}

PointSet normalized_image(const MapExpr& h, const PointSet& raw) { return normalize(apply(h, raw)).set; }

// Criteria 1 and 2 share these tables.
struct SequenceTables {
    PointSet seq1_raw;
    CountTable seq1;
    CountTable seq2;
    CountTable seq1_sq;
};

SequenceTables build_sequences() {
    const EstimatorParams p;
    PointSet s1 = generate(parse_set_spec("seq:1"), kSequenceCount);
    const PointSet s2 = generate(parse_set_spec("seq:2"), kSequenceCount);
    CountTable t1(normalize(s1).set, p);
    CountTable t2(normalize(s2).set, p);
    CountTable t3(normalized_image(parse_map("pow(2)"), s1), p);
    return {std::move(s1), std::move(t1), std::move(t2), std::move(t3)};
}

Outcome criterion1(const SequenceTables& t) {
    Outcome o;
    std::string values;
    for (double th : {0.25, 0.5, 0.75}) {
        const double want1 = std::min(1.0 / (2.0 * (1.0 - th)), 1.0);
        const double want2 = std::min(1.0 / (3.0 * (1.0 - th)), 1.0);
        const double got1 = spectrum_of(t.seq1, th);
        const double got2 = spectrum_of(t.seq2, th);
        values += " " + fmt(got1) + "/" + fmt(got2);
        if (std::abs(got1 - want1) > kBand) fail(o, "seq:1 at theta " + fmt(th) + " gave " + fmt(got1));
        if (std::abs(got2 - want2) > kBand) fail(o, "seq:2 at theta " + fmt(th) + " gave " + fmt(got2));
    }
    if (o.ok) o.detail = "seq:1/seq:2 at 0.25,0.5,0.75:" + values;
    return o;
}

Outcome criterion2(const SequenceTables& t) {
    Outcome o;
    const double img = spectrum_of(t.seq1_sq, 0.5);
    const double src = spectrum_of(t.seq1, 0.5);
    if (!(img >= 0.57 && img <= 0.77)) fail(o, "image " + fmt(img) + " outside [0.57, 0.77]");
    if (!(src >= 0.9 && src <= 1.0)) fail(o, "source " + fmt(src) + " outside [0.9, 1]");
    if (!(img < src)) fail(o, "strict inequality lost");
    if (o.ok) o.detail = "image " + fmt(img) + " < source " + fmt(src);
    return o;
}

Outcome criterion3(SuiteRunner& runner) {
    Outcome o;
    const PointSet raw = generate(parse_set_spec("geom:" + format_double(std::exp(-1.0))), 30);
    const EstimatorParams p;
    const double src = estimate_assouad(normalize(raw).set, p).value;
    const double img = estimate_assouad(normalize(apply(parse_map("neglog"), raw, 0.0)).set, p).value;
    if (src > kCounterSourceMax) fail(o, "source " + fmt(src) + " above " + fmt(kCounterSourceMax));
    if (img < kCounterImageMin) fail(o, "image " + fmt(img) + " below " + fmt(kCounterImageMin));
    const auto rows = runner.run("counterexamples");
    const auto it = std::find_if(rows.begin(), rows.end(), [](const BoundReport& r) { return r.map == "neglog"; });
    if (it == rows.end()) {
        fail(o, "no neglog row in the counterexample suite");
    } else if (it->verdict != Verdict::expected_violation) {
        fail(o, "neglog row verdict " + to_string(it->verdict));
    }
    if (o.ok) o.detail = "source " + fmt(src) + ", image " + fmt(img) + ", EXPECTED-VIOLATION";
    return o;
}

Outcome criterion4(SuiteRunner& runner, const SuiteOptions& opt) {
    Outcome o;
    const MapExpr id;
    double worst = INFINITY;
    int rows = 0;
    for (const auto& src : suite_sources(opt)) {
        const CountTable& ts = runner.table(src, id);
        for (const auto& h : holomorphic_suite_maps()) {
            const CountTable& ti = runner.table(src, h);
            auto check = [&](double a_src, double a_img, const std::string& where) {
                ++rows;
                const double slack = a_src + kHoloTol - a_img;
                worst = std::min(worst, slack);
                if (slack < 0.0) fail(o, where + ": " + fmt(a_img) + " > " + fmt(a_src) + " + tol");
            };
            const std::string tag = src.spec + " " + to_string(h);
            check(estimate_assouad(ts).value, estimate_assouad(ti).value, tag);
            for (double th : {0.25, 0.5, 0.75}) {
                check(spectrum_of(ts, th), spectrum_of(ti, th), tag + " theta " + fmt(th));
            }
        }
    }
    if (rows != 48) fail(o, "expected 48 rows, checked " + std::to_string(rows));
    if (o.ok) o.detail = std::to_string(rows) + " rows, min slack " + fmt(worst);
    return o;
}

double qr_oracle(double a, double K) { return 2.0 * K * a / (2.0 + (K - 1.0) * a); }

Outcome criterion5(SuiteRunner& runner, const SuiteOptions& opt) {
    Outcome o;
    const MapExpr id;
    double worst = INFINITY;
    int rows = 0;
    std::set<std::pair<double, int>> kd;
    for (const auto& src : suite_sources(opt)) {
        const CountTable& ts = runner.table(src, id);
        for (const auto& h : quasiregular_suite_maps()) {
            const double K = h.declared_K();
            kd.insert({K, h.holomorphic_degree()});
            const CountTable& ti = runner.table(src, h);
            const std::string tag = src.spec + " " + to_string(h);
            auto check = [&](double bound, double a_img, const std::string& where) {
                ++rows;
                const double slack = bound + kQrTol - a_img;
                worst = std::min(worst, slack);
                if (slack < 0.0) fail(o, where + ": " + fmt(a_img) + " > bound " + fmt(bound) + " + tol");
            };
            check(qr_oracle(estimate_assouad(ts).value, K), estimate_assouad(ti).value, tag);
            for (double t : {1.0 / 3.0, 1.0, 3.0}) {
                const double a_src = spectrum_of(ts, K / (K + t));
                check(qr_oracle(a_src, K), spectrum_of(ti, 1.0 / (1.0 + t)), tag + " t " + fmt(t));
            }
        }
    }
    if (kd.size() != 6) fail(o, "map suite does not cover K in {1.5,2,4} x d in {2,3}");
    if (rows != 96) fail(o, "expected 96 rows, checked " + std::to_string(rows));
    if (o.ok) o.detail = std::to_string(rows) + " rows, min slack " + fmt(worst);
    return o;
}

// Image diameter of the square sampled on a lattice, a lower bound for the true one.
double sampled_image_diameter(const MapExpr& h, const Square& q) {
    constexpr int n = 5;
    std::vector<Point> img;
    for (int i = 0; i < n; ++i) {
        for (int k = 0; k < n; ++k) {
            const Point z{q.x_min() + q.side() * i / (n - 1), q.y_min() + q.side() * k / (n - 1)};
            img.push_back(h.eval(z));
        }
    }
    double d = 0.0;
    for (const auto& a : img) {
        for (const auto& b : img) d = std::max(d, std::abs(a - b));
    }
    return d;
}

Outcome criterion6(const PointSet& seq1) {
    Outcome o;
    std::string slopes;
    for (int d : {2, 3}) {
        const MapExpr h = parse_map("pow(" + std::to_string(d) + ")");
        const RefineSchedule s(0.125, d, 1.0, 10.0);
        const double beta = 10.0 / 9.0;
        if (std::abs(s.beta() - beta) > kIdentityTol) fail(o, "beta mismatch");
        if (std::abs(s.R() - std::pow(0.25, 1.0 / d)) > kIdentityTol) fail(o, "R mismatch");
        const int j0 = s.j0();
        const Square root{{0.0, 0.0}, s.R()};
        for (int j = j0; j <= j0 + 8; ++j) {
            const double target = std::exp2(-j / beta) * 0.125;
            if (std::abs(s.r_prime(j) - target) > kIdentityTol * target) fail(o, "r'_j mismatch at j=" + std::to_string(j));
            RefineOptions opts;
            opts.start = occupied_dyadic(root, seq1.points(), j);
            const RefineResult r = refine(h, root, target, opts);
            if (!r.conserved) fail(o, "conservation flag off at j=" + std::to_string(j));
            if (r.minors.empty()) {
                fail(o, "no minors at j=" + std::to_string(j));
                continue;
            }

            const int deepest = std::max_element(r.minors.begin(), r.minors.end(), [](const auto& a, const auto& b) {
                                    return a.level < b.level;
                                })->level;
            unsigned __int128 start_area = 0, minor_area = 0;
            for (const auto& q : opts.start) start_area += static_cast<unsigned __int128>(1) << (2 * (deepest - q.level));
            std::set<DyadicIndex> starts(opts.start.begin(), opts.start.end());
            std::set<DyadicIndex> seen;
            for (const auto& q : r.minors) {
                minor_area += static_cast<unsigned __int128>(1) << (2 * (deepest - q.level));
                const int up = q.level - j;
                if (up < 0 || !starts.count({j, q.ix >> up, q.iy >> up})) fail(o, "minor outside the start squares");
                for (int l = j; l < q.level; ++l) {
                    if (seen.count({l, q.ix >> (q.level - l), q.iy >> (q.level - l)})) fail(o, "nested minors");
                }
                seen.insert(q);

                const Square sq = dyadic_square(root, q);
                double zmax = 0.0;
                for (double x : {sq.x_min(), sq.x_max()}) {
                    for (double y : {sq.y_min(), sq.y_max()}) zmax = std::max(zmax, std::hypot(x, y));
                }
                const double lip = d * std::pow(zmax, d - 1);
                if (lip * sq.diameter() > target * (1.0 + kIdentityTol)) fail(o, "uncertified minor");
                if (sampled_image_diameter(h, sq) > target * (1.0 + kIdentityTol)) fail(o, "minor image too wide");
            }
            if (start_area != minor_area) fail(o, "area not conserved at j=" + std::to_string(j));
        }
        const RateSweep sw = rate_sweep(h, seq1, s, j0, j0 + 8);
        std::vector<double> xs, ys;
        for (const auto& row : sw.rows) {
            if (!row.conserved) fail(o, "sweep row not conserved");
            if (row.major_sum > 0) {
                xs.push_back(row.j);
                ys.push_back(std::log2(static_cast<double>(row.major_sum)));
            }
        }
        double mx = 0, my = 0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            mx += xs[i] / xs.size();
            my += ys[i] / ys.size();
        }
        double sxy = 0, sxx = 0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            sxy += (xs[i] - mx) * (ys[i] - my);
            sxx += (xs[i] - mx) * (xs[i] - mx);
        }
        const double slope = xs.size() >= 2 ? sxy / sxx : 0.0;
        if (std::abs(slope - sw.slope) > 1e-9) fail(o, "reported slope differs from refit");
        if (slope > 1.0 + kRateTol) fail(o, "pow(" + std::to_string(d) + ") slope " + fmt(slope));
        slopes += " d=" + std::to_string(d) + ":" + fmt(slope);
    }
    if (o.ok) o.detail = "fitted exponents" + slopes;
    return o;
}

std::uint64_t dyadic_oracle(std::span<const Point> pts, Point z, double R, int m) {
    std::set<std::pair<long long, long long>> cells;
    for (const auto& p : pts) {
        if (dist2(p, z) >= R * R) continue;
        const double s = std::ldexp(2.0 * R, -m);
        cells.insert({static_cast<long long>(std::floor((p.real() - z.real()) / s)),
                      static_cast<long long>(std::floor((p.imag() - z.imag()) / s))});
    }
    return cells.size();
}

Outcome criterion7() {
    Outcome o;
    std::mt19937_64 rng(20240917);
    int exact = 0;
    for (int inst = 0; inst < kOracleInstances; ++inst) {
        std::uniform_int_distribution<std::size_t> size_d(2, kOracleMaxPoints);
        const std::size_t n = size_d(rng);
        std::vector<Point> pts;
        std::uniform_real_distribution<double> u(-0.25, 0.25);
        if (inst % 3 == 0) {
            for (std::size_t i = 0; i < n; ++i) pts.emplace_back(u(rng), u(rng));
        } else if (inst % 3 == 1) {
            for (std::size_t i = 0; i < n; ++i) pts.emplace_back(u(rng), 0.0);
        } else {
            std::uniform_int_distribution<int> lat(-40, 40);
            for (std::size_t i = 0; i < n; ++i) pts.emplace_back(lat(rng) / 160.0, lat(rng) / 160.0);
        }
        std::sort(pts.begin(), pts.end(), lex_less);
        pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
        const PointSet e(pts, 1e-6);
        const Point z = pts[std::uniform_int_distribution<std::size_t>(0, pts.size() - 1)(rng)];
        const double R = std::ldexp(1.0, -std::uniform_int_distribution<int>(1, 5)(rng));
        const int m = std::uniform_int_distribution<int>(1, 6)(rng);
        const double s = std::ldexp(2.0 * R, -m);

        const std::uint64_t dy = count_dyadic(e, z, R, m);
        if (dy != dyadic_oracle(pts, z, R, m)) fail(o, "count_dyadic differs from per-point oracle");
        const CoverBounds coarse = count_bruteforce(e, z, R, std::min(std::sqrt(2.0) * s, 2.0 * R));
        const CoverBounds fine = count_bruteforce(e, z, R, s);
        if (coarse.lower > dy) fail(o, "lower sandwich broken");
        if (dy > 4 * fine.upper) fail(o, "upper sandwich broken");
        if (coarse.exact() && fine.exact()) {
            ++exact;
            if (!(coarse.lower <= dy && dy <= 4 * fine.lower)) fail(o, "exact sandwich broken");
        }
    }
    if (exact == 0) fail(o, "no instance had exact brute-force counts");
    if (o.ok) o.detail = std::to_string(kOracleInstances) + " instances, " + std::to_string(exact) + " exact";
    return o;
}

Outcome criterion8(SuiteRunner& runner, const SuiteOptions& opt) {
    Outcome o;
    const MapExpr id;
    std::vector<MapExpr> maps = holomorphic_suite_maps();
    for (const auto& m : quasiregular_suite_maps()) maps.push_back(m);
    int preserved = 0, consistent = 0;
    auto luukkainen = [&](const SuiteSet& src, const MapExpr& h) {
        const double dim = estimate_assouad(runner.table(src, h)).value;
        const PorosityReport& por = runner.porosity(src, h);
        if (!witness_is_empty(runner.normalized(src, h), por.worst)) fail(o, "worst hole witness is not empty");
        const bool porous = por.lambda_hat >= opt.porosity.lambda_min;
        const bool thin = dim < 2.0 - kLuukkainenMargin;
        if (por.lambda_hat >= 0.5 * opt.porosity.lambda_min && !porous) {
            fail(o, src.spec + " " + to_string(h) + " porosity inconclusive");
        } else if (porous != thin) {
            fail(o, src.spec + " " + to_string(h) + " dim " + fmt(dim) + " lambda " + fmt(por.lambda_hat));
        } else {
            ++consistent;
        }
    };
    for (const auto& src : suite_sources(opt)) {
        const PorosityReport& ps = runner.porosity(src, id);
        luukkainen(src, id);
        for (const auto& h : maps) {
            const PorosityReport& pi = runner.porosity(src, h);
            if (ps.lambda_hat >= opt.porosity.lambda_min) {
                if (pi.lambda_hat < opt.porosity.lambda_min) {
                    fail(o, src.spec + " " + to_string(h) + " lost porosity: " + fmt(pi.lambda_hat));
                } else {
                    ++preserved;
                }
            }
            luukkainen(src, h);
        }
    }
    luukkainen({"grid:512", 512u * 512u}, id);
    if (o.ok) {
        o.detail = std::to_string(preserved) + " porous images, " + std::to_string(consistent) + " consistent rows";
    }
    return o;
}

Outcome criterion9() {
    Outcome o;
    std::vector<double> alphas, Ks;
    for (int i = 0; i < 10; ++i) alphas.push_back(0.05 + 0.19 * i);
    for (int i = 0; i < 10; ++i) Ks.push_back(1.0 + 0.5 * i);
    for (double a : alphas) {
        if (std::abs(predict_qr_bound(a, 1.0) - a) > kIdentityTol) fail(o, "K=1 bound differs from alpha");
    }
    for (std::size_t i = 0; i < alphas.size(); ++i) {
        for (std::size_t k = 0; k < Ks.size(); ++k) {
            const double b = predict_qr_bound(alphas[i], Ks[k]);
            if (std::abs(b - qr_oracle(alphas[i], Ks[k])) > kIdentityTol) fail(o, "bound differs from closed form");
            if (!(b < 2.0)) fail(o, "bound reaches 2");
            if (i > 0 && !(b > predict_qr_bound(alphas[i - 1], Ks[k]))) fail(o, "bound not increasing in alpha");
            if (k > 0 && !(b >= predict_qr_bound(alphas[i], Ks[k - 1]))) fail(o, "bound not monotone in K");
        }
    }
    for (double p : {2.5, 3.0, 4.0, 6.0, 10.0, 20.0, 50.0, 100.0, 1e3, 1e4}) {
        for (double a : alphas) {
            const double beta = beta_intermediate(p, a);
            if (std::abs(-(p - 2.0) + a * p / beta - a) > kIdentityTol) fail(o, "beta identity broken");
        }
    }
    for (double t : {1e-3, 0.1, 1.0 / 3.0, 1.0, 3.0, 10.0}) {
        if (std::abs(theta_of_t(t) - 1.0 / (1.0 + t)) > kIdentityTol) fail(o, "theta(t) mismatch");
    }
    for (double K : Ks) {
        for (double a : alphas) {
            const SpectrumBound sb = predict_spectrum_bound(1e-14, K, a);
            if (std::abs(sb.theta - 1.0) > kIdentityTol) fail(o, "theta limit is not 1");
            if (std::abs(sb.bound - predict_qr_bound(a, K)) > kIdentityTol) fail(o, "t -> 0 limit mismatch");
            if (std::abs(source_theta(1e-14, K) - 1.0) > kIdentityTol) fail(o, "source theta limit is not 1");
        }
    }
    if (o.ok) o.detail = "100-point grid, 10 values of p";
    return o;
}

}  // namespace

int main() {
    using clock = std::chrono::steady_clock;
    const auto t_start = clock::now();
    int failures = 0;
    auto report = [&](int n, const std::string& name, const std::function<Outcome()>& run) {
        const auto t0 = clock::now();
        Outcome o;
        try {
            o = run();
        } catch (const std::exception& ex) {
            o.ok = false;
            o.detail = std::string("exception: ") + ex.what();
        }
        const double secs = std::chrono::duration<double>(clock::now() - t0).count();
        if (!o.ok) ++failures;
        std::printf("%s criterion %d (%s): %s [%.1fs]\n", o.ok ? "PASS" : "FAIL", n, name.c_str(), o.detail.c_str(),
                    secs);
        std::fflush(stdout);
    };

    SuiteOptions opt;
    SuiteRunner runner(opt);
    std::optional<SequenceTables> seq;
    auto sequences = [&]() -> const SequenceTables& {
        if (!seq) seq.emplace(build_sequences());
        return *seq;
    };

    report(1, "spectrum closed forms", [&] { return criterion1(sequences()); });
    report(2, "strict decrease under pow(2)", [&] { return criterion2(sequences()); });
    report(3, "neglog counterexample", [&] { return criterion3(runner); });
    report(4, "holomorphic non-increase", [&] { return criterion4(runner, opt); });
    report(5, "quasiregular bound", [&] { return criterion5(runner, opt); });
    report(6, "refinement rate", [&] { return criterion6(sequences().seq1_raw); });
    report(7, "dyadic oracle sandwich", [] { return criterion7(); });
    report(8, "porosity preservation", [&] { return criterion8(runner, opt); });
    report(9, "formula identities", [] { return criterion9(); });

    std::printf("%d of 9 criteria failed [%.1fs total]\n", failures,
                std::chrono::duration<double>(clock::now() - t_start).count());
    return failures == 0 ? 0 : 1;
}
