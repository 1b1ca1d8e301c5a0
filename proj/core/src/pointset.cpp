#include "assouadlab/pointset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "assouadlab/errors.hpp"

namespace assouadlab {

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

namespace {

void check_unique(std::span<const Point> pts) {
    std::vector<std::size_t> idx(pts.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return lex_less(pts[a], pts[b]); });
    for (std::size_t k = 1; k < idx.size(); ++k) {
        if (pts[idx[k]] == pts[idx[k - 1]]) {
            throw ParameterError("duplicate point at index " + std::to_string(std::max(idx[k], idx[k - 1])));
        }
    }
}

double cross(const Point& o, const Point& a, const Point& b) {
    return (a.real() - o.real()) * (b.imag() - o.imag()) - (a.imag() - o.imag()) * (b.real() - o.real());
}

std::vector<Point> convex_hull(std::vector<Point> pts) {
    std::sort(pts.begin(), pts.end(), lex_less);
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    if (pts.size() < 3) return pts;
    std::vector<Point> hull(2 * pts.size());
    std::size_t k = 0;
    for (const auto& p : pts) {
        while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0) --k;
        hull[k++] = p;
    }
    for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
        while (k >= t && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
        hull[k++] = pts[i];
    }
    hull.resize(k - 1);
    return hull;
}

std::vector<Point> dedupe_keep_first(const std::vector<Point>& pts) {
    std::vector<std::size_t> idx(pts.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return lex_less(pts[a], pts[b]); });
    std::vector<char> keep(pts.size(), 1);
    for (std::size_t k = 1; k < idx.size(); ++k) {
        if (pts[idx[k]] == pts[idx[k - 1]]) keep[idx[k]] = 0;
    }
    std::vector<Point> out;
    out.reserve(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
        if (keep[i]) out.push_back(pts[i]);
    }
    return out;
}

double parse_number(const std::string& s, std::size_t line) {
    double v = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    while (first < last && (*first == ' ' || *first == '\t')) ++first;
    while (last > first && (last[-1] == ' ' || last[-1] == '\t' || last[-1] == '\r')) --last;
    if (first < last && *first == '+') ++first;
    auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc{} || res.ptr != last) throw ParseError(line, "malformed number '" + s + "'");
    if (!std::isfinite(v)) throw ParseError(line, "non-finite coordinate '" + s + "'");
    return v;
}

void require(bool ok, const std::string& what) {
    if (!ok) throw ParameterError(what);
}

}  // namespace

PointSet::PointSet(std::vector<Point> points, double resolution, std::string label)
    : points_(std::move(points)), resolution_(resolution), label_(std::move(label)) {
    if (points_.empty()) throw ParameterError("empty point set");
    for (const auto& p : points_) {
        if (!std::isfinite(p.real()) || !std::isfinite(p.imag())) throw ParameterError("non-finite coordinate");
    }
    if (!(resolution_ > 0.0) || !std::isfinite(resolution_)) throw ParameterError("resolution must be positive");
    check_unique(points_);
    if (points_.size() > 1 && resolution_ > diameter()) {
        throw ParameterError("resolution exceeds the set diameter");
    }
}

double diameter_of(std::span<const Point> pts) {
    const auto hull = convex_hull(std::vector<Point>(pts.begin(), pts.end()));
    double best = 0.0;
    for (std::size_t i = 0; i < hull.size(); ++i) {
        for (std::size_t j = i + 1; j < hull.size(); ++j) best = std::max(best, dist2(hull[i], hull[j]));
    }
    return std::sqrt(best);
}

double PointSet::diameter() const { return diameter_of(points_); }

Point PointSet::lex_min() const { return *std::min_element(points_.begin(), points_.end(), lex_less); }

double min_consecutive_gap(std::span<const Point> pts) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < pts.size(); ++i) {
        const double g = dist(pts[i - 1], pts[i]);
        if (g > 0.0) best = std::min(best, g);
    }
    return std::isfinite(best) ? best : 0.0;
}

SetSpec parse_set_spec(const std::string& text) {
    const auto colon = text.find(':');
    if (colon == std::string::npos) throw ParameterError("set spec needs '<kind>:<params>': " + text);
    const std::string kind = text.substr(0, colon);
    const std::string rest = text.substr(colon + 1);
    if (kind == "file") return spec::Explicit{rest};

    std::vector<double> args;
    std::stringstream ss(rest);
    std::string tok;
    while (std::getline(ss, tok, ':')) {
        try {
            args.push_back(parse_number(tok, 0));
        } catch (const ParseError& e) {
            throw ParameterError("set spec '" + text + "': " + e.what());
        }
    }
    auto want = [&](std::size_t n) {
        if (args.size() != n) {
            throw ParameterError("set spec '" + text + "' expects " + std::to_string(n) + " parameter(s)");
        }
    };
    auto as_int = [&](double v) {
        if (v != std::floor(v) || std::abs(v) > 1e9) throw ParameterError("integer parameter expected in " + text);
        return static_cast<int>(v);
    };
    if (kind == "seq") { want(1); return spec::SequencePower{args[0]}; }
    if (kind == "geom") { want(1); return spec::Geometric{args[0]}; }
    if (kind == "cantor") { want(2); return spec::Cantor{args[0], as_int(args[1])}; }
    if (kind == "grid") { want(1); return spec::Grid{as_int(args[0])}; }
    if (kind == "spiral") { want(3); return spec::Spiral{args[0], args[1], args[2]}; }
    throw ParameterError("unknown set kind '" + kind + "'");
}

std::string to_string(const SetSpec& s) {
    return std::visit(
        [](const auto& v) -> std::string {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, spec::SequencePower>) return "seq:" + format_double(v.p);
            if constexpr (std::is_same_v<T, spec::Geometric>) return "geom:" + format_double(v.q);
            if constexpr (std::is_same_v<T, spec::Cantor>) {
                return "cantor:" + format_double(v.ratio) + ":" + std::to_string(v.depth);
            }
            if constexpr (std::is_same_v<T, spec::Grid>) return "grid:" + std::to_string(v.n);
            if constexpr (std::is_same_v<T, spec::Spiral>) {
                return "spiral:" + format_double(v.p) + ":" + format_double(v.t_max) + ":" + format_double(v.step);
            }
            if constexpr (std::is_same_v<T, spec::Explicit>) return "file:" + v.path.string();
        },
        s);
}

namespace {

PointSet gen(const spec::SequencePower& s, std::size_t count) {
    require(s.p > 0.0 && std::isfinite(s.p), "sequence_power requires p > 0");
    std::vector<Point> pts;
    pts.reserve(count + 1);
    for (std::size_t n = 1; n <= count; ++n) {
        const double v = std::pow(static_cast<double>(n), -s.p);
        require(v > 0.0 && (pts.empty() || v < pts.back().real()), "sequence_power: count too large for doubles");
        pts.emplace_back(v, 0.0);
    }
    pts.emplace_back(0.0, 0.0);
    const double delta = min_consecutive_gap(pts);
    return PointSet(std::move(pts), delta, "seq:" + format_double(s.p));
}

PointSet gen(const spec::Geometric& s, std::size_t count) {
    require(s.q > 0.0 && s.q < 1.0, "geometric requires 0 < q < 1");
    std::vector<Point> pts;
    pts.reserve(count);
    for (std::size_t n = 1; n <= count; ++n) {
        const double v = std::pow(s.q, static_cast<double>(n));
        require(v > 0.0 && (pts.empty() || v < pts.back().real()), "geometric: count too large for doubles");
        pts.emplace_back(v, 0.0);
    }
    const double delta = pts.size() > 1 ? min_consecutive_gap(pts) : 1.0;
    return PointSet(std::move(pts), delta, "geom:" + format_double(s.q));
}

PointSet gen(const spec::Cantor& s, std::size_t count) {
    require(s.ratio > 0.0 && s.ratio < 0.5, "cantor requires 0 < ratio < 1/2");
    require(s.depth >= 1 && s.depth <= 24, "cantor requires 1 <= depth <= 24");
    std::vector<double> left{0.0};
    double len = 1.0;
    for (int k = 0; k < s.depth; ++k) {
        const double child = len * s.ratio;
        std::vector<double> next;
        next.reserve(left.size() * 2);
        for (double a : left) {
            next.push_back(a);
            next.push_back(a + len - child);
        }
        left = std::move(next);
        len = child;
    }
    const std::size_t n = std::min(count, left.size());
    std::vector<Point> pts;
    pts.reserve(n);
    for (std::size_t i = 0; i < n; ++i) pts.emplace_back(left[i] + 0.5 * len, 0.0);
    if (pts.size() == 1) return PointSet(std::move(pts), 1.0, "cantor");
    return PointSet(std::move(pts), len, "cantor:" + format_double(s.ratio) + ":" + std::to_string(s.depth));
}

PointSet gen(const spec::Grid& s, std::size_t count) {
    require(s.n >= 1 && s.n <= 8192, "grid requires 1 <= n <= 8192");
    const std::size_t total = static_cast<std::size_t>(s.n) * static_cast<std::size_t>(s.n);
    const std::size_t n = std::min(count, total);
    std::vector<Point> pts;
    pts.reserve(n);
    const double step = s.n == 1 ? 1.0 : 1.0 / static_cast<double>(s.n - 1);
    for (std::size_t k = 0; k < n; ++k) {
        const auto i = static_cast<double>(k % static_cast<std::size_t>(s.n));
        const auto j = static_cast<double>(k / static_cast<std::size_t>(s.n));
        pts.emplace_back(i * step, j * step);
    }
    // a partial single row can be shorter than one cell
    double delta = step;
    if (pts.size() > 1) delta = std::min(step, diameter_of(pts));
    return PointSet(std::move(pts), delta, "grid:" + std::to_string(s.n));
}

PointSet gen(const spec::Spiral& s, std::size_t count) {
    require(s.p > 0.0 && s.t_max > 1.0 && s.step > 0.0, "spiral requires p > 0, t_max > 1, step > 0");
    std::vector<Point> pts;
    for (std::size_t k = 0; pts.size() < count; ++k) {
        const double t = 1.0 + static_cast<double>(k) * s.step;
        if (t > s.t_max) break;
        pts.push_back(std::pow(t, -s.p) * Point(std::cos(t), std::sin(t)));
    }
    pts.emplace_back(0.0, 0.0);
    pts = dedupe_keep_first(pts);
    const double delta = pts.size() > 1 ? min_consecutive_gap(pts) : 1.0;
    return PointSet(std::move(pts), delta, to_string(SetSpec{s}));
}

PointSet gen(const spec::Explicit& s, std::size_t count) {
    PointSet e = load(s.path);
    if (count >= e.size()) return e;
    std::vector<Point> pts(e.points().begin(), e.points().begin() + static_cast<std::ptrdiff_t>(count));
    double delta = e.resolution();
    if (pts.size() > 1) delta = std::min(delta, diameter_of(pts));
    return PointSet(std::move(pts), delta, e.label());
}

}  // namespace

PointSet generate(const SetSpec& s, std::size_t count) {
    if (count == 0) throw ParameterError("count must be >= 1");
    return std::visit([&](const auto& v) { return gen(v, count); }, s);
}

bool is_normalized(const PointSet& e) {
    if (e.size() == 1) return true;
    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin, ymin = xmin, ymax = -xmin;
    for (const auto& p : e.points()) {
        xmin = std::min(xmin, p.real());
        xmax = std::max(xmax, p.real());
        ymin = std::min(ymin, p.imag());
        ymax = std::max(ymax, p.imag());
    }
    const double tol = 8.0 * std::numeric_limits<double>::epsilon();
    return std::abs(0.5 * (xmin + xmax)) <= tol && std::abs(0.5 * (ymin + ymax)) <= tol &&
           std::abs(e.diameter() - 0.5) <= tol;
}

Normalized normalize(const PointSet& e) {
    if (e.size() == 1 || is_normalized(e)) return {e, Similarity{}};
    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin, ymin = xmin, ymax = -xmin;
    for (const auto& p : e.points()) {
        xmin = std::min(xmin, p.real());
        xmax = std::max(xmax, p.real());
        ymin = std::min(ymin, p.imag());
        ymax = std::max(ymax, p.imag());
    }
    Similarity sim;
    sim.scale = 0.5 / e.diameter();
    const Point center(0.5 * (xmin + xmax), 0.5 * (ymin + ymax));
    sim.shift = -sim.scale * center;
    std::vector<Point> out;
    out.reserve(e.size());
    for (const auto& p : e.points()) out.push_back(sim.apply(p));
    out = dedupe_keep_first(out);
    double delta = e.resolution() * sim.scale;
    if (out.size() == 1) delta = 1.0;
    else delta = std::min(delta, diameter_of(out));
    return {PointSet(std::move(out), delta, e.label()), sim};
}

std::string to_text(const PointSet& e) {
    std::string out;
    out.reserve(e.size() * 40 + 64);
    if (!e.label().empty()) out += "# label=" + e.label() + "\n";
    out += "# resolution=" + format_double(e.resolution()) + "\n";
    for (const auto& p : e.points()) {
        out += format_double(p.real());
        out += ',';
        out += format_double(p.imag());
        out += '\n';
    }
    return out;
}

PointSet from_text(const std::string& text) {
    std::vector<Point> pts;
    double resolution = 0.0;
    std::string label;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        if (line[0] == '#') {
            const std::string body = line.substr(1);
            const auto start = body.find_first_not_of(' ');
            const std::string kv = start == std::string::npos ? "" : body.substr(start);
            if (kv.rfind("resolution=", 0) == 0) {
                resolution = parse_number(kv.substr(11), lineno);
                if (!(resolution > 0.0)) throw ParseError(lineno, "resolution must be positive");
            } else if (kv.rfind("label=", 0) == 0) {
                label = kv.substr(6);
            }
            continue;
        }
        const auto comma = line.find(',');
        if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos) {
            throw ParseError(lineno, "expected 'x,y'");
        }
        pts.emplace_back(parse_number(line.substr(0, comma), lineno), parse_number(line.substr(comma + 1), lineno));
    }
    if (pts.empty()) throw ParseError(0, "empty point set");
    {
        std::vector<std::size_t> idx(pts.size());
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return lex_less(pts[a], pts[b]); });
        for (std::size_t k = 1; k < idx.size(); ++k) {
            if (pts[idx[k]] == pts[idx[k - 1]]) {
                throw ParseError(0, "duplicate point " + format_double(pts[idx[k]].real()) + "," +
                                        format_double(pts[idx[k]].imag()));
            }
        }
    }
    if (resolution == 0.0) {
        resolution = pts.size() > 1 ? min_consecutive_gap(pts) : 1.0;
    }
    try {
        return PointSet(std::move(pts), resolution, std::move(label));
    } catch (const ParameterError& e) {
        throw ParseError(0, e.what());
    }
}

PointSet load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return from_text(ss.str());
}

void save(const PointSet& e, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out << to_text(e);
    if (!out) throw Error("write failed: " + path.string());
}

}  // namespace assouadlab
