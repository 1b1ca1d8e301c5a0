#include "assouadlab/cmaps.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <set>
#include <utility>

#include <nlohmann/json.hpp>

#include "assouadlab/errors.hpp"

namespace assouadlab {

namespace {

using Kind = Primitive::Kind;

double max_abs(const Square& q) {
    const double xs = std::max(std::abs(q.x_min()), std::abs(q.x_max()));
    const double ys = std::max(std::abs(q.y_min()), std::abs(q.y_max()));
    return std::hypot(xs, ys);
}

double min_abs(const Square& q) {
    const double cx = std::clamp(0.0, q.x_min(), q.x_max());
    const double cy = std::clamp(0.0, q.y_min(), q.y_max());
    return std::hypot(cx, cy);
}

double parse_number(std::string_view s) {
    while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
    while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size()) {
        throw ParseError(0, "bad number '" + std::string(s) + "' in map expression");
    }
    return v;
}

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t");
    return std::string(s.substr(b, e - b + 1));
}

Primitive parse_primitive(const std::string& tok) {
    const auto open = tok.find('(');
    const std::string name = trim(tok.substr(0, open));
    std::vector<double> args;
    if (open != std::string::npos) {
        if (tok.back() != ')') throw ParseError(0, "missing ')' in '" + tok + "'");
        const std::string inner = tok.substr(open + 1, tok.size() - open - 2);
        std::size_t start = 0;
        while (true) {
            const auto comma = inner.find(',', start);
            args.push_back(parse_number(std::string_view(inner).substr(start, comma - start)));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
    }
    auto want = [&](std::size_t n) {
        if (args.size() != n) {
            throw ParseError(0, name + " expects " + std::to_string(n) + " argument(s)");
        }
    };
    if (name == "pow") {
        want(1);
        if (args[0] != std::floor(args[0]) || args[0] > 64) throw ParameterError("pow degree must be an integer in [1, 64]");
        return Primitive::power(static_cast<int>(args[0]));
    }
    if (name == "poly") {
        if (args.empty()) throw ParseError(0, "poly expects coefficients");
        return Primitive::poly(args);
    }
    if (name == "recip") { want(0); return Primitive::recip(); }
    if (name == "neglog") { want(0); return Primitive::neglog(); }
    if (name == "stretch") { want(1); return Primitive::stretch(args[0]); }
    if (name == "affine") {
        want(4);
        return Primitive::affine({args[0], args[1]}, {args[2], args[3]});
    }
    throw ParseError(0, "unknown map primitive '" + name + "'");
}

std::string point_text(Point z) {
    return "(" + format_double(z.real()) + "," + format_double(z.imag()) + ")";
}

Point checked_step(const Primitive& p, Point z, double exclusion) {
    if (p.has_singularity()) {
        if (std::abs(z) <= exclusion) {
            throw SingularityError(p.name() + ": point " + point_text(z) + " within " + format_double(exclusion) +
                                   " of the singularity at 0");
        }
        if (p.kind == Kind::neglog && z.imag() == 0.0 && z.real() < 0.0) {
            throw SingularityError("neglog: point " + point_text(z) + " lies on the branch cut");
        }
    }
    const Point w = p.eval(z);
    if (!std::isfinite(w.real()) || !std::isfinite(w.imag())) {
        throw SingularityError(p.name() + ": non-finite image of " + point_text(z));
    }
    return w;
}

}  // namespace

Primitive Primitive::power(int d) {
    if (d < 1) throw ParameterError("pow degree must be >= 1");
    Primitive p;
    p.kind = Kind::power;
    p.degree = d;
    return p;
}

Primitive Primitive::poly(std::vector<double> c) {
    if (c.empty()) throw ParameterError("poly needs at least one coefficient");
    for (double v : c) {
        if (!std::isfinite(v)) throw ParameterError("poly coefficients must be finite");
    }
    Primitive p;
    p.kind = Kind::poly;
    p.coeffs = std::move(c);
    return p;
}

Primitive Primitive::recip() {
    Primitive p;
    p.kind = Kind::recip;
    return p;
}

Primitive Primitive::neglog() {
    Primitive p;
    p.kind = Kind::neglog;
    return p;
}

Primitive Primitive::stretch(double K) {
    if (!(K >= 1.0) || !std::isfinite(K)) throw ParameterError("stretch requires finite K >= 1");
    Primitive p;
    p.kind = Kind::stretch;
    p.K = K;
    return p;
}

Primitive Primitive::affine(Point a, Point b) {
    if (a == Point{} || !std::isfinite(a.real()) || !std::isfinite(a.imag()) || !std::isfinite(b.real()) ||
        !std::isfinite(b.imag())) {
        throw ParameterError("affine requires finite a != 0 and finite b");
    }
    Primitive p;
    p.kind = Kind::affine;
    p.a = a;
    p.b = b;
    return p;
}

std::string Primitive::name() const {
    switch (kind) {
        case Kind::power: return "pow";
        case Kind::poly: return "poly";
        case Kind::recip: return "recip";
        case Kind::neglog: return "neglog";
        case Kind::stretch: return "stretch";
        case Kind::affine: return "affine";
    }
    return "?";
}

Point Primitive::eval(Point z) const {
    switch (kind) {
        case Kind::power: {
            Point w = z;
            for (int i = 1; i < degree; ++i) w *= z;
            return w;
        }
        case Kind::poly: {
            Point acc{coeffs.back(), 0.0};
            for (auto it = coeffs.rbegin() + 1; it != coeffs.rend(); ++it) acc = acc * z + *it;
            return acc;
        }
        case Kind::recip:
            if (z.imag() == 0.0) return {1.0 / z.real(), 0.0};
            return 1.0 / z;
        case Kind::neglog: return -std::log(z);
        case Kind::stretch: {
            const double r = std::abs(z);
            if (r == 0.0) return z;
            return z * std::pow(r, 1.0 / K - 1.0);
        }
        case Kind::affine: return a * z + b;
    }
    return z;
}

Point Primitive::derivative(Point z) const {
    switch (kind) {
        case Kind::power: {
            Point w{static_cast<double>(degree), 0.0};
            for (int i = 1; i < degree; ++i) w *= z;
            return w;
        }
        case Kind::poly: {
            if (coeffs.size() == 1) return {};
            Point acc{coeffs.back() * static_cast<double>(coeffs.size() - 1), 0.0};
            for (std::size_t k = coeffs.size() - 2; k >= 1; --k) acc = acc * z + coeffs[k] * static_cast<double>(k);
            return acc;
        }
        case Kind::recip: return -1.0 / (z * z);
        case Kind::neglog: return -1.0 / z;
        case Kind::stretch: throw ParameterError("stretch is not holomorphic");
        case Kind::affine: return a;
    }
    return {};
}

MapExpr::MapExpr(std::vector<Primitive> steps) : steps_(std::move(steps)) {}

double MapExpr::declared_K() const noexcept {
    double k = 1.0;
    for (const auto& p : steps_) {
        if (p.kind == Kind::stretch) k *= p.K;
    }
    return k;
}

int MapExpr::holomorphic_degree() const noexcept {
    int d = 1;
    for (const auto& p : steps_) {
        if (p.kind == Kind::power) d = std::max(d, p.degree);
        if (p.kind == Kind::poly) {
            for (std::size_t k = p.coeffs.size(); k-- > 1;) {
                if (p.coeffs[k] != 0.0) {
                    d = std::max(d, static_cast<int>(k));
                    break;
                }
            }
        }
    }
    return d;
}

bool MapExpr::holomorphic() const noexcept {
    return std::all_of(steps_.begin(), steps_.end(), [](const Primitive& p) { return p.holomorphic(); });
}

Point MapExpr::eval(Point z) const {
    for (const auto& p : steps_) z = p.eval(z);
    return z;
}

MapExpr MapExpr::then(const MapExpr& other) const {
    std::vector<Primitive> s = steps_;
    s.insert(s.end(), other.steps_.begin(), other.steps_.end());
    return MapExpr(std::move(s));
}

MapExpr parse_map(const std::string& text) {
    std::vector<Primitive> steps;
    std::size_t start = 0;
    while (true) {
        const auto bar = text.find('|', start);
        const std::string tok = trim(std::string_view(text).substr(start, bar - start));
        if (tok.empty()) throw ParseError(0, "empty primitive in map expression '" + text + "'");
        steps.push_back(parse_primitive(tok));
        if (bar == std::string::npos) break;
        start = bar + 1;
    }
    return MapExpr(std::move(steps));
}

std::string to_string(const Primitive& p) {
    switch (p.kind) {
        case Kind::power: return "pow(" + std::to_string(p.degree) + ")";
        case Kind::poly: {
            std::string s = "poly(";
            for (std::size_t i = 0; i < p.coeffs.size(); ++i) {
                if (i) s += ",";
                s += format_double(p.coeffs[i]);
            }
            return s + ")";
        }
        case Kind::recip: return "recip";
        case Kind::neglog: return "neglog";
        case Kind::stretch: return "stretch(" + format_double(p.K) + ")";
        case Kind::affine:
            return "affine(" + format_double(p.a.real()) + "," + format_double(p.a.imag()) + "," +
                   format_double(p.b.real()) + "," + format_double(p.b.imag()) + ")";
    }
    return "?";
}

std::string to_string(const MapExpr& expr) {
    std::string s;
    for (const auto& p : expr.steps()) {
        if (!s.empty()) s += "|";
        s += to_string(p);
    }
    return s;
}

double default_exclusion(const PointSet& e) { return 1e-9 * e.diameter(); }

PointSet apply(const MapExpr& expr, const PointSet& e) { return apply(expr, e, default_exclusion(e)); }

PointSet apply(const MapExpr& expr, const PointSet& e, double exclusion, ApplyInfo* info) {
    std::vector<Point> out;
    out.reserve(e.size());
    std::set<std::pair<double, double>> seen;
    std::size_t dropped = 0;
    for (Point z : e.points()) {
        for (const auto& p : expr.steps()) z = checked_step(p, z, exclusion);
        if (seen.emplace(z.real(), z.imag()).second) {
            out.push_back(z);
        } else {
            ++dropped;
        }
    }
    if (info) *info = ApplyInfo{dropped, true};
    double delta = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < out.size(); ++i) {
        const double g = dist(out[i - 1], out[i]);
        if (g > 0.0) delta = std::min(delta, g);
    }
    if (!std::isfinite(delta)) delta = 1.0;
    std::string label = to_string(expr) + "(" + e.label() + ")";
    return PointSet(std::move(out), delta, std::move(label));
}

Square image_box(const Primitive& p, const Square& q) {
    const MapExpr single({p});
    const double bound = derivative_bound(single, q);
    return Square{p.eval(q.center), bound * q.half_side * std::sqrt(2.0)};
}

double derivative_bound(const MapExpr& expr, const Square& q) {
    double total = 1.0;
    Square box = q;
    for (std::size_t i = 0; i < expr.steps().size(); ++i) {
        const Primitive& p = expr.steps()[i];
        double b = 0.0;
        switch (p.kind) {
            case Kind::power:
                b = static_cast<double>(p.degree) * std::pow(max_abs(box), p.degree - 1);
                break;
            case Kind::poly: {
                const double r = max_abs(box);
                for (std::size_t k = 1; k < p.coeffs.size(); ++k) {
                    b += std::abs(p.coeffs[k]) * static_cast<double>(k) * std::pow(r, static_cast<double>(k - 1));
                }
                break;
            }
            case Kind::recip: {
                const double r = min_abs(box);
                b = r > 0.0 ? 1.0 / (r * r) : std::numeric_limits<double>::infinity();
                break;
            }
            case Kind::neglog: {
                const double r = min_abs(box);
                b = r > 0.0 ? 1.0 / r : std::numeric_limits<double>::infinity();
                break;
            }
            case Kind::stretch: throw ParameterError("derivative_bound requires a holomorphic expression");
            case Kind::affine: b = std::abs(p.a); break;
        }
        total *= b;
        if (i + 1 < expr.steps().size()) box = Square{p.eval(box.center), b * box.half_side * std::sqrt(2.0)};
    }
    return total;
}

DilatationReport estimate_dilatation(const MapExpr& expr, const Square& region, int grid_n, double step) {
    if (grid_n < 8) throw ParameterError("estimate_dilatation requires grid_n >= 8");
    if (!(step > 0.0)) throw ParameterError("estimate_dilatation requires step > 0");
    DilatationReport rep;
    rep.region = region;
    rep.grid_n = grid_n;
    rep.step = step;
    const double cell = region.side() / grid_n;
    for (int i = 0; i < grid_n; ++i) {
        for (int j = 0; j < grid_n; ++j) {
            const Point z{region.x_min() + (i + 0.5) * cell, region.y_min() + (j + 0.5) * cell};
            auto ev = [&](Point w) {
                for (const auto& p : expr.steps()) w = checked_step(p, w, 10.0 * step);
                return w;
            };
            const Point fx = (ev(z + Point{step, 0.0}) - ev(z - Point{step, 0.0})) / (2.0 * step);
            const Point fy = (ev(z + Point{0.0, step}) - ev(z - Point{0.0, step})) / (2.0 * step);
            const Point iu{0.0, 1.0};
            const double fz = std::abs((fx - iu * fy) * 0.5);
            const double fzb = std::abs((fx + iu * fy) * 0.5);
            if (!(fz > fzb)) {
                throw DegenerateDifferentialError("degenerate differential at " + point_text(z));
            }
            const double k = (fz + fzb) / (fz - fzb);
            if (k > rep.K_hat || (i == 0 && j == 0)) {
                rep.K_hat = std::max(1.0, k);
                rep.worst = z;
            }
            rep.max_beltrami = std::max(rep.max_beltrami, fzb / fz);
        }
    }
    return rep;
}

nlohmann::json to_json(const DilatationReport& r) {
    return {{"K_hat", r.K_hat},
            {"max_beltrami", r.max_beltrami},
            {"region", {{"cx", r.region.center.real()}, {"cy", r.region.center.imag()}, {"half_side", r.region.half_side}}},
            {"grid_n", r.grid_n},
            {"step", r.step},
            {"worst", {r.worst.real(), r.worst.imag()}}};
}

}  // namespace assouadlab
