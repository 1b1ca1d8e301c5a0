#include "assouadlab/refine.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include <nlohmann/json.hpp>

#include "assouadlab/errors.hpp"
#include "assouadlab/parallel.hpp"

namespace assouadlab {

namespace {

__extension__ typedef unsigned __int128 u128;

u128 area_units(int level, int max_level) { return u128{1} << (2 * (max_level - level)); }

std::uint64_t cell_coord(double u, int level) {
    const double f = std::floor(std::ldexp(u, level));
    const double top = std::ldexp(1.0, level) - 1.0;
    return static_cast<std::uint64_t>(std::clamp(f, 0.0, top));
}

struct Site {
    double u, v;
};

struct Item {
    DyadicIndex q;
    std::uint32_t begin = 0, end = 0;
};

}  // namespace

RefineSchedule::RefineSchedule(double R_prime_, int d_, double alpha_, double p_, std::optional<double> theta_)
    : R_prime(R_prime_), d(d_), alpha(alpha_), p(p_), theta(theta_) {
    if (!(R_prime > 0.0 && R_prime < 0.5)) throw ParameterError("schedule requires 0 < R' < 1/2");
    if (d < 1) throw ParameterError("schedule requires d >= 1");
    if (!(alpha > 0.0 && alpha <= 2.0)) throw ParameterError("schedule requires 0 < alpha <= 2");
    if (!(p > 2.0) || !std::isfinite(p)) throw ParameterError("schedule requires finite p > 2");
    if (theta && !(*theta > 0.0 && *theta < 1.0)) throw ParameterError("schedule requires 0 < theta < 1");
}

double RefineSchedule::beta() const noexcept { return p * alpha / (p - 2.0 + alpha); }
double RefineSchedule::R() const noexcept { return std::pow(2.0 * R_prime, 1.0 / d); }
double RefineSchedule::r_prime(int j) const noexcept { return std::exp2(-j * alpha / beta()) * R_prime; }
double RefineSchedule::r(int j) const noexcept { return std::ldexp(R(), -j); }

int RefineSchedule::j0() const {
    if (!theta) return 1;
    const double limit = std::pow(R_prime, 1.0 / *theta);
    for (int j = 1; j < 4096; ++j) {
        if (r_prime(j) <= limit) return j;
    }
    throw ParameterError("schedule j0 out of range");
}

Square dyadic_square(const Square& root, const DyadicIndex& q) {
    const double side = std::ldexp(root.side(), -q.level);
    const double cx = root.x_min() + (static_cast<double>(q.ix) + 0.5) * side;
    const double cy = root.y_min() + (static_cast<double>(q.iy) + 0.5) * side;
    return Square{{cx, cy}, 0.5 * side};
}

SquareClass classify(const MapExpr& h, const Square& q, double target) {
    return derivative_bound(h, q) * q.diameter() <= target ? SquareClass::minor : SquareClass::major;
}

std::uint64_t RefineResult::total_majors() const noexcept {
    return std::accumulate(major_counts.begin(), major_counts.end(), std::uint64_t{0});
}

std::vector<DyadicIndex> occupied_dyadic(const Square& root, std::span<const Point> pts, int level) {
    std::vector<DyadicIndex> out;
    for (const Point& p : pts) {
        if (!root.contains(p)) continue;
        const double u = (p.real() - root.x_min()) / root.side();
        const double v = (p.imag() - root.y_min()) / root.side();
        out.push_back({level, cell_coord(u, level), cell_coord(v, level)});
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

RefineResult refine(const MapExpr& h, const Square& root, double target, int max_level) {
    RefineOptions o;
    o.max_level = max_level;
    return refine(h, root, target, o);
}

RefineResult refine(const MapExpr& h, const Square& root, double target, const RefineOptions& options) {
    if (!h.holomorphic()) throw ParameterError("refine requires a holomorphic map");
    if (!(target > 0.0)) throw ParameterError("refine requires target > 0");
    if (options.max_level < 1 || options.max_level > 60) throw ParameterError("refine requires 1 <= max_level <= 60");

    const int max_level = options.max_level;
    std::vector<DyadicIndex> start = options.start;
    if (start.empty()) start.push_back({0, 0, 0});
    std::sort(start.begin(), start.end());
    start.erase(std::unique(start.begin(), start.end()), start.end());
    const int start_level = start.front().level;
    for (const auto& q : start) {
        if (q.level != start_level) throw ParameterError("refine start squares must share one level");
        if (q.level > max_level) throw ParameterError("refine start level exceeds max_level");
        const std::uint64_t n = std::uint64_t{1} << q.level;
        if (q.ix >= n || q.iy >= n) throw ParameterError("refine start square outside the root");
    }

    RefineResult res;
    res.root = root;
    res.target = target;
    res.start_level = start_level;
    res.start_squares = start.size();
    res.major_counts.assign(static_cast<std::size_t>(max_level) + 1, 0);

    const bool pruning = options.sites.has_value();
    std::vector<Site> sites;
    std::vector<std::uint32_t> order;
    std::vector<Item> current;
    if (pruning) {
        std::vector<std::pair<DyadicIndex, std::uint32_t>> tagged;
        for (const Point& p : *options.sites) {
            if (!root.contains(p)) continue;
            const Site s{(p.real() - root.x_min()) / root.side(), (p.imag() - root.y_min()) / root.side()};
            const DyadicIndex q{start_level, cell_coord(s.u, start_level), cell_coord(s.v, start_level)};
            if (!std::binary_search(start.begin(), start.end(), q)) continue;
            tagged.emplace_back(q, static_cast<std::uint32_t>(sites.size()));
            sites.push_back(s);
        }
        std::sort(tagged.begin(), tagged.end());
        for (std::size_t i = 0; i < tagged.size();) {
            std::size_t k = i;
            while (k < tagged.size() && tagged[k].first == tagged[i].first) order.push_back(tagged[k++].second);
            current.push_back({tagged[i].first, static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(k)});
            i = k;
        }
    } else {
        for (const auto& q : start) current.push_back({q, 0, 0});
    }

    const u128 total = area_units(start_level, max_level) * start.size();
    u128 minor_units = 0;
    u128 dropped_units = area_units(start_level, max_level) * (start.size() - current.size());
    res.dropped = start.size() - current.size();

    std::vector<char> is_minor;
    for (int level = start_level; !current.empty(); ++level) {
        is_minor.assign(current.size(), 0);
        parallel_for(current.size(), options.threads, [&](unsigned, std::size_t i) {
            is_minor[i] = classify(h, dyadic_square(root, current[i].q), target) == SquareClass::minor;
        });
        const u128 unit = area_units(level, max_level);
        std::vector<Item> next;
        std::uint64_t majors = 0;
        for (std::size_t i = 0; i < current.size(); ++i) {
            const Item& it = current[i];
            if (is_minor[i]) {
                res.minors.push_back(it.q);
                minor_units += unit;
                continue;
            }
            ++majors;
            if (level == max_level) continue;
            const int cl = level + 1;
            if (!pruning) {
                for (std::uint64_t dx = 0; dx < 2; ++dx) {
                    for (std::uint64_t dy = 0; dy < 2; ++dy) {
                        next.push_back({{cl, 2 * it.q.ix + dx, 2 * it.q.iy + dy}, 0, 0});
                    }
                }
                continue;
            }
            auto child_of = [&](std::uint32_t s) {
                const std::uint64_t cx = std::clamp(cell_coord(sites[s].u, cl), 2 * it.q.ix, 2 * it.q.ix + 1);
                const std::uint64_t cy = std::clamp(cell_coord(sites[s].v, cl), 2 * it.q.iy, 2 * it.q.iy + 1);
                return static_cast<int>(2 * (cx - 2 * it.q.ix) + (cy - 2 * it.q.iy));
            };
            std::sort(order.begin() + it.begin, order.begin() + it.end,
                      [&](std::uint32_t a, std::uint32_t b) { return child_of(a) < child_of(b); });
            std::uint32_t pos = it.begin;
            for (int c = 0; c < 4; ++c) {
                const std::uint32_t b = pos;
                while (pos < it.end && child_of(order[pos]) == c) ++pos;
                const DyadicIndex q{cl, 2 * it.q.ix + static_cast<std::uint64_t>(c / 2),
                                    2 * it.q.iy + static_cast<std::uint64_t>(c % 2)};
                if (pos > b) {
                    next.push_back({q, b, pos});
                } else {
                    ++res.dropped;
                    dropped_units += area_units(cl, max_level);
                }
            }
        }
        res.major_counts[static_cast<std::size_t>(level)] = majors;
        if (level == max_level && majors > 0) {
            throw LevelBudgetError("refine reached max_level " + std::to_string(max_level) + " with " +
                                       std::to_string(majors) + " major squares remaining",
                                   majors);
        }
        const u128 pending = next.empty() ? u128{0} : area_units(level + 1, max_level) * next.size();
        if (minor_units + dropped_units + pending != total) res.conserved = false;
        current = std::move(next);
    }

    std::sort(res.minors.begin(), res.minors.end());
    if (start_level > 0) {
        res.growth_fit = std::log2(static_cast<double>(std::max<std::uint64_t>(1, res.total_majors()))) / start_level;
    }
    return res;
}

std::uint64_t image_cover_count(const MapExpr& h, const PointSet& e, Point w, int j, const RefineSchedule& s,
                                unsigned threads) {
    const Square root{{0.0, 0.0}, s.R()};
    std::vector<Point> sites;
    for (const Point& p : e.points()) {
        if (dist2(h.eval(p), w) >= s.R_prime * s.R_prime) continue;
        if (!root.contains(p)) {
            throw PreconditionError("preimage point outside the root square Q(0, (2R')^(1/d))");
        }
        sites.push_back(p);
    }
    if (sites.empty()) return 0;
    RefineOptions o;
    o.sites = std::move(sites);
    o.threads = threads;
    return refine(h, root, s.r_prime(j), o).total_minors();
}

RateSweep rate_sweep(const MapExpr& h, const PointSet& e, const RefineSchedule& s, int j_lo, int j_hi,
                     unsigned threads) {
    if (j_lo < 1 || j_hi < j_lo) throw ParameterError("rate_sweep requires 1 <= j_lo <= j_hi");
    const Square root{{0.0, 0.0}, s.R()};
    RateSweep out;
    std::vector<double> xs, ys;
    for (int j = j_lo; j <= j_hi; ++j) {
        RefineOptions o;
        o.start = occupied_dyadic(root, e.points(), j);
        o.threads = threads;
        if (o.start.empty()) throw PreconditionError("point set does not meet the root square");
        const RefineResult r = refine(h, root, s.r_prime(j), o);
        out.rows.push_back({j, s.r_prime(j), r.start_squares, r.total_majors(), r.total_minors(), r.conserved});
        if (r.total_majors() > 0) {
            xs.push_back(j);
            ys.push_back(std::log2(static_cast<double>(r.total_majors())));
        }
    }
    if (xs.size() >= 2) {
        const double n = static_cast<double>(xs.size());
        const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
        const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
        double sxy = 0.0, sxx = 0.0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            sxy += (xs[i] - mx) * (ys[i] - my);
            sxx += (xs[i] - mx) * (xs[i] - mx);
        }
        out.slope = sxy / sxx;
        out.intercept = my - out.slope * mx;
    }
    return out;
}

nlohmann::json to_json(const RefineSchedule& s) {
    nlohmann::json j{{"R_prime", s.R_prime}, {"d", s.d},       {"alpha", s.alpha}, {"p", s.p},
                     {"beta", s.beta()},     {"R", s.R()},     {"j0", s.j0()}};
    j["theta"] = s.theta ? nlohmann::json(*s.theta) : nlohmann::json(nullptr);
    return j;
}

nlohmann::json to_json(const RefineResult& r) {
    nlohmann::json levels = nlohmann::json::array();
    for (std::size_t l = 0; l < r.major_counts.size(); ++l) {
        if (r.major_counts[l] > 0) levels.push_back({{"level", l}, {"majors", r.major_counts[l]}});
    }
    return {{"root", {{"cx", r.root.center.real()}, {"cy", r.root.center.imag()}, {"half_side", r.root.half_side}}},
            {"target", r.target},
            {"start_level", r.start_level},
            {"start_squares", r.start_squares},
            {"major_counts", levels},
            {"total_majors", r.total_majors()},
            {"total_minors", r.total_minors()},
            {"dropped", r.dropped},
            {"conserved", r.conserved},
            {"growth_fit", r.growth_fit}};
}

nlohmann::json to_json(const RateSweep& r) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : r.rows) {
        rows.push_back({{"j", row.j},
                        {"target", row.target},
                        {"start_squares", row.start_squares},
                        {"major_sum", row.major_sum},
                        {"minors", row.minors},
                        {"conserved", row.conserved}});
    }
    return {{"rows", rows}, {"slope", r.slope}, {"intercept", r.intercept}};
}

void write_minors_csv(std::ostream& os, const RefineResult& r) {
    os << "level,ix,iy\n";
    for (const auto& q : r.minors) os << q.level << ',' << q.ix << ',' << q.iy << '\n';
}

}  // namespace assouadlab
