#include "assouadlab/porosity.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>

#include <boost/geometry.hpp>
#include <boost/geometry/index/rtree.hpp>
#include <nlohmann/json.hpp>

#include "assouadlab/errors.hpp"
#include "assouadlab/parallel.hpp"

namespace assouadlab {

namespace {

namespace bg = boost::geometry;
namespace bgi = boost::geometry::index;
using BPoint = bg::model::point<double, 2, bg::cs::cartesian>;
using Tree = bgi::rtree<BPoint, bgi::rstar<16>>;

double nearest_distance(const Tree& tree, Point y) {
    const BPoint q(y.real(), y.imag());
    for (auto it = tree.qbegin(bgi::nearest(q, 1)); it != tree.qend(); ++it) {
        return dist(Point{bg::get<0>(*it), bg::get<1>(*it)}, y);
    }
    return std::numeric_limits<double>::infinity();
}

std::vector<double> default_r_grid(const PointSet& e, double c_res) {
    std::vector<double> grid;
    const double floor_r = e.size() == 1 ? std::ldexp(1.0, -10) : c_res * e.resolution();
    for (int k = 2; k <= 41; ++k) {
        const double r = std::ldexp(1.0, -k);
        if (r < floor_r) break;
        grid.push_back(r);
    }
    return grid;
}

struct ProbeResult {
    HoleWitness best{};
    bool complete = true;
};

void atomic_min(std::atomic<double>& a, double v) {
    double cur = a.load();
    while (v < cur && !a.compare_exchange_weak(cur, v)) {
    }
}

}  // namespace

PorosityVerdict porosity_verdict(double lambda_hat, double lambda_min) {
    if (lambda_hat >= lambda_min) return PorosityVerdict::porous;
    if (lambda_hat >= 0.5 * lambda_min) return PorosityVerdict::inconclusive;
    return PorosityVerdict::not_porous;
}

PorosityReport estimate_porosity(const PointSet& e, const PorosityParams& params) {
    if (params.require_normalized && !is_normalized(e)) {
        throw PreconditionError("porosity expects a normalized set (diameter 1/2, centered)");
    }
    if (params.lattice < 2 || params.refine_factor < 1) throw ParameterError("porosity lattice too coarse");
    if (!(params.lambda_min > 0.0 && params.lambda_min < 1.0)) throw ParameterError("lambda_min must lie in (0,1)");

    PorosityReport rep;
    rep.lambda_min = params.lambda_min;
    const double floor_r = e.size() == 1 ? 0.0 : params.c_res * e.resolution();
    if (params.r_grid.empty()) {
        rep.r_grid = default_r_grid(e, params.c_res);
    } else {
        for (double r : params.r_grid) {
            if (!(r > 0.0)) throw ParameterError("porosity radii must be positive");
            if (r >= floor_r) rep.r_grid.push_back(r);
        }
    }
    if (rep.r_grid.empty()) {
        throw ResolutionError("every probe radius lies below c_res·δ = " + format_double(floor_r));
    }
    std::sort(rep.r_grid.begin(), rep.r_grid.end(), std::greater<>());

    std::vector<BPoint> bp;
    bp.reserve(e.size());
    for (const Point& p : e.points()) bp.emplace_back(p.real(), p.imag());
    const Tree tree(bp.begin(), bp.end());

    const std::vector<Point> centers = params.centers ? *params.centers : farthest_point_centers(e, params.center_budget);
    const std::size_t n_r = rep.r_grid.size();
    const std::size_t n_probes = centers.size() * n_r;
    rep.probes = n_probes;

    std::vector<ProbeResult> results(n_probes);
    std::atomic<double> global{std::numeric_limits<double>::infinity()};
    const int L = params.lattice;
    const int F = params.refine_factor;

    parallel_for(n_probes, params.threads, [&](unsigned, std::size_t pi) {
        const Point z = centers[pi / n_r];
        const double r = rep.r_grid[pi % n_r];
        const double step = 2.0 * r / L;
        const double reach = std::sqrt(0.5) * step;  // farthest refined point from its lattice point
        ProbeResult& out = results[pi];
        out.best = HoleWitness{z, r, z, 0.0};

        auto value = [&](Point y) {
            const double edge = r - std::abs(y - z);
            if (edge <= 0.0) return -1.0;
            return std::min(nearest_distance(tree, y), edge);
        };
        auto consider = [&](Point y, double v) {
            if (v > out.best.hole) out.best = HoleWitness{z, r, y, v};
        };
        // A hole in D(z,r) avoiding z itself has radius at most r/2.
        const double cap = (nearest_distance(tree, z) == 0.0 ? 0.5 * r : r) * (1.0 - 1e-12);
        auto stop = [&] {
            if (params.keep_witnesses) return false;
            return out.best.hole >= cap || out.best.hole / r > global.load();
        };
        auto finish = [&] {
            if (out.best.hole >= cap || !stop()) {
                atomic_min(global, out.best.hole / r);
            } else {
                out.complete = false;
            }
        };

        for (int k = 0; k < 8 && !stop(); ++k) {
            const Point y = z + std::polar(0.5 * r, k * std::atan(1.0));
            consider(y, value(y));
        }

        std::vector<std::pair<double, Point>> coarse;
        coarse.reserve(static_cast<std::size_t>(L) * L);
        for (int i = 0; i < L && !stop(); ++i) {
            for (int k = 0; k < L; ++k) {
                const Point y{z.real() - r + (i + 0.5) * step, z.imag() - r + (k + 0.5) * step};
                const double v = value(y);
                if (v < 0.0) continue;
                coarse.emplace_back(v, y);
                consider(y, v);
            }
        }
        if (stop()) return finish();
        std::stable_sort(coarse.begin(), coarse.end(),
                         [](const auto& a, const auto& b) { return a.first > b.first; });
        for (const auto& [cv, c] : coarse) {
            // The hole radius is 1-Lipschitz in y, so cells this far below the best cannot improve it.
            if (cv + reach < out.best.hole) break;
            for (int a = -F / 2; a <= F / 2; ++a) {
                for (int b = -F / 2; b <= F / 2; ++b) {
                    if (a == 0 && b == 0) continue;
                    const Point y = c + Point{a * step / F, b * step / F};
                    const double v = value(y);
                    if (v >= 0.0) consider(y, v);
                }
            }
            if (stop()) return finish();
        }
        finish();
    });

    std::size_t worst = n_probes;
    for (std::size_t i = 0; i < n_probes; ++i) {
        if (!results[i].complete) continue;
        if (worst == n_probes || results[i].best.lambda() < results[worst].best.lambda()) worst = i;
    }
    rep.worst = results[worst].best;
    rep.lambda_hat = std::clamp(rep.worst.lambda(), 0.0, 1.0);
    rep.verdict = porosity_verdict(rep.lambda_hat, params.lambda_min);
    if (params.keep_witnesses) {
        rep.witnesses.reserve(n_probes);
        for (const auto& r : results) rep.witnesses.push_back(r.best);
    }
    return rep;
}

bool witness_is_empty(const PointSet& e, const HoleWitness& w) {
    return std::none_of(e.points().begin(), e.points().end(), [&](const Point& p) { return dist(p, w.y) < w.hole; });
}

Consistency check_luukkainen(const DimEstimate& dim, const PorosityReport& por, double margin) {
    if (por.verdict == PorosityVerdict::inconclusive) return Consistency::inconclusive;
    const bool low = dim.value < 2.0 - margin;
    if (por.verdict == PorosityVerdict::porous && low) return Consistency::consistent;
    if (por.verdict == PorosityVerdict::not_porous && !low) return Consistency::consistent;
    return Consistency::flag;
}

std::string to_string(PorosityVerdict v) {
    switch (v) {
        case PorosityVerdict::porous: return "porous";
        case PorosityVerdict::not_porous: return "not-porous";
        case PorosityVerdict::inconclusive: return "inconclusive";
    }
    return "?";
}

std::string to_string(Consistency c) {
    switch (c) {
        case Consistency::consistent: return "CONSISTENT";
        case Consistency::flag: return "FLAG";
        case Consistency::inconclusive: return "INCONCLUSIVE";
    }
    return "?";
}

nlohmann::json to_json(const HoleWitness& w) {
    return {{"z", {w.z.real(), w.z.imag()}}, {"r", w.r}, {"y", {w.y.real(), w.y.imag()}}, {"hole", w.hole},
            {"lambda", w.lambda()}};
}

nlohmann::json to_json(const PorosityReport& r, bool with_witnesses) {
    nlohmann::json j{{"lambda_hat", r.lambda_hat}, {"lambda_min", r.lambda_min}, {"r_grid", r.r_grid},
                     {"probes", r.probes},         {"worst", to_json(r.worst)},   {"verdict", to_string(r.verdict)}};
    if (with_witnesses) {
        nlohmann::json list = nlohmann::json::array();
        for (const auto& w : r.witnesses) list.push_back(to_json(w));
        j["witnesses"] = list;
    }
    return j;
}

}  // namespace assouadlab
