#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "assouadlab/cmaps.hpp"
#include "assouadlab/pointset.hpp"

namespace assouadlab {

/// Scale schedule r'_j = 2^(-j alpha/beta) R', r_j = 2^-j R with R = (2R')^(1/d).
struct RefineSchedule {
    double R_prime;
    int d;
    double alpha;
    double p;
    std::optional<double> theta;

    RefineSchedule(double R_prime, int d, double alpha, double p, std::optional<double> theta = std::nullopt);

    double beta() const noexcept;
    double R() const noexcept;
    double r_prime(int j) const noexcept;
    double r(int j) const noexcept;
    /// Smallest j with r'_j <= R'^(1/theta); 1 without a theta constraint.
    int j0() const;
};

/// Level-l dyadic square of a root, indices in [0, 2^l).
struct DyadicIndex {
    int level = 0;
    std::uint64_t ix = 0;
    std::uint64_t iy = 0;

    auto operator<=>(const DyadicIndex&) const = default;
};

Square dyadic_square(const Square& root, const DyadicIndex& q);

enum class SquareClass { major, minor };

/// Minor iff derivative_bound(h, q) * diam(q) <= target.
SquareClass classify(const MapExpr& h, const Square& q, double target);

struct RefineOptions {
    int max_level = 40;
    /// Starting squares; empty means the root itself.
    std::vector<DyadicIndex> start;
    /// When set, squares whose closed cell holds none of these points are dropped.
    std::optional<std::vector<Point>> sites;
    unsigned threads = 1;
};

struct RefineResult {
    Square root;
    double target = 0.0;
    int start_level = 0;
    std::size_t start_squares = 0;
    std::vector<DyadicIndex> minors;
    /// M(l), indexed by level.
    std::vector<std::uint64_t> major_counts;
    std::uint64_t dropped = 0;
    /// Checked after every level: minors + pending + dropped cover the start area in exact units.
    bool conserved = true;
    /// log2(sum M) / start_level, or 0 when refinement started at the root.
    double growth_fit = 0.0;

    std::uint64_t total_minors() const noexcept { return minors.size(); }
    std::uint64_t total_majors() const noexcept;
};

RefineResult refine(const MapExpr& h, const Square& root, double target, const RefineOptions& options);
RefineResult refine(const MapExpr& h, const Square& root, double target, int max_level = 40);

/// Level-j cells of root holding at least one point of e (lower-left boundary convention).
std::vector<DyadicIndex> occupied_dyadic(const Square& root, std::span<const Point> pts, int level);

/// Upper bound for N(D(w,R') ∩ h(E), r'_j) by counting E-meeting minors of Q(0, R).
std::uint64_t image_cover_count(const MapExpr& h, const PointSet& e, Point w, int j, const RefineSchedule& s,
                                unsigned threads = 1);

struct RateRow {
    int j;
    double target;
    std::size_t start_squares;
    std::uint64_t major_sum;
    std::uint64_t minors;
    bool conserved;
};

struct RateSweep {
    std::vector<RateRow> rows;
    /// Least-squares slope of log2(sum M) against j.
    double slope = 0.0;
    double intercept = 0.0;
};

/// For each j, refines the level-j cells of Q(0,R) meeting e with target r'_j.
RateSweep rate_sweep(const MapExpr& h, const PointSet& e, const RefineSchedule& s, int j_lo, int j_hi,
                     unsigned threads = 1);

nlohmann::json to_json(const RefineSchedule& s);
nlohmann::json to_json(const RefineResult& r);
nlohmann::json to_json(const RateSweep& r);
/// level,ix,iy
void write_minors_csv(std::ostream& os, const RefineResult& r);

}  // namespace assouadlab
