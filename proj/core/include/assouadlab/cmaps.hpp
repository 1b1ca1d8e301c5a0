#pragma once

#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "assouadlab/point.hpp"
#include "assouadlab/pointset.hpp"

namespace assouadlab {

/// One primitive planar map.
struct Primitive {
    enum class Kind { power, poly, recip, neglog, stretch, affine };

    Kind kind = Kind::affine;
    int degree = 1;                   // power
    std::vector<double> coeffs;       // poly, c0 + c1 z + ...
    double K = 1.0;                   // stretch
    Point a{1.0, 0.0}, b{0.0, 0.0};   // affine

    static Primitive power(int d);
    static Primitive poly(std::vector<double> c);
    static Primitive recip();
    static Primitive neglog();
    static Primitive stretch(double K);
    static Primitive affine(Point a, Point b);

    bool holomorphic() const noexcept { return kind != Kind::stretch; }
    /// Point the primitive is undefined at, if any.
    bool has_singularity() const noexcept { return kind == Kind::recip || kind == Kind::neglog; }
    std::string name() const;

    Point eval(Point z) const;
    Point derivative(Point z) const;

    bool operator==(const Primitive&) const = default;
};

/// Composition applied left to right.
class MapExpr {
public:
    MapExpr() = default;
    explicit MapExpr(std::vector<Primitive> steps);

    const std::vector<Primitive>& steps() const noexcept { return steps_; }
    bool empty() const noexcept { return steps_.empty(); }

    /// Product of stretch constants.
    double declared_K() const noexcept;
    /// Largest local degree among holomorphic steps (polynomial degree for poly).
    int holomorphic_degree() const noexcept;
    bool holomorphic() const noexcept;

    Point eval(Point z) const;

    /// this, then other.
    MapExpr then(const MapExpr& other) const;

    bool operator==(const MapExpr&) const = default;

private:
    std::vector<Primitive> steps_;
};

/// pow(d) | poly(c0,..) | recip | neglog | stretch(K) | affine(ar,ai,br,bi), joined by '|'.
MapExpr parse_map(const std::string& text);
std::string to_string(const MapExpr& expr);
std::string to_string(const Primitive& p);

struct ApplyInfo {
    std::size_t duplicates_dropped = 0;
    /// Always true: image δ is the smallest gap between images of consecutive samples.
    bool delta_heuristic = true;
};

/// Default exclusion radius 1e-9 times the set diameter.
double default_exclusion(const PointSet& e);

/// Image of e; exact duplicates in the image keep their first occurrence.
PointSet apply(const MapExpr& expr, const PointSet& e, double exclusion, ApplyInfo* info = nullptr);
PointSet apply(const MapExpr& expr, const PointSet& e);

/// Upper bound of |h'| over q for a holomorphic expression.
double derivative_bound(const MapExpr& expr, const Square& q);
/// Conservative enclosure of the image of q, as a square.
Square image_box(const Primitive& p, const Square& q);

struct DilatationReport {
    double K_hat = 1.0;
    double max_beltrami = 0.0;
    Square region;
    int grid_n = 0;
    double step = 0.0;
    Point worst{};
};

DilatationReport estimate_dilatation(const MapExpr& expr, const Square& region, int grid_n, double step);

nlohmann::json to_json(const DilatationReport& r);

}  // namespace assouadlab
