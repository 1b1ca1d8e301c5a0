#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "assouadlab/point.hpp"

namespace assouadlab {

/// Finite sample of a compact planar set.
///
/// `resolution` is the sampling fineness: every point of the intended set lies
/// within `resolution` of some sample. Immutable after construction.
class PointSet {
public:
    /// Validates: non-empty, finite, duplicate-free, 0 < resolution, and
    /// resolution <= diameter unless the set is a single point.
    PointSet(std::vector<Point> points, double resolution, std::string label = {});

    std::span<const Point> points() const noexcept { return points_; }
    std::size_t size() const noexcept { return points_.size(); }
    double resolution() const noexcept { return resolution_; }
    const std::string& label() const noexcept { return label_; }

    /// Exact Euclidean diameter (convex hull, then all hull pairs).
    double diameter() const;

    /// Lexicographically smallest sample.
    Point lex_min() const;

    friend bool operator==(const PointSet&, const PointSet&) = default;

private:
    std::vector<Point> points_;
    double resolution_;
    std::string label_;
};

double diameter_of(std::span<const Point> pts);

/// Smallest positive gap between consecutive list entries, or 0 if none.
double min_consecutive_gap(std::span<const Point> pts);

namespace spec {
struct SequencePower { double p; };          // {n^-p} ∪ {0}
struct Geometric { double q; };              // {q^n}
struct Cantor { double ratio; int depth; };  // centers of the level-depth intervals
struct Grid { int n; };                      // n×n lattice in [0,1]^2
struct Spiral { double p; double t_max; double step; };  // t^-p e^{it}, t in [1, t_max], plus 0
struct Explicit { std::filesystem::path path; };
}  // namespace spec

using SetSpec = std::variant<spec::SequencePower, spec::Geometric, spec::Cantor, spec::Grid, spec::Spiral,
                             spec::Explicit>;

/// Parses the CLI mini-grammar: seq:<p>, geom:<q>, cantor:<ratio>:<depth>,
/// grid:<n>, spiral:<p>:<tmax>:<step>, file:<path>.
SetSpec parse_set_spec(const std::string& text);
std::string to_string(const SetSpec& s);

/// First `count` elements of the family. Deterministic.
PointSet generate(const SetSpec& s, std::size_t count);

/// z -> scale * z + shift.
struct Similarity {
    double scale = 1.0;
    Point shift{0.0, 0.0};

    Point apply(const Point& z) const noexcept { return scale * z + shift; }
    Point invert(const Point& w) const noexcept { return (w - shift) / scale; }
    bool is_identity() const noexcept { return scale == 1.0 && shift == Point{0.0, 0.0}; }
};

struct Normalized {
    PointSet set;
    Similarity similarity;
};

/// Centers the bounding box at the origin and scales to diameter 1/2.
/// Points that collide after rounding are merged.
Normalized normalize(const PointSet& e);

/// True when the bounding box is centered at 0 and the diameter is 1/2, up to a few ulps.
bool is_normalized(const PointSet& e);

PointSet load(const std::filesystem::path& path);
void save(const PointSet& e, const std::filesystem::path& path);

/// Text form of the point file format (used by save).
std::string to_text(const PointSet& e);
PointSet from_text(const std::string& text);

}  // namespace assouadlab
