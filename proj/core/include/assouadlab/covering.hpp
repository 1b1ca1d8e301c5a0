#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "assouadlab/pointset.hpp"

namespace assouadlab {

/// Read-only disc-query index over a PointSet (points sorted by x).
class DiscIndex {
public:
    explicit DiscIndex(const PointSet& e);

    /// Appends every sample p with |p - z| < R to `out` (cleared first).
    void in_disc(Point z, double R, std::vector<Point>& out) const;
    std::size_t size() const noexcept { return xs_.size(); }

private:
    std::vector<double> xs_;
    std::vector<Point> pts_;
};

/// Occupied-cell counts of Q(z,R) for every level 0..m_hi at once.
///
/// counts[m] is the number of level-m dyadic cells of the square of side 2R
/// centered at z that contain a sample of the open disc D(z,R). A sample p
/// lies in the cell with signed index floor((p - z)/(2R) · 2^m) per axis,
/// i.e. boundary points go to the cell on their upper-right (lower-left
/// corner convention). `disc_points` must already be restricted to D(z,R).
std::vector<std::uint64_t> count_dyadic_levels(std::span<const Point> disc_points, Point z, double R, int m_hi);

/// Same counts for a decreasing chain of radii R_0 > R_1 > ... where every
/// R_0 / R_k is an exact power of two: all grids are then sub-grids of one
/// grid anchored at z, so a single Z-order sort serves every (R_k, m).
/// result[k][m] equals count_dyadic(e, z, R[k], m) for 1 <= m <= m_hi[k]
/// (result[k][0] is 1 when the disc is non-empty).
/// Requires max_k(log2(R_0/R_k) + m_hi[k]) <= kMaxChainLevel.
std::vector<std::vector<std::uint64_t>> count_dyadic_chain(const DiscIndex& index, Point z,
                                                           std::span<const double> R_chain,
                                                           std::span<const int> m_hi);

inline constexpr int kMaxChainLevel = 61;

/// True when b / a is an exact power of two.
bool power_of_two_ratio(double a, double b);

std::uint64_t count_dyadic(const PointSet& e, Point z, double R, int m);
std::uint64_t count_dyadic(const DiscIndex& index, Point z, double R, int m);

/// Occupied cells at level m as indices in [0, 2^m) (shifted by 2^(m-1)); sorted.
struct Cell {
    std::int64_t ix;
    std::int64_t iy;
    friend bool operator==(const Cell&, const Cell&) = default;
    friend auto operator<=>(const Cell&, const Cell&) = default;
};
std::vector<Cell> occupied_cells(const PointSet& e, Point z, double R, int m);

/// Deepest level whose cell side 2R·2^-m is not below eps·R.
inline constexpr int kMaxLevel = 53;

/// Bracketing of the covering number N(D(z,R) ∩ E, r).
struct CoverBounds {
    std::uint64_t lower = 0;  ///< size of a maximal r-separated subset
    std::uint64_t upper = 0;  ///< size of an explicit cover by sets of diameter <= r
    bool exact() const noexcept { return lower == upper; }
};

inline constexpr std::size_t kBruteForceLimit = 4096;

/// Throws SizeLimitError when the disc holds more than kBruteForceLimit samples.
CoverBounds count_bruteforce(const PointSet& e, Point z, double R, double r);
CoverBounds count_bruteforce(std::span<const Point> disc_points, double r);

/// Admissible (R, m) pairs for the θ-constrained spectrum.
struct ScalePair {
    double R;
    int m;
    friend bool operator==(const ScalePair&, const ScalePair&) = default;
};

struct ScaleWindow {
    double theta;
    std::vector<ScalePair> pairs;
    bool empty() const noexcept { return pairs.empty(); }
};

/// 2^-m·2R <= R^{1/θ}, 2^-m·2R >= min_side, 0 <= m <= m_max, R < 1.
bool is_admissible(double theta, double R, int m, double min_side, int m_max);

ScaleWindow admissible_pairs(double theta, std::span<const double> R_grid, int m_max, double min_side);

struct CountRecord {
    Point z;
    double R;
    int m;
    std::uint64_t count;
};

/// CSV with header zx,zy,R,m,count.
void write_count_csv(std::ostream& os, std::span<const CountRecord> records);

}  // namespace assouadlab
