#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "assouadlab/covering.hpp"
#include "assouadlab/pointset.hpp"

namespace assouadlab {

/// Knobs of the max-ratio estimator log2 N_d(z,R,m) / m.
struct EstimatorParams {
    std::size_t center_budget = 4096;
    /// Empty selects 2^(-k/radii_per_octave), k >= radii_per_octave, down to the smallest probed cell side.
    std::vector<double> R_grid;
    int radii_per_octave = 2;
    int m_max = 26;
    /// Smallest probed cell side is c_res·δ.
    double c_res = 1.0;
    std::uint64_t count_threshold = 20;
    /// Overrides c_res·δ when set.
    std::optional<double> min_side;
    /// Estimation in the caller's frame (e.g. to keep R < 1 meaningful) is allowed when false.
    bool require_normalized = true;
    unsigned threads = 0;
};

struct Witness {
    Point z;
    double R;
    int m;
    std::uint64_t count;
};

/// log2(count) / m, the single place the ratio is computed.
double witness_ratio(std::uint64_t count, int m);

/// Best count over centers for every probed (R, m).
class CountTable {
public:
    struct Entry {
        std::uint64_t count = 0;
        Point z{};
        bool probed = false;
    };

    CountTable(const PointSet& e, const EstimatorParams& params);

    const std::vector<double>& R_grid() const noexcept { return R_grid_; }
    int m_max() const noexcept { return m_max_; }
    double min_side() const noexcept { return min_side_; }
    std::uint64_t count_threshold() const noexcept { return threshold_; }
    std::size_t centers_used() const noexcept { return centers_; }
    const Entry& at(std::size_t r_index, int m) const;

    /// Max ratio over probed pairs passing the threshold; θ restricts to admissible pairs.
    struct Best {
        std::optional<Witness> witness;
        double value = 0.0;
        std::size_t pairs = 0;
    };
    Best best(std::optional<double> theta) const;

    /// Least-squares slope of max log2 N against m (diagnostic).
    double envelope_slope() const;

    std::vector<CountRecord> records() const;

private:
    std::vector<double> R_grid_;
    int m_max_;
    double min_side_;
    std::uint64_t threshold_;
    std::size_t centers_ = 0;
    std::vector<Entry> entries_;  // R-major, m_max+1 per R
};

enum class DimMode { assouad, spectrum, quasi_assouad };

struct DimEstimate {
    double value = 0.0;
    DimMode mode = DimMode::assouad;
    std::optional<double> theta;
    std::uint64_t count_threshold = 0;
    std::optional<Witness> witness;
    /// quasi_assouad: slope of the last three samples; assouad: envelope slope.
    double slope = 0.0;
};

struct SpectrumSample {
    double theta;
    double alpha;
    std::size_t pairs_used;
    std::optional<Witness> witness;
    std::string note;
};

struct SpectrumCurve {
    std::vector<SpectrumSample> samples;
};

/// Deterministic farthest-point subsample seeded at the lexicographically smallest point.
std::vector<Point> farthest_point_centers(const PointSet& e, std::size_t budget);

/// Default R grid: 2^(-k/per_octave) for k >= per_octave while R >= min_side.
std::vector<double> default_R_grid(double min_side, int per_octave = 1);

DimEstimate estimate_assouad(const PointSet& e, const EstimatorParams& params = {});
DimEstimate estimate_assouad(const CountTable& table);

SpectrumCurve estimate_spectrum(const PointSet& e, std::span<const double> thetas, const EstimatorParams& params = {});
SpectrumCurve estimate_spectrum(const CountTable& table, std::span<const double> thetas);

/// Running maximum over θ.
SpectrumCurve regularize_spectrum(const SpectrumCurve& curve);

DimEstimate estimate_quasi_assouad(const SpectrumCurve& curve);

/// theta,alpha,pairs_used,argmax_zx,argmax_zy,argmax_R,argmax_m,count
void write_spectrum_csv(std::ostream& os, const SpectrumCurve& curve);
SpectrumCurve read_spectrum_csv(std::istream& is);

std::string to_string(DimMode mode);
nlohmann::json to_json(const DimEstimate& d);
nlohmann::json to_json(const Witness& w);

/// Parses "a:b:step" (inclusive) into a θ grid.
std::vector<double> parse_theta_range(const std::string& text);

}  // namespace assouadlab
