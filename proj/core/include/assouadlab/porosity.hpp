#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "assouadlab/dimension.hpp"
#include "assouadlab/pointset.hpp"

namespace assouadlab {

struct PorosityParams {
    std::size_t center_budget = 256;
    /// Explicit probe centers; overrides the farthest-point subsample.
    std::optional<std::vector<Point>> centers;
    /// Empty selects 2^-2, 2^-3, ... while r >= c_res·δ.
    std::vector<double> r_grid;
    double c_res = 32.0;
    int lattice = 32;
    int refine_factor = 4;
    double lambda_min = 0.05;
    bool require_normalized = true;
    /// Keep the per-probe witness list; every candidate of every probe is then evaluated.
    bool keep_witnesses = false;
    unsigned threads = 0;
};

enum class PorosityVerdict { porous, not_porous, inconclusive };

struct HoleWitness {
    Point z;
    double r;
    /// Center and radius of an open disc inside D(z, r) free of samples.
    Point y;
    double hole;
    double lambda() const noexcept { return hole / r; }
};

struct PorosityReport {
    double lambda_hat = 0.0;
    double lambda_min = 0.05;
    std::vector<double> r_grid;
    std::size_t probes = 0;
    HoleWitness worst{};
    PorosityVerdict verdict = PorosityVerdict::inconclusive;
    std::vector<HoleWitness> witnesses;
};

/// Verdict for a value: porous at >= lambda_min, inconclusive in [lambda_min/2, lambda_min).
PorosityVerdict porosity_verdict(double lambda_hat, double lambda_min);

PorosityReport estimate_porosity(const PointSet& e, const PorosityParams& params = {});

/// True when no sample lies in the open disc of the witness.
bool witness_is_empty(const PointSet& e, const HoleWitness& w);

enum class Consistency { consistent, flag, inconclusive };

Consistency check_luukkainen(const DimEstimate& dim, const PorosityReport& por, double margin = 0.15);

std::string to_string(PorosityVerdict v);
std::string to_string(Consistency c);
nlohmann::json to_json(const PorosityReport& r, bool with_witnesses = false);
nlohmann::json to_json(const HoleWitness& w);

}  // namespace assouadlab
