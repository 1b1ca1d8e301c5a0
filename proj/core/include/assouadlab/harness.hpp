#pragma once

#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "assouadlab/cmaps.hpp"
#include "assouadlab/dimension.hpp"
#include "assouadlab/porosity.hpp"

namespace assouadlab {

/// 2Kα / (2 + (K-1)α) for α in (0,2), K >= 1.
double predict_qr_bound(double alpha, double K);

/// θ(t) = 1/(1+t).
double theta_of_t(double t);

/// θ at which the source spectrum is read for parameter t: K/(K+t).
double source_theta(double t, double K);

struct SpectrumBound {
    double theta;
    double bound;
};

/// (θ(t), 2Kα/(2+(K-1)α)) with α the source spectrum at K/(K+t).
SpectrumBound predict_spectrum_bound(double t, double K, double alpha_source);

/// pα / (p - 2 + α).
double beta_intermediate(double p, double alpha);

enum class Verdict { pass, fail, expected_violation };

struct BoundReport {
    std::string suite;
    std::string row;
    /// holo-assouad, holo-spectrum, qr-assouad, qr-spectrum, porosity, luukkainen, counterexample, sharpness.
    std::string tag;
    std::string set;
    std::string map;
    double K = 1.0;
    std::optional<double> theta;
    std::optional<double> t;
    double alpha_src = 0.0;
    double bound = 0.0;
    double alpha_img = 0.0;
    double tolerance = 0.0;
    double slack = 0.0;
    Verdict verdict = Verdict::fail;
    std::string note;
};

struct SuiteOptions {
    std::size_t sequence_count = 10000;
    EstimatorParams estimator;
    PorosityParams porosity;
    /// Center budget for the 512x512 lattice control (262144 points).
    std::size_t lattice_centers = 256;
    double tolerance = 0.1;
    double margin = 0.15;
    unsigned threads = 0;
};

/// A built-in set of a suite: its spec, sample count and the frame it is estimated in.
struct SuiteSet {
    std::string spec;
    std::size_t count;
};

std::vector<std::string> suite_names();
std::vector<SuiteSet> suite_sources(const SuiteOptions& opt);
std::vector<MapExpr> holomorphic_suite_maps();
std::vector<MapExpr> quasiregular_suite_maps();
std::vector<double> suite_thetas();
std::vector<double> suite_ts();

/// Runs suites with shared caches of count tables and porosity reports.
class SuiteRunner {
public:
    explicit SuiteRunner(SuiteOptions opt = {});
    ~SuiteRunner();

    std::vector<BoundReport> run(const std::string& name);

    /// Normalized image of a suite set (empty map = the set itself).
    const PointSet& normalized(const SuiteSet& src, const MapExpr& map);
    const CountTable& table(const SuiteSet& src, const MapExpr& map);
    const PorosityReport& porosity(const SuiteSet& src, const MapExpr& map);

private:
    struct Entry;
    Entry& entry(const SuiteSet& src, const MapExpr& map);

    std::vector<BoundReport> holo_noincrease();
    std::vector<BoundReport> qr_bound();
    std::vector<BoundReport> spectrum_bound();
    std::vector<BoundReport> porosity_preserve();
    std::vector<BoundReport> counterexamples();
    std::vector<BoundReport> sharpness_sequences();

    SuiteOptions opt_;
    std::map<std::string, std::unique_ptr<Entry>> cache_;
};

std::vector<BoundReport> run_suite(const std::string& name, const SuiteOptions& opt = {});

std::string to_string(Verdict v);
nlohmann::json to_json(const BoundReport& r);
/// suite,row,alpha_src,bound,alpha_img,slack,verdict
void write_report_csv(std::ostream& os, const std::vector<BoundReport>& reports);
/// True when no row is an unexpected FAIL.
bool all_expected(const std::vector<BoundReport>& reports);

}  // namespace assouadlab
