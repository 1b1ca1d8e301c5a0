#include <doctest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "assouadlab/covering.hpp"
#include "assouadlab/dimension.hpp"
#include "assouadlab/errors.hpp"

using namespace assouadlab;

namespace {

const CountTable& seq_table(double p) {
    static const CountTable one(normalize(generate(spec::SequencePower{1.0}, 10000)).set, EstimatorParams{});
    static const CountTable two(normalize(generate(spec::SequencePower{2.0}, 10000)).set, EstimatorParams{});
    return p == 1.0 ? one : two;
}

double at_theta(const CountTable& t, double theta) {
    const std::vector<double> th{theta};
    return estimate_spectrum(t, th).samples.front().alpha;
}

SpectrumCurve curve_of(std::vector<std::pair<double, double>> rows) {
    SpectrumCurve c;
    for (auto [t, a] : rows) c.samples.push_back({t, a, 1, std::nullopt, {}});
    return c;
}

}  // namespace

TEST_CASE("single point has dimension zero") {
    const PointSet e({{0, 0}}, 1.0);
    const DimEstimate d = estimate_assouad(e);
    CHECK(d.value == 0.0);
    CHECK_FALSE(d.witness);
}

TEST_CASE("filled square is full dimensional") {
    EstimatorParams p;
    p.center_budget = 64;
    const PointSet e = normalize(generate(spec::Grid{256}, 256 * 256)).set;
    const DimEstimate d = estimate_assouad(e, p);
    CHECK(d.value >= 1.9);
    CHECK(d.value <= 2.0);
}

TEST_CASE("sequence_power(1) Assouad estimate") {
    const DimEstimate d = estimate_assouad(seq_table(1.0));
    CHECK(d.value >= 0.9);
    CHECK(d.value <= 1.0);
}

TEST_CASE("sequence spectra match closed forms") {
    CHECK(at_theta(seq_table(1.0), 0.5) == doctest::Approx(1.0).epsilon(0.1));
    CHECK(std::abs(at_theta(seq_table(1.0), 0.25) - 2.0 / 3.0) <= 0.1);
    CHECK(std::abs(at_theta(seq_table(2.0), 0.5) - 2.0 / 3.0) <= 0.1);
}

TEST_CASE("witness recount") {
    const CountTable& t = seq_table(1.0);
    const PointSet e = normalize(generate(spec::SequencePower{1.0}, 10000)).set;
    for (double th : {0.25, 0.5, 0.75}) {
        const std::vector<double> one{th};
        const auto s = estimate_spectrum(t, one).samples.front();
        REQUIRE(s.witness);
        const Witness& w = *s.witness;
        CHECK(count_dyadic(e, w.z, w.R, w.m) == w.count);
        CHECK(s.alpha == doctest::Approx(std::log2(static_cast<double>(w.count)) / w.m));
        CHECK(is_admissible(th, w.R, w.m, t.min_side(), t.m_max()));
        CHECK(w.count >= t.count_threshold());
    }
}

TEST_CASE("estimate is invariant under exact similarities") {
    const PointSet e = generate(spec::Cantor{0.25, 6}, 64);
    std::vector<Point> moved;
    for (const auto& p : e.points()) moved.push_back(4.0 * p + Point{0.5, -2.0});
    const PointSet f(moved, 4.0 * e.resolution());
    EstimatorParams p;
    p.count_threshold = 4;
    const double a = estimate_assouad(normalize(e).set, p).value;
    const double b = estimate_assouad(normalize(f).set, p).value;
    CHECK(a == b);
    CHECK(a > 0.0);
}

TEST_CASE("estimate is monotone under adding points") {
    const PointSet small = normalize(generate(spec::SequencePower{1.0}, 2000)).set;
    std::vector<Point> pts(small.points().begin(), small.points().end());
    for (int i = 1; i <= 200; ++i) pts.emplace_back(0.25 - i * 1e-4, 0.001 * (i % 7));
    const PointSet big(pts, small.resolution());
    EstimatorParams p;
    p.min_side = small.resolution();
    p.require_normalized = false;
    p.R_grid = default_R_grid(small.resolution(), 2);
    p.center_budget = 1u << 20;
    CHECK(estimate_assouad(big, p).value >= estimate_assouad(small, p).value);
}

TEST_CASE("unnormalized input is rejected") {
    CHECK_THROWS_AS(estimate_assouad(generate(spec::SequencePower{1.0}, 100)), PreconditionError);
    EstimatorParams p;
    p.m_max = 0;
    CHECK_THROWS_AS(estimate_assouad(PointSet({{0, 0}}, 1.0), p), ParameterError);
}

TEST_CASE("default R grid") {
    const auto g = default_R_grid(0.01, 2);
    REQUIRE(g.size() == 12);
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(g[i] == std::exp2(-(static_cast<double>(i) + 2.0) / 2.0));
    CHECK(default_R_grid(0.01).size() == 6);
    CHECK_THROWS_AS(default_R_grid(0.01, 0), ParameterError);
}

TEST_CASE("farthest point centers") {
    const PointSet e = generate(spec::Grid{10}, 100);
    const auto c = farthest_point_centers(e, 4);
    REQUIRE(c.size() == 4);
    CHECK(c[0] == Point{0, 0});
    CHECK(c[1] == Point{1, 1});
    CHECK(farthest_point_centers(e, 1000).size() == 100);
    CHECK_THROWS_AS(farthest_point_centers(e, 0), ParameterError);
}

TEST_CASE("empty admissible window") {
    const PointSet e = normalize(generate(spec::SequencePower{1.0}, 50)).set;
    EstimatorParams p;
    p.m_max = 2;
    const std::vector<double> th{0.05};
    const auto s = estimate_spectrum(e, th, p).samples.front();
    CHECK(s.alpha == 0.0);
    CHECK(s.note == "no admissible pairs");
}

TEST_CASE("regularization is a running maximum") {
    const SpectrumCurve r = regularize_spectrum(curve_of({{0.2, 0.5}, {0.4, 0.3}, {0.6, 0.7}}));
    CHECK(r.samples[0].alpha == 0.5);
    CHECK(r.samples[1].alpha == 0.5);
    CHECK(r.samples[2].alpha == 0.7);
    const SpectrumCurve again = regularize_spectrum(r);
    for (std::size_t i = 0; i < r.samples.size(); ++i) CHECK(again.samples[i].alpha == r.samples[i].alpha);
}

TEST_CASE("quasi-Assouad from a curve") {
    const DimEstimate c = estimate_quasi_assouad(curve_of({{0.5, 0.4}, {0.9, 0.4}, {0.95, 0.4}}));
    CHECK(c.value == 0.4);
    CHECK(c.slope == doctest::Approx(0.0));
    CHECK_THROWS_AS(estimate_quasi_assouad(curve_of({{0.25, 0.6}, {0.5, 0.9}})), InsufficientRangeError);

    std::vector<double> th;
    for (int i = 1; i <= 19; ++i) th.push_back(0.05 * i);
    const DimEstimate q = estimate_quasi_assouad(regularize_spectrum(estimate_spectrum(seq_table(1.0), th)));
    CHECK(q.value == doctest::Approx(1.0).epsilon(0.1));
}

TEST_CASE("spectrum csv round-trip") {
    const std::vector<double> th{0.25, 0.5, 0.75};
    const SpectrumCurve c = estimate_spectrum(seq_table(2.0), th);
    std::stringstream ss;
    write_spectrum_csv(ss, c);
    const SpectrumCurve back = read_spectrum_csv(ss);
    REQUIRE(back.samples.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(back.samples[i].theta == c.samples[i].theta);
        CHECK(back.samples[i].alpha == c.samples[i].alpha);
    }
}

TEST_CASE("theta ranges") {
    const auto r = parse_theta_range("0.25:0.75:0.25");
    REQUIRE(r.size() == 3);
    CHECK(r[2] == doctest::Approx(0.75));
    CHECK_THROWS_AS(parse_theta_range("0.1:0.5"), ParameterError);
    CHECK_THROWS_AS(parse_theta_range("0.1:0.5:0"), ParameterError);
}
