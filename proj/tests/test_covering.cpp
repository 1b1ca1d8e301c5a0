#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <sstream>
#include <vector>

#include "assouadlab/covering.hpp"
#include "assouadlab/errors.hpp"

using namespace assouadlab;

namespace {

// Direct per-cell test over all 4^m cells of Q(z,R) with half-open cells [a, a+s).
std::uint64_t per_cell_oracle(const PointSet& e, Point z, double R, int m) {
    const long long n = 1LL << m;
    const double s = 2.0 * R / static_cast<double>(n);
    std::uint64_t count = 0;
    for (long long i = 0; i < n; ++i) {
        for (long long k = 0; k < n; ++k) {
            const double x0 = z.real() - R + static_cast<double>(i) * s;
            const double y0 = z.imag() - R + static_cast<double>(k) * s;
            for (const auto& p : e.points()) {
                if (dist2(p, z) >= R * R) continue;
                if (p.real() >= x0 && p.real() < x0 + s && p.imag() >= y0 && p.imag() < y0 + s) {
                    ++count;
                    break;
                }
            }
        }
    }
    return count;
}

// Coordinates on the 2^-20 lattice keep every cell computation exact.
PointSet random_set(std::mt19937_64& rng, std::size_t n) {
    std::uniform_int_distribution<int> u(-(1 << 18), 1 << 18);
    std::set<std::pair<double, double>> seen;
    std::vector<Point> pts;
    while (pts.size() < n) {
        const double x = std::ldexp(u(rng), -20), y = std::ldexp(u(rng), -20);
        if (seen.insert({x, y}).second) pts.emplace_back(x, y);
    }
    return PointSet(std::move(pts), 1e-6);
}

}  // namespace

TEST_CASE("single point occupies one cell") {
    const PointSet e({{0.1, 0.2}}, 1.0);
    for (int m : {0, 1, 5, 20}) CHECK(count_dyadic(e, {0.1, 0.2}, 0.3, m) == 1);
}

TEST_CASE("lattice of cell centers") {
    const Point z{0.01, -0.02};
    const double R = 0.125;
    for (int m = 1; m <= 5; ++m) {
        const int n = 1 << m;
        const double s = 2.0 * R / n;
        std::vector<Point> pts;
        std::uint64_t inside = 0;
        for (int i = 0; i < n; ++i) {
            for (int k = 0; k < n; ++k) {
                const Point c{z.real() - R + (i + 0.5) * s, z.imag() - R + (k + 0.5) * s};
                pts.push_back(c);
                if (dist2(c, z) < R * R) ++inside;
            }
        }
        const PointSet e(pts, s);
        CHECK(count_dyadic(e, z, R, m) == inside);
        if (m == 1) CHECK(inside == 4);
    }
}

TEST_CASE("sequence sample against the per-cell oracle") {
    const PointSet e = generate(spec::SequencePower{1.0}, 100);
    CHECK(count_dyadic(e, {0, 0}, 0.25, 4) == per_cell_oracle(e, {0, 0}, 0.25, 4));
    for (int m = 1; m <= 7; ++m) {
        CHECK(count_dyadic(e, {0.2, 0.0}, 0.125, m) == per_cell_oracle(e, {0.2, 0.0}, 0.125, m));
    }
}

TEST_CASE("random sets against the per-cell oracle") {
    std::mt19937_64 rng(7);
    for (int t = 0; t < 20; ++t) {
        const PointSet e = random_set(rng, 60);
        const Point z = e.points()[static_cast<std::size_t>(t) % e.size()];
        const double R = std::ldexp(1.0, -1 - t % 3);
        const int m = 1 + t % 5;
        CHECK(count_dyadic(e, z, R, m) == per_cell_oracle(e, z, R, m));
        CHECK(occupied_cells(e, z, R, m).size() == count_dyadic(e, z, R, m));
    }
}

TEST_CASE("level and chain counts agree with single-level counts") {
    std::mt19937_64 rng(11);
    const PointSet e = random_set(rng, 400);
    const DiscIndex index(e);
    for (const Point z : {e.points()[0], e.points()[17], Point{0.0, 0.0}}) {
        std::vector<Point> disc;
        index.in_disc(z, 0.25, disc);
        const auto levels = count_dyadic_levels(disc, z, 0.25, 12);
        for (int m = 1; m <= 12; ++m) CHECK(levels[static_cast<std::size_t>(m)] == count_dyadic(e, z, 0.25, m));

        const std::vector<double> chain{0.25, 0.125, 0.03125, 0.0078125};
        const std::vector<int> m_hi{10, 9, 8, 6};
        const auto counts = count_dyadic_chain(index, z, chain, m_hi);
        for (std::size_t k = 0; k < chain.size(); ++k) {
            for (int m = 1; m <= m_hi[k]; ++m) {
                CHECK(counts[k][static_cast<std::size_t>(m)] == count_dyadic(e, z, chain[k], m));
            }
        }
    }
}

TEST_CASE("counts are invariant under permutation and monotone in the set") {
    std::mt19937_64 rng(3);
    const PointSet e = random_set(rng, 200);
    std::vector<Point> shuffled(e.points().begin(), e.points().end());
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    const PointSet f(shuffled, e.resolution());
    const PointSet half(std::vector<Point>(shuffled.begin(), shuffled.begin() + 100), e.resolution());
    for (int m = 1; m <= 8; ++m) {
        CHECK(count_dyadic(e, {0, 0}, 0.25, m) == count_dyadic(f, {0, 0}, 0.25, m));
        CHECK(count_dyadic(half, {0, 0}, 0.25, m) <= count_dyadic(e, {0, 0}, 0.25, m));
        CHECK(count_dyadic(e, {0, 0}, 0.25, m) <= count_dyadic(e, {0, 0}, 0.25, m + 1));
    }
}

TEST_CASE("level validation") {
    const PointSet e({{0, 0}}, 1.0);
    CHECK_THROWS_AS(count_dyadic(e, {0, 0}, 0.5, 54), ScaleUnderflowError);
    CHECK_THROWS_AS(count_dyadic(e, {0, 0}, 0.5, -1), ParameterError);
    CHECK_THROWS_AS(count_dyadic(e, {0, 0}, 0.0, 2), ParameterError);
    const DiscIndex index(e);
    const std::vector<double> bad{0.25, 0.1};
    const std::vector<int> m_hi{4, 4};
    CHECK_THROWS_AS(count_dyadic_chain(index, {0, 0}, bad, m_hi), ParameterError);
}

TEST_CASE("power of two ratios") {
    CHECK(power_of_two_ratio(0.5, 0.125));
    CHECK(power_of_two_ratio(3.0, 0.375));
    CHECK_FALSE(power_of_two_ratio(0.5, 0.3));
    CHECK_FALSE(power_of_two_ratio(0.5, 0.0));
}

TEST_CASE("brute-force covering examples") {
    const PointSet two({{0, 0}, {0.3, 0}}, 0.3);
    const CoverBounds b = count_bruteforce(two, {0, 0}, 1.0, 0.1);
    CHECK(b.lower == 2);
    CHECK(b.upper == 2);

    const PointSet tight({{0, 0}, {0.01, 0}, {0, 0.01}, {0.01, 0.01}}, 0.01);
    const CoverBounds c = count_bruteforce(tight, {0, 0}, 1.0, 0.1);
    CHECK(c.lower == 1);
    CHECK(c.upper == 1);
    CHECK(c.exact());

    CHECK_THROWS_AS(count_bruteforce(two, {0, 0}, 0.1, 0.5), ParameterError);
    const PointSet big = generate(spec::Grid{80}, 6400);
    CHECK_THROWS_AS(count_bruteforce(big, {0.5, 0.5}, 1.0, 0.1), SizeLimitError);
}

TEST_CASE("brute-force bounds bracket a cover of the sequence sample") {
    const PointSet e = generate(spec::SequencePower{1.0}, 200);
    const double R = 0.25;
    for (int m = 1; m <= 6; ++m) {
        const double s = std::ldexp(2.0 * R, -m);
        const std::uint64_t d = count_dyadic(e, {0, 0}, R, m);
        CHECK(count_bruteforce(e, {0, 0}, R, std::sqrt(2.0) * s).lower <= d);
        CHECK(d <= 4 * count_bruteforce(e, {0, 0}, R, s).upper);
    }
    const CoverBounds b = count_bruteforce(e, {0, 0}, 0.25, 1.0 / 64.0);
    CHECK(b.lower <= b.upper);
}

TEST_CASE("admissible pair arithmetic") {
    const std::vector<double> half{0.5};
    const ScaleWindow w = admissible_pairs(0.1, half, 40, 1e-30);
    REQUIRE_FALSE(w.empty());
    CHECK(w.pairs.front().m == 10);

    const std::vector<double> quarter{0.25};
    const ScaleWindow v = admissible_pairs(0.5, quarter, 40, 1e-30);
    REQUIRE_FALSE(v.empty());
    CHECK(v.pairs.front().m == 3);

    CHECK_THROWS_AS(admissible_pairs(1.0, half, 10, 1e-9), ParameterError);
    CHECK_THROWS_AS(admissible_pairs(0.5, std::vector<double>{1.0}, 10, 1e-9), ParameterError);
}

TEST_CASE("admissible window equals a direct recount") {
    std::vector<double> grid;
    for (int k = 1; k <= 8; ++k) grid.push_back(std::ldexp(1.0, -k));
    const double min_side = std::ldexp(1.0, -20);
    const ScaleWindow w = admissible_pairs(0.5, grid, 53, min_side);
    std::size_t expected = 0;
    for (int k = 1; k <= 8; ++k) {
        // side 2^(1-k-m) must lie in [2^-20, 2^(-2k)]
        for (int m = 0; m <= 53; ++m) {
            const int e = 1 - k - m;
            if (e <= -2 * k && e >= -20) ++expected;
        }
    }
    CHECK(w.pairs.size() == expected);
}

TEST_CASE("count csv") {
    std::ostringstream os;
    const std::vector<CountRecord> rec{{{0.5, -0.25}, 0.125, 3, 7}};
    write_count_csv(os, rec);
    CHECK(os.str() == "zx,zy,R,m,count\n0.5,-0.25,0.125,3,7\n");
}
