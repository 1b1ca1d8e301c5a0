#include "assouadlab/covering.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <limits>
#include <ostream>

#include "assouadlab/errors.hpp"

namespace assouadlab {

DiscIndex::DiscIndex(const PointSet& e) : pts_(e.points().begin(), e.points().end()) {
    std::sort(pts_.begin(), pts_.end(), lex_less);
    xs_.reserve(pts_.size());
    for (const auto& p : pts_) xs_.push_back(p.real());
}

void DiscIndex::in_disc(Point z, double R, std::vector<Point>& out) const {
    out.clear();
    const auto lo = std::lower_bound(xs_.begin(), xs_.end(), z.real() - R);
    const auto hi = std::upper_bound(lo, xs_.end(), z.real() + R);
    const double R2 = R * R;
    for (auto it = lo; it != hi; ++it) {
        const auto& p = pts_[static_cast<std::size_t>(it - xs_.begin())];
        if (dist2(p, z) < R2) out.push_back(p);
    }
}

namespace {

void check_level(double R, int m) {
    if (!(R > 0.0) || !std::isfinite(R)) throw ParameterError("R must be positive");
    if (m < 0) throw ParameterError("level must be non-negative");
    if (m > kMaxLevel) {
        throw ScaleUnderflowError("cell side 2R*2^-" + std::to_string(m) + " is below machine precision");
    }
}

// Signed cell index relative to z: floor((coord - zc) / (2R) · 2^m).
inline std::int64_t rel_index(double coord, double zc, double R, int m) {
    return static_cast<std::int64_t>(std::floor(std::ldexp((coord - zc) / (2.0 * R), m)));
}

inline constexpr std::uint64_t kBias = std::uint64_t{1} << 62;

struct Key {
    std::uint64_t x;
    std::uint64_t y;
};

inline bool less_msb(std::uint64_t a, std::uint64_t b) { return a < b && a < (a ^ b); }

// Z-order: the coordinate with the highest differing bit decides.
inline bool z_less(const Key& a, const Key& b) {
    const std::uint64_t dx = a.x ^ b.x;
    const std::uint64_t dy = a.y ^ b.y;
    if (less_msb(dx, dy)) return a.y < b.y;
    return a.x < b.x;
}

inline int separation(const Key& a, const Key& b) {
    return std::max(std::bit_width(a.x ^ b.x), std::bit_width(a.y ^ b.y));
}

Key key_at(const Point& p, Point z, double R, int m) {
    return {static_cast<std::uint64_t>(rel_index(p.real(), z.real(), R, m)) + kBias,
            static_cast<std::uint64_t>(rel_index(p.imag(), z.imag(), R, m)) + kBias};
}

}  // namespace

bool power_of_two_ratio(double a, double b) {
    int ea = 0, eb = 0;
    const double ma = std::frexp(a, &ea);
    const double mb = std::frexp(b, &eb);
    return ma == mb && ma != 0.0;
}

std::vector<std::uint64_t> count_dyadic_levels(std::span<const Point> disc_points, Point z, double R, int m_hi) {
    check_level(R, m_hi);
    if (m_hi > kMaxChainLevel) throw ScaleUnderflowError("level exceeds index range");
    std::vector<std::uint64_t> counts(static_cast<std::size_t>(m_hi) + 1, 0);
    if (disc_points.empty()) return counts;
    std::vector<Key> keys;
    keys.reserve(disc_points.size());
    for (const auto& p : disc_points) keys.push_back(key_at(p, z, R, m_hi));
    std::sort(keys.begin(), keys.end(), z_less);
    // pairs separated at shift j: separation > j
    std::vector<std::uint64_t> hist(65, 0);
    for (std::size_t k = 1; k < keys.size(); ++k) ++hist[static_cast<std::size_t>(separation(keys[k - 1], keys[k]))];
    counts[0] = 1;
    for (int m = 1; m <= m_hi; ++m) {
        const int j = m_hi - m;
        std::uint64_t c = 1;
        for (int t = j + 1; t <= 64; ++t) c += hist[static_cast<std::size_t>(t)];
        counts[static_cast<std::size_t>(m)] = c;
    }
    return counts;
}

std::vector<std::vector<std::uint64_t>> count_dyadic_chain(const DiscIndex& index, Point z,
                                                           std::span<const double> R_chain,
                                                           std::span<const int> m_hi) {
    if (R_chain.size() != m_hi.size()) throw ParameterError("R chain and level bounds differ in length");
    std::vector<std::vector<std::uint64_t>> out(R_chain.size());
    if (R_chain.empty()) return out;
    const double R0 = R_chain[0];
    std::vector<int> shift(R_chain.size());
    int M = 0;
    for (std::size_t k = 0; k < R_chain.size(); ++k) {
        check_level(R_chain[k], std::max(m_hi[k], 0));
        if (k > 0 && !(R_chain[k] < R_chain[k - 1])) throw ParameterError("R chain must be strictly decreasing");
        if (!power_of_two_ratio(R0, R_chain[k])) throw ParameterError("R chain ratios must be powers of two");
        shift[k] = std::ilogb(R0) - std::ilogb(R_chain[k]);
        M = std::max(M, shift[k] + m_hi[k]);
    }
    if (M > kMaxChainLevel) throw ScaleUnderflowError("R chain spans too many levels");

    thread_local std::vector<Point> pts;
    thread_local std::vector<Key> keys;
    thread_local std::vector<std::uint32_t> order, prev, next, bucket_start, by_bucket;
    thread_local std::vector<std::uint16_t> bucket;
    index.in_disc(z, R0, pts);
    const std::size_t n = pts.size();
    if (n >= std::numeric_limits<std::uint32_t>::max()) throw SizeLimitError("too many samples for one disc");
    constexpr std::uint32_t kNone = std::numeric_limits<std::uint32_t>::max();
    thread_local std::vector<std::pair<Key, std::uint32_t>> tagged;
    tagged.resize(n);
    for (std::size_t i = 0; i < n; ++i) tagged[i] = {key_at(pts[i], z, R0, M), static_cast<std::uint32_t>(i)};
    std::sort(tagged.begin(), tagged.end(), [](const auto& a, const auto& b) { return z_less(a.first, b.first); });
    keys.resize(n);
    order.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        keys[tagged[i].second] = tagged[i].first;
        order[i] = tagged[i].second;
    }

    prev.assign(n, kNone);
    next.assign(n, kNone);
    std::array<std::int64_t, 65> hist{};
    for (std::size_t k = 1; k < n; ++k) {
        prev[order[k]] = order[k - 1];
        next[order[k - 1]] = order[k];
        ++hist[static_cast<std::size_t>(separation(keys[order[k - 1]], keys[order[k]]))];
    }

    // bucket[i]: first chain index k with |p_i - z| >= R_k (K if none)
    const std::size_t K = R_chain.size();
    bucket.resize(n);
    bucket_start.assign(K + 2, 0);
    for (std::size_t i = 0; i < n; ++i) {
        const double d2 = dist2(pts[i], z);
        std::size_t b = 0;
        while (b < K && d2 < R_chain[b] * R_chain[b]) ++b;
        bucket[i] = static_cast<std::uint16_t>(b);
        ++bucket_start[b + 1];
    }
    for (std::size_t b = 1; b < K + 2; ++b) bucket_start[b] += bucket_start[b - 1];
    by_bucket.resize(n);
    {
        std::vector<std::uint32_t> fill(bucket_start.begin(), bucket_start.end() - 1);
        for (std::size_t i = 0; i < n; ++i) by_bucket[fill[bucket[i]]++] = static_cast<std::uint32_t>(i);
    }

    std::size_t alive = n;
    for (std::size_t k = 0; k < K; ++k) {
        // drop the samples outside D(z, R_k): those whose bucket is k
        for (std::uint32_t q = bucket_start[k]; q < bucket_start[k + 1]; ++q) {
            const std::uint32_t p = by_bucket[q];
            const std::uint32_t a = prev[p], b = next[p];
            if (a != kNone) --hist[static_cast<std::size_t>(separation(keys[a], keys[p]))];
            if (b != kNone) --hist[static_cast<std::size_t>(separation(keys[p], keys[b]))];
            if (a != kNone && b != kNone) ++hist[static_cast<std::size_t>(separation(keys[a], keys[b]))];
            if (a != kNone) next[a] = b;
            if (b != kNone) prev[b] = a;
            --alive;
        }
        auto& counts = out[k];
        counts.assign(static_cast<std::size_t>(std::max(m_hi[k], 0)) + 1, 0);
        if (alive == 0 || m_hi[k] < 0) continue;
        // suffix[t] = pairs with separation >= t
        std::array<std::int64_t, 66> suffix{};
        for (int t = 64; t >= 0; --t) suffix[static_cast<std::size_t>(t)] = suffix[static_cast<std::size_t>(t) + 1] + hist[static_cast<std::size_t>(t)];
        counts[0] = 1;
        for (int m = 1; m <= m_hi[k]; ++m) {
            const int j = M - shift[k] - m;
            counts[static_cast<std::size_t>(m)] = 1 + static_cast<std::uint64_t>(suffix[static_cast<std::size_t>(j) + 1]);
        }
    }
    return out;
}

std::vector<Cell> occupied_cells(const PointSet& e, Point z, double R, int m) {
    check_level(R, m);
    std::vector<Point> in;
    DiscIndex(e).in_disc(z, R, in);
    std::vector<Cell> cells;
    if (m == 0) {
        if (!in.empty()) cells.push_back({0, 0});
        return cells;
    }
    const std::int64_t off = std::int64_t{1} << (m - 1);
    for (const auto& p : in) {
        cells.push_back({rel_index(p.real(), z.real(), R, m) + off, rel_index(p.imag(), z.imag(), R, m) + off});
    }
    std::sort(cells.begin(), cells.end());
    cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
    return cells;
}

std::uint64_t count_dyadic(const DiscIndex& index, Point z, double R, int m) {
    check_level(R, m);
    std::vector<Point> in;
    index.in_disc(z, R, in);
    return count_dyadic_levels(in, z, R, m).back();
}

std::uint64_t count_dyadic(const PointSet& e, Point z, double R, int m) { return count_dyadic(DiscIndex(e), z, R, m); }

CoverBounds count_bruteforce(std::span<const Point> pts, double r) {
    if (!(r > 0.0)) throw ParameterError("r must be positive");
    if (pts.size() > kBruteForceLimit) {
        throw SizeLimitError("disc holds " + std::to_string(pts.size()) + " samples (limit " +
                             std::to_string(kBruteForceLimit) + "); use count_dyadic");
    }
    CoverBounds b;
    if (pts.empty()) return b;
    const double r2 = r * r;

    std::vector<Point> separated;
    for (const auto& p : pts) {
        const bool far = std::all_of(separated.begin(), separated.end(), [&](const Point& q) { return dist2(p, q) > r2; });
        if (far) separated.push_back(p);
    }
    b.lower = separated.size();

    // greedy clusters with diameter <= r
    std::vector<std::vector<Point>> clusters;
    for (const auto& p : pts) {
        bool placed = false;
        for (auto& c : clusters) {
            if (std::all_of(c.begin(), c.end(), [&](const Point& q) { return dist2(p, q) <= r2; })) {
                c.push_back(p);
                placed = true;
                break;
            }
        }
        if (!placed) clusters.push_back({p});
    }
    std::uint64_t upper = clusters.size();

    // axis grid with cells of diameter r
    const double side = r / std::sqrt(2.0);
    double xmin = pts[0].real(), ymin = pts[0].imag();
    for (const auto& p : pts) {
        xmin = std::min(xmin, p.real());
        ymin = std::min(ymin, p.imag());
    }
    std::vector<std::pair<std::int64_t, std::int64_t>> cells;
    cells.reserve(pts.size());
    for (const auto& p : pts) {
        cells.emplace_back(static_cast<std::int64_t>(std::floor((p.real() - xmin) / side)),
                           static_cast<std::int64_t>(std::floor((p.imag() - ymin) / side)));
    }
    std::sort(cells.begin(), cells.end());
    cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
    b.upper = std::min<std::uint64_t>(upper, cells.size());
    b.lower = std::min(b.lower, b.upper);
    return b;
}

CoverBounds count_bruteforce(const PointSet& e, Point z, double R, double r) {
    if (!(R > 0.0)) throw ParameterError("R must be positive");
    if (!(r > 0.0) || r > 2.0 * R) throw ParameterError("count_bruteforce requires 0 < r <= 2R");
    std::vector<Point> in;
    DiscIndex(e).in_disc(z, R, in);
    return count_bruteforce(in, r);
}

bool is_admissible(double theta, double R, int m, double min_side, int m_max) {
    if (m < 0 || m > m_max || !(R > 0.0) || !(R < 1.0)) return false;
    const double side = std::ldexp(2.0 * R, -m);
    return side <= std::pow(R, 1.0 / theta) && side >= min_side;
}

ScaleWindow admissible_pairs(double theta, std::span<const double> R_grid, int m_max, double min_side) {
    if (!(theta > 0.0 && theta < 1.0)) throw ParameterError("theta must lie in (0,1)");
    ScaleWindow w{theta, {}};
    for (double R : R_grid) {
        if (!(R > 0.0 && R < 1.0)) throw ParameterError("R must lie in (0,1)");
        for (int m = 0; m <= m_max; ++m) {
            if (is_admissible(theta, R, m, min_side, m_max)) w.pairs.push_back({R, m});
        }
    }
    return w;
}

void write_count_csv(std::ostream& os, std::span<const CountRecord> records) {
    os << "zx,zy,R,m,count\n";
    for (const auto& r : records) {
        os << format_double(r.z.real()) << ',' << format_double(r.z.imag()) << ',' << format_double(r.R) << ','
           << r.m << ',' << r.count << '\n';
    }
}

}  // namespace assouadlab
