#include "assouadlab/dimension.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "assouadlab/errors.hpp"
#include "assouadlab/parallel.hpp"

namespace assouadlab {

double witness_ratio(std::uint64_t count, int m) {
    return std::log2(static_cast<double>(count)) / static_cast<double>(m);
}

std::vector<Point> farthest_point_centers(const PointSet& e, std::size_t budget) {
    const auto pts = e.points();
    if (budget == 0) throw ParameterError("center budget must be positive");
    if (pts.size() <= budget) {
        std::vector<Point> all(pts.begin(), pts.end());
        std::sort(all.begin(), all.end(), lex_less);
        return all;
    }
    std::vector<Point> sorted(pts.begin(), pts.end());
    std::sort(sorted.begin(), sorted.end(), lex_less);
    std::vector<double> d2(sorted.size(), std::numeric_limits<double>::infinity());
    std::vector<Point> centers;
    centers.reserve(budget);
    std::size_t pick = 0;
    while (centers.size() < budget) {
        const Point c = sorted[pick];
        centers.push_back(c);
        double best = -1.0;
        std::size_t best_i = 0;
        for (std::size_t i = 0; i < sorted.size(); ++i) {
            d2[i] = std::min(d2[i], dist2(sorted[i], c));
            if (d2[i] > best) {
                best = d2[i];
                best_i = i;
            }
        }
        if (best <= 0.0) break;
        pick = best_i;
    }
    return centers;
}

std::vector<double> default_R_grid(double min_side, int per_octave) {
    if (per_octave < 1 || per_octave > 8) throw ParameterError("radii per octave must lie in [1, 8]");
    std::vector<double> grid;
    for (int k = per_octave; k <= 60 * per_octave; ++k) {
        const double R = std::exp2(-static_cast<double>(k) / per_octave);
        if (R < min_side) break;
        grid.push_back(R);
    }
    return grid;
}

namespace {

int deepest_level(double R, double min_side, int m_max) {
    int m = -1;
    while (m < m_max && m < kMaxLevel && std::ldexp(2.0 * R, -(m + 1)) >= min_side) ++m;
    return m;
}

bool better_entry(std::uint64_t count, const Point& z, const CountTable::Entry& cur) {
    if (!cur.probed) return true;
    if (count != cur.count) return count > cur.count;
    return lex_less(z, cur.z);
}

}  // namespace

CountTable::CountTable(const PointSet& e, const EstimatorParams& params)
    : m_max_(params.m_max), threshold_(params.count_threshold) {
    if (params.require_normalized && !is_normalized(e)) {
        throw PreconditionError("estimator expects a normalized set (diameter 1/2, centered)");
    }
    if (params.m_max < 1 || params.m_max > kMaxLevel) throw ParameterError("m_max must lie in [1, 53]");
    if (!(params.c_res > 0.0)) throw ParameterError("c_res must be positive");
    min_side_ = params.min_side ? *params.min_side : params.c_res * e.resolution();
    if (!(min_side_ > 0.0)) throw ParameterError("minimum cell side must be positive");
    R_grid_ = params.R_grid.empty() ? default_R_grid(min_side_, params.radii_per_octave) : params.R_grid;
    for (double R : R_grid_) {
        if (!(R > 0.0)) throw ParameterError("R grid entries must be positive");
    }

    const auto centers = farthest_point_centers(e, params.center_budget);
    centers_ = centers.size();
    const std::size_t stride = static_cast<std::size_t>(m_max_) + 1;

    // Group radii into decreasing power-of-two chains sharing one aligned grid.
    struct Chain {
        std::vector<std::size_t> r_index;
        std::vector<double> R;
        std::vector<int> m_hi;
    };
    std::vector<std::size_t> by_R(R_grid_.size());
    for (std::size_t i = 0; i < by_R.size(); ++i) by_R[i] = i;
    std::sort(by_R.begin(), by_R.end(), [&](std::size_t a, std::size_t b) { return R_grid_[a] > R_grid_[b]; });
    std::vector<Chain> chains;
    for (std::size_t ri : by_R) {
        const double R = R_grid_[ri];
        const int m_hi = deepest_level(R, min_side_, m_max_);
        if (m_hi < 1) continue;
        bool joined = false;
        for (auto& ch : chains) {
            const double R0 = ch.R.front();
            if (R < ch.R.back() && power_of_two_ratio(R0, R) &&
                std::ilogb(R0) - std::ilogb(R) + m_hi <= kMaxChainLevel) {
                ch.r_index.push_back(ri);
                ch.R.push_back(R);
                ch.m_hi.push_back(m_hi);
                joined = true;
                break;
            }
        }
        if (!joined) chains.push_back({{ri}, {R}, {m_hi}});
    }

    const DiscIndex index(e);
    const unsigned workers = resolve_threads(params.threads);
    std::vector<std::vector<Entry>> local(workers, std::vector<Entry>(R_grid_.size() * stride));

    parallel_for(centers.size(), workers, [&](unsigned w, std::size_t ci) {
        const Point z = centers[ci];
        auto& table = local[w];
        for (const auto& ch : chains) {
            const auto counts = count_dyadic_chain(index, z, ch.R, ch.m_hi);
            for (std::size_t k = 0; k < ch.R.size(); ++k) {
                for (int m = 1; m <= ch.m_hi[k]; ++m) {
                    auto& slot = table[ch.r_index[k] * stride + static_cast<std::size_t>(m)];
                    const auto c = counts[k][static_cast<std::size_t>(m)];
                    if (better_entry(c, z, slot)) slot = {c, z, true};
                }
            }
        }
    });

    entries_.assign(R_grid_.size() * stride, Entry{});
    for (const auto& table : local) {
        for (std::size_t k = 0; k < entries_.size(); ++k) {
            if (table[k].probed && better_entry(table[k].count, table[k].z, entries_[k])) entries_[k] = table[k];
        }
    }
}

const CountTable::Entry& CountTable::at(std::size_t r_index, int m) const {
    return entries_.at(r_index * (static_cast<std::size_t>(m_max_) + 1) + static_cast<std::size_t>(m));
}

CountTable::Best CountTable::best(std::optional<double> theta) const {
    Best out;
    double best_R = 0.0;
    for (std::size_t ri = 0; ri < R_grid_.size(); ++ri) {
        const double R = R_grid_[ri];
        for (int m = 1; m <= m_max_; ++m) {
            const auto& e = at(ri, m);
            if (!e.probed) continue;
            if (theta && !is_admissible(*theta, R, m, min_side_, m_max_)) continue;
            ++out.pairs;
            if (e.count < threshold_ || e.count == 0) continue;
            const double v = witness_ratio(e.count, m);
            bool take = !out.witness || v > out.value;
            if (!take && v == out.value) {
                const auto& w = *out.witness;
                if (m != w.m) take = m < w.m;
                else if (e.z != w.z) take = lex_less(e.z, w.z);
                else take = R < best_R;
            }
            if (take) {
                out.value = v;
                out.witness = Witness{e.z, R, m, e.count};
                best_R = R;
            }
        }
    }
    return out;
}

double CountTable::envelope_slope() const {
    std::vector<std::pair<double, double>> xy;
    for (int m = 1; m <= m_max_; ++m) {
        std::uint64_t best = 0;
        for (std::size_t ri = 0; ri < R_grid_.size(); ++ri) {
            if (at(ri, m).probed) best = std::max(best, at(ri, m).count);
        }
        if (best >= threshold_ && best > 0) xy.emplace_back(m, std::log2(static_cast<double>(best)));
    }
    if (xy.size() < 2) return 0.0;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (auto [x, y] : xy) {
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double n = static_cast<double>(xy.size());
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

std::vector<CountRecord> CountTable::records() const {
    std::vector<CountRecord> out;
    for (std::size_t ri = 0; ri < R_grid_.size(); ++ri) {
        for (int m = 1; m <= m_max_; ++m) {
            const auto& e = at(ri, m);
            if (e.probed) out.push_back({e.z, R_grid_[ri], m, e.count});
        }
    }
    return out;
}

DimEstimate estimate_assouad(const CountTable& table) {
    const auto b = table.best(std::nullopt);
    DimEstimate d;
    d.value = b.value;
    d.mode = DimMode::assouad;
    d.count_threshold = table.count_threshold();
    d.witness = b.witness;
    d.slope = table.envelope_slope();
    return d;
}

DimEstimate estimate_assouad(const PointSet& e, const EstimatorParams& params) {
    return estimate_assouad(CountTable(e, params));
}

SpectrumCurve estimate_spectrum(const CountTable& table, std::span<const double> thetas) {
    SpectrumCurve curve;
    double prev = 0.0;
    for (std::size_t i = 0; i < thetas.size(); ++i) {
        const double th = thetas[i];
        if (!(th > 0.0 && th < 1.0)) throw ParameterError("theta must lie in (0,1)");
        if (i > 0 && !(th > prev)) throw ParameterError("theta grid must be strictly increasing");
        prev = th;
        const auto b = table.best(th);
        SpectrumSample s{th, b.value, b.pairs, b.witness, {}};
        if (b.pairs == 0) s.note = "no admissible pairs";
        else if (!b.witness) s.note = "no pair reaches the count threshold";
        curve.samples.push_back(std::move(s));
    }
    return curve;
}

SpectrumCurve estimate_spectrum(const PointSet& e, std::span<const double> thetas, const EstimatorParams& params) {
    return estimate_spectrum(CountTable(e, params), thetas);
}

SpectrumCurve regularize_spectrum(const SpectrumCurve& curve) {
    SpectrumCurve out = curve;
    for (std::size_t i = 1; i < out.samples.size(); ++i) {
        if (out.samples[i].theta < out.samples[i - 1].theta) throw ParameterError("curve must be sorted by theta");
        if (out.samples[i - 1].alpha > out.samples[i].alpha) {
            out.samples[i].alpha = out.samples[i - 1].alpha;
            out.samples[i].witness = out.samples[i - 1].witness;
        }
    }
    return out;
}

DimEstimate estimate_quasi_assouad(const SpectrumCurve& curve) {
    std::vector<const SpectrumSample*> tail;
    for (const auto& s : curve.samples) {
        if (s.theta >= 0.9) tail.push_back(&s);
    }
    if (tail.empty()) throw InsufficientRangeError("quasi-Assouad estimate needs samples with theta >= 0.9");
    const SpectrumSample* last = tail.front();
    for (const auto* s : tail) {
        if (s->theta > last->theta) last = s;
    }
    std::vector<const SpectrumSample*> sorted;
    for (const auto& s : curve.samples) sorted.push_back(&s);
    std::sort(sorted.begin(), sorted.end(), [](auto* a, auto* b) { return a->theta < b->theta; });
    const std::size_t k = std::min<std::size_t>(3, sorted.size());
    double slope = 0.0;
    if (k >= 2) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (std::size_t i = sorted.size() - k; i < sorted.size(); ++i) {
            sx += sorted[i]->theta;
            sy += sorted[i]->alpha;
            sxx += sorted[i]->theta * sorted[i]->theta;
            sxy += sorted[i]->theta * sorted[i]->alpha;
        }
        const double n = static_cast<double>(k);
        const double den = n * sxx - sx * sx;
        if (den != 0.0) slope = (n * sxy - sx * sy) / den;
    }
    DimEstimate d;
    d.value = last->alpha;
    d.mode = DimMode::quasi_assouad;
    d.theta = last->theta;
    d.witness = last->witness;
    d.slope = slope;
    return d;
}

void write_spectrum_csv(std::ostream& os, const SpectrumCurve& curve) {
    os << "theta,alpha,pairs_used,argmax_zx,argmax_zy,argmax_R,argmax_m,count\n";
    for (const auto& s : curve.samples) {
        os << format_double(s.theta) << ',' << format_double(s.alpha) << ',' << s.pairs_used << ',';
        if (s.witness) {
            os << format_double(s.witness->z.real()) << ',' << format_double(s.witness->z.imag()) << ','
               << format_double(s.witness->R) << ',' << s.witness->m << ',' << s.witness->count << '\n';
        } else {
            os << ",,,,0\n";
        }
    }
}

SpectrumCurve read_spectrum_csv(std::istream& is) {
    SpectrumCurve curve;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty() || line.rfind("theta", 0) == 0) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string tok;
        while (std::getline(ss, tok, ',')) f.push_back(tok);
        if (line.back() == ',') f.emplace_back();
        if (f.size() < 2) throw ParseError(lineno, "expected at least theta,alpha");
        try {
            SpectrumSample s{std::stod(f[0]), std::stod(f[1]), f.size() > 2 && !f[2].empty() ? std::stoull(f[2]) : 0,
                             std::nullopt, {}};
            if (f.size() >= 8 && !f[3].empty()) {
                s.witness = Witness{{std::stod(f[3]), std::stod(f[4])}, std::stod(f[5]), std::stoi(f[6]),
                                    std::stoull(f[7])};
            }
            curve.samples.push_back(std::move(s));
        } catch (const std::logic_error&) {
            throw ParseError(lineno, "malformed spectrum row");
        }
    }
    return curve;
}

std::string to_string(DimMode mode) {
    switch (mode) {
        case DimMode::assouad: return "assouad";
        case DimMode::spectrum: return "spectrum";
        case DimMode::quasi_assouad: return "quasi_assouad";
    }
    return "unknown";
}

nlohmann::json to_json(const Witness& w) {
    return {{"zx", w.z.real()}, {"zy", w.z.imag()}, {"R", w.R}, {"m", w.m}, {"count", w.count}};
}

nlohmann::json to_json(const DimEstimate& d) {
    nlohmann::json j{{"value", d.value},
                     {"mode", to_string(d.mode)},
                     {"count_threshold", d.count_threshold},
                     {"slope", d.slope}};
    j["theta"] = d.theta ? nlohmann::json(*d.theta) : nlohmann::json(nullptr);
    j["witness"] = d.witness ? to_json(*d.witness) : nlohmann::json(nullptr);
    return j;
}

std::vector<double> parse_theta_range(const std::string& text) {
    std::vector<double> parts;
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ':')) {
        try {
            std::size_t used = 0;
            parts.push_back(std::stod(tok, &used));
            if (used != tok.size()) throw std::invalid_argument(tok);
        } catch (const std::logic_error&) {
            throw ParameterError("malformed theta range '" + text + "'");
        }
    }
    if (parts.size() == 1) return parts;
    if (parts.size() != 3 || !(parts[2] > 0.0) || parts[1] < parts[0]) {
        throw ParameterError("theta range must be 'start:stop:step' with step > 0");
    }
    std::vector<double> out;
    for (int k = 0;; ++k) {
        const double v = std::round((parts[0] + k * parts[2]) * 1e12) / 1e12;
        if (v > parts[1] + 1e-12) break;
        out.push_back(v);
    }
    return out;
}

}  // namespace assouadlab
