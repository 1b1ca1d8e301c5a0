#pragma once

#include <cmath>
#include <complex>
#include <string>

namespace assouadlab {

/// Planar points are complex numbers throughout.
using Point = std::complex<double>;

inline bool lex_less(const Point& a, const Point& b) noexcept {
    if (a.real() != b.real()) return a.real() < b.real();
    return a.imag() < b.imag();
}

inline double dist2(const Point& a, const Point& b) noexcept {
    const double dx = a.real() - b.real();
    const double dy = a.imag() - b.imag();
    return dx * dx + dy * dy;
}

inline double dist(const Point& a, const Point& b) noexcept { return std::sqrt(dist2(a, b)); }

/// Axis-parallel square given by its center and half side.
struct Square {
    Point center;
    double half_side = 0.0;

    double side() const noexcept { return 2.0 * half_side; }
    double diameter() const noexcept { return std::sqrt(2.0) * side(); }
    double x_min() const noexcept { return center.real() - half_side; }
    double x_max() const noexcept { return center.real() + half_side; }
    double y_min() const noexcept { return center.imag() - half_side; }
    double y_max() const noexcept { return center.imag() + half_side; }
    bool contains(const Point& p) const noexcept {
        return p.real() >= x_min() && p.real() <= x_max() && p.imag() >= y_min() && p.imag() <= y_max();
    }
};

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

}  // namespace assouadlab
