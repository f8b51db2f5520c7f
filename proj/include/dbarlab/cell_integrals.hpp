#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>

namespace dbarlab {

namespace detail {

// Antiderivative for the rectangle integral of 1/zeta:
//   d^2/dx dy [ -i * zeta * (Log zeta - 1) ] = 1/zeta,  zeta = x + iy.
// Valid with the principal branch as long as the rectangle stays inside the
// closed upper half plane (the branch cut on the negative reals is then only
// approached from above, where principal Log is the continuous limit).
inline std::complex<double> corner_term(double x, double y) {
    if (std::signbit(y) && y == 0.0) y = 0.0;  // -0.0 would land below the cut
    const std::complex<double> z(x, y);
    if (x == 0.0 && y == 0.0) return {0.0, 0.0};  // zeta*Log(zeta) -> 0
    return std::complex<double>(0.0, -1.0) * z * (std::log(z) - 1.0);
}

// Rectangle contained in one closed quadrant, singularity at the origin at
// worst touching a corner. Lower half plane rectangles are reflected into the
// upper half plane: integral over conj(R) of 1/conj(zeta) = conj(integral).
inline std::complex<double> quadrant_rect(double x0, double x1, double y0, double y1) {
    if (x1 <= x0 || y1 <= y0) return {0.0, 0.0};
    if (y1 <= 0.0) {
        const std::complex<double> v = quadrant_rect(x0, x1, -y1, -y0);
        return std::conj(v);
    }
    return corner_term(x1, y1) - corner_term(x0, y1) - corner_term(x1, y0) + corner_term(x0, y0);
}

}  // namespace detail

/// Exact integral of 1/(zeta - z) dA(zeta) over the axis-aligned rectangle
/// [x0,x1] x [y0,y1]. Finite even when z lies inside (the kernel is
/// absolutely integrable); evaluated by splitting at the singularity so each
/// piece lives in a single quadrant relative to z.
inline std::complex<double> cell_integral_inv(double x0, double x1, double y0, double y1,
                                              std::complex<double> z) {
    const double a0 = x0 - z.real(), a1 = x1 - z.real();
    const double b0 = y0 - z.imag(), b1 = y1 - z.imag();
    // split points at the coordinate axes, clipped to the rectangle
    const double xm = std::clamp(0.0, a0, a1);
    const double ym = std::clamp(0.0, b0, b1);
    std::complex<double> acc = 0.0;
    acc += detail::quadrant_rect(a0, xm, b0, ym);
    acc += detail::quadrant_rect(xm, a1, b0, ym);
    acc += detail::quadrant_rect(a0, xm, ym, b1);
    acc += detail::quadrant_rect(xm, a1, ym, b1);
    return acc;
}

/// Exact integral of 1/(zeta - z) over the square cell of side s centred at c.
inline std::complex<double> cell_integral_inv_square(std::complex<double> c, double s,
                                                     std::complex<double> z) {
    if (z == c) return {0.0, 0.0};  // odd kernel over a symmetric cell
    return cell_integral_inv(c.real() - 0.5 * s, c.real() + 0.5 * s,
                             c.imag() - 0.5 * s, c.imag() + 0.5 * s, z);
}

/// Exact integral of 1/|zeta| over the square of side s centred at the origin:
/// 4 s ln(1 + sqrt 2) by reduction to one octant.
inline double cell_integral_inv_abs_square(double s) {
    static const double c = 4.0 * std::log(1.0 + std::sqrt(2.0));
    return c * s;
}

}  // namespace dbarlab
