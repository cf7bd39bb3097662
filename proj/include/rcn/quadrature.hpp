#pragma once

#include <cmath>
#include <stdexcept>

namespace rcn {

namespace detail {

template <class F>
double simpson_rec(const F& f, double a, double m, double b, double fa, double fm,
                   double fb, double whole, double tol, int depth) {
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double err = left + right - whole;
    if (std::abs(err) <= 15.0 * tol || depth <= 0)
        return left + right + err / 15.0;
    return simpson_rec(f, a, lm, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           simpson_rec(f, m, rm, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

} // namespace detail

// Adaptive Simpson with Richardson correction. tol is absolute.
template <class F>
double adaptive_simpson(const F& f, double a, double b, double tol = 1e-10,
                        int max_depth = 48) {
    if (!(tol > 0.0)) throw std::invalid_argument("adaptive_simpson: tol must be > 0");
    if (a == b) return 0.0;
    const double m = 0.5 * (a + b);
    const double fa = f(a), fm = f(m), fb = f(b);
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return detail::simpson_rec(f, a, m, b, fa, fm, fb, whole, tol, max_depth);
}

} // namespace rcn
