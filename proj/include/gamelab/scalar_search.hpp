#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <type_traits>
#include <utility>

namespace gamelab {

// Root of a continuous f on [lo, hi] with f(lo), f(hi) of opposite sign (or
// either zero). Stops when the bracket is narrower than tol or stops shrinking.
template <class F>
double bisect_root(F&& f, double lo, double hi, double tol)
{
    double flo = f(lo);
    const double fhi = f(hi);
    if (flo == 0.0)
        return lo;
    if (fhi == 0.0)
        return hi;
    if ((flo > 0.0) == (fhi > 0.0))
        throw std::invalid_argument("bisect_root: endpoints do not bracket a root");
    for (int it = 0; it < 2000 && hi - lo > tol; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi)
            break;
        const double fm = f(mid);
        if (fm == 0.0)
            return mid;
        if ((fm > 0.0) == (flo > 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

struct ScalarMaximum {
    double x = 0.0;
    double value = -std::numeric_limits<double>::infinity();
};

template <class F>
ScalarMaximum golden_section_max(F&& f, double lo, double hi, double width)
{
    constexpr double inv_phi = 0.6180339887498948482;
    double c = hi - inv_phi * (hi - lo);
    double d = lo + inv_phi * (hi - lo);
    double fc = f(c);
    double fd = f(d);
    while (hi - lo > width) {
        if (fc >= fd) {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = f(d);
        }
        if (!(c < d))
            break;
    }
    ScalarMaximum best{c, fc};
    if (fd > best.value)
        best = {d, fd};
    const double flo = f(lo);
    const double fhi = f(hi);
    if (flo > best.value)
        best = {lo, flo};
    if (fhi > best.value)
        best = {hi, fhi};
    return best;
}

struct MaximizeOptions {
    std::size_t grid_points = 64;
    double width = 1e-10;
};

// Maximizes f over [lo, hi]: a coarse grid selects the best cell, golden-section
// search narrows it, and when a derivative is supplied an interior optimum is
// polished by bisecting the derivative's sign change. Value comparisons alone
// resolve a smooth maximum only to about sqrt(machine epsilon).
template <class F, class D>
ScalarMaximum maximize_on_interval(F&& f, D&& dfdx, double lo, double hi,
                                   const MaximizeOptions& opt = {})
{
    if (!(hi > lo))
        return {lo, f(lo)};
    const std::size_t n = std::max<std::size_t>(opt.grid_points, 3);
    const double step = (hi - lo) / static_cast<double>(n - 1);
    std::size_t best_k = 0;
    double best_v = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < n; ++k) {
        const double x = (k + 1 == n) ? hi : lo + step * static_cast<double>(k);
        const double v = f(x);
        if (v > best_v) {
            best_v = v;
            best_k = k;
        }
    }
    const double a = best_k == 0 ? lo : lo + step * static_cast<double>(best_k - 1);
    const double b = best_k + 1 >= n ? hi : std::min(hi, lo + step * static_cast<double>(best_k + 1));
    ScalarMaximum best = golden_section_max(f, a, b, opt.width);

    if constexpr (!std::is_same_v<std::decay_t<D>, std::nullptr_t>) {
        double delta = std::max(16.0 * opt.width, 1e-9 * std::max(1.0, std::abs(best.x)));
        while (delta <= (b - a)) {
            const double l = std::max(a, best.x - delta);
            const double r = std::min(b, best.x + delta);
            const double dl = dfdx(l);
            const double dr = dfdx(r);
            if (dl > 0.0 && dr < 0.0) {
                const double root = bisect_root(dfdx, l, r, 0.0);
                const double v = f(root);
                if (v >= best.value - 1e-12 * std::max(1.0, std::abs(best.value)))
                    best = {root, v};
                break;
            }
            if (l == a && r == b)
                break;
            delta *= 4.0;
        }
    }
    return best;
}

template <class F>
ScalarMaximum maximize_on_interval(F&& f, double lo, double hi, const MaximizeOptions& opt = {})
{
    return maximize_on_interval(std::forward<F>(f), nullptr, lo, hi, opt);
}

} // namespace gamelab
