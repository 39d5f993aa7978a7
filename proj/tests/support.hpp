#pragma once

#include <boost/multiprecision/cpp_dec_float.hpp>

#include <cmath>
#include <functional>
#include <random>
#include <vector>

namespace testing_support {

// 50-digit arithmetic for reference values computed independently of the library.
using hp = boost::multiprecision::cpp_dec_float_50;

inline std::mt19937_64& rng()
{
    static std::mt19937_64 engine(20240601);
    return engine;
}

inline double uniform(double lo, double hi)
{
    return std::uniform_real_distribution<double>(lo, hi)(rng());
}

// Central differences, step h.
inline std::vector<double> fd_gradient(const std::function<double(const std::vector<double>&)>& f,
                                       const std::vector<double>& x, double h = 1e-6)
{
    std::vector<double> g(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) {
        auto up = x, dn = x;
        up[k] += h;
        dn[k] -= h;
        g[k] = (f(up) - f(dn)) / (2.0 * h);
    }
    return g;
}

inline bool rel_close(double a, double b, double rel, double abs_floor = 1e-12)
{
    return std::abs(a - b) <= rel * std::max(std::abs(b), 1.0) || std::abs(a - b) <= abs_floor;
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b)
{
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

} // namespace testing_support
