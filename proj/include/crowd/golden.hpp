#pragma once

#include <cmath>
#include <cstddef>

#include "crowd/types.hpp"

namespace crowd {

struct GoldenResult {
    double argmin = 0;
    double value = 0;
    std::size_t iterations = 0;
    bool at_lower_edge = false;  // minimum pinned at the lower bracket end
    bool at_upper_edge = false;
};

// Golden-section search for the minimum of a unimodal function on [lo, hi].
// Shrinks the bracket until its width is below tol. For a monotone function
// the result is the corresponding edge, reported via the edge flags.
template <class F>
GoldenResult golden_section_minimize(F&& f, double lo, double hi, double tol,
                                     std::size_t max_iter = 300) {
    if (!(lo < hi)) throw DataError("golden section needs lo < hi");
    if (!(tol > 0)) throw DataError("golden section needs tol > 0");
    static const double kInvPhi = (std::sqrt(5.0) - 1.0) / 2.0;

    double a = lo, b = hi;
    double c = b - kInvPhi * (b - a);
    double d = a + kInvPhi * (b - a);
    double fc = f(c), fd = f(d);
    std::size_t iter = 0;
    while (iter < max_iter && (b - a) > tol) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - kInvPhi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + kInvPhi * (b - a);
            fd = f(d);
        }
        ++iter;
    }
    GoldenResult out;
    out.argmin = 0.5 * (a + b);
    out.value = f(out.argmin);
    out.iterations = iter;
    const double width = hi - lo;
    out.at_lower_edge = (out.argmin - lo) < 1e-9 * width;
    out.at_upper_edge = (hi - out.argmin) < 1e-9 * width;
    return out;
}

}  // namespace crowd
