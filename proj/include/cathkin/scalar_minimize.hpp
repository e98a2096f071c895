#pragma once

#include <cmath>
#include <utility>

namespace cathkin {

struct ScalarMinimum {
    double x = 0.0;
    double value = 0.0;
    int evaluations = 0;
};

/// Golden-section search on [a, b]; returns once the bracket is narrower
/// than x_tol or the iteration cap is hit. f is assumed unimodal on the
/// bracket; on flat stretches the result is simply a point of the plateau.
template <typename F>
ScalarMinimum golden_section_minimize(F&& f, double a, double b, double x_tol, int max_iters) {
    constexpr double kInvPhi = 0.6180339887498949;
    if (b < a) std::swap(a, b);

    double x1 = b - kInvPhi * (b - a);
    double x2 = a + kInvPhi * (b - a);
    double f1 = f(x1);
    double f2 = f(x2);
    int evals = 2;

    for (int it = 0; it < max_iters && (b - a) > x_tol; ++it) {
        if (f1 <= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - kInvPhi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + kInvPhi * (b - a);
            f2 = f(x2);
        }
        ++evals;
    }

    if (f1 <= f2) return {x1, f1, evals};
    return {x2, f2, evals};
}

}  // namespace cathkin
