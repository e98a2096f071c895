#include "cathkin/quadrature.hpp"

#include <cmath>

#include "cathkin/angles.hpp"
#include "cathkin/errors.hpp"

namespace cathkin {

Quadrature::Quadrature(int node_count, std::string_view scheme) : scheme_(scheme) {
    if (scheme_ != "gauss-legendre") {
        throw ValidationError("unknown quadrature scheme: " + scheme_);
    }
    if (node_count < 2) {
        throw ValidationError("quadrature node_count must be >= 2");
    }

    const int n = node_count;
    nodes_.resize(n);
    weights_.resize(n);

    // Roots of the Legendre polynomial P_n by Newton iteration from the
    // Chebyshev-based initial guess; symmetry gives the other half for free.
    const int half = (n + 1) / 2;
    for (int i = 0; i < half; ++i) {
        double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
        double derivative = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p_prev = 1.0;
            double p = x;
            for (int k = 2; k <= n; ++k) {
                const double p_next = ((2.0 * k - 1.0) * x * p - (k - 1.0) * p_prev) / k;
                p_prev = p;
                p = p_next;
            }
            derivative = n * (x * p - p_prev) / (x * x - 1.0);
            const double step = p / derivative;
            x -= step;
            if (std::abs(step) < 1e-15) break;
        }
        const double w = 2.0 / ((1.0 - x * x) * derivative * derivative);
        nodes_[i] = -x;
        nodes_[n - 1 - i] = x;
        weights_[i] = w;
        weights_[n - 1 - i] = w;
    }
}

}  // namespace cathkin
