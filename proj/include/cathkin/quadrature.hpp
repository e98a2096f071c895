#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

namespace cathkin {

/// Composite Gauss-Legendre rule on an arbitrary interval.
///
/// Nodes and weights are computed once for the canonical [-1, 1] interval
/// (Newton iteration on the Legendre recurrence) and rescaled per call.
/// The integrands in this library are smooth, so the default node count is
/// far past the accuracy of any observation noise.
class Quadrature {
public:
    static constexpr int kDefaultNodeCount = 32;

    explicit Quadrature(int node_count = kDefaultNodeCount,
                        std::string_view scheme = "gauss-legendre");

    int node_count() const noexcept { return static_cast<int>(nodes_.size()); }
    const std::string& scheme() const noexcept { return scheme_; }

    /// Integral of f over [a, b]. Works for any value type supporting
    /// scalar multiplication and +=, e.g. doubles and Eigen vectors.
    template <typename F>
    auto integrate(F&& f, double a, double b) const {
        const double half = 0.5 * (b - a);
        const double mid = 0.5 * (a + b);
        using Value = std::decay_t<decltype(f(mid))>;
        Value acc = (weights_[0] * half) * f(mid + half * nodes_[0]);
        for (std::size_t i = 1; i < nodes_.size(); ++i) {
            acc += (weights_[i] * half) * f(mid + half * nodes_[i]);
        }
        return acc;
    }

private:
    std::string scheme_;
    std::vector<double> nodes_;    // canonical nodes on [-1, 1], ascending
    std::vector<double> weights_;  // matching weights
};

}  // namespace cathkin
