#include "cathkin/model.hpp"

#include <cmath>
#include <string>

#include "cathkin/errors.hpp"

namespace cathkin {

namespace {

Eigen::VectorXd eval_all(const std::vector<std::function<double(double)>>& fns, double x) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(fns.size()));
    for (Eigen::Index i = 0; i < out.size(); ++i) out[i] = fns[static_cast<std::size_t>(i)](x);
    return out;
}

}  // namespace

Eigen::VectorXd ModalBasis::arc(double s) const { return eval_all(arc_basis, s); }
Eigen::VectorXd ModalBasis::actuation(double q) const { return eval_all(actuation_basis, q); }
Eigen::VectorXd ModalBasis::actuation_derivative(double q) const {
    return eval_all(actuation_basis_derivative, q);
}

ModalBasis ModalBasis::polynomial(int arc_count, int actuation_count) {
    if (arc_count < 1 || actuation_count < 1) {
        throw ValidationError("polynomial basis needs at least one entry per list");
    }
    ModalBasis basis;
    for (int k = 0; k < arc_count; ++k) {
        basis.arc_basis.emplace_back([k](double s) { return std::pow(s, k); });
    }
    for (int j = 0; j < actuation_count; ++j) {
        basis.actuation_basis.emplace_back([j](double q) { return std::pow(q, j); });
        basis.actuation_basis_derivative.emplace_back(
            [j](double q) { return j == 0 ? 0.0 : j * std::pow(q, j - 1); });
    }
    return basis;
}

void ModalBasis::validate() const {
    if (arc_basis.empty()) throw ValidationError("arc basis must have at least one entry");
    if (actuation_basis.empty()) {
        throw ValidationError("actuation basis must have at least one entry");
    }
    if (actuation_basis_derivative.size() != actuation_basis.size()) {
        throw ValidationError("actuation basis derivative list must match the basis size");
    }

    // Each stored derivative must agree with a central finite difference.
    constexpr double kStep = 1e-5;
    constexpr double kRelTol = 1e-6;
    const double samples[] = {-5.0, -1.0, -0.1, 0.0, 0.5, 2.0, 5.0};
    for (std::size_t j = 0; j < actuation_basis.size(); ++j) {
        for (double q : samples) {
            const double fd =
                (actuation_basis[j](q + kStep) - actuation_basis[j](q - kStep)) / (2.0 * kStep);
            const double analytic = actuation_basis_derivative[j](q);
            const double scale = std::max({1.0, std::abs(analytic), std::abs(fd)});
            if (std::abs(fd - analytic) > kRelTol * scale) {
                throw ValidationError("actuation basis entry " + std::to_string(j) +
                                      " disagrees with its stored derivative at q = " +
                                      std::to_string(q));
            }
        }
    }
}

SegmentModel SegmentModel::constant_curvature(double length, double curvature_per_actuation) {
    SegmentModel model;
    model.length = length;
    model.basis = ModalBasis::polynomial(2, 2);
    model.shape_matrix.resize(2, 2);
    model.shape_matrix << kPi / 2.0, 0.0,
                          0.0, -curvature_per_actuation;
    model.validate();
    return model;
}

void SegmentModel::validate() const {
    if (!(length > 0.0)) throw ValidationError("segment length must be positive");
    basis.validate();
    if (shape_matrix.rows() != basis.arc_size() || shape_matrix.cols() != basis.actuation_size()) {
        throw ValidationError("shape matrix is " + std::to_string(shape_matrix.rows()) + "x" +
                              std::to_string(shape_matrix.cols()) + " but the basis expects " +
                              std::to_string(basis.arc_size()) + "x" +
                              std::to_string(basis.actuation_size()));
    }

    // Straight rest shape: theta(s, 0) == pi/2 along the whole segment.
    const Eigen::VectorXd a_eta0 = shape_matrix * basis.actuation(0.0);
    constexpr int kSamples = 9;
    for (int i = 0; i < kSamples; ++i) {
        const double s = length * i / (kSamples - 1);
        const double theta = basis.arc(s).dot(a_eta0);
        if (std::abs(theta - kPi / 2.0) > 1e-9) {
            throw ValidationError("rest shape is not straight: theta(s=" + std::to_string(s) +
                                  ", q=0) deviates from pi/2 by " +
                                  std::to_string(theta - kPi / 2.0));
        }
    }
}

void CatheterModel::validate() const {
    proximal.validate();
    distal.validate();
    if (delta2 < -kPi || delta2 >= kPi) {
        throw ValidationError("delta2 must lie in [-pi, pi)");
    }
}

}  // namespace cathkin
