#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "cathkin/angles.hpp"

namespace cathkin {

/// Separable basis for the backbone tangent angle: a list of scalar
/// functions of arc length and a list of scalar functions of the
/// actuation value, together with the exact derivatives of the latter.
struct ModalBasis {
    std::vector<std::function<double(double)>> arc_basis;
    std::vector<std::function<double(double)>> actuation_basis;
    std::vector<std::function<double(double)>> actuation_basis_derivative;

    int arc_size() const noexcept { return static_cast<int>(arc_basis.size()); }
    int actuation_size() const noexcept { return static_cast<int>(actuation_basis.size()); }

    Eigen::VectorXd arc(double s) const;
    Eigen::VectorXd actuation(double q) const;
    Eigen::VectorXd actuation_derivative(double q) const;

    /// Monomial basis 1, x, x^2, ... of the given sizes.
    static ModalBasis polynomial(int arc_count, int actuation_count);

    /// Checks sizes and verifies each stored derivative against a central
    /// finite difference at a handful of sample points. Throws ValidationError.
    void validate() const;
};

/// One bending segment: arc length, characteristic shape matrix, basis.
struct SegmentModel {
    double length = 0.0;            // mm
    Eigen::MatrixXd shape_matrix;   // arc_size x actuation_size
    ModalBasis basis;

    /// Linear fixture with tangent angle pi/2 - c*q*s, i.e. curvature c*q.
    static SegmentModel constant_curvature(double length, double curvature_per_actuation);

    /// Checks length, matrix dimensions, and the straight rest shape
    /// (tangent angle pi/2 everywhere at q = 0). Throws ValidationError.
    void validate() const;
};

struct CatheterModel {
    SegmentModel proximal;
    SegmentModel distal;
    double delta2 = 0.0;  // fixed distal bending-plane offset, rad, in [-pi, pi)

    void validate() const;
};

/// Actuation state. The effective proximal bending-plane angle is
/// q_r + delta_L, wrapped to [-pi, pi).
struct JointState {
    double q_r = 0.0;      // base rotation, rad
    double q_p = 0.0;      // proximal push/pull, mm
    double q_d = 0.0;      // distal push/pull, mm
    double delta_L = 0.0;  // torsional loss angle, rad, in [-pi, pi)

    double proximal_plane_angle() const { return wrap_to_pi(q_r + delta_L); }
};

/// Actuation rates. The distal plane angle is fixed and the torsional loss
/// rate is treated as zero, so the proximal plane rate equals qdot_r.
struct JointRates {
    double qdot_r = 0.0;  // rad/s
    double qdot_p = 0.0;  // mm/s
    double qdot_d = 0.0;  // mm/s
};

}  // namespace cathkin
