#pragma once

#include <Eigen/Dense>
#include <cmath>

namespace cathkin {

inline Eigen::Matrix3d rot_z(double angle) {
    const double c = std::cos(angle), s = std::sin(angle);
    Eigen::Matrix3d r;
    r << c, -s, 0.0,
         s,  c, 0.0,
         0.0, 0.0, 1.0;
    return r;
}

inline Eigen::Matrix3d rot_y(double angle) {
    const double c = std::cos(angle), s = std::sin(angle);
    Eigen::Matrix3d r;
    r <<  c, 0.0, s,
          0.0, 1.0, 0.0,
         -s, 0.0, c;
    return r;
}

/// Cross-product matrix: skew(a) * b == a x b.
inline Eigen::Matrix3d skew(const Eigen::Vector3d& a) {
    Eigen::Matrix3d m;
    m << 0.0, -a.z(), a.y(),
         a.z(), 0.0, -a.x(),
         -a.y(), a.x(), 0.0;
    return m;
}

/// Inverse of skew(), applied to the antisymmetric part of m.
inline Eigen::Vector3d vee(const Eigen::Matrix3d& m) {
    const Eigen::Matrix3d a = 0.5 * (m - m.transpose());
    return {a(2, 1), a(0, 2), a(1, 0)};
}

inline bool is_rotation(const Eigen::Matrix3d& r, double tol = 1e-9) {
    const double ortho = (r.transpose() * r - Eigen::Matrix3d::Identity()).norm();
    return ortho < tol && r.determinant() > 0.0;
}

}  // namespace cathkin
