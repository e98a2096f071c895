#include "cathkin/kinematics.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "cathkin/angles.hpp"
#include "cathkin/rotations.hpp"

namespace cathkin {

namespace {

constexpr double kArcTol = 1e-9;

void check_arc_length(const SegmentModel& model, double s) {
    if (s < -kArcTol || s > model.length + kArcTol) {
        throw std::domain_error("arc length " + std::to_string(s) + " outside [0, " +
                                std::to_string(model.length) + "]");
    }
}

// psi(s)^T coeffs with the actuation part already contracted into coeffs;
// hot path for the quadrature loops. coeffs is A*eta(q) for the tangent
// angle itself and A*eta'(q) for its actuation rate.
double contract_arc(const SegmentModel& model, double s, const Eigen::VectorXd& coeffs) {
    double acc = 0.0;
    for (std::size_t i = 0; i < model.basis.arc_basis.size(); ++i) {
        acc += model.basis.arc_basis[i](s) * coeffs[static_cast<Eigen::Index>(i)];
    }
    return acc;
}

// Integral of [cos(theta), 0, sin(theta)] over [0, s_end], unrotated.
Eigen::Vector3d arc_integral(const SegmentModel& model, double q, double s_end,
                             const Quadrature& quad) {
    const Eigen::VectorXd a_eta = model.shape_matrix * model.basis.actuation(q);
    return quad.integrate(
        [&](double s) {
            const double theta = contract_arc(model, s, a_eta);
            return Eigen::Vector3d(std::cos(theta), 0.0, std::sin(theta));
        },
        0.0, s_end);
}

// Position of a point at arc length s on the distal segment, in {B}. Shares
// the exact expression used for the tip so that a marker at s = L2 matches
// the tip bit for bit.
Eigen::Vector3d distal_point(const CatheterModel& model, const Pose& proximal_tip, double q_d,
                             double s, const Quadrature& quad) {
    const Eigen::Vector3d local = rot_z(model.delta2) * arc_integral(model.distal, q_d, s, quad);
    return proximal_tip.position + proximal_tip.rotation * local;
}

}  // namespace

double tangent_angle(const SegmentModel& model, double s, double q) {
    check_arc_length(model, s);
    const Eigen::VectorXd a_eta = model.shape_matrix * model.basis.actuation(q);
    return contract_arc(model, s, a_eta);
}

double tangent_angle_partial(const SegmentModel& model, double s, double q) {
    check_arc_length(model, s);
    const Eigen::VectorXd a_etad = model.shape_matrix * model.basis.actuation_derivative(q);
    return contract_arc(model, s, a_etad);
}

double horizontal_coordinate(const SegmentModel& model, double q, const Quadrature& quad) {
    const Eigen::VectorXd a_eta = model.shape_matrix * model.basis.actuation(q);
    return quad.integrate([&](double s) { return std::cos(contract_arc(model, s, a_eta)); }, 0.0,
                          model.length);
}

Pose segment_direct_kinematics(const SegmentModel& model, double q, double delta,
                               const Quadrature& quad) {
    Pose pose;
    const Eigen::Matrix3d plane = rot_z(delta);
    pose.position = plane * arc_integral(model, q, model.length, quad);
    const double tip_complement = kPi / 2.0 - tangent_angle(model, model.length, q);
    pose.rotation = plane * rot_y(tip_complement);
    return pose;
}

CatheterPose full_direct_kinematics(const CatheterModel& model, const JointState& joints,
                                    const Quadrature& quad) {
    CatheterPose out;
    out.proximal_tip =
        segment_direct_kinematics(model.proximal, joints.q_p, joints.proximal_plane_angle(), quad);
    const Pose distal = segment_direct_kinematics(model.distal, joints.q_d, model.delta2, quad);
    out.tip.position = out.proximal_tip.position + out.proximal_tip.rotation * distal.position;
    out.tip.rotation = out.proximal_tip.rotation * distal.rotation;
    return out;
}

Eigen::Matrix<double, 6, 2> segment_jacobian(const SegmentModel& model, double q, double delta,
                                             const Quadrature& quad) {
    const Eigen::VectorXd a_eta = model.shape_matrix * model.basis.actuation(q);
    const Eigen::VectorXd a_etad = model.shape_matrix * model.basis.actuation_derivative(q);

    // One pass for sin(theta)*dtheta_dq, cos(theta)*dtheta_dq, and cos(theta).
    const Eigen::Vector3d integrals = quad.integrate(
        [&](double s) {
            const double theta = contract_arc(model, s, a_eta);
            const double dtheta_dq = contract_arc(model, s, a_etad);
            return Eigen::Vector3d(std::sin(theta) * dtheta_dq, std::cos(theta) * dtheta_dq,
                                   std::cos(theta));
        },
        0.0, model.length);
    const double sin_term = integrals[0];
    const double cos_term = integrals[1];
    const double nu = integrals[2];
    const double tip_rate = contract_arc(model, model.length, a_etad);

    const double cd = std::cos(delta);
    const double sd = std::sin(delta);

    Eigen::Matrix<double, 6, 2> jac;
    jac << -cd * sin_term, -sd * nu,
           -sd * sin_term,  cd * nu,
            cos_term,       0.0,
            tip_rate * sd,  0.0,
           -tip_rate * cd,  0.0,
            0.0,            1.0;
    return jac;
}

Eigen::Matrix<double, 6, 4> combined_jacobian(const CatheterModel& model,
                                              const JointState& joints, const Quadrature& quad) {
    const double delta1 = joints.proximal_plane_angle();
    const Pose proximal_tip =
        segment_direct_kinematics(model.proximal, joints.q_p, delta1, quad);
    const Pose distal = segment_direct_kinematics(model.distal, joints.q_d, model.delta2, quad);

    const Eigen::Matrix<double, 6, 2> j1 =
        segment_jacobian(model.proximal, joints.q_p, delta1, quad);
    const Eigen::Matrix<double, 6, 2> j2 =
        segment_jacobian(model.distal, joints.q_d, model.delta2, quad);

    // Twist transforms: the proximal twist picks up a lever arm to the tip,
    // the distal twist is re-expressed in the base frame.
    Eigen::Matrix<double, 6, 6> s1 = Eigen::Matrix<double, 6, 6>::Identity();
    s1.block<3, 3>(0, 3) = skew(-(proximal_tip.rotation * distal.position));
    Eigen::Matrix<double, 6, 6> s2 = Eigen::Matrix<double, 6, 6>::Zero();
    s2.block<3, 3>(0, 0) = proximal_tip.rotation;
    s2.block<3, 3>(3, 3) = proximal_tip.rotation;

    Eigen::Matrix<double, 6, 4> combined;
    combined.block<6, 2>(0, 0) = s1 * j1;
    combined.block<6, 2>(0, 2) = s2 * j2;
    return combined;
}

Twist full_instantaneous_kinematics(const CatheterModel& model, const JointState& joints,
                                    const JointRates& rates, const Quadrature& quad) {
    const Eigen::Matrix<double, 6, 4> jac = combined_jacobian(model, joints, quad);
    const Eigen::Vector4d rate_vec(rates.qdot_p, rates.qdot_r, rates.qdot_d, 0.0);
    const Eigen::Matrix<double, 6, 1> xi = jac * rate_vec;
    Twist twist;
    twist.linear = xi.head<3>();
    twist.angular = xi.tail<3>();
    return twist;
}

std::vector<Eigen::Vector3d> body_point_kinematics(const CatheterModel& model,
                                                   const JointState& joints,
                                                   const std::vector<BodyMarker>& markers,
                                                   const Quadrature& quad) {
    const double delta1 = joints.proximal_plane_angle();
    const Eigen::Matrix3d proximal_plane = rot_z(delta1);
    Pose proximal_tip;
    bool have_proximal_tip = false;

    std::vector<Eigen::Vector3d> points;
    points.reserve(markers.size());
    for (const BodyMarker& marker : markers) {
        if (marker.segment == Segment::proximal) {
            check_arc_length(model.proximal, marker.arc_length);
            points.push_back(proximal_plane *
                             arc_integral(model.proximal, joints.q_p, marker.arc_length, quad));
        } else {
            check_arc_length(model.distal, marker.arc_length);
            if (!have_proximal_tip) {
                proximal_tip =
                    segment_direct_kinematics(model.proximal, joints.q_p, delta1, quad);
                have_proximal_tip = true;
            }
            points.push_back(
                distal_point(model, proximal_tip, joints.q_d, marker.arc_length, quad));
        }
    }
    return points;
}

}  // namespace cathkin
