#pragma once

#include <Eigen/Dense>
#include <vector>

#include "cathkin/model.hpp"
#include "cathkin/quadrature.hpp"

namespace cathkin {

struct Pose {
    Eigen::Vector3d position = Eigen::Vector3d::Zero();   // mm
    Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
};

struct Twist {
    Eigen::Vector3d linear = Eigen::Vector3d::Zero();     // mm/s
    Eigen::Vector3d angular = Eigen::Vector3d::Zero();    // rad/s
};

/// Tip pose of the catheter plus the intermediate pose at the junction of
/// the two segments, both expressed in the base frame.
struct CatheterPose {
    Pose tip;           // frame {4}
    Pose proximal_tip;  // frame {2}
};

enum class Segment { proximal, distal };

/// A backbone point: which segment it lies on and its arc length there.
struct BodyMarker {
    Segment segment = Segment::distal;
    double arc_length = 0.0;  // mm within that segment
};

/// Backbone tangent angle theta(s, q). Throws std::domain_error when s is
/// outside [0, length].
double tangent_angle(const SegmentModel& model, double s, double q);

/// d theta / d q via the stored analytic actuation-basis derivatives.
double tangent_angle_partial(const SegmentModel& model, double s, double q);

/// In-plane horizontal coordinate of the segment tip: integral of cos(theta).
double horizontal_coordinate(const SegmentModel& model, double q, const Quadrature& quad);

/// Pose of a single segment's tip for plane angle delta.
Pose segment_direct_kinematics(const SegmentModel& model, double q, double delta,
                               const Quadrature& quad);

/// Serial two-segment kinematics. The proximal plane angle is
/// q_r + delta_L, the distal one is the model's fixed delta2.
CatheterPose full_direct_kinematics(const CatheterModel& model, const JointState& joints,
                                    const Quadrature& quad);

/// 6x2 geometric Jacobian of one segment; columns multiply [qdot, deltadot].
Eigen::Matrix<double, 6, 2> segment_jacobian(const SegmentModel& model, double q, double delta,
                                             const Quadrature& quad);

/// 6x4 serial Jacobian; columns multiply [qdot_p, qdot_r, qdot_d, deltadot_2].
/// The last column exists structurally but always multiplies zero because
/// the distal plane is fixed.
Eigen::Matrix<double, 6, 4> combined_jacobian(const CatheterModel& model,
                                              const JointState& joints, const Quadrature& quad);

/// Tip twist for the given joint rates (deltadot_2 = 0, deltadot_1 = qdot_r).
Twist full_instantaneous_kinematics(const CatheterModel& model, const JointState& joints,
                                    const JointRates& rates, const Quadrature& quad);

/// Base-frame positions of backbone points, via partial arc integrals.
/// Throws std::domain_error when a marker's arc length leaves its segment.
std::vector<Eigen::Vector3d> body_point_kinematics(const CatheterModel& model,
                                                   const JointState& joints,
                                                   const std::vector<BodyMarker>& markers,
                                                   const Quadrature& quad);

}  // namespace cathkin
