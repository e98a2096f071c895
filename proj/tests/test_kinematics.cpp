#include <doctest.h>

#include <cmath>

#include "cathkin/angles.hpp"
#include "cathkin/errors.hpp"
#include "cathkin/kinematics.hpp"
#include "cathkin/rng.hpp"
#include "cathkin/rotations.hpp"
#include "test_support.hpp"

using namespace cathkin;
using testsupport::cc_arc_position;
using testsupport::fixture_actuation_for;
using testsupport::fixture_model;

namespace {

JointState random_bent_joints(Rng& rng) {
    JointState joints;
    joints.q_r = rng.uniform(-kPi, kPi);
    joints.q_p = rng.uniform(-8.0, 8.0);
    joints.q_d = rng.uniform(-8.0, 8.0);
    joints.delta_L = rng.uniform(-kPi, kPi);
    return joints;
}

// Angular velocity from a central difference of the rotation matrix.
Eigen::Vector3d rotation_rate(const Eigen::Matrix3d& plus, const Eigen::Matrix3d& minus,
                              const Eigen::Matrix3d& center, double h) {
    const Eigen::Matrix3d rdot = (plus - minus) / (2.0 * h);
    return vee(rdot * center.transpose());
}

}  // namespace

TEST_SUITE("kinematics") {

TEST_CASE("tangent angle of the linear fixture") {
    const SegmentModel seg = SegmentModel::constant_curvature(20.0, 0.01);
    for (double s : {0.0, 3.0, 10.0, 20.0}) {
        CHECK(tangent_angle(seg, s, 0.0) == doctest::Approx(kPi / 2.0).epsilon(1e-15));
    }
    // theta = pi/2 - c*q*s
    CHECK(tangent_angle(seg, 10.0, 5.0) == doctest::Approx(kPi / 2.0 - 0.5).epsilon(1e-14));
}

TEST_CASE("tangent angle matches a naive basis loop on random models") {
    Rng rng(2024);
    for (int trial = 0; trial < 20; ++trial) {
        SegmentModel seg;
        seg.length = 25.0;
        seg.basis = ModalBasis::polynomial(3, 2);
        seg.shape_matrix.resize(3, 2);
        for (int r = 0; r < 3; ++r) {
            for (int c = 0; c < 2; ++c) seg.shape_matrix(r, c) = rng.uniform(-1.0, 1.0);
        }
        const double s = rng.uniform(0.0, seg.length);
        const double q = rng.uniform(-5.0, 5.0);

        double by_hand = 0.0;
        for (int r = 0; r < 3; ++r) {
            for (int c = 0; c < 2; ++c) {
                by_hand += std::pow(s, r) * seg.shape_matrix(r, c) * std::pow(q, c);
            }
        }
        CHECK(tangent_angle(seg, s, q) == doctest::Approx(by_hand).epsilon(1e-12));
    }
}

TEST_CASE("tangent angle rejects arc lengths outside the segment") {
    const SegmentModel seg = SegmentModel::constant_curvature(13.0, 0.01);
    CHECK_THROWS_AS(tangent_angle(seg, -0.5, 1.0), std::domain_error);
    CHECK_THROWS_AS(tangent_angle(seg, 13.5, 1.0), std::domain_error);
    CHECK_THROWS_AS(tangent_angle_partial(seg, 14.0, 1.0), std::domain_error);
}

TEST_CASE("tangent angle partial: fixture slope and finite differences") {
    const SegmentModel seg = SegmentModel::constant_curvature(20.0, 0.01);
    CHECK(tangent_angle_partial(seg, 10.0, 3.0) == doctest::Approx(-0.1).epsilon(1e-14));

    Rng rng(77);
    for (int trial = 0; trial < 10; ++trial) {
        SegmentModel model;
        model.length = 18.0;
        model.basis = ModalBasis::polynomial(2, 3);
        model.shape_matrix.resize(2, 3);
        for (int r = 0; r < 2; ++r) {
            for (int c = 0; c < 3; ++c) model.shape_matrix(r, c) = rng.uniform(-0.2, 0.2);
        }
        const double s = rng.uniform(0.0, model.length);
        const double q = rng.uniform(-4.0, 4.0);
        const double h = 1e-6;
        const double fd = (tangent_angle(model, s, q + h) - tangent_angle(model, s, q - h)) /
                          (2.0 * h);
        const double analytic = tangent_angle_partial(model, s, q);
        CHECK(std::abs(fd - analytic) < 1e-6 * std::max(1.0, std::abs(analytic)));
    }
}

TEST_CASE("tangent angle partial vanishes for actuation-independent models") {
    SegmentModel model;
    model.length = 10.0;
    model.basis = ModalBasis::polynomial(1, 1);
    model.shape_matrix.resize(1, 1);
    model.shape_matrix(0, 0) = kPi / 2.0;
    CHECK(tangent_angle_partial(model, 4.0, 2.5) == 0.0);
}

TEST_CASE("straight segment kinematics") {
    const SegmentModel seg = SegmentModel::constant_curvature(13.0, 0.01);
    const Quadrature quad;
    const Pose pose = segment_direct_kinematics(seg, 0.0, 0.0, quad);
    CHECK((pose.position - Eigen::Vector3d(0, 0, 13.0)).norm() < 1e-12);
    CHECK((pose.rotation - Eigen::Matrix3d::Identity()).norm() < 1e-12);

    // The position stays on the axis for any plane angle; only the frame's
    // azimuth follows delta.
    const Pose turned = segment_direct_kinematics(seg, 0.0, 0.4, quad);
    CHECK((turned.position - Eigen::Vector3d(0, 0, 13.0)).norm() < 1e-12);
    CHECK((turned.rotation - rot_z(0.4)).norm() < 1e-12);
}

TEST_CASE("quarter-circle bend matches the closed-form arc") {
    const double L = 10.0;
    const SegmentModel seg = SegmentModel::constant_curvature(L, 0.01);
    const Quadrature quad;
    const double q = fixture_actuation_for(kPi / 2.0, L);
    const double kappa = 0.01 * q;

    const Pose pose = segment_direct_kinematics(seg, q, 0.0, quad);
    const Eigen::Vector3d expected = cc_arc_position(kappa, L);
    CHECK(expected.x() == doctest::Approx(20.0 / kPi).epsilon(1e-12));
    CHECK((pose.position - expected).norm() < 1e-8);

    const Pose rotated = segment_direct_kinematics(seg, q, kPi / 2.0, quad);
    CHECK((rotated.position - Eigen::Vector3d(0.0, 20.0 / kPi, 20.0 / kPi)).norm() < 1e-8);
}

TEST_CASE("constant-curvature equivalence across the bend range") {
    const double L = 13.0;
    const SegmentModel seg = SegmentModel::constant_curvature(L, 0.01);
    const Quadrature quad;
    for (double kl = 0.05; kl <= kPi + 1e-12; kl += kPi / 16.0) {
        const double q = fixture_actuation_for(kl, L);
        const Pose pose = segment_direct_kinematics(seg, q, 0.0, quad);
        CHECK((pose.position - cc_arc_position(kl / L, L)).norm() < 1e-8);
    }
}

TEST_CASE("serial composition: straight, single bend, and base-plane shifts") {
    const CatheterModel model = fixture_model();
    const Quadrature quad;

    const CatheterPose straight = full_direct_kinematics(model, {}, quad);
    CHECK((straight.tip.position - Eigen::Vector3d(0, 0, 29.0)).norm() < 1e-12);
    CHECK((straight.tip.rotation - Eigen::Matrix3d::Identity()).norm() < 1e-12);

    // Proximal straight, distal bent: the tip is the straight offset plus the
    // distal arc rotated into its own plane.
    CatheterModel with_offset = fixture_model(0.01, 0.9);
    JointState joints;
    joints.q_d = fixture_actuation_for(kPi / 3.0, 16.0);
    const CatheterPose bent = full_direct_kinematics(with_offset, joints, quad);
    const Eigen::Vector3d expected = Eigen::Vector3d(0, 0, 13.0) +
                                     rot_z(0.9) * cc_arc_position(kPi / 3.0 / 16.0, 16.0);
    CHECK((bent.tip.position - expected).norm() < 1e-8);

    // Shifting q_r rotates the whole tip about z.
    Rng rng(5);
    for (int trial = 0; trial < 10; ++trial) {
        const JointState base = random_bent_joints(rng);
        const double shift = rng.uniform(-kPi, kPi);
        JointState shifted = base;
        shifted.q_r += shift;
        const CatheterPose a = full_direct_kinematics(model, base, quad);
        const CatheterPose b = full_direct_kinematics(model, shifted, quad);
        CHECK((b.tip.position - rot_z(shift) * a.tip.position).norm() < 1e-12);
        CHECK((b.tip.rotation - rot_z(shift) * a.tip.rotation).norm() < 1e-12);
    }
}

TEST_CASE("rotations stay orthonormal over random configurations") {
    const CatheterModel model = fixture_model(0.012, -1.1);
    const Quadrature quad;
    Rng rng(99);
    for (int trial = 0; trial < 50; ++trial) {
        const CatheterPose pose = full_direct_kinematics(model, random_bent_joints(rng), quad);
        CHECK(is_rotation(pose.tip.rotation, 1e-9));
        CHECK(is_rotation(pose.proximal_tip.rotation, 1e-9));
    }
}

TEST_CASE("horizontal coordinate") {
    const double L = 10.0;
    const SegmentModel seg = SegmentModel::constant_curvature(L, 0.01);
    const Quadrature quad;
    CHECK(horizontal_coordinate(seg, 0.0, quad) == doctest::Approx(0.0).epsilon(1e-14));

    const double q_quarter = fixture_actuation_for(kPi / 2.0, L);
    CHECK(horizontal_coordinate(seg, q_quarter, quad) ==
          doctest::Approx(L * 2.0 / kPi).epsilon(1e-12));

    const double q_half = fixture_actuation_for(kPi, L);
    const double kappa = 0.01 * q_half;
    CHECK(horizontal_coordinate(seg, q_half, quad) == doctest::Approx(2.0 / kappa).epsilon(1e-12));
}

TEST_CASE("segment jacobian: structure and finite differences") {
    const SegmentModel seg = SegmentModel::constant_curvature(16.0, 0.01);
    const Quadrature quad;

    // Spinning a straight segment moves nothing: the plane column vanishes.
    const Eigen::Matrix<double, 6, 2> straight = segment_jacobian(seg, 0.0, 0.7, quad);
    CHECK(straight.block<3, 1>(0, 1).norm() < 1e-12);

    Rng rng(31);
    for (int trial = 0; trial < 15; ++trial) {
        const double q = rng.uniform(-8.0, 8.0);
        const double delta = rng.uniform(-kPi, kPi);
        const Eigen::Matrix<double, 6, 2> jac = segment_jacobian(seg, q, delta, quad);

        // The plane-rate angular column is always the base z axis.
        CHECK((jac.block<3, 1>(3, 1) - Eigen::Vector3d(0, 0, 1)).norm() < 1e-14);

        const double h = 1e-6;
        const Pose center = segment_direct_kinematics(seg, q, delta, quad);
        Eigen::Matrix<double, 6, 2> fd;
        {
            const Pose plus = segment_direct_kinematics(seg, q + h, delta, quad);
            const Pose minus = segment_direct_kinematics(seg, q - h, delta, quad);
            fd.block<3, 1>(0, 0) = (plus.position - minus.position) / (2.0 * h);
            fd.block<3, 1>(3, 0) = rotation_rate(plus.rotation, minus.rotation, center.rotation, h);
        }
        {
            const Pose plus = segment_direct_kinematics(seg, q, delta + h, quad);
            const Pose minus = segment_direct_kinematics(seg, q, delta - h, quad);
            fd.block<3, 1>(0, 1) = (plus.position - minus.position) / (2.0 * h);
            fd.block<3, 1>(3, 1) = rotation_rate(plus.rotation, minus.rotation, center.rotation, h);
        }
        CHECK((jac - fd).norm() < 1e-5 * std::max(1.0, jac.norm()));
    }
}

TEST_CASE("full instantaneous kinematics") {
    const CatheterModel model = fixture_model(0.01, 0.5);
    const Quadrature quad;

    JointState joints;
    joints.q_r = 0.4;
    joints.q_p = 5.0;
    joints.q_d = 6.0;
    joints.delta_L = -0.3;

    SUBCASE("zero rates give a zero twist") {
        const Twist twist = full_instantaneous_kinematics(model, joints, {}, quad);
        CHECK(twist.linear.norm() == 0.0);
        CHECK(twist.angular.norm() == 0.0);
    }

    SUBCASE("pure base spin of a distally straight catheter") {
        JointState spin_joints = joints;
        spin_joints.q_d = 0.0;
        JointRates rates;
        rates.qdot_r = 1.3;
        const Twist twist = full_instantaneous_kinematics(model, spin_joints, rates, quad);
        CHECK((twist.angular - Eigen::Vector3d(0, 0, 1.3)).norm() < 1e-12);
    }

    SUBCASE("linear velocity matches finite differences of the tip position") {
        Rng rng(404);
        for (int trial = 0; trial < 10; ++trial) {
            const JointState config = random_bent_joints(rng);
            JointRates rates;
            rates.qdot_r = rng.uniform(-1.0, 1.0);
            rates.qdot_p = rng.uniform(-2.0, 2.0);
            rates.qdot_d = rng.uniform(-2.0, 2.0);

            const double h = 1e-5;  // seconds
            auto advance = [&](double t) {
                JointState moved = config;
                moved.q_r += rates.qdot_r * t;
                moved.q_p += rates.qdot_p * t;
                moved.q_d += rates.qdot_d * t;
                return full_direct_kinematics(model, moved, quad).tip.position;
            };
            const Eigen::Vector3d fd = (advance(h) - advance(-h)) / (2.0 * h);
            const Twist twist = full_instantaneous_kinematics(model, config, rates, quad);
            CHECK((twist.linear - fd).norm() < 1e-4 * std::max(1.0, twist.linear.norm()));
        }
    }
}

TEST_CASE("body point kinematics") {
    const CatheterModel model = fixture_model(0.01, 0.3);
    const Quadrature quad;
    JointState joints;
    joints.q_r = 0.2;
    joints.q_p = 6.0;
    joints.q_d = 7.0;
    joints.delta_L = 0.5;

    SUBCASE("segment boundaries reproduce the frame positions exactly") {
        const CatheterPose pose = full_direct_kinematics(model, joints, quad);
        const auto points = body_point_kinematics(
            model, joints,
            {{Segment::proximal, 0.0}, {Segment::proximal, 13.0}, {Segment::distal, 16.0}}, quad);
        CHECK(points[0].norm() == 0.0);
        CHECK((points[1] - pose.proximal_tip.position).norm() == 0.0);
        CHECK((points[2] - pose.tip.position).norm() == 0.0);
    }

    SUBCASE("arc midpoint of a quarter-circle bend") {
        const double L = 13.0;
        JointState bend;
        bend.q_p = fixture_actuation_for(kPi / 2.0, L);
        const double kappa = 0.01 * bend.q_p;
        const auto points =
            body_point_kinematics(model, bend, {{Segment::proximal, L / 2.0}}, quad);
        CHECK((points[0] - cc_arc_position(kappa, L / 2.0)).norm() < 1e-8);
    }

    SUBCASE("markers outside a segment are rejected") {
        CHECK_THROWS_AS(
            body_point_kinematics(model, joints, {{Segment::proximal, 13.5}}, quad),
            std::domain_error);
        CHECK_THROWS_AS(
            body_point_kinematics(model, joints, {{Segment::distal, -1.0}}, quad),
            std::domain_error);
    }
}

TEST_CASE("model validation") {
    SUBCASE("rejects non-positive lengths") {
        SegmentModel bad = SegmentModel::constant_curvature(10.0, 0.01);
        bad.length = 0.0;
        CHECK_THROWS_AS(bad.validate(), ValidationError);
    }

    SUBCASE("rejects mismatched shape matrices") {
        SegmentModel bad = SegmentModel::constant_curvature(10.0, 0.01);
        bad.shape_matrix.resize(3, 2);
        CHECK_THROWS_AS(bad.validate(), ValidationError);
    }

    SUBCASE("rejects stored derivatives that disagree with the basis") {
        ModalBasis basis = ModalBasis::polynomial(2, 2);
        basis.actuation_basis_derivative[1] = [](double q) { return 2.0 * q; };  // should be 1
        CHECK_THROWS_AS(basis.validate(), ValidationError);
    }

    SUBCASE("rejects derivative lists of the wrong size") {
        ModalBasis basis = ModalBasis::polynomial(2, 2);
        basis.actuation_basis_derivative.pop_back();
        CHECK_THROWS_AS(basis.validate(), ValidationError);
    }

    SUBCASE("rejects bent rest shapes") {
        SegmentModel bad = SegmentModel::constant_curvature(10.0, 0.01);
        bad.shape_matrix(1, 0) = 0.02;  // theta(s, 0) now varies with s
        CHECK_THROWS_AS(bad.validate(), ValidationError);
    }

    SUBCASE("rejects out-of-range distal plane offsets") {
        CatheterModel model = fixture_model();
        model.delta2 = kPi + 0.1;
        CHECK_THROWS_AS(model.validate(), ValidationError);
    }
}

TEST_CASE("doubling quadrature nodes leaves positions unchanged") {
    const CatheterModel model = fixture_model();
    JointState joints;
    joints.q_r = 1.0;
    joints.q_p = 7.0;
    joints.q_d = -6.0;
    joints.delta_L = 0.4;
    const Eigen::Vector3d coarse = full_direct_kinematics(model, joints, Quadrature(32)).tip.position;
    const Eigen::Vector3d fine = full_direct_kinematics(model, joints, Quadrature(64)).tip.position;
    CHECK((coarse - fine).norm() < 1e-8);
}

}  // TEST_SUITE
