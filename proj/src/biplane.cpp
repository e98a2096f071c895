#include "cathkin/biplane.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <stdexcept>
#include <string>

#include "cathkin/errors.hpp"
#include "cathkin/rotations.hpp"

namespace cathkin {

void ImagingPlane::validate() const {
    if (std::abs(normal.norm() - 1.0) > 1e-12) {
        throw ValidationError("imaging plane '" + label + "': normal is not unit length");
    }
    if (!is_rotation(rotation_to_world)) {
        throw ValidationError("imaging plane '" + label + "': rotation is not orthonormal");
    }
    if ((rotation_to_world.col(2) - normal).norm() > 1e-9) {
        throw ValidationError("imaging plane '" + label +
                              "': third rotation column must equal the normal");
    }
}

ImagingPlane ImagingPlane::from_normal(const Eigen::Vector3d& normal, std::string label) {
    ImagingPlane plane;
    plane.normal = normal.normalized();
    plane.label = std::move(label);
    const Eigen::Vector3d ref =
        std::abs(plane.normal.z()) < 0.9 ? Eigen::Vector3d::UnitZ() : Eigen::Vector3d::UnitX();
    const Eigen::Vector3d u = ref.cross(plane.normal).normalized();
    const Eigen::Vector3d v = plane.normal.cross(u);
    plane.rotation_to_world.col(0) = u;
    plane.rotation_to_world.col(1) = v;
    plane.rotation_to_world.col(2) = plane.normal;
    plane.validate();
    return plane;
}

bool ImagingSetup::degenerate() const {
    return front.normal.cross(side.normal).norm() <= rank_epsilon;
}

void ImagingSetup::validate() const {
    front.validate();
    side.validate();
    if (!(rank_epsilon > 0.0)) throw ValidationError("rank_epsilon must be positive");
}

void PlaneObservation::validate() const {
    if (std::abs(point_in_plane.z()) > 1e-9) {
        throw ValidationError("plane observation has a nonzero out-of-plane component");
    }
}

Eigen::Matrix3d projection_matrix(const ImagingPlane& plane) {
    return Eigen::Matrix3d::Identity() - plane.normal * plane.normal.transpose();
}

PlaneObservation observe(const ImagingPlane& plane, const Eigen::Vector3d& world_point,
                         double noise_sigma, Rng& rng, double timestamp) {
    if (noise_sigma < 0.0) throw std::invalid_argument("noise_sigma must be >= 0");
    PlaneObservation obs;
    obs.timestamp = timestamp;
    obs.point_in_plane =
        plane.rotation_to_world.transpose() * (projection_matrix(plane) * world_point);
    obs.point_in_plane.x() += rng.gaussian(noise_sigma);
    obs.point_in_plane.y() += rng.gaussian(noise_sigma);
    obs.point_in_plane.z() = 0.0;
    return obs;
}

ReconstructionInfo reconstruct_with_info(const ImagingSetup& setup,
                                         const PlaneObservation& front_base,
                                         const PlaneObservation& front_tip,
                                         const PlaneObservation& side_base,
                                         const PlaneObservation& side_tip) {
    front_base.validate();
    front_tip.validate();
    side_base.validate();
    side_tip.validate();

    Eigen::Matrix<double, 6, 3> stacked;
    stacked.block<3, 3>(0, 0) = projection_matrix(setup.front);
    stacked.block<3, 3>(3, 0) = projection_matrix(setup.side);

    Eigen::Matrix<double, 6, 1> rhs;
    rhs.head<3>() = setup.front.rotation_to_world *
                    (front_tip.point_in_plane - front_base.point_in_plane);
    rhs.tail<3>() = setup.side.rotation_to_world *
                    (side_tip.point_in_plane - side_base.point_in_plane);

    Eigen::JacobiSVD<Eigen::Matrix<double, 6, 3>> svd(stacked,
                                                      Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::Vector3d singular = svd.singularValues();
    const double smallest = singular[2];

    if (setup.degenerate() || smallest < 1e-10 * singular[0]) {
        throw DegenerateGeometryError(
            "imaging planes are too close to parallel for reconstruction "
            "(smallest singular value " +
                std::to_string(smallest) + ")",
            smallest);
    }

    svd.setThreshold(1e-10);
    ReconstructionInfo info;
    info.point = svd.solve(rhs);
    info.smallest_singular_value = smallest;
    info.residual_norm = (stacked * info.point - rhs).norm();
    return info;
}

Eigen::Vector3d reconstruct(const ImagingSetup& setup, const PlaneObservation& front_base,
                            const PlaneObservation& front_tip, const PlaneObservation& side_base,
                            const PlaneObservation& side_tip) {
    return reconstruct_with_info(setup, front_base, front_tip, side_base, side_tip).point;
}

std::vector<Eigen::Vector3d> velocity_series(std::span<const TimedPoint> history) {
    if (history.size() < 2) {
        throw InsufficientDataError("velocity needs at least two samples");
    }
    for (std::size_t i = 1; i < history.size(); ++i) {
        if (!(history[i].time_s > history[i - 1].time_s)) {
            throw std::domain_error("observation timestamps must be strictly increasing");
        }
    }

    const std::size_t n = history.size();
    std::vector<Eigen::Vector3d> velocities(n);
    velocities.front() =
        (history[1].point - history[0].point) / (history[1].time_s - history[0].time_s);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        velocities[i] = (history[i + 1].point - history[i - 1].point) /
                        (history[i + 1].time_s - history[i - 1].time_s);
    }
    velocities.back() =
        (history[n - 1].point - history[n - 2].point) /
        (history[n - 1].time_s - history[n - 2].time_s);
    return velocities;
}

Eigen::Vector3d velocity_from_observations(std::span<const TimedPoint> history) {
    return velocity_series(history).back();
}

}  // namespace cathkin
