#pragma once

#include <Eigen/Dense>
#include <span>
#include <string>
#include <vector>

#include "cathkin/rng.hpp"

namespace cathkin {

/// One orthographic imaging plane. The third column of rotation_to_world is
/// the plane normal; the first two columns span the image axes.
struct ImagingPlane {
    Eigen::Vector3d normal = Eigen::Vector3d::UnitZ();
    Eigen::Matrix3d rotation_to_world = Eigen::Matrix3d::Identity();
    std::string label = "front";

    void validate() const;

    /// Builds a plane with the given normal and an arbitrary in-plane frame.
    static ImagingPlane from_normal(const Eigen::Vector3d& normal, std::string label);
};

struct ImagingSetup {
    ImagingPlane front;
    ImagingPlane side;
    double rank_epsilon = 1e-3;  // minimum ||n_f x n_s|| before reconstruction refuses

    bool degenerate() const;
    void validate() const;
};

/// A segmented point in a plane's local frame; the out-of-plane component
/// is identically zero.
struct PlaneObservation {
    Eigen::Vector3d point_in_plane = Eigen::Vector3d::Zero();  // mm, local frame
    double timestamp = 0.0;                                    // s

    void validate() const;
};

struct ReconstructionInfo {
    Eigen::Vector3d point;            // mm, world frame, relative tip-minus-base
    double smallest_singular_value;   // of the stacked projector system
    double residual_norm;             // of the stacked least-squares solve
};

struct TimedPoint {
    double time_s = 0.0;
    Eigen::Vector3d point = Eigen::Vector3d::Zero();
};

/// Orthographic projector I - n n^T for the plane's normal.
Eigen::Matrix3d projection_matrix(const ImagingPlane& plane);

/// Projects a world point into the plane and perturbs the two in-plane
/// coordinates with independent zero-mean gaussian noise.
PlaneObservation observe(const ImagingPlane& plane, const Eigen::Vector3d& world_point,
                         double noise_sigma, Rng& rng, double timestamp = 0.0);

/// Recovers the tip-relative-to-base displacement from paired (base, tip)
/// observations in both planes, as the minimum-norm least-squares solution
/// of the stacked projector system. Throws DegenerateGeometryError when the
/// planes are too close to parallel.
Eigen::Vector3d reconstruct(const ImagingSetup& setup, const PlaneObservation& front_base,
                            const PlaneObservation& front_tip, const PlaneObservation& side_base,
                            const PlaneObservation& side_tip);

/// Same as reconstruct(), with solver diagnostics.
ReconstructionInfo reconstruct_with_info(const ImagingSetup& setup,
                                         const PlaneObservation& front_base,
                                         const PlaneObservation& front_tip,
                                         const PlaneObservation& side_base,
                                         const PlaneObservation& side_tip);

/// Finite-difference velocities for a time-ordered track: central where
/// both neighbors exist, one-sided at the ends.
std::vector<Eigen::Vector3d> velocity_series(std::span<const TimedPoint> history);

/// Most recent velocity estimate of the track (the last series entry).
Eigen::Vector3d velocity_from_observations(std::span<const TimedPoint> history);

}  // namespace cathkin
