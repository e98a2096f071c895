#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "cathkin/kinematics.hpp"

namespace cathkin {

enum class EstimatorKind { tip_position, body_positions, tip_velocity };

enum class ConditionFlag { well_posed, near_straight, ambiguous };

/// Everything an estimator may consume. joints.delta_L is the unknown and
/// is ignored; at least one of the three observation fields must be set.
struct EstimatorInput {
    CatheterModel model;
    JointState joints;
    Quadrature quadrature{};

    std::optional<Eigen::Vector3d> reconstructed_tip;  // mm, tip minus base

    std::optional<std::vector<Eigen::Vector3d>> reconstructed_body_points;
    std::vector<BodyMarker> marker_spec;  // one entry per body point

    std::optional<Eigen::Vector3d> reconstructed_tip_velocity;  // mm/s
    std::optional<JointRates> rates;

    void validate() const;
};

struct Candidate {
    double angle = 0.0;     // rad, in [-pi, pi)
    double residual = 0.0;  // objective value at the angle
};

/// Solver outcome. delta_L_star is the candidate with the smallest
/// residual; exact residual ties are broken by the smaller |angle|.
struct EstimateResult {
    double delta_L_star = 0.0;  // rad, in [-pi, pi)
    double residual = 0.0;      // mm^2 for position objectives, (mm/s)^2 for velocity
    ConditionFlag flag = ConditionFlag::well_posed;
    std::vector<Candidate> candidates;  // all refined local minima, best first
};

struct SolverSettings {
    int grid_count = 72;                  // coarse sweep over [-pi, pi)
    double refine_tolerance = 1e-8;       // rad
    int max_refine_iters = 100;
    double straightness_threshold = 0.05; // rad; both tips closer than this to
                                          // straight flags the result
    bool single_descent = false;          // descend from 0 rad only, no grid
};

/// Squared distance between the modeled tip (with plane angle q_r + delta_L)
/// and the reconstructed tip. mm^2.
double objective_tip_position(double delta_L, const EstimatorInput& input);

/// Sum of squared distances over the body markers. mm^2.
double objective_body_positions(double delta_L, const EstimatorInput& input);

/// Squared distance between the modeled tip linear velocity and the
/// reconstructed one. (mm/s)^2.
double objective_tip_velocity(double delta_L, const EstimatorInput& input);

/// Smallest absolute wrapped difference between two angles, in [0, pi].
double angular_error(double a, double b);

/// Solves for the torsional loss angle. Default mode sweeps a uniform grid
/// over [-pi, pi) and refines every local minimum by golden-section search;
/// single_descent instead walks downhill from 0 rad to one minimum.
EstimateResult estimate(const EstimatorInput& input, EstimatorKind which,
                        const SolverSettings& settings = {});

}  // namespace cathkin
