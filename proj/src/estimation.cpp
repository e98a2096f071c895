#include "cathkin/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

#include "cathkin/angles.hpp"
#include "cathkin/errors.hpp"
#include "cathkin/scalar_minimize.hpp"

namespace cathkin {

void EstimatorInput::validate() const {
    if (!reconstructed_tip && !reconstructed_body_points && !reconstructed_tip_velocity) {
        throw std::invalid_argument("estimator input carries no observation");
    }
    if (reconstructed_body_points &&
        reconstructed_body_points->size() != marker_spec.size()) {
        throw std::invalid_argument("body point list and marker spec sizes differ");
    }
    if (reconstructed_tip_velocity && !rates) {
        throw std::invalid_argument("tip velocity observation requires joint rates");
    }
}

double objective_tip_position(double delta_L, const EstimatorInput& input) {
    if (!input.reconstructed_tip) {
        throw std::invalid_argument("tip position objective needs a reconstructed tip");
    }
    JointState joints = input.joints;
    joints.delta_L = delta_L;
    const CatheterPose pose = full_direct_kinematics(input.model, joints, input.quadrature);
    return (pose.tip.position - *input.reconstructed_tip).squaredNorm();
}

double objective_body_positions(double delta_L, const EstimatorInput& input) {
    if (!input.reconstructed_body_points || input.reconstructed_body_points->empty()) {
        throw std::invalid_argument("body positions objective needs body points");
    }
    if (input.reconstructed_body_points->size() != input.marker_spec.size()) {
        throw std::invalid_argument("body point list and marker spec sizes differ");
    }
    JointState joints = input.joints;
    joints.delta_L = delta_L;
    const std::vector<Eigen::Vector3d> modeled =
        body_point_kinematics(input.model, joints, input.marker_spec, input.quadrature);
    double sum = 0.0;
    for (std::size_t i = 0; i < modeled.size(); ++i) {
        sum += (modeled[i] - (*input.reconstructed_body_points)[i]).squaredNorm();
    }
    return sum;
}

double objective_tip_velocity(double delta_L, const EstimatorInput& input) {
    if (!input.reconstructed_tip_velocity || !input.rates) {
        throw std::invalid_argument("tip velocity objective needs a velocity and joint rates");
    }
    JointState joints = input.joints;
    joints.delta_L = delta_L;
    const Twist twist =
        full_instantaneous_kinematics(input.model, joints, *input.rates, input.quadrature);
    return (twist.linear - *input.reconstructed_tip_velocity).squaredNorm();
}

double angular_error(double a, double b) { return std::abs(wrap_to_pi(a - b)); }

namespace {

using Objective = std::function<double(double)>;

Objective make_objective(const EstimatorInput& input, EstimatorKind which) {
    switch (which) {
        case EstimatorKind::tip_position:
            if (!input.reconstructed_tip) {
                throw std::invalid_argument("tip-position estimate needs a reconstructed tip");
            }
            return [&input](double x) { return objective_tip_position(x, input); };
        case EstimatorKind::body_positions:
            if (!input.reconstructed_body_points || input.reconstructed_body_points->empty()) {
                throw std::invalid_argument("body-positions estimate needs body points");
            }
            return [&input](double x) { return objective_body_positions(x, input); };
        case EstimatorKind::tip_velocity:
            if (!input.reconstructed_tip_velocity || !input.rates) {
                throw std::invalid_argument(
                    "tip-velocity estimate needs a velocity observation and joint rates");
            }
            return [&input](double x) { return objective_tip_velocity(x, input); };
    }
    throw std::invalid_argument("unknown estimator kind");
}

// Refines a bracketed minimum and records it, merging with any candidate
// already within tolerance of the same angle.
void add_candidate(std::vector<Candidate>& candidates, double angle, double residual,
                   double merge_tol) {
    const double wrapped = wrap_to_pi(angle);
    for (Candidate& existing : candidates) {
        if (angular_error(existing.angle, wrapped) <= merge_tol) {
            if (residual < existing.residual) existing = {wrapped, residual};
            return;
        }
    }
    candidates.push_back({wrapped, residual});
}

std::vector<Candidate> grid_refine(const Objective& objective, const SolverSettings& settings) {
    const int n = settings.grid_count;
    const double step = 2.0 * kPi / n;

    std::vector<double> angles(n);
    std::vector<double> values(n);
    int finite_count = 0;
    for (int k = 0; k < n; ++k) {
        angles[k] = -kPi + step * k;
        const double v = objective(angles[k]);
        values[k] = std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
        if (std::isfinite(v)) ++finite_count;
    }
    if (finite_count == 0) {
        throw NumericalError("objective is non-finite everywhere on the search grid");
    }

    double lo = values[0], hi = values[0];
    for (double v : values) {
        if (std::isfinite(v)) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }

    std::vector<Candidate> candidates;
    const double merge_tol = std::max(10.0 * settings.refine_tolerance, 1e-6);

    // A flat objective has no usable minima; report the grid point nearest
    // zero so downstream tie-breaking stays deterministic.
    const bool flat = (hi - lo) <= 1e-12 * std::max(1.0, std::abs(lo));
    if (flat) {
        double best_angle = angles[0];
        for (double a : angles) {
            if (std::abs(a) < std::abs(best_angle)) best_angle = a;
        }
        candidates.push_back({wrap_to_pi(best_angle), lo});
        return candidates;
    }

    for (int k = 0; k < n; ++k) {
        const double prev = values[(k + n - 1) % n];
        const double here = values[k];
        const double next = values[(k + 1) % n];
        if (!std::isfinite(here)) continue;
        const bool is_min = here <= prev && here <= next && (here < prev || here < next);
        if (!is_min) continue;
        const ScalarMinimum refined =
            golden_section_minimize(objective, angles[k] - step, angles[k] + step,
                                    settings.refine_tolerance, settings.max_refine_iters);
        add_candidate(candidates, refined.x, refined.value, merge_tol);
    }

    if (candidates.empty()) {
        // All minima sat on plateaus; fall back to the best grid point.
        int best = 0;
        for (int k = 1; k < n; ++k) {
            if (values[k] < values[best]) best = k;
        }
        candidates.push_back({wrap_to_pi(angles[best]), values[best]});
    }
    return candidates;
}

std::vector<Candidate> descend_from_zero(const Objective& objective,
                                         const SolverSettings& settings) {
    const double step0 = 2.0 * kPi / settings.grid_count;
    const double f0 = objective(0.0);
    const double fp = objective(step0);
    const double fm = objective(-step0);
    if (!std::isfinite(f0) && !std::isfinite(fp) && !std::isfinite(fm)) {
        throw NumericalError("objective is non-finite around the start point");
    }

    double a = -step0, b = step0;
    if (!(f0 <= fp && f0 <= fm)) {
        // Walk downhill with growing steps until the value turns back up,
        // capping the excursion at half a period each way.
        const double dir = fp < fm ? 1.0 : -1.0;
        double x_prev = 0.0;
        double x_cur = dir * step0, f_cur = dir > 0 ? fp : fm;
        double step = step0;
        while (true) {
            step *= 1.618;
            double x_next = x_cur + dir * step;
            x_next = std::clamp(x_next, -kPi, kPi);
            const double f_next = objective(x_next);
            if (f_next >= f_cur || std::abs(x_next) >= kPi) {
                a = std::min(x_prev, x_next);
                b = std::max(x_prev, x_next);
                break;
            }
            x_prev = x_cur;
            x_cur = x_next;
            f_cur = f_next;
        }
    }

    const ScalarMinimum refined = golden_section_minimize(
        objective, a, b, settings.refine_tolerance, settings.max_refine_iters);
    if (!std::isfinite(refined.value)) {
        throw NumericalError("descent from zero ended on a non-finite objective value");
    }
    return {{wrap_to_pi(refined.x), refined.value}};
}

}  // namespace

EstimateResult estimate(const EstimatorInput& input, EstimatorKind which,
                        const SolverSettings& settings) {
    if (settings.grid_count < 8) throw ValidationError("solver grid_count must be >= 8");
    input.validate();
    const Objective objective = make_objective(input, which);

    std::vector<Candidate> candidates = settings.single_descent
                                            ? descend_from_zero(objective, settings)
                                            : grid_refine(objective, settings);

    // Best residual first; exact ties go to the smaller |angle|.
    std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
        if (a.residual != b.residual) return a.residual < b.residual;
        if (std::abs(a.angle) != std::abs(b.angle)) return std::abs(a.angle) < std::abs(b.angle);
        return a.angle < b.angle;
    });

    EstimateResult result;
    result.candidates = candidates;
    result.delta_L_star = candidates.front().angle;
    result.residual = candidates.front().residual;

    const double theta_tip_1 =
        tangent_angle(input.model.proximal, input.model.proximal.length, input.joints.q_p);
    const double theta_tip_2 =
        tangent_angle(input.model.distal, input.model.distal.length, input.joints.q_d);
    const bool near_straight =
        std::abs(theta_tip_1 - kPi / 2.0) < settings.straightness_threshold &&
        std::abs(theta_tip_2 - kPi / 2.0) < settings.straightness_threshold;

    bool ambiguous = false;
    for (std::size_t i = 1; i < candidates.size(); ++i) {
        const double spread = candidates[i].residual - result.residual;
        if (spread < 0.01 * std::max(result.residual, 1e-12) &&
            angular_error(candidates[i].angle, result.delta_L_star) > deg_to_rad(10.0)) {
            ambiguous = true;
            break;
        }
    }
    // A flat objective yields a single candidate; probe a quarter turn away
    // to tell an actual minimum from an unidentifiable plateau.
    if (!ambiguous && candidates.size() == 1) {
        const double probe = objective(wrap_to_pi(result.delta_L_star + kPi / 2.0));
        if (std::isfinite(probe) &&
            std::abs(probe - result.residual) < 0.01 * std::max(result.residual, 1e-12)) {
            ambiguous = true;
        }
    }

    if (near_straight) {
        result.flag = ConditionFlag::near_straight;
    } else if (ambiguous) {
        result.flag = ConditionFlag::ambiguous;
    } else {
        result.flag = ConditionFlag::well_posed;
    }
    return result;
}

}  // namespace cathkin
