#include "cathkin/studies.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "cathkin/angles.hpp"
#include "cathkin/errors.hpp"
#include "cathkin/rotations.hpp"

#include <json.hpp>

namespace cathkin {

namespace {

constexpr EstimatorKind kEstimatorOrder[] = {EstimatorKind::tip_position,
                                             EstimatorKind::body_positions,
                                             EstimatorKind::tip_velocity};

bool selected(const StudyDescriptor& desc, EstimatorKind kind) {
    return std::find(desc.estimators.begin(), desc.estimators.end(), kind) !=
           desc.estimators.end();
}

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

struct CellSpec {
    std::vector<double> coords;  // display units
    JointState joints;
    double sigma = 0.0;
    double deflection = 0.0;
};

// In-plane bending direction of a pose's tip; used to displace the
// synthesized tip toward the catheter axis, which is the direction an
// obstacle restricting the bend pushes it.
Eigen::Vector3d deflection_offset(const CatheterPose& truth, const JointState& joints,
                                  double magnitude) {
    Eigen::Vector3d in_plane(truth.tip.position.x(), truth.tip.position.y(), 0.0);
    const double norm = in_plane.norm();
    Eigen::Vector3d direction;
    if (norm > 1e-9) {
        direction = in_plane / norm;
    } else {
        direction = rot_z(joints.proximal_plane_angle()) * Eigen::Vector3d::UnitX();
    }
    return -magnitude * direction;
}

bool marker_is_distal_tip(const BodyMarker& marker, const CatheterModel& model) {
    return marker.segment == Segment::distal &&
           std::abs(marker.arc_length - model.distal.length) < 1e-9;
}

struct TrialOutcome {
    double error_deg = 0.0;
    ConditionFlag flag = ConditionFlag::well_posed;
};

// One Monte Carlo trial: synthesize ground truth, observe it with noise,
// reconstruct, and run each selected estimator on the same draws. The draw
// order is fixed (position bundle first, then the velocity pair) so results
// depend only on (master seed, cell, trial).
std::vector<TrialOutcome> run_trial(const StudyDescriptor& desc, const CellSpec& cell,
                                    const Quadrature& quad, Rng& rng) {
    const bool want_tip = selected(desc, EstimatorKind::tip_position);
    const bool want_body = selected(desc, EstimatorKind::body_positions);
    const bool want_velocity = selected(desc, EstimatorKind::tip_velocity);
    const bool joint_noise_mode = desc.kind == StudyKind::deflection_sweep &&
                                  desc.deflection_mode == DeflectionMode::joint_noise;
    const bool tip_offset_mode = desc.kind == StudyKind::deflection_sweep &&
                                 desc.deflection_mode == DeflectionMode::tip_offset;

    JointState estimator_joints = cell.joints;
    estimator_joints.delta_L = 0.0;
    if (joint_noise_mode && cell.deflection > 0.0) {
        estimator_joints.q_p += rng.uniform(-cell.deflection, cell.deflection);
        estimator_joints.q_d += rng.uniform(-cell.deflection, cell.deflection);
    }

    const CatheterPose truth = full_direct_kinematics(desc.model, cell.joints, quad);
    Eigen::Vector3d tip_truth = truth.tip.position;
    Eigen::Vector3d offset = Eigen::Vector3d::Zero();
    if (tip_offset_mode) {
        offset = deflection_offset(truth, cell.joints, cell.deflection);
        tip_truth += offset;
    }

    std::optional<Eigen::Vector3d> recon_tip;
    std::optional<std::vector<Eigen::Vector3d>> recon_body;
    PlaneObservation base_front, base_side;
    if (want_tip || want_body) {
        base_front = observe(desc.setup.front, Eigen::Vector3d::Zero(), cell.sigma, rng);
        base_side = observe(desc.setup.side, Eigen::Vector3d::Zero(), cell.sigma, rng);
        const PlaneObservation tip_front = observe(desc.setup.front, tip_truth, cell.sigma, rng);
        const PlaneObservation tip_side = observe(desc.setup.side, tip_truth, cell.sigma, rng);
        recon_tip = reconstruct(desc.setup, base_front, tip_front, base_side, tip_side);
    }
    if (want_body) {
        std::vector<Eigen::Vector3d> body_truth =
            body_point_kinematics(desc.model, cell.joints, desc.markers, quad);
        if (tip_offset_mode) {
            for (std::size_t i = 0; i < desc.markers.size(); ++i) {
                if (marker_is_distal_tip(desc.markers[i], desc.model)) body_truth[i] += offset;
            }
        }
        std::vector<Eigen::Vector3d> recon;
        recon.reserve(body_truth.size());
        for (const Eigen::Vector3d& point : body_truth) {
            const PlaneObservation f = observe(desc.setup.front, point, cell.sigma, rng);
            const PlaneObservation s = observe(desc.setup.side, point, cell.sigma, rng);
            recon.push_back(reconstruct(desc.setup, base_front, f, base_side, s));
        }
        recon_body = std::move(recon);
    }

    std::optional<Eigen::Vector3d> recon_velocity;
    if (want_velocity) {
        const double half_dt = 0.5 * desc.velocity_dt;
        std::array<TimedPoint, 2> samples;
        for (int k = 0; k < 2; ++k) {
            const double tau = k == 0 ? -half_dt : half_dt;
            JointState moved = cell.joints;
            moved.q_r += desc.rates.qdot_r * tau;
            moved.q_p += desc.rates.qdot_p * tau;
            moved.q_d += desc.rates.qdot_d * tau;
            const CatheterPose pose = full_direct_kinematics(desc.model, moved, quad);
            Eigen::Vector3d tip = pose.tip.position;
            if (tip_offset_mode) tip += deflection_offset(pose, moved, cell.deflection);
            const PlaneObservation bf =
                observe(desc.setup.front, Eigen::Vector3d::Zero(), cell.sigma, rng, tau);
            const PlaneObservation bs =
                observe(desc.setup.side, Eigen::Vector3d::Zero(), cell.sigma, rng, tau);
            const PlaneObservation tf = observe(desc.setup.front, tip, cell.sigma, rng, tau);
            const PlaneObservation ts = observe(desc.setup.side, tip, cell.sigma, rng, tau);
            samples[k] = {tau, reconstruct(desc.setup, bf, tf, bs, ts)};
        }
        recon_velocity = velocity_from_observations(samples);
    }

    std::vector<TrialOutcome> outcomes;
    for (EstimatorKind kind : kEstimatorOrder) {
        if (!selected(desc, kind)) continue;
        EstimatorInput input;
        input.model = desc.model;
        input.joints = estimator_joints;
        input.quadrature = quad;
        switch (kind) {
            case EstimatorKind::tip_position:
                input.reconstructed_tip = recon_tip;
                break;
            case EstimatorKind::body_positions:
                input.reconstructed_body_points = recon_body;
                input.marker_spec = desc.markers;
                break;
            case EstimatorKind::tip_velocity:
                input.reconstructed_tip_velocity = recon_velocity;
                input.rates = desc.rates;
                break;
        }
        const EstimateResult result = estimate(input, kind, desc.solver);
        TrialOutcome outcome;
        outcome.error_deg = rad_to_deg(angular_error(result.delta_L_star, cell.joints.delta_L));
        outcome.flag = result.flag;
        outcomes.push_back(outcome);
    }
    return outcomes;
}

CellStats compute_stats(const std::vector<double>& errors_deg,
                        const std::vector<ConditionFlag>& flags) {
    CellStats stats;
    stats.trials = static_cast<int>(errors_deg.size());
    double sum = 0.0, sum_sq = 0.0, max_v = 0.0;
    for (double e : errors_deg) {
        sum += e;
        sum_sq += e * e;
        max_v = std::max(max_v, e);
    }
    stats.mean_deg = sum / stats.trials;
    stats.rms_deg = std::sqrt(sum_sq / stats.trials);
    stats.max_deg = max_v;

    std::vector<double> sorted = errors_deg;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    stats.median_deg = n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);

    for (ConditionFlag f : flags) {
        switch (f) {
            case ConditionFlag::well_posed: ++stats.well_posed; break;
            case ConditionFlag::near_straight: ++stats.near_straight; break;
            case ConditionFlag::ambiguous: ++stats.ambiguous; break;
        }
    }

    if (!(stats.max_deg >= stats.rms_deg - 1e-12) ||
        !(stats.rms_deg >= stats.mean_deg - 1e-12)) {
        throw NumericalError("aggregate ordering violated (max >= rms >= mean)");
    }
    return stats;
}

std::vector<CellRecord> run_cell(const StudyDescriptor& desc, const CellSpec& cell,
                                 std::size_t cell_index) {
    const Quadrature quad(desc.quad_nodes);

    std::vector<EstimatorKind> order;
    for (EstimatorKind kind : kEstimatorOrder) {
        if (selected(desc, kind)) order.push_back(kind);
    }

    std::vector<CellRecord> records(order.size());
    for (std::size_t e = 0; e < order.size(); ++e) {
        records[e].coords = cell.coords;
        records[e].estimator = order[e];
        records[e].errors_deg.reserve(static_cast<std::size_t>(desc.trials));
        records[e].flags.reserve(static_cast<std::size_t>(desc.trials));
    }

    for (int trial = 0; trial < desc.trials; ++trial) {
        Rng rng = Rng::for_trial(desc.master_seed, cell_index, static_cast<std::uint64_t>(trial));
        const std::vector<TrialOutcome> outcomes = run_trial(desc, cell, quad, rng);
        for (std::size_t e = 0; e < order.size(); ++e) {
            records[e].errors_deg.push_back(outcomes[e].error_deg);
            records[e].flags.push_back(outcomes[e].flag);
        }
    }

    for (CellRecord& record : records) {
        record.stats = compute_stats(record.errors_deg, record.flags);
    }
    return records;
}

void validate_common(const StudyDescriptor& desc) {
    if (desc.trials < 1) throw ValidationError("study needs trials >= 1");
    if (desc.estimators.empty()) throw ValidationError("study selects no estimator");
    desc.model.validate();
    desc.setup.validate();
    if (selected(desc, EstimatorKind::body_positions) && desc.markers.empty()) {
        throw ValidationError("body-positions study needs a marker list");
    }
    for (const BodyMarker& m : desc.markers) {
        const SegmentModel& seg =
            m.segment == Segment::proximal ? desc.model.proximal : desc.model.distal;
        if (m.arc_length < 0.0 || m.arc_length > seg.length + 1e-9) {
            throw ValidationError("marker arc length outside its segment");
        }
    }
    if (selected(desc, EstimatorKind::tip_velocity)) {
        if (!(desc.velocity_dt > 0.0)) throw ValidationError("velocity_dt must be positive");
    }
}

bool configuration_near_straight(const StudyDescriptor& desc, const JointState& joints) {
    const double t1 =
        tangent_angle(desc.model.proximal, desc.model.proximal.length, joints.q_p);
    const double t2 = tangent_angle(desc.model.distal, desc.model.distal.length, joints.q_d);
    return std::abs(t1 - kPi / 2.0) < desc.solver.straightness_threshold &&
           std::abs(t2 - kPi / 2.0) < desc.solver.straightness_threshold;
}

// Actuation value whose tip tangent angle matches the target, searched on
// the descriptor's actuation range; the root with the smallest magnitude
// wins when several exist.
double invert_tip_angle(const SegmentModel& segment, double theta_target,
                        const std::array<double, 2>& range) {
    const int kScan = 1024;
    const double lo = range[0], hi = range[1];
    auto f = [&](double q) { return tangent_angle(segment, segment.length, q) - theta_target; };

    double best_q = 0.0;
    bool found = false;
    double prev_q = lo;
    double prev_f = f(lo);
    for (int i = 1; i <= kScan; ++i) {
        const double q = lo + (hi - lo) * i / kScan;
        const double fq = f(q);
        if (prev_f == 0.0 || fq == 0.0 || (prev_f < 0.0) != (fq < 0.0)) {
            double a = prev_q, b = q, fa = prev_f;
            for (int iter = 0; iter < 200; ++iter) {
                const double mid = 0.5 * (a + b);
                const double fm = f(mid);
                if (fm == 0.0 || (b - a) < 1e-13) {
                    a = b = mid;
                    break;
                }
                if ((fa < 0.0) != (fm < 0.0)) {
                    b = mid;
                } else {
                    a = mid;
                    fa = fm;
                }
            }
            const double root = 0.5 * (a + b);
            if (!found || std::abs(root) < std::abs(best_q)) best_q = root;
            found = true;
        }
        prev_q = q;
        prev_f = fq;
    }
    if (!found) {
        throw ValidationError("no actuation value reaches tip angle " +
                              std::to_string(theta_target) + " within the search range");
    }
    return best_q;
}

std::string settings_snapshot(const StudyDescriptor& desc) {
    nlohmann::ordered_json j;
    j["kind"] = to_string(desc.kind);
    j["trials"] = desc.trials;
    j["seed"] = desc.master_seed;
    {
        std::vector<std::string> names;
        for (EstimatorKind kind : kEstimatorOrder) {
            if (selected(desc, kind)) names.emplace_back(to_string(kind));
        }
        j["estimators"] = names;
    }
    j["sigma_mm"] = desc.kind == StudyKind::noise_sweep ? nlohmann::ordered_json(desc.sigma_grid)
                                                        : nlohmann::ordered_json(desc.sigma);
    if (desc.kind == StudyKind::deflection_sweep) {
        j["deflection_grid_mm"] = desc.deflection_grid;
        j["deflection_mode"] =
            desc.deflection_mode == DeflectionMode::tip_offset ? "tip-offset" : "joint-noise";
    }
    j["quad_nodes"] = desc.quad_nodes;
    j["grid_count"] = desc.solver.grid_count;
    j["refine_tolerance_rad"] = desc.solver.refine_tolerance;
    j["straightness_threshold_rad"] = desc.solver.straightness_threshold;
    j["velocity_dt_s"] = desc.velocity_dt;
    j["rates"] = {{"qdot_r_rad_s", desc.rates.qdot_r},
                  {"qdot_p_mm_s", desc.rates.qdot_p},
                  {"qdot_d_mm_s", desc.rates.qdot_d}};
    j["model_hash"] = desc.model_hash;
    return j.dump();
}

StudyResult run_cells(const StudyDescriptor& desc, const std::vector<CellSpec>& cells,
                      std::vector<std::string> coord_names) {
    std::vector<std::vector<CellRecord>> per_cell(cells.size());

    const unsigned hardware = std::max(1u, std::thread::hardware_concurrency());
    std::size_t workers = desc.max_workers > 0 ? static_cast<std::size_t>(desc.max_workers)
                                               : static_cast<std::size_t>(hardware);
    workers = std::min(workers, cells.size());

    if (workers <= 1) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            per_cell[i] = run_cell(desc, cells[i], i);
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::exception_ptr first_error;
        std::mutex error_mutex;
        auto work = [&]() {
            for (std::size_t i = next.fetch_add(1); i < cells.size(); i = next.fetch_add(1)) {
                try {
                    per_cell[i] = run_cell(desc, cells[i], i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                    return;
                }
            }
        };
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
        for (std::thread& t : pool) t.join();
        if (first_error) std::rethrow_exception(first_error);
    }

    StudyResult result;
    result.kind = desc.kind;
    result.coord_names = std::move(coord_names);
    result.master_seed = desc.master_seed;
    result.model_hash = desc.model_hash;
    result.settings_json = settings_snapshot(desc);
    for (std::vector<CellRecord>& records : per_cell) {
        for (CellRecord& record : records) result.records.push_back(std::move(record));
    }
    return result;
}

}  // namespace

StudyResult run_noise_sweep(const StudyDescriptor& desc) {
    validate_common(desc);
    if (desc.sigma_grid.empty()) throw ValidationError("noise sweep needs a sigma grid");
    for (double s : desc.sigma_grid) {
        if (!(s >= 0.0) || !std::isfinite(s)) {
            throw ValidationError("sigma grid values must be finite and >= 0");
        }
    }
    if (configuration_near_straight(desc, desc.joints)) {
        throw ValidationError(
            "noise sweep configuration is near straight; there is no bending plane to solve for");
    }

    std::vector<CellSpec> cells;
    for (double sigma : desc.sigma_grid) {
        CellSpec cell;
        cell.coords = {sigma};
        cell.joints = desc.joints;
        cell.sigma = sigma;
        cells.push_back(cell);
    }
    return run_cells(desc, cells, {"sigma_mm"});
}

StudyResult run_workspace_sweep(const StudyDescriptor& desc) {
    validate_common(desc);
    if (!(desc.sigma >= 0.0)) throw ValidationError("sigma must be >= 0");

    std::vector<CellSpec> cells;
    std::vector<std::string> names;
    if (desc.workspace_in_joint_space) {
        if (desc.qp_grid.empty() || desc.qd_grid.empty()) {
            throw ValidationError("joint-space workspace sweep needs q_p and q_d grids");
        }
        names = {"q_p_mm", "q_d_mm"};
        for (double qp : desc.qp_grid) {
            for (double qd : desc.qd_grid) {
                CellSpec cell;
                cell.coords = {qp, qd};
                cell.joints = desc.joints;
                cell.joints.q_p = qp;
                cell.joints.q_d = qd;
                cell.sigma = desc.sigma;
                cells.push_back(cell);
            }
        }
    } else {
        if (desc.theta1_grid.empty() || desc.theta2_grid.empty()) {
            throw ValidationError("workspace sweep needs tip-angle grids");
        }
        names = {"theta_L1_deg", "theta_L2_deg"};
        for (double t1 : desc.theta1_grid) {
            for (double t2 : desc.theta2_grid) {
                CellSpec cell;
                cell.coords = {rad_to_deg(t1), rad_to_deg(t2)};
                cell.joints = desc.joints;
                cell.joints.q_p = invert_tip_angle(desc.model.proximal, t1, desc.actuation_range);
                cell.joints.q_d = invert_tip_angle(desc.model.distal, t2, desc.actuation_range);
                cell.sigma = desc.sigma;
                cells.push_back(cell);
            }
        }
    }
    return run_cells(desc, cells, std::move(names));
}

StudyResult run_deflection_sweep(const StudyDescriptor& desc) {
    validate_common(desc);
    if (desc.deflection_grid.empty()) throw ValidationError("deflection sweep needs a grid");
    const double total_length = desc.model.proximal.length + desc.model.distal.length;
    for (double d : desc.deflection_grid) {
        if (!(d >= 0.0) || !std::isfinite(d)) {
            throw ValidationError("deflection values must be finite and >= 0");
        }
        if (d > total_length) {
            throw ValidationError("deflection magnitude exceeds the catheter length");
        }
    }
    if (!(desc.sigma >= 0.0)) throw ValidationError("sigma must be >= 0");
    if (configuration_near_straight(desc, desc.joints)) {
        throw ValidationError(
            "deflection sweep configuration is near straight; there is no bending plane to "
            "solve for");
    }

    std::vector<CellSpec> cells;
    for (double d : desc.deflection_grid) {
        CellSpec cell;
        cell.coords = {d};
        cell.joints = desc.joints;
        cell.sigma = desc.sigma;
        cell.deflection = d;
        cells.push_back(cell);
    }
    return run_cells(desc, cells, {"deflection_mm"});
}

StudyResult run_study(const StudyDescriptor& desc) {
    switch (desc.kind) {
        case StudyKind::noise_sweep: return run_noise_sweep(desc);
        case StudyKind::workspace_sweep: return run_workspace_sweep(desc);
        case StudyKind::deflection_sweep: return run_deflection_sweep(desc);
    }
    throw ValidationError("unknown study kind");
}

std::string summarize(const StudyResult& result) {
    if (result.records.empty()) throw ValidationError("cannot summarize an empty study result");

    std::vector<const CellRecord*> ordered;
    ordered.reserve(result.records.size());
    for (const CellRecord& r : result.records) ordered.push_back(&r);
    std::stable_sort(ordered.begin(), ordered.end(),
                     [](const CellRecord* a, const CellRecord* b) {
                         if (a->coords != b->coords) return a->coords < b->coords;
                         return static_cast<int>(a->estimator) < static_cast<int>(b->estimator);
                     });

    std::ostringstream out;
    for (const std::string& name : result.coord_names) out << name << ",";
    out << "estimator,trials,mean_deg,median_deg,rms_deg,max_deg,"
           "n_well_posed,n_near_straight,n_ambiguous\n";
    for (const CellRecord* r : ordered) {
        for (double c : r->coords) out << fmt_double(c) << ",";
        const CellStats& s = r->stats;
        out << to_string(r->estimator) << "," << s.trials << "," << fmt_double(s.mean_deg) << ","
            << fmt_double(s.median_deg) << "," << fmt_double(s.rms_deg) << ","
            << fmt_double(s.max_deg) << "," << s.well_posed << "," << s.near_straight << ","
            << s.ambiguous << "\n";
    }
    return out.str();
}

std::string raw_trial_csv(const StudyResult& result) {
    std::ostringstream out;
    for (const std::string& name : result.coord_names) out << name << ",";
    out << "estimator,trial,error_deg,flag\n";
    for (const CellRecord& r : result.records) {
        for (std::size_t t = 0; t < r.errors_deg.size(); ++t) {
            for (double c : r.coords) out << fmt_double(c) << ",";
            out << to_string(r.estimator) << "," << t << "," << fmt_double(r.errors_deg[t]) << ","
                << to_string(r.flags[t]) << "\n";
        }
    }
    return out.str();
}

std::string provenance_json(const StudyResult& result) {
    nlohmann::ordered_json j;
    j["kind"] = to_string(result.kind);
    j["seed"] = result.master_seed;
    j["model_hash"] = result.model_hash;
    j["coord_names"] = result.coord_names;
    j["cells"] = result.records.size();
    j["settings"] = nlohmann::ordered_json::parse(result.settings_json);
    return j.dump(2) + "\n";
}

const char* to_string(EstimatorKind kind) {
    switch (kind) {
        case EstimatorKind::tip_position: return "tip-position";
        case EstimatorKind::body_positions: return "body-positions";
        case EstimatorKind::tip_velocity: return "tip-velocity";
    }
    return "?";
}

const char* to_string(ConditionFlag flag) {
    switch (flag) {
        case ConditionFlag::well_posed: return "well-posed";
        case ConditionFlag::near_straight: return "near-straight";
        case ConditionFlag::ambiguous: return "ambiguous";
    }
    return "?";
}

const char* to_string(StudyKind kind) {
    switch (kind) {
        case StudyKind::noise_sweep: return "noise-sweep";
        case StudyKind::workspace_sweep: return "workspace-sweep";
        case StudyKind::deflection_sweep: return "deflection-sweep";
    }
    return "?";
}

}  // namespace cathkin
