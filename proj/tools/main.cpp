// Batch CLI for the cathkin library: kinematics queries, bi-plane
// reconstruction, bending-plane estimation, and Monte Carlo studies.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cathkin/angles.hpp"
#include "cathkin/biplane.hpp"
#include "cathkin/errors.hpp"
#include "cathkin/estimation.hpp"
#include "cathkin/io.hpp"
#include "cathkin/kinematics.hpp"
#include "cathkin/studies.hpp"

namespace {

using namespace cathkin;

// Exit codes, also documented in the README:
//   0 success, 2 parse failure, 3 validation/domain/input failure,
//   4 degenerate imaging geometry, 5 numerical failure,
//   10 advisory: estimate finished but is not well posed.
constexpr int kExitOk = 0;
constexpr int kExitParse = 2;
constexpr int kExitValidation = 3;
constexpr int kExitDegenerate = 4;
constexpr int kExitNumerical = 5;
constexpr int kExitAdvisory = 10;

struct JointsArg {
    double q_r_deg = 0.0;
    double q_p_mm = 0.0;
    double q_d_mm = 0.0;
    double delta_L_deg = 0.0;
};

JointState to_joint_state(const JointsArg& a) {
    JointState joints;
    joints.q_r = deg_to_rad(a.q_r_deg);
    joints.q_p = a.q_p_mm;
    joints.q_d = a.q_d_mm;
    joints.delta_L = wrap_to_pi(deg_to_rad(a.delta_L_deg));
    return joints;
}

JointsArg parse_joints(const std::string& text) {
    std::vector<double> values;
    std::stringstream stream(text);
    std::string field;
    while (std::getline(stream, field, ',')) {
        try {
            values.push_back(std::stod(field));
        } catch (const std::exception&) {
            throw ParseError("--joints: '" + field + "' is not a number");
        }
    }
    if (values.size() != 3 && values.size() != 4) {
        throw ParseError("--joints expects 'q_r_deg,q_p_mm,q_d_mm[,delta_L_deg]'");
    }
    JointsArg a;
    a.q_r_deg = values[0];
    a.q_p_mm = values[1];
    a.q_d_mm = values[2];
    if (values.size() == 4) a.delta_L_deg = values[3];
    return a;
}

JointRates parse_rates(const std::string& text) {
    std::vector<double> values;
    std::stringstream stream(text);
    std::string field;
    while (std::getline(stream, field, ',')) {
        try {
            values.push_back(std::stod(field));
        } catch (const std::exception&) {
            throw ParseError("--rates: '" + field + "' is not a number");
        }
    }
    if (values.size() != 3) {
        throw ParseError("--rates expects 'qdot_r_deg_s,qdot_p_mm_s,qdot_d_mm_s'");
    }
    JointRates rates;
    rates.qdot_r = deg_to_rad(values[0]);
    rates.qdot_p = values[1];
    rates.qdot_d = values[2];
    return rates;
}

// --markers "2=proximal:13,3=distal:8.5"; id 1 defaults to the distal tip.
std::map<int, BodyMarker> parse_marker_map(const std::string& text) {
    std::map<int, BodyMarker> markers;
    if (text.empty()) return markers;
    std::stringstream stream(text);
    std::string entry;
    while (std::getline(stream, entry, ',')) {
        const auto eq = entry.find('=');
        const auto colon = entry.find(':');
        if (eq == std::string::npos || colon == std::string::npos || colon < eq) {
            throw ParseError("--markers entries look like 'id=proximal:arc_mm'");
        }
        int id = 0;
        try {
            id = std::stoi(entry.substr(0, eq));
        } catch (const std::exception&) {
            throw ParseError("--markers: bad marker id in '" + entry + "'");
        }
        const std::string segment = entry.substr(eq + 1, colon - eq - 1);
        BodyMarker marker;
        if (segment == "proximal" || segment == "p") {
            marker.segment = Segment::proximal;
        } else if (segment == "distal" || segment == "d") {
            marker.segment = Segment::distal;
        } else {
            throw ParseError("--markers: segment must be proximal|distal in '" + entry + "'");
        }
        try {
            marker.arc_length = std::stod(entry.substr(colon + 1));
        } catch (const std::exception&) {
            throw ParseError("--markers: bad arc length in '" + entry + "'");
        }
        markers[id] = marker;
    }
    return markers;
}

struct GroupedObservations {
    // time -> (plane label, marker id) -> local point
    std::map<double, std::map<std::pair<std::string, int>, Eigen::Vector3d>> by_time;
    std::set<int> marker_ids;
};

GroupedObservations group_log(const std::vector<io::ObservationRow>& rows) {
    GroupedObservations grouped;
    for (const io::ObservationRow& row : rows) {
        grouped.by_time[row.time_s][{row.plane_label, row.marker_id}] =
            Eigen::Vector3d(row.u_mm, row.v_mm, 0.0);
        if (row.marker_id > 0) grouped.marker_ids.insert(row.marker_id);
    }
    return grouped;
}

PlaneObservation make_observation(const Eigen::Vector3d& local, double time_s) {
    PlaneObservation obs;
    obs.point_in_plane = local;
    obs.timestamp = time_s;
    return obs;
}

bool has_ids(const std::map<std::pair<std::string, int>, Eigen::Vector3d>& frame,
             const std::vector<int>& ids) {
    for (int id : ids) {
        if (!frame.count({"front", id}) || !frame.count({"side", id})) return false;
    }
    return true;
}

Eigen::Vector3d reconstruct_marker(
    const ImagingSetup& setup,
    const std::map<std::pair<std::string, int>, Eigen::Vector3d>& frame, int id, double time_s) {
    return reconstruct(setup, make_observation(frame.at({"front", 0}), time_s),
                       make_observation(frame.at({"front", id}), time_s),
                       make_observation(frame.at({"side", 0}), time_s),
                       make_observation(frame.at({"side", id}), time_s));
}

void print_pose(const CatheterPose& pose) {
    const auto& p = pose.tip.position;
    std::printf("tip_position_mm: %.9f %.9f %.9f\n", p.x(), p.y(), p.z());
    std::printf("tip_rotation:\n");
    for (int r = 0; r < 3; ++r) {
        std::printf("  %.9f %.9f %.9f\n", pose.tip.rotation(r, 0), pose.tip.rotation(r, 1),
                    pose.tip.rotation(r, 2));
    }
    const auto& p2 = pose.proximal_tip.position;
    std::printf("proximal_tip_position_mm: %.9f %.9f %.9f\n", p2.x(), p2.y(), p2.z());
}

int run(int argc, char** argv) {
    CLI::App app{"Two-segment steerable catheter kinematics, bi-plane reconstruction, and "
                 "bending-plane estimation"};
    app.require_subcommand(1);

    std::string model_path, setup_path, obs_path, descriptor_path, out_path;
    std::string joints_text, rates_text, markers_text, estimator_name = "tip-position";
    int quad_nodes = Quadrature::kDefaultNodeCount;
    int grid_count = 72;
    std::optional<std::uint64_t> seed_override;
    bool single_descent = false;
    bool raw_log = false;

    CLI::App* fk = app.add_subcommand("fk", "Direct kinematics of one joint configuration");
    fk->add_option("--model", model_path, "catheter model JSON")->required();
    fk->add_option("--joints", joints_text, "q_r_deg,q_p_mm,q_d_mm[,delta_L_deg]")->required();
    fk->add_option("--quad-nodes", quad_nodes, "quadrature nodes per segment");

    CLI::App* jac = app.add_subcommand("jacobian", "6x4 serial Jacobian at one configuration");
    jac->add_option("--model", model_path, "catheter model JSON")->required();
    jac->add_option("--joints", joints_text, "q_r_deg,q_p_mm,q_d_mm[,delta_L_deg]")->required();
    jac->add_option("--quad-nodes", quad_nodes, "quadrature nodes per segment");

    CLI::App* rec = app.add_subcommand("reconstruct", "3D tip displacement from an observation log");
    rec->add_option("--setup", setup_path, "imaging setup JSON")->required();
    rec->add_option("--obs", obs_path, "observation log CSV")->required();

    CLI::App* est = app.add_subcommand("estimate", "Solve for the torsional loss angle");
    est->add_option("--model", model_path, "catheter model JSON")->required();
    est->add_option("--setup", setup_path, "imaging setup JSON")->required();
    est->add_option("--obs", obs_path, "observation log CSV")->required();
    est->add_option("--estimator", estimator_name, "tip-position|body-positions|tip-velocity");
    est->add_option("--joints", joints_text, "q_r_deg,q_p_mm,q_d_mm (delta_L is the unknown)")
        ->required();
    est->add_option("--rates", rates_text, "qdot_r_deg_s,qdot_p_mm_s,qdot_d_mm_s");
    est->add_option("--markers", markers_text, "id=segment:arc_mm,... for log marker ids >= 2");
    est->add_option("--grid-count", grid_count, "coarse angle grid size");
    est->add_option("--quad-nodes", quad_nodes, "quadrature nodes per segment");
    est->add_flag("--single-descent", single_descent, "descend from 0 deg instead of the grid");

    CLI::App* study = app.add_subcommand("study", "Run a Monte Carlo study descriptor");
    study->add_option("--descriptor", descriptor_path, "study descriptor JSON")->required();
    study->add_option("--out", out_path, "output directory")->required();
    study->add_option("--seed", seed_override, "master seed override");
    study->add_option("--quad-nodes", quad_nodes, "quadrature nodes per segment");
    study->add_option("--grid-count", grid_count, "solver grid override");
    study->add_flag("--raw-log", raw_log, "also write the per-trial log CSV");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitParse;
    }

    if (fk->parsed()) {
        const CatheterModel model = io::load_catheter_model(model_path);
        const JointState joints = to_joint_state(parse_joints(joints_text));
        const Quadrature quad(quad_nodes);
        const CatheterPose pose = full_direct_kinematics(model, joints, quad);
        print_pose(pose);
        std::printf("theta_L1_deg: %.6f\n",
                    rad_to_deg(tangent_angle(model.proximal, model.proximal.length, joints.q_p)));
        std::printf("theta_L2_deg: %.6f\n",
                    rad_to_deg(tangent_angle(model.distal, model.distal.length, joints.q_d)));
        return kExitOk;
    }

    if (jac->parsed()) {
        const CatheterModel model = io::load_catheter_model(model_path);
        const JointState joints = to_joint_state(parse_joints(joints_text));
        const Quadrature quad(quad_nodes);
        const Eigen::Matrix<double, 6, 4> j = combined_jacobian(model, joints, quad);
        std::printf("jacobian_columns: qdot_p qdot_r qdot_d ddelta2\n");
        for (int r = 0; r < 6; ++r) {
            std::printf("  %.9f %.9f %.9f %.9f\n", j(r, 0), j(r, 1), j(r, 2), j(r, 3));
        }
        return kExitOk;
    }

    if (rec->parsed()) {
        const ImagingSetup setup = io::load_imaging_setup(setup_path);
        const GroupedObservations grouped = group_log(io::load_observation_log(obs_path));
        bool any = false;
        std::printf("time_s x_mm y_mm z_mm smallest_sv\n");
        for (const auto& [time_s, frame] : grouped.by_time) {
            if (!has_ids(frame, {0, 1})) continue;
            const ReconstructionInfo info = reconstruct_with_info(
                setup, make_observation(frame.at({"front", 0}), time_s),
                make_observation(frame.at({"front", 1}), time_s),
                make_observation(frame.at({"side", 0}), time_s),
                make_observation(frame.at({"side", 1}), time_s));
            std::printf("%.6f %.9f %.9f %.9f %.6g\n", time_s, info.point.x(), info.point.y(),
                        info.point.z(), info.smallest_singular_value);
            any = true;
        }
        if (!any) {
            throw ValidationError("log holds no timestamp with base and tip in both planes");
        }
        return kExitOk;
    }

    if (est->parsed()) {
        const CatheterModel model = io::load_catheter_model(model_path);
        const ImagingSetup setup = io::load_imaging_setup(setup_path);
        const GroupedObservations grouped = group_log(io::load_observation_log(obs_path));
        const EstimatorKind kind = io::estimator_from_string(estimator_name);

        EstimatorInput input;
        input.model = model;
        input.joints = to_joint_state(parse_joints(joints_text));
        input.quadrature = Quadrature(quad_nodes);

        std::map<int, BodyMarker> marker_map = parse_marker_map(markers_text);
        if (!marker_map.count(1)) {
            marker_map[1] = BodyMarker{Segment::distal, model.distal.length};
        }

        if (kind == EstimatorKind::tip_position) {
            // Latest frame that has base and tip in both planes.
            bool found = false;
            for (auto it = grouped.by_time.rbegin(); it != grouped.by_time.rend(); ++it) {
                if (!has_ids(it->second, {0, 1})) continue;
                input.reconstructed_tip = reconstruct_marker(setup, it->second, 1, it->first);
                found = true;
                break;
            }
            if (!found) throw ValidationError("log is missing base or tip observations");
        } else if (kind == EstimatorKind::body_positions) {
            std::vector<int> ids(grouped.marker_ids.begin(), grouped.marker_ids.end());
            if (ids.empty()) throw ValidationError("log holds no body markers");
            for (int id : ids) {
                if (!marker_map.count(id)) {
                    throw ValidationError("marker id " + std::to_string(id) +
                                          " appears in the log but --markers does not map it");
                }
            }
            bool found = false;
            for (auto it = grouped.by_time.rbegin(); it != grouped.by_time.rend(); ++it) {
                std::vector<int> need = ids;
                need.push_back(0);
                if (!has_ids(it->second, need)) continue;
                std::vector<Eigen::Vector3d> points;
                std::vector<BodyMarker> spec;
                for (int id : ids) {
                    points.push_back(reconstruct_marker(setup, it->second, id, it->first));
                    spec.push_back(marker_map.at(id));
                }
                input.reconstructed_body_points = std::move(points);
                input.marker_spec = std::move(spec);
                found = true;
                break;
            }
            if (!found) throw ValidationError("log has no frame with all mapped markers");
        } else {
            if (rates_text.empty()) {
                throw ValidationError("tip-velocity estimation needs --rates");
            }
            input.rates = parse_rates(rates_text);
            std::vector<TimedPoint> track;
            for (const auto& [time_s, frame] : grouped.by_time) {
                if (!has_ids(frame, {0, 1})) continue;
                track.push_back({time_s, reconstruct_marker(setup, frame, 1, time_s)});
            }
            if (track.size() < 2) {
                throw InsufficientDataError("velocity estimation needs at least two frames");
            }
            input.reconstructed_tip_velocity = velocity_from_observations(track);
        }

        SolverSettings settings;
        settings.grid_count = grid_count;
        settings.single_descent = single_descent;
        const EstimateResult result = estimate(input, kind, settings);

        std::printf("delta_L_deg: %.6f\n", rad_to_deg(result.delta_L_star));
        std::printf("residual: %.9g\n", result.residual);
        std::printf("flag: %s\n", to_string(result.flag));
        std::printf("candidates:\n");
        for (const Candidate& c : result.candidates) {
            std::printf("  %.6f %.9g\n", rad_to_deg(c.angle), c.residual);
        }
        return result.flag == ConditionFlag::well_posed ? kExitOk : kExitAdvisory;
    }

    if (study->parsed()) {
        StudyDescriptor desc = io::load_study_descriptor(descriptor_path);
        if (seed_override) desc.master_seed = *seed_override;
        if (study->count("--quad-nodes") > 0) desc.quad_nodes = quad_nodes;
        if (study->count("--grid-count") > 0) desc.solver.grid_count = grid_count;

        const StudyResult result = run_study(desc);
        std::filesystem::create_directories(out_path);
        const std::filesystem::path out(out_path);
        io::write_file((out / "results.csv").string(), summarize(result));
        io::write_file((out / "summary.json").string(), provenance_json(result));
        if (raw_log) io::write_file((out / "trials.csv").string(), raw_trial_csv(result));
        std::printf("wrote %s\n", (out / "results.csv").string().c_str());
        std::printf("wrote %s\n", (out / "summary.json").string().c_str());
        if (raw_log) std::printf("wrote %s\n", (out / "trials.csv").string().c_str());
        return kExitOk;
    }

    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return kExitParse;
    } catch (const DegenerateGeometryError& e) {
        std::cerr << "degenerate geometry: " << e.what() << "\n";
        return kExitDegenerate;
    } catch (const ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const InsufficientDataError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::domain_error& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::invalid_argument& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
