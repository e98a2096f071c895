#include "cathkin/io.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cathkin/errors.hpp"

#include <json.hpp>

namespace cathkin::io {

namespace {

using nlohmann::json;

json parse_json(const std::string& text, const std::string& context) {
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError(context + ": " + e.what());
    }
}

const json& require(const json& j, const std::string& field, const std::string& context) {
    auto it = j.find(field);
    if (it == j.end()) throw ParseError(context + ": missing field '" + field + "'");
    return *it;
}

double require_number(const json& j, const std::string& field, const std::string& context) {
    const json& v = require(j, field, context);
    if (!v.is_number()) throw ParseError(context + ": field '" + field + "' must be a number");
    return v.get<double>();
}

double optional_number(const json& j, const std::string& field, double fallback) {
    auto it = j.find(field);
    return it == j.end() ? fallback : it->get<double>();
}

Eigen::Vector3d parse_vec3(const json& j, const std::string& context) {
    if (!j.is_array() || j.size() != 3) throw ParseError(context + ": expected 3 numbers");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

Eigen::Matrix3d parse_mat3(const json& j, const std::string& context) {
    if (!j.is_array() || j.size() != 3) throw ParseError(context + ": expected 3 rows");
    Eigen::Matrix3d m;
    for (int r = 0; r < 3; ++r) {
        const json& row = j[r];
        if (!row.is_array() || row.size() != 3) {
            throw ParseError(context + ": row " + std::to_string(r) + " must hold 3 numbers");
        }
        for (int c = 0; c < 3; ++c) m(r, c) = row[c].get<double>();
    }
    return m;
}

SegmentModel parse_segment(const json& j, const std::string& context) {
    const double length = require_number(j, "length_mm", context);
    if (j.contains("constant_curvature_c")) {
        return SegmentModel::constant_curvature(length,
                                                j["constant_curvature_c"].get<double>());
    }

    const json& basis = require(j, "basis", context);
    const std::string type = require(basis, "type", context + ".basis").get<std::string>();
    if (type != "polynomial") {
        throw ParseError(context + ".basis: unknown type '" + type + "'");
    }
    const int arc_count = static_cast<int>(require_number(basis, "arc_count", context + ".basis"));
    const int actuation_count =
        static_cast<int>(require_number(basis, "actuation_count", context + ".basis"));

    const json& matrix = require(j, "shape_matrix", context);
    if (!matrix.is_array() || static_cast<int>(matrix.size()) != arc_count) {
        throw ParseError(context + ".shape_matrix: expected " + std::to_string(arc_count) +
                         " rows");
    }
    SegmentModel model;
    model.length = length;
    model.basis = ModalBasis::polynomial(arc_count, actuation_count);
    model.shape_matrix.resize(arc_count, actuation_count);
    for (int r = 0; r < arc_count; ++r) {
        const json& row = matrix[r];
        if (!row.is_array() || static_cast<int>(row.size()) != actuation_count) {
            throw ParseError(context + ".shape_matrix: row " + std::to_string(r) + " must hold " +
                             std::to_string(actuation_count) + " numbers");
        }
        for (int c = 0; c < actuation_count; ++c) model.shape_matrix(r, c) = row[c].get<double>();
    }
    model.validate();
    return model;
}

ImagingPlane parse_plane(const json& j, const std::string& label, const std::string& context) {
    ImagingPlane plane;
    plane.label = label;
    plane.normal = parse_vec3(require(j, "normal", context), context + ".normal");
    plane.rotation_to_world =
        parse_mat3(require(j, "rotation_to_world", context), context + ".rotation_to_world");
    plane.validate();
    return plane;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream stream(line);
    while (std::getline(stream, field, ',')) fields.push_back(field);
    return fields;
}

double parse_double_field(const std::string& text, const std::string& context) {
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used != text.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ParseError(context + ": '" + text + "' is not a number");
    }
}

}  // namespace

std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t hash = 0xCBF29CE484222325ULL;
    for (unsigned char c : bytes) {
        hash ^= c;
        hash *= 0x100000001B3ULL;
    }
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
    return buf;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open file: " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void write_file(const std::string& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot write file: " + path);
    out << contents;
}

CatheterModel parse_catheter_model(const std::string& json_text, const std::string& context) {
    const json j = parse_json(json_text, context);
    CatheterModel model;
    model.proximal = parse_segment(require(j, "proximal", context), context + ".proximal");
    model.distal = parse_segment(require(j, "distal", context), context + ".distal");
    model.delta2 = wrap_to_pi(optional_number(j, "delta2_rad", 0.0));
    model.validate();
    return model;
}

CatheterModel load_catheter_model(const std::string& path) {
    return parse_catheter_model(read_file(path), path);
}

ImagingSetup parse_imaging_setup(const std::string& json_text, const std::string& context) {
    const json j = parse_json(json_text, context);
    ImagingSetup setup;
    setup.front = parse_plane(require(j, "front", context), "front", context + ".front");
    setup.side = parse_plane(require(j, "side", context), "side", context + ".side");
    setup.rank_epsilon = optional_number(j, "rank_epsilon", 1e-3);
    setup.validate();
    return setup;
}

ImagingSetup load_imaging_setup(const std::string& path) {
    return parse_imaging_setup(read_file(path), path);
}

std::vector<ObservationRow> parse_observation_log(const std::string& csv_text,
                                                  const std::string& context) {
    std::istringstream stream(csv_text);
    std::string line;
    if (!std::getline(stream, line)) throw ParseError(context + ": empty observation log");
    if (line != "time_s,plane_label,u_mm,v_mm,marker_id") {
        throw ParseError(context + ": unexpected header '" + line + "'");
    }

    std::vector<ObservationRow> rows;
    int line_no = 1;
    while (std::getline(stream, line)) {
        ++line_no;
        if (line.empty()) continue;
        const std::vector<std::string> fields = split_csv_line(line);
        const std::string where = context + ":" + std::to_string(line_no);
        if (fields.size() != 5) throw ParseError(where + ": expected 5 fields");
        ObservationRow row;
        row.time_s = parse_double_field(fields[0], where);
        row.plane_label = fields[1];
        if (row.plane_label != "front" && row.plane_label != "side") {
            throw ParseError(where + ": plane_label must be 'front' or 'side'");
        }
        row.u_mm = parse_double_field(fields[2], where);
        row.v_mm = parse_double_field(fields[3], where);
        row.marker_id = static_cast<int>(parse_double_field(fields[4], where));
        if (row.marker_id < 0) throw ParseError(where + ": marker_id must be >= 0");
        rows.push_back(row);
    }
    return rows;
}

std::vector<ObservationRow> load_observation_log(const std::string& path) {
    return parse_observation_log(read_file(path), path);
}

std::string format_observation_log(const std::vector<ObservationRow>& rows) {
    std::ostringstream out;
    out << "time_s,plane_label,u_mm,v_mm,marker_id\n";
    char buf[128];
    for (const ObservationRow& row : rows) {
        std::snprintf(buf, sizeof buf, "%.9f,%s,%.9f,%.9f,%d\n", row.time_s,
                      row.plane_label.c_str(), row.u_mm, row.v_mm, row.marker_id);
        out << buf;
    }
    return out.str();
}

EstimatorKind estimator_from_string(const std::string& name) {
    if (name == "tip-position") return EstimatorKind::tip_position;
    if (name == "body-positions") return EstimatorKind::body_positions;
    if (name == "tip-velocity") return EstimatorKind::tip_velocity;
    throw ParseError("unknown estimator '" + name +
                     "' (expected tip-position, body-positions, or tip-velocity)");
}

StudyDescriptor parse_study_descriptor(const std::string& json_text, const std::string& context,
                                       const std::string& base_dir) {
    const json j = parse_json(json_text, context);
    StudyDescriptor desc;

    const std::string kind = require(j, "kind", context).get<std::string>();
    if (kind == "noise-sweep") {
        desc.kind = StudyKind::noise_sweep;
    } else if (kind == "workspace-sweep") {
        desc.kind = StudyKind::workspace_sweep;
    } else if (kind == "deflection-sweep") {
        desc.kind = StudyKind::deflection_sweep;
    } else {
        throw ParseError(context + ": unknown study kind '" + kind + "'");
    }

    const auto resolve = [&base_dir](const std::string& path) {
        const std::filesystem::path p(path);
        if (p.is_absolute() || base_dir.empty()) return path;
        return (std::filesystem::path(base_dir) / p).string();
    };

    const std::string model_path =
        resolve(require(j, "model_file", context).get<std::string>());
    const std::string model_text = read_file(model_path);
    desc.model = parse_catheter_model(model_text, model_path);
    desc.model_hash = fnv1a_hex(model_text);
    desc.setup = load_imaging_setup(resolve(require(j, "setup_file", context).get<std::string>()));

    const json& joints = require(j, "joints", context);
    desc.joints.q_r = optional_number(joints, "q_r_rad", 0.0);
    desc.joints.q_p = optional_number(joints, "q_p_mm", 0.0);
    desc.joints.q_d = optional_number(joints, "q_d_mm", 0.0);
    desc.joints.delta_L = wrap_to_pi(optional_number(joints, "delta_L_rad", 0.0));

    desc.trials = static_cast<int>(optional_number(j, "trials", 500));
    desc.master_seed = j.contains("seed") ? j["seed"].get<std::uint64_t>() : 0;

    if (j.contains("estimators")) {
        desc.estimators.clear();
        for (const json& name : j["estimators"]) {
            desc.estimators.push_back(estimator_from_string(name.get<std::string>()));
        }
    }

    if (j.contains("markers")) {
        for (const json& m : j["markers"]) {
            BodyMarker marker;
            const std::string segment =
                require(m, "segment", context + ".markers").get<std::string>();
            if (segment == "proximal") {
                marker.segment = Segment::proximal;
            } else if (segment == "distal") {
                marker.segment = Segment::distal;
            } else {
                throw ParseError(context + ".markers: segment must be 'proximal' or 'distal'");
            }
            marker.arc_length = require_number(m, "s_mm", context + ".markers");
            desc.markers.push_back(marker);
        }
    }

    if (j.contains("rates")) {
        const json& r = j["rates"];
        desc.rates.qdot_r = optional_number(r, "qdot_r_rad_s", 0.0);
        desc.rates.qdot_p = optional_number(r, "qdot_p_mm_s", 0.0);
        desc.rates.qdot_d = optional_number(r, "qdot_d_mm_s", 0.0);
    }
    desc.velocity_dt = optional_number(j, "velocity_dt_s", 0.05);

    if (j.contains("sigma_grid_mm")) {
        desc.sigma_grid = j["sigma_grid_mm"].get<std::vector<double>>();
    }
    desc.sigma = optional_number(j, "sigma_mm", 1.0);

    if (j.contains("tip_angle_grid_rad")) {
        const json& grid = j["tip_angle_grid_rad"];
        desc.theta1_grid = require(grid, "theta_L1", context).get<std::vector<double>>();
        desc.theta2_grid = require(grid, "theta_L2", context).get<std::vector<double>>();
        desc.workspace_in_joint_space = false;
    }
    if (j.contains("joint_grid")) {
        const json& grid = j["joint_grid"];
        desc.qp_grid = require(grid, "q_p_mm", context).get<std::vector<double>>();
        desc.qd_grid = require(grid, "q_d_mm", context).get<std::vector<double>>();
        desc.workspace_in_joint_space = true;
    }
    if (j.contains("actuation_range_mm")) {
        const auto range = j["actuation_range_mm"].get<std::vector<double>>();
        if (range.size() != 2 || !(range[0] < range[1])) {
            throw ParseError(context + ": actuation_range_mm must be [lo, hi]");
        }
        desc.actuation_range = {range[0], range[1]};
    }

    if (j.contains("deflection_grid_mm")) {
        desc.deflection_grid = j["deflection_grid_mm"].get<std::vector<double>>();
    }
    if (j.contains("deflection_mode")) {
        const std::string mode = j["deflection_mode"].get<std::string>();
        if (mode == "tip-offset") {
            desc.deflection_mode = DeflectionMode::tip_offset;
        } else if (mode == "joint-noise") {
            desc.deflection_mode = DeflectionMode::joint_noise;
        } else {
            throw ParseError(context + ": unknown deflection_mode '" + mode + "'");
        }
    }

    if (j.contains("solver")) {
        const json& s = j["solver"];
        desc.solver.grid_count =
            static_cast<int>(optional_number(s, "grid_count", desc.solver.grid_count));
        desc.solver.refine_tolerance =
            optional_number(s, "refine_tolerance_rad", desc.solver.refine_tolerance);
        desc.solver.straightness_threshold =
            optional_number(s, "straightness_threshold_rad", desc.solver.straightness_threshold);
        if (s.contains("single_descent")) {
            desc.solver.single_descent = s["single_descent"].get<bool>();
        }
    }
    desc.quad_nodes = static_cast<int>(optional_number(j, "quad_nodes", desc.quad_nodes));
    desc.max_workers = static_cast<int>(optional_number(j, "max_workers", 0));

    return desc;
}

StudyDescriptor load_study_descriptor(const std::string& path) {
    const std::string base_dir = std::filesystem::path(path).parent_path().string();
    return parse_study_descriptor(read_file(path), path, base_dir);
}

}  // namespace cathkin::io
