#pragma once

#include <map>
#include <string>
#include <vector>

#include "cathkin/biplane.hpp"
#include "cathkin/model.hpp"
#include "cathkin/studies.hpp"

namespace cathkin::io {

/// FNV-1a of a byte string; used as the model provenance hash.
std::string fnv1a_hex(const std::string& bytes);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& contents);

// Catheter model files (JSON; lengths in mm, angles in rad).
CatheterModel parse_catheter_model(const std::string& json_text, const std::string& context);
CatheterModel load_catheter_model(const std::string& path);

// Imaging setup files (JSON; row-major rotations).
ImagingSetup parse_imaging_setup(const std::string& json_text, const std::string& context);
ImagingSetup load_imaging_setup(const std::string& path);

/// One observation log row. marker_id 0 is the catheter base; 1 is the tip
/// by default; larger ids are body markers mapped by the caller.
struct ObservationRow {
    double time_s = 0.0;
    std::string plane_label;  // "front" | "side"
    double u_mm = 0.0;
    double v_mm = 0.0;
    int marker_id = 0;
};

std::vector<ObservationRow> parse_observation_log(const std::string& csv_text,
                                                  const std::string& context);
std::vector<ObservationRow> load_observation_log(const std::string& path);
std::string format_observation_log(const std::vector<ObservationRow>& rows);

// Study descriptor files (JSON). Referenced model/setup paths are resolved
// relative to the descriptor's directory.
StudyDescriptor load_study_descriptor(const std::string& path);
StudyDescriptor parse_study_descriptor(const std::string& json_text, const std::string& context,
                                       const std::string& base_dir);

EstimatorKind estimator_from_string(const std::string& name);

}  // namespace cathkin::io
