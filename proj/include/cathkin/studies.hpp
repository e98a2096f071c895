#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "cathkin/biplane.hpp"
#include "cathkin/estimation.hpp"

namespace cathkin {

enum class StudyKind { noise_sweep, workspace_sweep, deflection_sweep };

enum class DeflectionMode {
    tip_offset,   // displace the synthesized tip along the in-plane bending direction
    joint_noise   // perturb the push/pull values the estimator believes instead
};

/// Declarative description of one Monte Carlo study.
struct StudyDescriptor {
    StudyKind kind = StudyKind::noise_sweep;

    CatheterModel model;
    ImagingSetup setup;
    std::string model_hash;  // provenance only

    JointState joints;  // ground-truth configuration (delta_L included)

    // noise sweep
    std::vector<double> sigma_grid;  // mm

    // workspace sweep: grid of tip angles (rad) or of push/pull values (mm)
    std::vector<double> theta1_grid;
    std::vector<double> theta2_grid;
    std::vector<double> qp_grid;
    std::vector<double> qd_grid;
    bool workspace_in_joint_space = false;
    std::array<double, 2> actuation_range{-15.0, 15.0};  // search window for tip-angle inversion

    // deflection sweep
    std::vector<double> deflection_grid;  // mm
    DeflectionMode deflection_mode = DeflectionMode::tip_offset;

    double sigma = 1.0;  // mm; used by workspace and deflection sweeps

    int trials = 500;
    std::vector<EstimatorKind> estimators{EstimatorKind::tip_position,
                                          EstimatorKind::body_positions,
                                          EstimatorKind::tip_velocity};
    std::uint64_t master_seed = 0;

    std::vector<BodyMarker> markers;  // body-positions marker set
    JointRates rates;                 // motion during velocity observation
    double velocity_dt = 0.05;        // s between the two velocity samples

    int quad_nodes = Quadrature::kDefaultNodeCount;
    SolverSettings solver;
    int max_workers = 0;  // 0 = hardware concurrency
};

struct CellStats {
    double mean_deg = 0.0;
    double median_deg = 0.0;
    double rms_deg = 0.0;
    double max_deg = 0.0;
    int trials = 0;
    int well_posed = 0;
    int near_straight = 0;
    int ambiguous = 0;
};

struct CellRecord {
    std::vector<double> coords;  // display units: mm or deg, matching coord names
    EstimatorKind estimator;
    std::vector<double> errors_deg;      // per-trial wrapped errors
    std::vector<ConditionFlag> flags;    // per-trial flags
    CellStats stats;
};

struct StudyResult {
    StudyKind kind = StudyKind::noise_sweep;
    std::vector<std::string> coord_names;
    std::vector<CellRecord> records;  // sorted by cell then estimator
    std::uint64_t master_seed = 0;
    std::string model_hash;
    std::string settings_json;  // provenance snapshot
};

StudyResult run_noise_sweep(const StudyDescriptor& desc);
StudyResult run_workspace_sweep(const StudyDescriptor& desc);
StudyResult run_deflection_sweep(const StudyDescriptor& desc);

/// Dispatches on desc.kind.
StudyResult run_study(const StudyDescriptor& desc);

/// Deterministic CSV table, one row per cell x estimator.
std::string summarize(const StudyResult& result);

/// Deterministic CSV of every trial's error and flag.
std::string raw_trial_csv(const StudyResult& result);

/// JSON provenance block (seed, settings snapshot, model hash).
std::string provenance_json(const StudyResult& result);

const char* to_string(EstimatorKind kind);
const char* to_string(ConditionFlag flag);
const char* to_string(StudyKind kind);

}  // namespace cathkin
