#include <doctest.h>

#include <cmath>
#include <string>

#include "cathkin/angles.hpp"
#include "cathkin/errors.hpp"
#include "cathkin/io.hpp"
#include "cathkin/kinematics.hpp"

using namespace cathkin;

#ifndef CATHKIN_FIXTURE_DIR
#define CATHKIN_FIXTURE_DIR "fixtures"
#endif

namespace {
const std::string kFixtures = CATHKIN_FIXTURE_DIR;
}

TEST_SUITE("io") {

TEST_CASE("bundled model file loads") {
    const CatheterModel model = io::load_catheter_model(kFixtures + "/model_twoseg.json");
    CHECK(model.proximal.length == 13.0);
    CHECK(model.distal.length == 16.0);
    CHECK(model.delta2 == 0.0);
    CHECK(tangent_angle(model.proximal, 13.0, 2.0) ==
          doctest::Approx(kPi / 2.0 - 0.01 * 2.0 * 13.0).epsilon(1e-12));
}

TEST_CASE("explicit shape matrices behave like the curvature shortcut") {
    const std::string text = R"({
        "proximal": {
            "length_mm": 13.0,
            "basis": {"type": "polynomial", "arc_count": 2, "actuation_count": 2},
            "shape_matrix": [[1.5707963267948966, 0.0], [0.0, -0.01]]
        },
        "distal": {"length_mm": 16.0, "constant_curvature_c": 0.01},
        "delta2_rad": 0.25
    })";
    const CatheterModel model = io::parse_catheter_model(text, "inline");
    CHECK(model.delta2 == doctest::Approx(0.25));
    for (double q : {-3.0, 0.0, 4.0}) {
        CHECK(tangent_angle(model.proximal, 7.0, q) ==
              doctest::Approx(tangent_angle(model.distal, 7.0, q)).epsilon(1e-12));
    }
}

TEST_CASE("model schema errors carry field context") {
    CHECK_THROWS_WITH_AS(io::parse_catheter_model(R"({"distal": {"length_mm": 1}})", "m.json"),
                         doctest::Contains("proximal"), ParseError);
    CHECK_THROWS_WITH_AS(
        io::parse_catheter_model(R"({"proximal": {"constant_curvature_c": 0.01},
                                     "distal": {"length_mm": 16, "constant_curvature_c": 0.01}})",
                                 "m.json"),
        doctest::Contains("length_mm"), ParseError);
    CHECK_THROWS_AS(io::parse_catheter_model("{not json", "m.json"), ParseError);
}

TEST_CASE("models violating the straight rest shape are rejected") {
    const std::string text = R"({
        "proximal": {
            "length_mm": 13.0,
            "basis": {"type": "polynomial", "arc_count": 2, "actuation_count": 2},
            "shape_matrix": [[1.5707963267948966, 0.0], [0.01, -0.01]]
        },
        "distal": {"length_mm": 16.0, "constant_curvature_c": 0.01}
    })";
    CHECK_THROWS_AS(io::parse_catheter_model(text, "inline"), ValidationError);
}

TEST_CASE("plane angles wrap into the canonical interval on load") {
    const std::string text = R"({
        "proximal": {"length_mm": 13.0, "constant_curvature_c": 0.01},
        "distal": {"length_mm": 16.0, "constant_curvature_c": 0.01},
        "delta2_rad": 7.0
    })";
    const CatheterModel model = io::parse_catheter_model(text, "inline");
    CHECK(model.delta2 == doctest::Approx(7.0 - 2.0 * kPi).epsilon(1e-12));
}

TEST_CASE("bundled imaging setup loads and validates") {
    const ImagingSetup setup = io::load_imaging_setup(kFixtures + "/setup_biplane.json");
    CHECK(setup.front.label == "front");
    CHECK((setup.front.normal - Eigen::Vector3d::UnitX()).norm() < 1e-15);
    CHECK((setup.side.normal - Eigen::Vector3d::UnitY()).norm() < 1e-15);
    CHECK_FALSE(setup.degenerate());
}

TEST_CASE("setup schema errors") {
    const std::string bad_normal = R"({
        "front": {"normal": [1, 0.5, 0],
                  "rotation_to_world": [[0,0,1],[1,0,0],[0,1,0]]},
        "side": {"normal": [0, 1, 0],
                 "rotation_to_world": [[0,1,0],[0,0,1],[1,0,0]]}
    })";
    CHECK_THROWS_AS(io::parse_imaging_setup(bad_normal, "s.json"), ValidationError);

    const std::string mismatched = R"({
        "front": {"normal": [0, 0, 1],
                  "rotation_to_world": [[0,0,1],[1,0,0],[0,1,0]]},
        "side": {"normal": [0, 1, 0],
                 "rotation_to_world": [[0,1,0],[0,0,1],[1,0,0]]}
    })";
    CHECK_THROWS_AS(io::parse_imaging_setup(mismatched, "s.json"), ValidationError);

    // Identical planes load fine; they are only refused at reconstruction.
    const std::string parallel = R"({
        "front": {"normal": [1, 0, 0],
                  "rotation_to_world": [[0,0,1],[1,0,0],[0,1,0]]},
        "side": {"normal": [1, 0, 0],
                 "rotation_to_world": [[0,0,1],[1,0,0],[0,1,0]]}
    })";
    const ImagingSetup setup = io::parse_imaging_setup(parallel, "s.json");
    CHECK(setup.degenerate());
}

TEST_CASE("observation logs round trip") {
    std::vector<io::ObservationRow> rows{
        {0.00, "front", 1.25, -3.5, 0},
        {0.00, "side", 0.75, 2.25, 0},
        {0.05, "front", 1.5, -3.25, 1},
        {0.05, "side", 0.5, 2.0, 1},
    };
    const std::string text = io::format_observation_log(rows);
    const auto parsed = io::parse_observation_log(text, "log.csv");
    REQUIRE(parsed.size() == rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(parsed[i].time_s == doctest::Approx(rows[i].time_s));
        CHECK(parsed[i].plane_label == rows[i].plane_label);
        CHECK(parsed[i].u_mm == doctest::Approx(rows[i].u_mm));
        CHECK(parsed[i].v_mm == doctest::Approx(rows[i].v_mm));
        CHECK(parsed[i].marker_id == rows[i].marker_id);
    }
}

TEST_CASE("observation log parse failures") {
    CHECK_THROWS_AS(io::parse_observation_log("", "log.csv"), ParseError);
    CHECK_THROWS_AS(io::parse_observation_log("wrong,header\n", "log.csv"), ParseError);
    CHECK_THROWS_WITH_AS(
        io::parse_observation_log("time_s,plane_label,u_mm,v_mm,marker_id\n0,front,a,2,0\n",
                                  "log.csv"),
        doctest::Contains("log.csv:2"), ParseError);
    CHECK_THROWS_AS(
        io::parse_observation_log("time_s,plane_label,u_mm,v_mm,marker_id\n0,top,1,2,0\n",
                                  "log.csv"),
        ParseError);
    CHECK_THROWS_AS(
        io::parse_observation_log("time_s,plane_label,u_mm,v_mm,marker_id\n0,front,1,2,-1\n",
                                  "log.csv"),
        ParseError);
}

TEST_CASE("bundled study descriptors load with resolved references") {
    const StudyDescriptor noise = io::load_study_descriptor(kFixtures + "/study_noise.json");
    CHECK(noise.kind == StudyKind::noise_sweep);
    CHECK(noise.trials == 500);
    CHECK(noise.sigma_grid == std::vector<double>{0.25, 0.5, 1.0, 2.0});
    CHECK(noise.estimators.size() == 3);
    CHECK(noise.markers.size() == 2);
    CHECK(noise.model_hash.size() == 16);
    CHECK(noise.model.proximal.length == 13.0);
    CHECK(noise.joints.delta_L == doctest::Approx(0.6));

    const StudyDescriptor ws = io::load_study_descriptor(kFixtures + "/study_workspace.json");
    CHECK(ws.kind == StudyKind::workspace_sweep);
    CHECK(ws.theta1_grid.size() == 4);
    CHECK_FALSE(ws.workspace_in_joint_space);

    const StudyDescriptor defl = io::load_study_descriptor(kFixtures + "/study_deflection.json");
    CHECK(defl.kind == StudyKind::deflection_sweep);
    CHECK(defl.deflection_grid.size() == 6);
    CHECK(defl.deflection_mode == DeflectionMode::tip_offset);
}

TEST_CASE("descriptor schema failures") {
    CHECK_THROWS_WITH_AS(io::parse_study_descriptor(R"({"kind": "volume-sweep"})", "d.json", ""),
                         doctest::Contains("volume-sweep"), ParseError);
    CHECK_THROWS_AS(io::parse_study_descriptor(R"({"trials": 3})", "d.json", ""), ParseError);
    CHECK_THROWS_AS(io::estimator_from_string("tip"), ParseError);
}

TEST_CASE("the provenance hash is stable and content sensitive") {
    CHECK(io::fnv1a_hex("") == "cbf29ce484222325");
    CHECK(io::fnv1a_hex("a") != io::fnv1a_hex("b"));
    CHECK(io::fnv1a_hex("model") == io::fnv1a_hex("model"));
}

}  // TEST_SUITE
