#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "weldplan/perception.hpp"
#include "weldplan/planners.hpp"
#include "weldplan/scene.hpp"

namespace weldplan {

struct ObstacleConfig {
    std::string name;
    Primitive shape;
    // Attached shapes are given in the workpiece frame and follow it; the rest
    // are in the world frame.
    bool attached = false;
    // Fixtures are rendered into the synthetic sensor cloud.
    bool fixture = false;
};

struct GoalConfig {
    std::string name;
    RigidTransform pose; // torch tip
    bool in_workpiece_frame = true;
};

struct RigConfig {
    double radius_factor = 3.0; // times the mesh bounding radius
    int width = 256;
    int height = 256;
    double fov = deg2rad(60.0);
};

struct SensorConfig {
    double cad_leaf = 10.0;     // mm, voxel leaf for the CAD model cloud
    double sensor_leaf = 3.0;   // mm, voxel leaf for the raw sensor cloud
    double noise_sigma = 0.5;   // mm
    double outlier_fraction = 0.02;
    double registration_leaf = 10.0; // mm, downsampling before ICP
    Aabb segment_box;                // workpiece frame
};

struct BenchConfig {
    int trials = 15;
    double time_budget = 5.0; // s, per query
    int cost_subdivisions = 100;
    double consistency_bound = 0.3; // max coefficient of variation for IC(c_pos)
    unsigned workers = 0;           // 0 = hardware concurrency
};

struct WorkcellConfig {
    std::filesystem::path source; // config file, empty when parsed from text

    KinematicChain chain;
    std::array<double, 8> proxy_radii{150.0, 130.0, 100.0, 100.0, 80.0, 0.0, 50.0, 25.0};
    std::vector<std::pair<std::size_t, std::size_t>> exempt_frames{{2, 4}, {4, 6}};
    double safety_margin = 10.0;
    JointConfig home;

    std::filesystem::path workpiece_mesh; // resolved against the config directory
    RigidTransform workpiece_pose;        // nominal, workpiece -> world
    std::vector<ObstacleConfig> obstacles;

    RigConfig rig;
    SensorConfig sensor;
    DonParams don;
    IcpParams icp;           // registration
    bool icp_centroid_init = true;
    IcpParams sweep_icp;     // robustness sweep

    PlannerSettings planner;
    double extension_step = 0.1;
    double goal_bias = 0.05;
    double orientation_weight = 100.0; // mm per unit of c_orient
    bool cost_driven = true;           // false runs BiTRRT with constant cost

    std::vector<GoalConfig> goals;
    std::uint64_t seed = 1;
    BenchConfig bench;

    void validate() const;
    const GoalConfig& goal(const std::string& name) const;
};

// Throws ConfigError on malformed or out-of-range input, ParseError on YAML
// syntax errors or an unreadable file.
WorkcellConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {});
WorkcellConfig load_config(const std::filesystem::path& path);

} // namespace weldplan
