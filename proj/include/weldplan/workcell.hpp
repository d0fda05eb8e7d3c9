#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "weldplan/config.hpp"
#include "weldplan/cost.hpp"
#include "weldplan/kinematics.hpp"
#include "weldplan/perception.hpp"
#include "weldplan/planners.hpp"
#include "weldplan/scene.hpp"

namespace weldplan {

// Tubular joint stand-in: a chord along the y axis with a vertical brace at the
// centre and two braces leaning outwards, in the workpiece frame (origin on
// the chord axis).
struct TubularJointSpec {
    double chord_radius = 150.0;
    double chord_half_length = 600.0;
    double brace_radius = 100.0;
    double brace_height = 450.0;   // above the chord crown
    double inclined_radius = 84.0;
    double inclined_length = 380.0; // beyond the chord surface
    double inclined_angle = deg2rad(45.0);
    double inclined_offset = 380.0; // y of the brace axis on the chord axis
    int segments = 64;
};

std::vector<std::pair<std::string, Primitive>> tubular_joint_primitives(const TubularJointSpec& spec = {});
TriangleMesh make_tubular_joint_mesh(const TubularJointSpec& spec = {});

// Closed triangle mesh approximating a primitive (capsules become a cylinder
// with spherical caps).
TriangleMesh primitive_mesh(const Primitive& p, int segments = 32);

struct WorkcellGoal {
    std::string name;
    RigidTransform pose; // world
    JointConfig q;
    IkResult ik;
};

struct Workcell {
    WorkcellConfig config;
    Scene scene;                // workpiece at its nominal pose
    TriangleMesh workpiece;     // workpiece frame
    TriangleMesh fixtures;      // workpiece frame, at the nominal pose
    std::vector<WorkcellGoal> goals;

    const KinematicChain& chain() const { return config.chain; }
    const WorkcellGoal& goal(const std::string& name) const;
    std::size_t goal_index(const std::string& name) const;
};

// Loads the mesh, builds the collision scene and solves every goal with IK
// seeded from home. Throws ConfigError when a goal is unreachable or its
// configuration collides.
Workcell build_workcell(const WorkcellConfig& config);

// ---------------------------------------------------------------------------
// Perception, all in the workpiece frame

VirtualCameraRig make_rig(const Workcell& cell);

// Noise-free model cloud from the CAD mesh.
PointCloud cad_cloud(const Workcell& cell);

// Synthetic sensor cloud: the workpiece moved by `offset` plus the fixtures,
// voxelised, with Gaussian noise and uniform outliers.
PointCloud sensor_cloud(const Workcell& cell, const RigidTransform& offset, std::uint64_t seed);

struct RegistrationReport {
    std::size_t input_points = 0;
    std::size_t segmented_points = 0;
    std::size_t filtered_points = 0;
    std::size_t icp_points = 0;
    IcpResult icp;                  // sensor -> CAD (real to virtual)
    RigidTransform workpiece_offset; // CAD -> sensor, i.e. where the real part sits
};

// Segment, DoN filter and downsample a sensor cloud for registration.
PointCloud registration_source(const WorkcellConfig& config, const PointCloud& sensor,
                               RegistrationReport* report = nullptr);

// registration_source followed by ICP onto the CAD cloud.
RegistrationReport register_workpiece(const WorkcellConfig& config, const PointCloud& sensor, const PointCloud& cad);

// Translation that moves the source centroid onto the target centroid.
RigidTransform centroid_alignment(const PointCloud& source, const PointCloud& target);

// World-frame correction for Scene::update_workpiece from an offset expressed
// in the workpiece frame.
RigidTransform world_correction(const Workcell& cell, const RigidTransform& workpiece_offset);

// ---------------------------------------------------------------------------
// Planning queries

// The first goal is planned from home, every later goal from the previous one.
struct PlanningQuery {
    std::string goal;
    JointConfig start;
    JointConfig target;
    GoalSpec goal_spec;
};

PlanningQuery planning_query(const Workcell& cell, const std::string& goal);
PlanRequest make_request(const Workcell& cell, const PlanningQuery& query, const std::string& planner,
                         std::uint64_t seed);
PlanningProblem planning_problem(const Workcell& cell);

// hash(master, planner, goal, trial): streams stay put when planners or goals
// are added.
std::uint64_t trial_seed(std::uint64_t master, const std::string& planner, const std::string& goal, int trial);

} // namespace weldplan
