#pragma once

// On-disk documents. Every file is a JSON object carrying "format" and
// "version" keys; see docs/formats.md.

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "simpnet/kinematics.hpp"
#include "simpnet/world.hpp"

namespace simpnet {

std::string read_text_file(const std::filesystem::path& path);
/// Writes to "<path>.tmp" then renames, so readers never see partial files.
void write_text_atomic(const std::filesystem::path& path, const std::string& text);

nlohmann::json read_json_file(const std::filesystem::path& path);
void write_json_atomic(const std::filesystem::path& path, const nlohmann::json& j);

/// Throws FormatError unless j["format"] == format and version is supported.
void expect_document(const nlohmann::json& j, const std::string& format, int max_version);

nlohmann::json joint_vector_to_json(const JointVector& q);
JointVector joint_vector_from_json(const nlohmann::json& j);

nlohmann::json robot_to_json(const KinematicModel& model);
KinematicModel robot_from_json(const nlohmann::json& j);
KinematicModel load_robot(const std::filesystem::path& path);

nlohmann::json workspace_to_json(const Workspace& ws);
Workspace workspace_from_json(const nlohmann::json& j);
Workspace load_workspace(const std::filesystem::path& path);
void save_workspace(const std::filesystem::path& path, const Workspace& ws);

/// Path file: the waypoints plus provenance.
struct PathRecord {
  std::string robot_id;
  std::string workspace_id;
  std::string planner;
  std::uint64_t seed = 0;
  double cost = 0.0;
  std::vector<JointVector> waypoints;
};

nlohmann::json path_to_json(const PathRecord& rec);
PathRecord path_from_json(const nlohmann::json& j);

}  // namespace simpnet
