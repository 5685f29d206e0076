#include "simpnet/formats.hpp"

#include <fstream>
#include <sstream>

#include "simpnet/error.hpp"

namespace simpnet {

namespace fs = std::filesystem;
using nlohmann::json;

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_atomic(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory '" + path.parent_path().string() + "': " + ec.message());
  }
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
    out << text;
    out.flush();
    if (!out) throw IoError("write to '" + tmp.string() + "' failed");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move '" + tmp.string() + "' into place: " + ec.message());
}

json read_json_file(const fs::path& path) {
  const std::string text = read_text_file(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

void write_json_atomic(const fs::path& path, const json& j) { write_text_atomic(path, j.dump(1) + "\n"); }

void expect_document(const json& j, const std::string& format, int max_version) {
  if (!j.is_object() || !j.contains("format") || !j["format"].is_string())
    throw FormatError("document has no 'format' field (expected '" + format + "')");
  if (j["format"].get<std::string>() != format)
    throw FormatError("expected a '" + format + "' document, got '" + j["format"].get<std::string>() + "'");
  if (!j.contains("version") || !j["version"].is_number_integer())
    throw FormatError("'" + format + "' document has no integer 'version'");
  const int v = j["version"].get<int>();
  if (v < 1 || v > max_version)
    throw FormatError("'" + format + "' version " + std::to_string(v) + " is not supported");
}

json joint_vector_to_json(const JointVector& q) { return json(std::vector<double>(q.begin(), q.end())); }

JointVector joint_vector_from_json(const json& j) {
  if (!j.is_array() || j.size() != kNumJoints)
    throw FormatError("joint vector must be an array of " + std::to_string(kNumJoints) + " numbers");
  JointVector q;
  for (std::size_t i = 0; i < kNumJoints; ++i) {
    if (!j[i].is_number()) throw FormatError("joint vector entries must be numbers");
    q[i] = j[i].get<double>();
  }
  return q;
}

namespace {

json vec3_to_json(const Point3& p) { return json::array({p.x(), p.y(), p.z()}); }

Point3 vec3_from_json(const json& j) {
  if (!j.is_array() || j.size() != 3) throw FormatError("expected a 3-vector");
  return Point3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

template <class F>
auto guarded(const char* what, F f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw FormatError(std::string(what) + ": " + e.what());
  }
}

}  // namespace

json robot_to_json(const KinematicModel& model) {
  json dh = json::array(), limits = json::array();
  for (const DHRow& r : model.dh())
    dh.push_back({{"a", r.a}, {"alpha", r.alpha}, {"d", r.d}, {"theta_offset", r.theta_offset}});
  for (const JointLimit& l : model.limits()) limits.push_back(json::array({l.lo, l.hi}));
  const Eigen::Vector3d rpy = model.base_pose().rotation().eulerAngles(2, 1, 0);
  return {{"format", "simpnet-robot"},
          {"version", 1},
          {"name", model.name()},
          {"dh", dh},
          {"joint_limits", limits},
          {"link_radii", std::vector<double>(model.link_radii().begin(), model.link_radii().end())},
          {"base_pose",
           {{"translation", vec3_to_json(model.base_pose().translation())},
            {"rpy", json::array({rpy[2], rpy[1], rpy[0]})}}}};
}

KinematicModel robot_from_json(const json& j) {
  expect_document(j, "simpnet-robot", 1);
  return guarded("robot file", [&] {
    std::array<DHRow, kNumJoints> dh;
    std::array<JointLimit, kNumJoints> limits;
    std::array<double, kNumJoints> radii;
    const json& jdh = j.at("dh");
    const json& jl = j.at("joint_limits");
    const json& jr = j.at("link_radii");
    if (jdh.size() != kNumJoints || jl.size() != kNumJoints || jr.size() != kNumJoints)
      throw FormatError("robot file: expected " + std::to_string(kNumJoints) + " joints");
    for (std::size_t i = 0; i < kNumJoints; ++i) {
      dh[i] = {jdh[i].at("a").get<double>(), jdh[i].at("alpha").get<double>(), jdh[i].at("d").get<double>(),
               jdh[i].value("theta_offset", 0.0)};
      limits[i] = {jl[i].at(0).get<double>(), jl[i].at(1).get<double>()};
      radii[i] = jr[i].get<double>();
    }
    Eigen::Isometry3d base = Eigen::Isometry3d::Identity();
    if (j.contains("base_pose")) {
      const json& bp = j["base_pose"];
      if (bp.contains("rpy")) {
        const Point3 rpy = vec3_from_json(bp["rpy"]);
        base.linear() = (Eigen::AngleAxisd(rpy[2], Eigen::Vector3d::UnitZ()) *
                         Eigen::AngleAxisd(rpy[1], Eigen::Vector3d::UnitY()) *
                         Eigen::AngleAxisd(rpy[0], Eigen::Vector3d::UnitX()))
                            .toRotationMatrix();
      }
      if (bp.contains("translation")) base.translation() = vec3_from_json(bp["translation"]);
    }
    return KinematicModel(j.value("name", "robot"), dh, limits, radii, base);
  });
}

KinematicModel load_robot(const fs::path& path) { return robot_from_json(read_json_file(path)); }

json workspace_to_json(const Workspace& ws) {
  json obstacles = json::array();
  for (const BoxObstacle& b : ws.obstacles())
    obstacles.push_back({{"center", vec3_to_json(b.center)}, {"dims", vec3_to_json(b.dims)}});
  return {{"format", "simpnet-workspace"},
          {"version", 1},
          {"id", ws.id()},
          {"profile", profile_name(ws.profile())},
          {"capacity", ws.capacity()},
          {"bounds", {{"lo", vec3_to_json(ws.bounds().lo)}, {"hi", vec3_to_json(ws.bounds().hi)}}},
          {"obstacles", obstacles}};
}

Workspace workspace_from_json(const json& j) {
  expect_document(j, "simpnet-workspace", 1);
  return guarded("workspace file", [&] {
    const Profile profile = parse_profile(j.at("profile").get<std::string>());
    const Aabb bounds{vec3_from_json(j.at("bounds").at("lo")), vec3_from_json(j.at("bounds").at("hi"))};
    std::vector<BoxObstacle> obstacles;
    for (const json& o : j.at("obstacles"))
      obstacles.push_back({vec3_from_json(o.at("center")), vec3_from_json(o.at("dims"))});
    const std::size_t capacity = j.value("capacity", profile_capacity(profile));
    return Workspace(j.at("id").get<std::string>(), profile, bounds, std::move(obstacles), capacity);
  });
}

Workspace load_workspace(const fs::path& path) { return workspace_from_json(read_json_file(path)); }

void save_workspace(const fs::path& path, const Workspace& ws) { write_json_atomic(path, workspace_to_json(ws)); }

json path_to_json(const PathRecord& rec) {
  json wps = json::array();
  for (const JointVector& q : rec.waypoints) wps.push_back(joint_vector_to_json(q));
  return {{"format", "simpnet-path"},
          {"version", 1},
          {"robot", rec.robot_id},
          {"workspace", rec.workspace_id},
          {"planner", rec.planner},
          {"seed", rec.seed},
          {"cost", rec.cost},
          {"waypoints", wps}};
}

PathRecord path_from_json(const json& j) {
  expect_document(j, "simpnet-path", 1);
  return guarded("path file", [&] {
    PathRecord rec;
    rec.robot_id = j.at("robot").get<std::string>();
    rec.workspace_id = j.at("workspace").get<std::string>();
    rec.planner = j.at("planner").get<std::string>();
    rec.seed = j.at("seed").get<std::uint64_t>();
    rec.cost = j.at("cost").get<double>();
    for (const json& q : j.at("waypoints")) rec.waypoints.push_back(joint_vector_from_json(q));
    return rec;
  });
}

}  // namespace simpnet
