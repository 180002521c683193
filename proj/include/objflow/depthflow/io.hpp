#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "objflow/depthflow/types.hpp"
#include "objflow/io/text.hpp"
#include "objflow/se3geom/camera.hpp"

namespace objflow {

static_assert(std::endian::native == std::endian::little, "depth file I/O assumes a little-endian host");

inline constexpr std::array<char, 4> kDepthMagic{'D', '2', 'F', 'D'};

// ---------------------------------------------------------------------------
// Depth maps: "D2FD", u32 width, u32 height, width*height float32, row-major.

inline DepthMap read_depth_map(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open depth file " + path);
  std::array<char, 4> magic{};
  in.read(magic.data(), 4);
  if (!in || magic != kDepthMagic) throw Error(ErrorKind::kValidation, "bad magic at " + path);
  std::uint32_t width = 0, height = 0;
  in.read(reinterpret_cast<char*>(&width), 4);
  in.read(reinterpret_cast<char*>(&height), 4);
  if (!in || width == 0 || height == 0 || width > 1u << 15 || height > 1u << 15) {
    throw Error(ErrorKind::kValidation, "bad dimensions at " + path);
  }
  DepthMap d(height, width);
  in.read(reinterpret_cast<char*>(d.data()), static_cast<std::streamsize>(sizeof(float) * width * height));
  if (!in) throw Error(ErrorKind::kValidation, "truncated depth data at " + path);
  if (in.peek() != std::char_traits<char>::eof()) throw Error(ErrorKind::kValidation, "trailing bytes at " + path);
  return d;
}

inline std::string encode_depth_map(const DepthMap& d) {
  std::string out(kDepthMagic.begin(), kDepthMagic.end());
  const auto width = static_cast<std::uint32_t>(d.cols());
  const auto height = static_cast<std::uint32_t>(d.rows());
  out.append(reinterpret_cast<const char*>(&width), 4);
  out.append(reinterpret_cast<const char*>(&height), 4);
  out.append(reinterpret_cast<const char*>(d.data()), sizeof(float) * static_cast<std::size_t>(d.size()));
  return out;
}

inline void write_depth_map(const std::filesystem::path& path, const DepthMap& d) {
  io::write_file_atomic(path, encode_depth_map(d));
}

/// Masks share the depth container; any non-zero value is inside.
inline PixelMask read_mask(const std::string& path) { return read_depth_map(path) != 0.0f; }

inline void write_mask(const std::filesystem::path& path, const PixelMask& m) {
  write_depth_map(path, m.cast<float>());
}

/// Depth files of a directory in lexicographic order of their names.
inline std::vector<std::string> list_depth_files(const std::string& dir) {
  if (!std::filesystem::is_directory(dir)) throw Error(ErrorKind::kIo, "depth directory " + dir + " does not exist");
  std::vector<std::string> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file()) files.push_back(entry.path().string());
  }
  std::sort(files.begin(), files.end());
  return files;
}

// ---------------------------------------------------------------------------
// Tracks: CSV "t,i,u,v,visible". Missing rows are invisible.

inline Tracks2D read_tracks(const std::string& path) {
  const auto rows = io::read_csv(path, "t,i,u,v,visible");
  long frames = 0, points = 0;
  struct Row { long t, i; double u, v; bool vis; };
  std::vector<Row> parsed;
  parsed.reserve(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const std::string where = path + ":" + std::to_string(r + 2);
    if (rows[r].size() != 5) throw Error(ErrorKind::kValidation, where + ": expected 5 fields");
    Row row{io::parse_int(rows[r][0], where), io::parse_int(rows[r][1], where), io::parse_double(rows[r][2], where),
            io::parse_double(rows[r][3], where), io::parse_bool(rows[r][4], where)};
    if (row.t < 0 || row.i < 0) throw Error(ErrorKind::kValidation, where + ": negative index");
    frames = std::max(frames, row.t + 1);
    points = std::max(points, row.i + 1);
    parsed.push_back(row);
  }
  Tracks2D tracks;
  tracks.uv.assign(static_cast<std::size_t>(frames), Eigen::Matrix2Xd::Constant(2, points, std::numeric_limits<double>::quiet_NaN()));
  tracks.visible = VisibilityMask::Constant(frames, points, false);
  for (const Row& row : parsed) {
    tracks.uv[static_cast<std::size_t>(row.t)].col(row.i) = Eigen::Vector2d(row.u, row.v);
    tracks.visible(row.t, row.i) = row.vis && std::isfinite(row.u) && std::isfinite(row.v);
  }
  return tracks;
}

/// Overrides visibility from a second file with the same layout.
inline void apply_visibility_file(Tracks2D& tracks, const std::string& path) {
  const auto rows = io::read_csv(path, "t,i,u,v,visible");
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const std::string where = path + ":" + std::to_string(r + 2);
    if (rows[r].size() != 5) throw Error(ErrorKind::kValidation, where + ": expected 5 fields");
    const long t = io::parse_int(rows[r][0], where), i = io::parse_int(rows[r][1], where);
    if (t < 0 || i < 0 || t >= tracks.frames() || i >= tracks.points()) {
      throw Error(ErrorKind::kValidation, where + ": index outside the tracks file");
    }
    tracks.visible(t, i) = tracks.visible(t, i) && io::parse_bool(rows[r][4], where);
  }
}

inline std::string encode_tracks(const Tracks2D& tracks) {
  std::ostringstream os;
  os << "t,i,u,v,visible\n";
  for (Eigen::Index t = 0; t < tracks.frames(); ++t)
    for (Eigen::Index i = 0; i < tracks.points(); ++i)
      os << t << ',' << i << ',' << io::format_double(tracks.uv[t](0, i)) << ','
         << io::format_double(tracks.uv[t](1, i)) << ',' << (tracks.visible(t, i) ? 1 : 0) << '\n';
  return os.str();
}

// ---------------------------------------------------------------------------
// Bundle manifest (JSON). Paths are relative to the manifest's directory.

struct BundlePaths {
  std::string tracks;
  std::string visibility;  // optional; empty when absent
  std::string depth_dir;
  std::string ref_depth;
  std::string object_mask;
  std::string part_mask_dir;  // optional
  std::string camera;
};

inline BundlePaths read_bundle_manifest(const std::string& manifest_path) {
  const nlohmann::json j = io::read_json(manifest_path);
  const std::filesystem::path base = std::filesystem::path(manifest_path).parent_path();
  const auto req = [&](const char* key) {
    if (!j.contains(key) || !j.at(key).is_string()) {
      throw Error(ErrorKind::kValidation, manifest_path + ": missing string key '" + key + "'");
    }
    return io::resolve(base, j.at(key).get<std::string>());
  };
  const auto opt = [&](const char* key) {
    return j.contains(key) && j.at(key).is_string() ? io::resolve(base, j.at(key).get<std::string>()) : std::string();
  };
  static const std::vector<std::string> known = {"tracks", "visibility", "depth_dir", "ref_depth",
                                                 "object_mask", "part_mask_dir", "camera"};
  for (const auto& item : j.items()) {
    if (std::find(known.begin(), known.end(), item.key()) == known.end()) {
      throw Error(ErrorKind::kValidation, manifest_path + ": unknown key '" + item.key() + "'");
    }
  }
  return {req("tracks"), opt("visibility"), req("depth_dir"), req("ref_depth"), req("object_mask"),
          opt("part_mask_dir"), req("camera")};
}

inline FlowBundle load_bundle(const BundlePaths& paths) {
  Tracks2D tracks = read_tracks(paths.tracks);
  if (!paths.visibility.empty()) apply_visibility_file(tracks, paths.visibility);
  std::vector<DepthMap> depths;
  for (const auto& f : list_depth_files(paths.depth_dir)) depths.push_back(read_depth_map(f));
  std::optional<std::vector<PixelMask>> parts;
  if (!paths.part_mask_dir.empty()) {
    parts.emplace();
    for (const auto& f : list_depth_files(paths.part_mask_dir)) parts->push_back(read_mask(f));
  }
  FlowBundle bundle{std::move(tracks), std::move(depths), read_depth_map(paths.ref_depth),
                    read_mask(paths.object_mask), std::move(parts), load_camera(paths.camera)};
  bundle.check();
  return bundle;
}

inline FlowBundle load_bundle(const std::string& manifest_path) {
  return load_bundle(read_bundle_manifest(manifest_path));
}

/// Writes a bundle under `dir` with a manifest named bundle.json; returns the manifest path.
inline std::string write_bundle(const std::filesystem::path& dir, const FlowBundle& b) {
  std::filesystem::create_directories(dir / "depth");
  io::write_file_atomic(dir / "tracks.csv", encode_tracks(b.tracks));
  for (std::size_t t = 0; t < b.depths.size(); ++t) {
    char name[32];
    std::snprintf(name, sizeof(name), "depth_%05zu.d2fd", t);
    write_depth_map(dir / "depth" / name, b.depths[t]);
  }
  write_depth_map(dir / "ref_depth.d2fd", b.ref_depth);
  write_mask(dir / "object_mask.d2fd", b.object_mask);
  nlohmann::json manifest = {{"tracks", "tracks.csv"}, {"depth_dir", "depth"}, {"ref_depth", "ref_depth.d2fd"},
                             {"object_mask", "object_mask.d2fd"}, {"camera", "camera.json"}};
  if (b.part_masks) {
    std::filesystem::create_directories(dir / "part_masks");
    for (std::size_t t = 0; t < b.part_masks->size(); ++t) {
      char name[32];
      std::snprintf(name, sizeof(name), "mask_%05zu.d2fd", t);
      write_mask(dir / "part_masks" / name, (*b.part_masks)[t]);
    }
    manifest["part_mask_dir"] = "part_masks";
  }
  io::write_json(dir / "camera.json", camera_to_json(b.cam));
  io::write_json(dir / "bundle.json", manifest);
  return (dir / "bundle.json").string();
}

// ---------------------------------------------------------------------------
// Object flow: CSV "t,i,x,y,z,visible" plus a JSON sidecar.

inline std::string encode_flow_csv(const ObjectFlow3D& flow) {
  std::ostringstream os;
  os << "t,i,x,y,z,visible\n";
  for (Eigen::Index t = 0; t < flow.frames(); ++t)
    for (Eigen::Index i = 0; i < flow.points(); ++i) {
      const bool vis = flow.visible(t, i);
      const Eigen::Vector3d p = flow.positions(t).col(i);
      os << t << ',' << i << ',' << (vis ? io::format_double(p.x()) : "nan") << ','
         << (vis ? io::format_double(p.y()) : "nan") << ',' << (vis ? io::format_double(p.z()) : "nan") << ','
         << (vis ? 1 : 0) << '\n';
    }
  return os.str();
}

inline std::filesystem::path flow_sidecar_path(const std::filesystem::path& csv) {
  std::filesystem::path p = csv;
  p.replace_extension(".json");
  return p;
}

/// Writes `<csv>` and its sidecar `<csv stem>.json`. `extra` keys are merged into the sidecar.
inline void write_flow(const std::filesystem::path& csv, const ObjectFlow3D& flow, const ScaleShift* calib = nullptr,
                       const nlohmann::json& extra = nlohmann::json::object()) {
  io::write_file_atomic(csv, encode_flow_csv(flow));
  nlohmann::json side = {{"T", flow.frames()}, {"n", flow.points()}, {"units", "m"}};
  if (calib != nullptr) side["calibration"] = {{"s", calib->scale}, {"b", calib->shift}};
  for (const auto& item : extra.items()) side[item.key()] = item.value();
  io::write_json(flow_sidecar_path(csv), side);
}

inline ObjectFlow3D read_flow(const std::string& path) {
  const auto rows = io::read_csv(path, "t,i,x,y,z,visible");
  long frames = 0, points = 0;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const std::string where = path + ":" + std::to_string(r + 2);
    if (rows[r].size() != 6) throw Error(ErrorKind::kValidation, where + ": expected 6 fields");
    const long t = io::parse_int(rows[r][0], where), i = io::parse_int(rows[r][1], where);
    if (t < 0 || i < 0) throw Error(ErrorKind::kValidation, where + ": negative index");
    frames = std::max(frames, t + 1);
    points = std::max(points, i + 1);
  }
  std::vector<PointSet3> pos(static_cast<std::size_t>(frames), PointSet3::Constant(3, points, std::numeric_limits<double>::quiet_NaN()));
  VisibilityMask vis = VisibilityMask::Constant(frames, points, false);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const std::string where = path + ":" + std::to_string(r + 2);
    const long t = io::parse_int(rows[r][0], where), i = io::parse_int(rows[r][1], where);
    const bool v = io::parse_bool(rows[r][5], where);
    if (v) {
      pos[static_cast<std::size_t>(t)].col(i) = Eigen::Vector3d(io::parse_double(rows[r][2], where),
                                                                io::parse_double(rows[r][3], where),
                                                                io::parse_double(rows[r][4], where));
      if (!pos[static_cast<std::size_t>(t)].col(i).allFinite()) {
        throw Error(ErrorKind::kValidation, where + ": visible entry with non-finite position");
      }
    }
    vis(t, i) = v;
  }
  return {std::move(pos), std::move(vis)};
}

/// Sidecar JSON next to a flow CSV, or an empty object when absent.
inline nlohmann::json read_flow_sidecar(const std::string& csv_path) {
  const auto side = flow_sidecar_path(csv_path);
  if (!std::filesystem::exists(side)) return nlohmann::json::object();
  return io::read_json(side.string());
}

}  // namespace objflow
