#pragma once

#include <cctype>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "objflow/depthflow/io.hpp"

namespace objflow::pipeline {

struct ValidationReport {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};

namespace detail {

// Frames with no file in a sequence named <prefix><digits>.<ext>, each reported
// under the name the missing file would carry.
inline std::vector<std::string> missing_sequence_files(const std::vector<std::string>& files, Eigen::Index frames) {
  namespace fs = std::filesystem;
  if (files.empty()) return {};
  std::vector<bool> seen(static_cast<std::size_t>(frames), false);
  std::string prefix, ext;
  std::size_t width = 0;
  fs::path dir;
  for (const auto& f : files) {
    const fs::path p(f);
    const std::string stem = p.stem().string();
    std::size_t k = stem.size();
    while (k > 0 && std::isdigit(static_cast<unsigned char>(stem[k - 1]))) --k;
    if (k == stem.size()) return {};
    if (prefix.empty() && width == 0) {
      prefix = stem.substr(0, k);
      width = stem.size() - k;
      ext = p.extension().string();
      dir = p.parent_path();
    } else if (stem.substr(0, k) != prefix) {
      return {};
    }
    const long idx = std::stol(stem.substr(k));
    if (idx >= 0 && idx < frames) seen[static_cast<std::size_t>(idx)] = true;
  }
  std::vector<std::string> out;
  for (Eigen::Index t = 0; t < frames; ++t) {
    if (seen[static_cast<std::size_t>(t)]) continue;
    std::string digits = std::to_string(t);
    if (digits.size() < width) digits.insert(0, width - digits.size(), '0');
    out.push_back((dir / (prefix + digits + ext)).string());
  }
  return out;
}

}  // namespace detail

/// Check a bundle on disk without stopping at the first problem: file
/// presence, depth magic and sizes, resolutions against the camera, frame
/// counts, track bounds and visibility shape.
inline ValidationReport validate_bundle(const std::string& manifest_path) {
  ValidationReport r;
  const auto note = [&](const std::string& s) { r.violations.push_back(s); };
  BundlePaths paths;
  try {
    paths = read_bundle_manifest(manifest_path);
  } catch (const Error& e) {
    note(e.what());
    return r;
  }

  std::optional<CameraModel> cam;
  try {
    cam = load_camera(paths.camera);
  } catch (const Error& e) {
    note(e.what());
  }
  const auto size_str = [](Eigen::Index w, Eigen::Index h) { return std::to_string(w) + "x" + std::to_string(h); };
  const auto check_size = [&](const std::string& file, Eigen::Index rows, Eigen::Index cols) {
    if (cam && (rows != cam->height() || cols != cam->width())) {
      note(file + ": resolution " + size_str(cols, rows) + " differs from camera " + size_str(cam->width(), cam->height()));
    }
  };
  const auto depth_file = [&](const std::string& file) -> std::optional<DepthMap> {
    try {
      DepthMap d = read_depth_map(file);
      check_size(file, d.rows(), d.cols());
      return d;
    } catch (const Error& e) {
      note(e.what());
      return std::nullopt;
    }
  };

  depth_file(paths.ref_depth);
  depth_file(paths.object_mask);
  std::optional<std::vector<std::string>> depth_files;
  try {
    const auto files = list_depth_files(paths.depth_dir);
    depth_files = files;
    for (const auto& f : files) depth_file(f);
  } catch (const Error& e) {
    note(e.what());
  }
  std::optional<std::size_t> mask_count;
  if (!paths.part_mask_dir.empty()) {
    try {
      const auto files = list_depth_files(paths.part_mask_dir);
      mask_count = files.size();
      for (const auto& f : files) depth_file(f);
    } catch (const Error& e) {
      note(e.what());
    }
  }

  try {
    Tracks2D tracks = read_tracks(paths.tracks);
    if (!paths.visibility.empty()) {
      try {
        apply_visibility_file(tracks, paths.visibility);
      } catch (const Error& e) {
        note(e.what());
      }
    }
    if (tracks.frames() == 0 || tracks.points() == 0) note(paths.tracks + ": no tracks");
    if (depth_files && static_cast<Eigen::Index>(depth_files->size()) != tracks.frames()) {
      note(paths.depth_dir + ": " + std::to_string(depth_files->size()) + " depth maps for " + std::to_string(tracks.frames()) + " frames");
      for (const auto& f : detail::missing_sequence_files(*depth_files, tracks.frames())) note(f + ": missing depth map");
    }
    if (mask_count && static_cast<Eigen::Index>(*mask_count) != tracks.frames()) {
      note(paths.part_mask_dir + ": " + std::to_string(*mask_count) + " part masks for " + std::to_string(tracks.frames()) + " frames");
    }
    if (tracks.frames() > 0 && !tracks.visible.row(0).any()) note(paths.tracks + ": no visible point in the first frame");
    if (cam) {
      for (Eigen::Index t = 0; t < tracks.frames(); ++t) {
        for (Eigen::Index i = 0; i < tracks.points(); ++i) {
          if (tracks.visible(t, i) && !cam->in_bounds(tracks.uv[t].col(i))) {
            std::ostringstream os;
            os << paths.tracks << ": visible track outside image at (t=" << t << ", i=" << i << "), pixel ("
               << io::format_double(tracks.uv[t](0, i)) << ", " << io::format_double(tracks.uv[t](1, i)) << ")";
            note(os.str());
          }
        }
      }
    }
  } catch (const Error& e) {
    note(e.what());
  }
  return r;
}

}  // namespace objflow::pipeline
