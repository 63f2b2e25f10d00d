// Copyright (c) 2026 HybridSplat Authors
// SPDX-License-Identifier: Apache-2.0
#include "hsplat/io/bundle_io.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "hsplat/io/pfm.hpp"
#include "hsplat/io/png_io.hpp"

namespace hsplat {

namespace {

constexpr int kBundleFormatVersion = 1;

std::string frame_name(int i, const char* ext) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d.%s", i, ext);
  return buf;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("missing file: " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Fallback features when a bundle ships no feature maps: RGB, gradient
// magnitude, normalized pixel coordinates, zero padding. Mirrors the leading
// channels of oracle feature maps so downstream consumers see one layout.
ImageD features_from_rgb(const ImageD& image, int feature_dim) {
  const int w = image.width, h = image.height;
  ImageD feat(h, w, feature_dim);
  auto mean_at = [&](int py, int px) {
    py = py < 0 ? 0 : (py >= h ? h - 1 : py);
    px = px < 0 ? 0 : (px >= w ? w - 1 : px);
    return (image.at(py, px, 0) + image.at(py, px, 1) + image.at(py, px, 2)) / 3.0;
  };
  for (int py = 0; py < h; ++py) {
    for (int px = 0; px < w; ++px) {
      for (int c = 0; c < 3 && c < feature_dim; ++c) feat.at(py, px, c) = image.at(py, px, c);
      if (feature_dim > 3) {
        const double gx = 0.5 * (mean_at(py, px + 1) - mean_at(py, px - 1));
        const double gy = 0.5 * (mean_at(py + 1, px) - mean_at(py - 1, px));
        feat.at(py, px, 3) = std::min(1.0, std::sqrt(gx * gx + gy * gy));
      }
      if (feature_dim > 4) feat.at(py, px, 4) = w > 1 ? static_cast<double>(px) / (w - 1) : 0.0;
      if (feature_dim > 5) feat.at(py, px, 5) = h > 1 ? static_cast<double>(py) / (h - 1) : 0.0;
    }
  }
  return feat;
}

}  // namespace

void write_bundle(const ReferenceBundle& bundle, const std::string& dir) {
  bundle.validate();
  namespace fs = std::filesystem;
  fs::create_directories(fs::path(dir) / "frames");
  fs::create_directories(fs::path(dir) / "pointmaps");
  fs::create_directories(fs::path(dir) / "featmaps");
  bool any_mask = false;
  for (const Frame& f : bundle.frames) any_mask = any_mask || f.dyn_mask.has_value();
  if (any_mask) fs::create_directories(fs::path(dir) / "masks");

  nlohmann::json poses = nlohmann::json::array();
  for (int i = 0; i < bundle.frame_count(); ++i) {
    const Frame& frame = bundle.frames[static_cast<size_t>(i)];
    write_png((fs::path(dir) / "frames" / frame_name(i, "png")).string(),
              quantize_u8(frame.image));
    write_pfm((fs::path(dir) / "pointmaps" / frame_name(i, "pfm")).string(), frame.pointmap);
    write_pfm_planar((fs::path(dir) / "featmaps" / frame_name(i, "pfm")).string(),
                     frame.featmap);
    if (frame.dyn_mask) {
      ImageU8 mask(frame.dyn_mask->height, frame.dyn_mask->width, 1);
      for (size_t k = 0; k < mask.data.size(); ++k) {
        mask.data[k] = frame.dyn_mask->data[k] ? 255 : 0;
      }
      write_png((fs::path(dir) / "masks" / frame_name(i, "png")).string(), mask);
    }
    nlohmann::json pj;
    pj["fx"] = frame.pose.fx;
    pj["fy"] = frame.pose.fy;
    pj["cx"] = frame.pose.cx;
    pj["cy"] = frame.pose.cy;
    pj["width"] = frame.pose.width;
    pj["height"] = frame.pose.height;
    std::vector<double> m(16);
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c) m[static_cast<size_t>(r) * 4 + c] = frame.pose.world_to_cam(r, c);
    pj["world_to_cam"] = m;
    pj["t"] = frame.pose.timestamp_index;
    poses.push_back(pj);
  }
  write_text((fs::path(dir) / "poses.json").string(), poses.dump(2));

  nlohmann::json meta;
  meta["format_version"] = kBundleFormatVersion;
  meta["feature_dim"] = bundle.feature_dim;
  meta["scene_scale_hint"] = bundle.scene_scale_hint;
  meta["background"] = {bundle.background[0], bundle.background[1], bundle.background[2]};
  write_text((fs::path(dir) / "meta.json").string(), meta.dump(2));
}

ReferenceBundle ingest_bundle(const std::string& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) {
    throw std::invalid_argument("ingest_bundle: not a directory: " + dir);
  }

  nlohmann::json meta, poses;
  try {
    meta = nlohmann::json::parse(read_text((fs::path(dir) / "meta.json").string()));
    poses = nlohmann::json::parse(read_text((fs::path(dir) / "poses.json").string()));
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(std::string("ingest_bundle: invalid JSON: ") + e.what());
  }
  const int version = meta.value("format_version", -1);
  if (version != kBundleFormatVersion) {
    throw std::invalid_argument("ingest_bundle: unsupported format_version " +
                                std::to_string(version));
  }
  if (!poses.is_array() || poses.empty()) {
    throw std::invalid_argument("ingest_bundle: poses.json must be a non-empty array");
  }

  ReferenceBundle bundle;
  bundle.feature_dim = meta.value("feature_dim", 0);
  bundle.scene_scale_hint = meta.value("scene_scale_hint", 0.0);
  if (meta.contains("background")) {
    const auto& bg = meta["background"];
    if (!bg.is_array() || bg.size() != 3) {
      throw std::invalid_argument("ingest_bundle: background must be a 3-array");
    }
    for (int c = 0; c < 3; ++c) bundle.background[c] = bg[static_cast<size_t>(c)].get<double>();
  }

  const int count = static_cast<int>(poses.size());
  for (int i = 0; i < count; ++i) {
    const std::string tag = "frame " + std::to_string(i);
    Frame frame;
    try {
      const auto& pj = poses[static_cast<size_t>(i)];
      frame.pose.fx = pj.at("fx").get<double>();
      frame.pose.fy = pj.at("fy").get<double>();
      frame.pose.cx = pj.at("cx").get<double>();
      frame.pose.cy = pj.at("cy").get<double>();
      frame.pose.width = pj.at("width").get<int>();
      frame.pose.height = pj.at("height").get<int>();
      const auto& m = pj.at("world_to_cam");
      if (!m.is_array() || m.size() != 16) {
        throw std::invalid_argument("world_to_cam must hold 16 values");
      }
      for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c)
          frame.pose.world_to_cam(r, c) = m[static_cast<size_t>(r) * 4 + c].get<double>();
      frame.pose.timestamp_index = pj.at("t").get<int>();
    } catch (const nlohmann::json::exception& e) {
      throw std::invalid_argument("ingest_bundle: bad pose for " + tag + ": " + e.what());
    }

    const std::string img_path = (fs::path(dir) / "frames" / frame_name(i, "png")).string();
    if (!fs::exists(img_path)) {
      throw std::invalid_argument("ingest_bundle: missing image for " + tag + ": " + img_path);
    }
    const ImageU8 png = read_png(img_path);
    if (png.channels != 3) {
      throw std::invalid_argument("ingest_bundle: " + tag + " image must be RGB");
    }
    frame.image = dequantize_u8(png);
    if (frame.image.width != frame.pose.width || frame.image.height != frame.pose.height) {
      throw std::invalid_argument("ingest_bundle: " + tag + " image size disagrees with pose");
    }

    const std::string pm_path = (fs::path(dir) / "pointmaps" / frame_name(i, "pfm")).string();
    if (!fs::exists(pm_path)) {
      throw std::invalid_argument("ingest_bundle: missing pointmap for " + tag);
    }
    frame.pointmap = read_pfm(pm_path);
    if (frame.pointmap.channels != 3 || frame.pointmap.width != frame.pose.width ||
        frame.pointmap.height != frame.pose.height) {
      throw std::invalid_argument("ingest_bundle: " + tag + " pointmap shape mismatch");
    }
    frame.validity = Image<std::uint8_t>(frame.pointmap.height, frame.pointmap.width, 1);
    for (int y = 0; y < frame.pointmap.height; ++y) {
      for (int x = 0; x < frame.pointmap.width; ++x) {
        int finite = 0, nan = 0;
        for (int c = 0; c < 3; ++c) {
          const double v = frame.pointmap.at(y, x, c);
          if (std::isfinite(v)) ++finite;
          else if (std::isnan(v)) ++nan;
          else
            throw std::invalid_argument("ingest_bundle: " + tag +
                                        " pointmap holds an infinite value");
        }
        if (finite != 0 && finite != 3) {
          throw std::invalid_argument("ingest_bundle: " + tag +
                                      " pointmap mixes NaN and finite channels in one pixel");
        }
        frame.validity.at(y, x) = finite == 3 ? 1 : 0;
      }
    }

    const std::string fm_path = (fs::path(dir) / "featmaps" / frame_name(i, "pfm")).string();
    if (fs::exists(fm_path)) {
      if (bundle.feature_dim < 1) {
        throw std::invalid_argument("ingest_bundle: feat maps present but meta feature_dim < 1");
      }
      frame.featmap = read_pfm_planar(fm_path, bundle.feature_dim);
      if (frame.featmap.width != frame.pose.width || frame.featmap.height != frame.pose.height) {
        throw std::invalid_argument("ingest_bundle: " + tag + " featmap shape mismatch");
      }
    } else {
      if (bundle.feature_dim < 1) bundle.feature_dim = 8;
      frame.featmap = features_from_rgb(frame.image, bundle.feature_dim);
      bundle.fallback_features = true;
    }

    const std::string mask_path = (fs::path(dir) / "masks" / frame_name(i, "png")).string();
    if (fs::exists(mask_path)) {
      const ImageU8 mask = read_png(mask_path);
      if (mask.channels != 1 || mask.width != frame.pose.width ||
          mask.height != frame.pose.height) {
        throw std::invalid_argument("ingest_bundle: " + tag + " mask shape mismatch");
      }
      Image<std::uint8_t> bin(mask.height, mask.width, 1);
      for (size_t k = 0; k < mask.data.size(); ++k) bin.data[k] = mask.data[k] >= 128 ? 1 : 0;
      frame.dyn_mask = std::move(bin);
    }

    bundle.frames.push_back(std::move(frame));
  }

  bundle.validate();
  return bundle;
}

}  // namespace hsplat
