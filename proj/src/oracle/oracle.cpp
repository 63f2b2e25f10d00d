// Copyright (c) 2026 HybridSplat Authors
// SPDX-License-Identifier: Apache-2.0
#include "hsplat/oracle/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "hsplat/core/gaussian_math.hpp"
#include "hsplat/parallel.hpp"

namespace hsplat {

namespace {

Eigen::Matrix3d axis_angle_rotation(const Eigen::Vector3d& axis, double angle) {
  const double n = axis.norm();
  if (n < 1e-12 || std::abs(angle) < 1e-15) return Eigen::Matrix3d::Identity();
  const Eigen::Vector3d a = axis / n;
  const double c = std::cos(angle), s = std::sin(angle);
  Eigen::Matrix3d k;
  k << 0, -a.z(), a.y(), a.z(), 0, -a.x(), -a.y(), a.x(), 0;
  return Eigen::Matrix3d::Identity() + s * k + (1 - c) * k * k;
}

}  // namespace

Eigen::Vector3d OraclePrimitive::center_at(double t) const {
  switch (motion) {
    case MotionKind::none:
      return position;
    case MotionKind::linear:
      return position + velocity * t;
    case MotionKind::circular: {
      const Eigen::Matrix3d rot = axis_angle_rotation(orbit_axis, angular_speed * t);
      return orbit_center + rot * (position - orbit_center);
    }
  }
  return position;
}

void OracleSceneSpec::validate() const {
  if (trajectory.size() < 2) {
    throw std::invalid_argument("OracleSceneSpec: need at least 2 frames");
  }
  for (size_t i = 0; i < trajectory.size(); ++i) {
    trajectory[i].validate();
    if (trajectory[i].width != trajectory[0].width ||
        trajectory[i].height != trajectory[0].height) {
      throw std::invalid_argument("OracleSceneSpec: all frames must share one resolution");
    }
  }
  for (const OraclePrimitive& p : primitives) {
    const int dims = p.kind == PrimitiveKind::sphere ? 1 : (p.kind == PrimitiveKind::plane ? 2 : 3);
    for (int k = 0; k < dims; ++k) {
      if (!(p.size[k] > 0)) throw std::invalid_argument("OracleSceneSpec: primitive size must be > 0");
    }
    if (p.pattern == AlbedoPattern::checker && !(p.checker_period > 0)) {
      throw std::invalid_argument("OracleSceneSpec: checker period must be > 0");
    }
  }
  if (jitter.sigma_rot < 0 || jitter.sigma_trans < 0 || jitter.sigma_px < 0) {
    throw std::invalid_argument("OracleSceneSpec: jitter sigmas must be >= 0");
  }
  if (feature_dim < 6) {
    throw std::invalid_argument("OracleSceneSpec: feature_dim must be >= 6");
  }
}

namespace {

struct LocalRay {
  Eigen::Vector3d origin;
  Eigen::Vector3d dir;
};

// Intersection in the primitive's local frame; returns the smallest ray
// parameter > s_min, or +inf. The ray parameter equals camera depth because
// dir has unit camera-z.
double intersect_local(const OraclePrimitive& prim, const LocalRay& ray, double s_min,
                       Eigen::Vector3d* local_hit) {
  const double inf = std::numeric_limits<double>::infinity();
  switch (prim.kind) {
    case PrimitiveKind::sphere: {
      const double r = prim.size[0];
      const double a = ray.dir.squaredNorm();
      const double b = 2.0 * ray.origin.dot(ray.dir);
      const double c = ray.origin.squaredNorm() - r * r;
      const double disc = b * b - 4 * a * c;
      if (disc < 0) return inf;
      const double sq = std::sqrt(disc);
      for (double s : {(-b - sq) / (2 * a), (-b + sq) / (2 * a)}) {
        if (s > s_min) {
          *local_hit = ray.origin + s * ray.dir;
          return s;
        }
      }
      return inf;
    }
    case PrimitiveKind::plane: {
      if (std::abs(ray.dir.z()) < 1e-12) return inf;
      const double s = -ray.origin.z() / ray.dir.z();
      if (s <= s_min) return inf;
      const Eigen::Vector3d p = ray.origin + s * ray.dir;
      if (std::abs(p.x()) > prim.size[0] || std::abs(p.y()) > prim.size[1]) return inf;
      *local_hit = p;
      return s;
    }
    case PrimitiveKind::box: {
      double lo = s_min, hi = inf;
      for (int k = 0; k < 3; ++k) {
        const double h = prim.size[k];
        if (std::abs(ray.dir[k]) < 1e-12) {
          if (std::abs(ray.origin[k]) > h) return inf;
          continue;
        }
        double t0 = (-h - ray.origin[k]) / ray.dir[k];
        double t1 = (h - ray.origin[k]) / ray.dir[k];
        if (t0 > t1) std::swap(t0, t1);
        lo = std::max(lo, t0);
        hi = std::min(hi, t1);
        if (lo > hi) return inf;
      }
      if (!(lo < inf) || lo <= s_min) return inf;
      *local_hit = ray.origin + lo * ray.dir;
      return lo;
    }
  }
  return inf;
}

Eigen::Vector3d albedo_at(const OraclePrimitive& prim, const Eigen::Vector3d& local) {
  switch (prim.pattern) {
    case AlbedoPattern::solid:
      return prim.color_a;
    case AlbedoPattern::checker: {
      const double p = prim.checker_period;
      const long long parity = static_cast<long long>(std::floor(local.x() / p)) +
                               static_cast<long long>(std::floor(local.y() / p)) +
                               static_cast<long long>(std::floor(local.z() / p));
      return (parity % 2 + 2) % 2 == 0 ? prim.color_a : prim.color_b;
    }
    case AlbedoPattern::gradient: {
      const double span = prim.size[0];
      const double u = std::clamp((local.x() / span + 1.0) * 0.5, 0.0, 1.0);
      return (1 - u) * prim.color_a + u * prim.color_b;
    }
  }
  return prim.color_a;
}

bool camera_inside(const OraclePrimitive& prim, const Eigen::Vector3d& local) {
  switch (prim.kind) {
    case PrimitiveKind::sphere:
      return local.norm() < prim.size[0];
    case PrimitiveKind::box:
      return std::abs(local.x()) < prim.size[0] && std::abs(local.y()) < prim.size[1] &&
             std::abs(local.z()) < prim.size[2];
    case PrimitiveKind::plane:
      return false;
  }
  return false;
}

RayHit trace_world_ray(const OracleSceneSpec& spec, const Eigen::Vector3d& origin,
                       const Eigen::Vector3d& dir, double t) {
  RayHit best;
  double best_s = kFarPlane;
  for (size_t i = 0; i < spec.primitives.size(); ++i) {
    const OraclePrimitive& prim = spec.primitives[i];
    const Eigen::Matrix3d r = rotation_from_quaternion(prim.rotation);
    const Eigen::Vector3d c = prim.center_at(t);
    LocalRay local{r.transpose() * (origin - c), r.transpose() * dir};
    Eigen::Vector3d local_hit;
    const double s = intersect_local(prim, local, kNearPlane, &local_hit);
    if (s < best_s) {
      best_s = s;
      best.hit = true;
      best.depth = s;
      best.point = origin + s * dir;
      best.color = albedo_at(prim, local_hit);
      best.primitive = static_cast<int>(i);
    }
  }
  return best;
}

// splitmix64, used to hash primitive ids into feature channels.
std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

double id_hash_channel(int primitive, int channel) {
  if (primitive < 0) return 0.0;
  const std::uint64_t h =
      mix64((static_cast<std::uint64_t>(primitive) + 1) * 0x100000001B3ull + channel);
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

CameraPose perturb_pose(const CameraPose& pose, const JitterSpec& jitter, std::mt19937_64& rng) {
  if (jitter.sigma_rot <= 0 && jitter.sigma_trans <= 0) return pose;
  std::normal_distribution<double> nr(0.0, 1.0);
  Eigen::Vector3d w = Eigen::Vector3d::Zero(), dt = Eigen::Vector3d::Zero();
  if (jitter.sigma_rot > 0) w = jitter.sigma_rot * Eigen::Vector3d(nr(rng), nr(rng), nr(rng));
  if (jitter.sigma_trans > 0) dt = jitter.sigma_trans * Eigen::Vector3d(nr(rng), nr(rng), nr(rng));
  Eigen::Matrix4d delta = Eigen::Matrix4d::Identity();
  delta.topLeftCorner<3, 3>() = axis_angle_rotation(w, w.norm());
  delta.topRightCorner<3, 1>() = dt;
  CameraPose out = pose;
  out.world_to_cam = delta * pose.world_to_cam;
  return out;
}

struct FrameBuffers {
  ImageD color;
  ImageD point;
  Image<std::uint8_t> valid;
  std::vector<int> prim_id;  // -1 = background
};

FrameBuffers render_frame(const OracleSceneSpec& spec, const CameraPose& pose, double t) {
  const int w = pose.width, h = pose.height;
  FrameBuffers fb{ImageD(h, w, 3), ImageD(h, w, 3), Image<std::uint8_t>(h, w, 1),
                  std::vector<int>(static_cast<size_t>(w) * h, -1)};
  const Eigen::Matrix3d rt = pose.rotation().transpose();
  const Eigen::Vector3d origin = pose.center();
  const double qnan = std::numeric_limits<double>::quiet_NaN();
  for (int py = 0; py < h; ++py) {
    for (int px = 0; px < w; ++px) {
      const Eigen::Vector3d dir_cam((px - pose.cx) / pose.fx, (py - pose.cy) / pose.fy, 1.0);
      const RayHit hit = trace_world_ray(spec, origin, rt * dir_cam, t);
      for (int c = 0; c < 3; ++c) {
        fb.color.at(py, px, c) = hit.hit ? hit.color[c] : spec.background[c];
        fb.point.at(py, px, c) = hit.hit ? hit.point[c] : qnan;
      }
      fb.valid.at(py, px) = hit.hit ? 1 : 0;
      fb.prim_id[static_cast<size_t>(py) * w + px] = hit.primitive;
    }
  }
  return fb;
}

void apply_pixel_warp(FrameBuffers& fb, double sigma_px, std::mt19937_64& rng) {
  const int w = fb.color.width, h = fb.color.height;
  ImageD dx(h, w, 1), dy(h, w, 1);
  std::normal_distribution<double> nd(0.0, sigma_px);
  for (int py = 0; py < h; ++py) {
    for (int px = 0; px < w; ++px) {
      dx.at(py, px) = nd(rng);
      dy.at(py, px) = nd(rng);
    }
  }
  FrameBuffers out{ImageD(h, w, 3), ImageD(h, w, 3), Image<std::uint8_t>(h, w, 1),
                   std::vector<int>(fb.prim_id.size(), -1)};
  for (int py = 0; py < h; ++py) {
    for (int px = 0; px < w; ++px) {
      const double sx = px + dx.at(py, px), sy = py + dy.at(py, px);
      for (int c = 0; c < 3; ++c) out.color.at(py, px, c) = bilinear_sample(fb.color, sx, sy, c);
      const int nx = std::clamp(static_cast<int>(std::lround(sx)), 0, w - 1);
      const int ny = std::clamp(static_cast<int>(std::lround(sy)), 0, h - 1);
      for (int c = 0; c < 3; ++c) out.point.at(py, px, c) = fb.point.at(ny, nx, c);
      out.valid.at(py, px) = fb.valid.at(ny, nx);
      out.prim_id[static_cast<size_t>(py) * w + px] =
          fb.prim_id[static_cast<size_t>(ny) * w + nx];
    }
  }
  fb = std::move(out);
}

ImageD build_featmap(const FrameBuffers& fb, int feature_dim) {
  const int w = fb.color.width, h = fb.color.height;
  ImageD feat(h, w, feature_dim);
  auto mean_at = [&](int py, int px) {
    py = std::clamp(py, 0, h - 1);
    px = std::clamp(px, 0, w - 1);
    return (fb.color.at(py, px, 0) + fb.color.at(py, px, 1) + fb.color.at(py, px, 2)) / 3.0;
  };
  for (int py = 0; py < h; ++py) {
    for (int px = 0; px < w; ++px) {
      for (int c = 0; c < 3; ++c) feat.at(py, px, c) = fb.color.at(py, px, c);
      const double gx = 0.5 * (mean_at(py, px + 1) - mean_at(py, px - 1));
      const double gy = 0.5 * (mean_at(py + 1, px) - mean_at(py - 1, px));
      feat.at(py, px, 3) = std::min(1.0, std::sqrt(gx * gx + gy * gy));
      feat.at(py, px, 4) = w > 1 ? static_cast<double>(px) / (w - 1) : 0.0;
      feat.at(py, px, 5) = h > 1 ? static_cast<double>(py) / (h - 1) : 0.0;
      const int id = fb.prim_id[static_cast<size_t>(py) * w + px];
      for (int c = 6; c < feature_dim; ++c) feat.at(py, px, c) = id_hash_channel(id, c - 6);
    }
  }
  return feat;
}

double scene_scale_from_pointmap(const ImageD& point, const Image<std::uint8_t>& valid) {
  std::vector<Eigen::Vector3d> pts;
  for (int py = 0; py < point.height; py += 2) {
    for (int px = 0; px < point.width; px += 2) {
      if (valid.at(py, px)) {
        pts.emplace_back(point.at(py, px, 0), point.at(py, px, 1), point.at(py, px, 2));
      }
    }
  }
  if (pts.empty()) return 1.0;
  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
  for (const auto& p : pts) centroid += p;
  centroid /= static_cast<double>(pts.size());
  std::vector<double> d;
  d.reserve(pts.size());
  for (const auto& p : pts) d.push_back((p - centroid).norm());
  std::nth_element(d.begin(), d.begin() + d.size() / 2, d.end());
  const double scale = d[d.size() / 2];
  return scale > 1e-9 ? scale : 1.0;
}

}  // namespace

RayHit trace_ray(const OracleSceneSpec& spec, const CameraPose& pose, double t, double px,
                 double py) {
  const Eigen::Vector3d dir_cam((px - pose.cx) / pose.fx, (py - pose.cy) / pose.fy, 1.0);
  return trace_world_ray(spec, pose.center(), pose.rotation().transpose() * dir_cam, t);
}

ReferenceBundle generate_bundle(const OracleSceneSpec& spec, std::uint64_t seed) {
  spec.validate();

  // The ego must stay outside every primitive at every frame time.
  for (size_t f = 0; f < spec.trajectory.size(); ++f) {
    const Eigen::Vector3d c = spec.trajectory[f].center();
    for (const OraclePrimitive& prim : spec.primitives) {
      const Eigen::Matrix3d r = rotation_from_quaternion(prim.rotation);
      const Eigen::Vector3d local = r.transpose() * (c - prim.center_at(static_cast<double>(f)));
      if (camera_inside(prim, local)) {
        throw std::invalid_argument("generate_bundle: camera inside a primitive at frame " +
                                    std::to_string(f));
      }
    }
  }

  ReferenceBundle bundle;
  bundle.feature_dim = spec.feature_dim;
  bundle.background = spec.background;
  bundle.frames.resize(spec.trajectory.size());

  parallel_for(static_cast<std::int64_t>(spec.trajectory.size()), [&](std::int64_t f) {
    const double t = static_cast<double>(f);
    CameraPose nominal = spec.trajectory[static_cast<size_t>(f)];
    nominal.timestamp_index = static_cast<int>(f);

    std::mt19937_64 rng(mix64(seed ^ mix64(static_cast<std::uint64_t>(f) + 1)));
    const bool rigid = spec.jitter.sigma_rot > 0 || spec.jitter.sigma_trans > 0;
    const CameraPose render_pose = rigid ? perturb_pose(nominal, spec.jitter, rng) : nominal;

    FrameBuffers fb = render_frame(spec, render_pose, t);
    if (spec.jitter.sigma_px > 0) apply_pixel_warp(fb, spec.jitter.sigma_px, rng);

    Frame& frame = bundle.frames[static_cast<size_t>(f)];
    frame.pose = nominal;
    frame.featmap = build_featmap(fb, spec.feature_dim);
    frame.image = std::move(fb.color);
    frame.pointmap = fb.point;
    frame.validity = fb.valid;

    // Ground truth stays nominal: mask pixels are dynamic-primitive hits under
    // the unperturbed pose.
    const FrameBuffers truth =
        rigid || spec.jitter.sigma_px > 0 ? render_frame(spec, nominal, t) : std::move(fb);
    Image<std::uint8_t> mask(nominal.height, nominal.width, 1);
    for (size_t i = 0; i < truth.prim_id.size(); ++i) {
      const int id = truth.prim_id[i];
      mask.data[i] = (id >= 0 && spec.primitives[static_cast<size_t>(id)].dynamic()) ? 1 : 0;
    }
    frame.dyn_mask = std::move(mask);
  });

  bundle.scene_scale_hint =
      scene_scale_from_pointmap(bundle.frames[0].pointmap, bundle.frames[0].validity);
  bundle.validate();
  return bundle;
}

namespace {

nlohmann::json vec_to_json(const Eigen::Vector3d& v) { return {v[0], v[1], v[2]}; }
nlohmann::json quat_to_json(const Eigen::Vector4d& v) { return {v[0], v[1], v[2], v[3]}; }

Eigen::Vector3d vec_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 3) throw std::invalid_argument("expected 3-vector");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

Eigen::Vector4d quat_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 4) throw std::invalid_argument("expected 4-vector");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
}

const char* kind_name(PrimitiveKind k) {
  switch (k) {
    case PrimitiveKind::plane: return "plane";
    case PrimitiveKind::box: return "box";
    case PrimitiveKind::sphere: return "sphere";
  }
  return "sphere";
}

const char* pattern_name(AlbedoPattern p) {
  switch (p) {
    case AlbedoPattern::solid: return "solid";
    case AlbedoPattern::checker: return "checker";
    case AlbedoPattern::gradient: return "gradient";
  }
  return "solid";
}

const char* motion_name(MotionKind m) {
  switch (m) {
    case MotionKind::none: return "none";
    case MotionKind::linear: return "linear";
    case MotionKind::circular: return "circular";
  }
  return "none";
}

}  // namespace

std::string spec_to_json(const OracleSceneSpec& spec) {
  nlohmann::json j;
  j["background"] = vec_to_json(spec.background);
  j["feature_dim"] = spec.feature_dim;
  j["jitter"] = {{"sigma_rot", spec.jitter.sigma_rot},
                 {"sigma_trans", spec.jitter.sigma_trans},
                 {"sigma_px", spec.jitter.sigma_px}};
  j["primitives"] = nlohmann::json::array();
  for (const OraclePrimitive& p : spec.primitives) {
    nlohmann::json pj;
    pj["kind"] = kind_name(p.kind);
    pj["position"] = vec_to_json(p.position);
    pj["rotation"] = quat_to_json(p.rotation);
    pj["size"] = vec_to_json(p.size);
    pj["pattern"] = pattern_name(p.pattern);
    pj["color_a"] = vec_to_json(p.color_a);
    pj["color_b"] = vec_to_json(p.color_b);
    pj["checker_period"] = p.checker_period;
    pj["motion"] = motion_name(p.motion);
    pj["velocity"] = vec_to_json(p.velocity);
    pj["orbit_center"] = vec_to_json(p.orbit_center);
    pj["orbit_axis"] = vec_to_json(p.orbit_axis);
    pj["angular_speed"] = p.angular_speed;
    j["primitives"].push_back(pj);
  }
  j["trajectory"] = nlohmann::json::array();
  for (const CameraPose& pose : spec.trajectory) {
    nlohmann::json tj;
    tj["fx"] = pose.fx;
    tj["fy"] = pose.fy;
    tj["cx"] = pose.cx;
    tj["cy"] = pose.cy;
    tj["width"] = pose.width;
    tj["height"] = pose.height;
    std::vector<double> m(16);
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c) m[static_cast<size_t>(r) * 4 + c] = pose.world_to_cam(r, c);
    tj["world_to_cam"] = m;
    tj["t"] = pose.timestamp_index;
    j["trajectory"].push_back(tj);
  }
  return j.dump(2);
}

OracleSceneSpec spec_from_json(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(std::string("scene spec: invalid JSON: ") + e.what());
  }
  try {
    OracleSceneSpec spec;
    if (j.contains("background")) spec.background = vec_from_json(j["background"]);
    spec.feature_dim = j.value("feature_dim", 8);
    if (j.contains("jitter")) {
      spec.jitter.sigma_rot = j["jitter"].value("sigma_rot", 0.0);
      spec.jitter.sigma_trans = j["jitter"].value("sigma_trans", 0.0);
      spec.jitter.sigma_px = j["jitter"].value("sigma_px", 0.0);
    }
    for (const auto& pj : j.value("primitives", nlohmann::json::array())) {
      OraclePrimitive p;
      const std::string kind = pj.value("kind", "sphere");
      if (kind == "plane") p.kind = PrimitiveKind::plane;
      else if (kind == "box") p.kind = PrimitiveKind::box;
      else if (kind == "sphere") p.kind = PrimitiveKind::sphere;
      else throw std::invalid_argument("scene spec: unknown primitive kind " + kind);
      if (pj.contains("position")) p.position = vec_from_json(pj["position"]);
      if (pj.contains("rotation")) p.rotation = quat_from_json(pj["rotation"]);
      if (pj.contains("size")) p.size = vec_from_json(pj["size"]);
      const std::string pattern = pj.value("pattern", "solid");
      if (pattern == "solid") p.pattern = AlbedoPattern::solid;
      else if (pattern == "checker") p.pattern = AlbedoPattern::checker;
      else if (pattern == "gradient") p.pattern = AlbedoPattern::gradient;
      else throw std::invalid_argument("scene spec: unknown pattern " + pattern);
      if (pj.contains("color_a")) p.color_a = vec_from_json(pj["color_a"]);
      if (pj.contains("color_b")) p.color_b = vec_from_json(pj["color_b"]);
      p.checker_period = pj.value("checker_period", 0.5);
      const std::string motion = pj.value("motion", "none");
      if (motion == "none") p.motion = MotionKind::none;
      else if (motion == "linear") p.motion = MotionKind::linear;
      else if (motion == "circular") p.motion = MotionKind::circular;
      else throw std::invalid_argument("scene spec: unknown motion " + motion);
      if (pj.contains("velocity")) p.velocity = vec_from_json(pj["velocity"]);
      if (pj.contains("orbit_center")) p.orbit_center = vec_from_json(pj["orbit_center"]);
      if (pj.contains("orbit_axis")) p.orbit_axis = vec_from_json(pj["orbit_axis"]);
      p.angular_speed = pj.value("angular_speed", 0.0);
      spec.primitives.push_back(p);
    }
    for (const auto& tj : j.value("trajectory", nlohmann::json::array())) {
      CameraPose pose;
      pose.fx = tj.at("fx").get<double>();
      pose.fy = tj.at("fy").get<double>();
      pose.cx = tj.at("cx").get<double>();
      pose.cy = tj.at("cy").get<double>();
      pose.width = tj.at("width").get<int>();
      pose.height = tj.at("height").get<int>();
      const auto& m = tj.at("world_to_cam");
      if (!m.is_array() || m.size() != 16) {
        throw std::invalid_argument("scene spec: world_to_cam must hold 16 values");
      }
      for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c)
          pose.world_to_cam(r, c) = m[static_cast<size_t>(r) * 4 + c].get<double>();
      pose.timestamp_index = tj.value("t", static_cast<int>(spec.trajectory.size()));
      spec.trajectory.push_back(pose);
    }
    spec.validate();
    return spec;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("scene spec: ") + e.what());
  }
}

}  // namespace hsplat
