// Copyright (c) 2026 HybridSplat Authors
// SPDX-License-Identifier: Apache-2.0
#include "hsplat/pipeline/scene_io.hpp"

#include <array>
#include <cstring>
#include <fstream>
#include <map>
#include <stdexcept>
#include <vector>

#include <nlohmann/json.hpp>

namespace hsplat {
namespace {

constexpr std::uint32_t kSectionStatic = 1;
constexpr std::uint32_t kSectionDynamic = 2;
constexpr std::uint32_t kSectionDeform = 3;
constexpr std::uint32_t kSectionMeta = 4;
constexpr std::uint32_t kSectionClusters = 5;

// Reflected CRC-64 (polynomial 0x42F0E1EBA9EA3693), init and final xor all
// ones.
std::uint64_t crc64(const std::uint8_t* data, size_t n) {
  static const std::array<std::uint64_t, 256> table = [] {
    std::array<std::uint64_t, 256> t{};
    constexpr std::uint64_t poly = 0xC96C5795D7870F42ull;
    for (std::uint32_t i = 0; i < 256; ++i) {
      std::uint64_t crc = i;
      for (int b = 0; b < 8; ++b) crc = (crc >> 1) ^ (crc & 1 ? poly : 0);
      t[i] = crc;
    }
    return t;
  }();
  std::uint64_t crc = ~0ull;
  for (size_t i = 0; i < n; ++i) {
    crc = table[(crc ^ data[i]) & 0xFF] ^ (crc >> 8);
  }
  return ~crc;
}

struct Writer {
  std::vector<std::uint8_t> buf;

  void raw(const void* p, size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    buf.insert(buf.end(), b, b + n);
  }
  void u32(std::uint32_t v) { raw(&v, 4); }
  void u64(std::uint64_t v) { raw(&v, 8); }
  void i32(std::int32_t v) { raw(&v, 4); }
  void f64(double v) { raw(&v, 8); }
};

struct Reader {
  const std::uint8_t* data;
  size_t size;
  size_t pos = 0;

  void need(size_t n) const {
    if (pos + n > size) throw std::invalid_argument("scene file truncated");
  }
  void raw(void* p, size_t n) {
    need(n);
    std::memcpy(p, data + pos, n);
    pos += n;
  }
  std::uint32_t u32() { std::uint32_t v; raw(&v, 4); return v; }
  std::uint64_t u64() { std::uint64_t v; raw(&v, 8); return v; }
  std::int32_t i32() { std::int32_t v; raw(&v, 4); return v; }
  double f64() { double v; raw(&v, 8); return v; }
  bool done() const { return pos == size; }
};

void write_gaussians(Writer& w, const std::vector<Gaussian3D>& gaussians) {
  size_t sh_coeffs = 0, feature_dim = 0;
  if (!gaussians.empty()) {
    sh_coeffs = gaussians[0].sh_coeffs.size();
    feature_dim = static_cast<size_t>(gaussians[0].feature.size());
  }
  for (const Gaussian3D& g : gaussians) {
    if (g.sh_coeffs.size() != sh_coeffs ||
        static_cast<size_t>(g.feature.size()) != feature_dim) {
      throw std::invalid_argument("save_scene: mixed per-Gaussian dimensions");
    }
  }
  w.u64(gaussians.size());
  w.u32(static_cast<std::uint32_t>(sh_coeffs));
  w.u32(static_cast<std::uint32_t>(feature_dim));
  for (const Gaussian3D& g : gaussians) {
    for (int c = 0; c < 3; ++c) w.f64(g.position[c]);
    for (int c = 0; c < 4; ++c) w.f64(g.rotation[c]);
    for (int c = 0; c < 3; ++c) w.f64(g.log_scale[c]);
    w.f64(g.opacity_logit);
    for (const Eigen::Vector3d& sh : g.sh_coeffs)
      for (int c = 0; c < 3; ++c) w.f64(sh[c]);
    for (Eigen::Index c = 0; c < g.feature.size(); ++c) w.f64(g.feature[c]);
    w.f64(g.dynamic_score);
  }
}

std::vector<Gaussian3D> read_gaussians(Reader& r) {
  const std::uint64_t count = r.u64();
  const std::uint32_t sh_coeffs = r.u32();
  const std::uint32_t feature_dim = r.u32();
  if (sh_coeffs > 4096 || feature_dim > 65536) {
    throw std::invalid_argument("scene file corrupt (per-Gaussian dimensions)");
  }
  const std::uint64_t per_gaussian = (12ull + 3ull * sh_coeffs + feature_dim) * 8ull;
  if (count > (r.size - r.pos) / per_gaussian + 1) {
    throw std::invalid_argument("scene file truncated");
  }
  std::vector<Gaussian3D> gaussians(count);
  for (Gaussian3D& g : gaussians) {
    for (int c = 0; c < 3; ++c) g.position[c] = r.f64();
    for (int c = 0; c < 4; ++c) g.rotation[c] = r.f64();
    for (int c = 0; c < 3; ++c) g.log_scale[c] = r.f64();
    g.opacity_logit = r.f64();
    g.sh_coeffs.resize(sh_coeffs);
    for (Eigen::Vector3d& sh : g.sh_coeffs)
      for (int c = 0; c < 3; ++c) sh[c] = r.f64();
    g.feature.resize(feature_dim);
    for (std::uint32_t c = 0; c < feature_dim; ++c) g.feature[c] = r.f64();
    g.dynamic_score = r.f64();
  }
  if (!r.done()) throw std::invalid_argument("scene file corrupt (oversized section)");
  return gaussians;
}

void write_deform(Writer& w, const DeformationField& field) {
  w.u32(static_cast<std::uint32_t>(field.spec.input_dim));
  w.u32(static_cast<std::uint32_t>(field.spec.output_dim));
  w.u32(static_cast<std::uint32_t>(field.spec.hidden_dims.size()));
  for (int h : field.spec.hidden_dims) w.u32(static_cast<std::uint32_t>(h));
  w.i32(field.pos_freqs);
  w.i32(field.time_freqs);
  w.f64(field.scene_scale);
  w.f64(field.time_scale);
  const Eigen::VectorXd flat = field.params.flatten();
  w.u64(static_cast<std::uint64_t>(flat.size()));
  for (Eigen::Index i = 0; i < flat.size(); ++i) w.f64(flat[i]);
}

DeformationField read_deform(Reader& r) {
  DeformationField field;
  field.spec.input_dim = static_cast<int>(r.u32());
  field.spec.output_dim = static_cast<int>(r.u32());
  const std::uint32_t hidden_count = r.u32();
  if (hidden_count > 1024) throw std::invalid_argument("scene file corrupt (layer count)");
  field.spec.hidden_dims.resize(hidden_count);
  for (std::uint32_t i = 0; i < hidden_count; ++i) {
    field.spec.hidden_dims[i] = static_cast<int>(r.u32());
  }
  field.pos_freqs = r.i32();
  field.time_freqs = r.i32();
  field.scene_scale = r.f64();
  field.time_scale = r.f64();
  const std::uint64_t param_count = r.u64();
  if (param_count > (r.size - r.pos) / 8) throw std::invalid_argument("scene file truncated");
  Eigen::VectorXd flat(static_cast<Eigen::Index>(param_count));
  for (std::uint64_t i = 0; i < param_count; ++i) flat[static_cast<Eigen::Index>(i)] = r.f64();
  if (!r.done()) throw std::invalid_argument("scene file corrupt (oversized section)");
  try {
    field.spec.validate();
    field.params = unflatten_mlp(field.spec, flat);
  } catch (const std::exception& e) {
    throw std::invalid_argument(std::string("scene file corrupt (deformation): ") + e.what());
  }
  field.validate();
  return field;
}

void write_cluster_ids(Writer& w, const std::vector<int>& static_ids,
                       const std::vector<int>& dynamic_ids) {
  w.u64(static_ids.size());
  for (int id : static_ids) w.i32(id);
  w.u64(dynamic_ids.size());
  for (int id : dynamic_ids) w.i32(id);
}

std::vector<int> read_id_array(Reader& r) {
  const std::uint64_t count = r.u64();
  if (count > (r.size - r.pos) / 4) throw std::invalid_argument("scene file truncated");
  std::vector<int> ids(count);
  for (std::uint64_t i = 0; i < count; ++i) ids[i] = r.i32();
  return ids;
}

}  // namespace

void save_scene(const HybridScene& scene, const std::string& path) {
  scene.validate();

  Writer out;
  out.raw("HSPL", 4);
  out.u32(kSceneFormatVersion);

  const auto section = [&out](std::uint32_t id, const Writer& payload) {
    out.u32(id);
    out.u64(payload.buf.size());
    out.raw(payload.buf.data(), payload.buf.size());
  };

  Writer w_static, w_dynamic, w_clusters, w_meta;
  write_gaussians(w_static, scene.static_gaussians);
  write_gaussians(w_dynamic, scene.dynamic_gaussians);
  section(kSectionStatic, w_static);
  section(kSectionDynamic, w_dynamic);
  if (scene.deform) {
    Writer w_deform;
    write_deform(w_deform, *scene.deform);
    section(kSectionDeform, w_deform);
  }
  write_cluster_ids(w_clusters, scene.static_cluster_ids, scene.dynamic_cluster_ids);
  section(kSectionClusters, w_clusters);

  nlohmann::json meta;
  meta["background"] = {scene.background[0], scene.background[1], scene.background[2]};
  meta["scene_scale"] = scene.scene_scale;
  meta["sh_degree"] = scene.sh_degree;
  meta["time_min"] = scene.time_min;
  meta["time_max"] = scene.time_max;
  const std::string meta_text = meta.dump();
  w_meta.raw(meta_text.data(), meta_text.size());
  section(kSectionMeta, w_meta);

  out.u64(crc64(out.buf.data(), out.buf.size()));

  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw std::invalid_argument("save_scene: cannot open " + path);
  file.write(reinterpret_cast<const char*>(out.buf.data()),
             static_cast<std::streamsize>(out.buf.size()));
  if (!file) throw std::runtime_error("save_scene: write failed for " + path);
}

HybridScene load_scene(const std::string& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw std::invalid_argument("load_scene: cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(file)),
                                  std::istreambuf_iterator<char>());

  if (bytes.size() < 4 + 4 + 8 || std::memcmp(bytes.data(), "HSPL", 4) != 0) {
    throw std::invalid_argument("load_scene: not a scene file: " + path);
  }
  std::uint64_t stored_crc;
  std::memcpy(&stored_crc, bytes.data() + bytes.size() - 8, 8);
  if (crc64(bytes.data(), bytes.size() - 8) != stored_crc) {
    throw std::invalid_argument("load_scene: checksum mismatch (corrupt file)");
  }

  Reader r{bytes.data(), bytes.size() - 8, 4};
  const std::uint32_t version = r.u32();
  if (version != kSceneFormatVersion) {
    throw std::invalid_argument("load_scene: unsupported scene format version " +
                                std::to_string(version));
  }

  std::map<std::uint32_t, std::pair<size_t, size_t>> sections;  // id -> offset, size
  while (!r.done()) {
    const std::uint32_t id = r.u32();
    const std::uint64_t size = r.u64();
    r.need(size);
    if (!sections.emplace(id, std::make_pair(r.pos, static_cast<size_t>(size))).second) {
      throw std::invalid_argument("load_scene: duplicate section " + std::to_string(id));
    }
    r.pos += size;
  }
  for (std::uint32_t id : {kSectionStatic, kSectionDynamic, kSectionMeta}) {
    if (!sections.count(id)) {
      throw std::invalid_argument("load_scene: missing section " + std::to_string(id));
    }
  }
  for (const auto& [id, loc] : sections) {
    (void)loc;
    if (id != kSectionStatic && id != kSectionDynamic && id != kSectionDeform &&
        id != kSectionMeta && id != kSectionClusters) {
      throw std::invalid_argument("load_scene: unknown section " + std::to_string(id));
    }
  }
  const auto section_reader = [&](std::uint32_t id) {
    const auto& [offset, size] = sections.at(id);
    return Reader{bytes.data() + offset, size, 0};
  };

  HybridScene scene;
  {
    Reader s = section_reader(kSectionStatic);
    scene.static_gaussians = read_gaussians(s);
  }
  {
    Reader s = section_reader(kSectionDynamic);
    scene.dynamic_gaussians = read_gaussians(s);
  }
  if (sections.count(kSectionDeform)) {
    Reader s = section_reader(kSectionDeform);
    scene.deform = read_deform(s);
  }
  if (sections.count(kSectionClusters)) {
    Reader s = section_reader(kSectionClusters);
    scene.static_cluster_ids = read_id_array(s);
    scene.dynamic_cluster_ids = read_id_array(s);
    if (!s.done()) throw std::invalid_argument("scene file corrupt (oversized section)");
  }
  {
    Reader s = section_reader(kSectionMeta);
    nlohmann::json meta;
    try {
      meta = nlohmann::json::parse(std::string(reinterpret_cast<const char*>(s.data), s.size));
      const auto& bg = meta.at("background");
      if (!bg.is_array() || bg.size() != 3) {
        throw std::invalid_argument("background must be a 3-array");
      }
      for (int c = 0; c < 3; ++c) scene.background[c] = bg[static_cast<size_t>(c)].get<double>();
      scene.scene_scale = meta.at("scene_scale").get<double>();
      scene.sh_degree = meta.at("sh_degree").get<int>();
      scene.time_min = meta.at("time_min").get<double>();
      scene.time_max = meta.at("time_max").get<double>();
    } catch (const nlohmann::json::exception& e) {
      throw std::invalid_argument(std::string("load_scene: bad metadata: ") + e.what());
    }
  }

  try {
    scene.validate();
  } catch (const std::exception& e) {
    throw std::invalid_argument(std::string("load_scene: inconsistent scene: ") + e.what());
  }
  return scene;
}

}  // namespace hsplat
