// Copyright (c) 2026 HybridSplat Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>

#include "hsplat/dynamics/scene.hpp"

namespace hsplat {

inline constexpr std::uint32_t kSceneFormatVersion = 1;

// Binary scene container, little-endian throughout:
//   "HSPL" | version u32 | sections | crc64 u64
// Each section is id u32, payload size u64, payload. Ids: 1 static set,
// 2 dynamic set, 3 deformation field (present only with a non-empty dynamic
// set), 4 metadata JSON, 5 cluster ids. Parameters are stored as raw IEEE
// doubles, so save -> load -> save reproduces the file byte for byte. The
// trailing checksum covers everything before it.
void save_scene(const HybridScene& scene, const std::string& path);

// Throws std::invalid_argument on missing or malformed files: bad magic,
// unknown version, truncation, duplicate or unknown sections, or a checksum
// mismatch.
HybridScene load_scene(const std::string& path);

}  // namespace hsplat
