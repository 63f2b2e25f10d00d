// Copyright (c) 2026 HybridSplat Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include "hsplat/core/types.hpp"

namespace hsplat {

// On-disk bundle layout under a directory:
//   frames/%04d.png      8-bit RGB reference frames
//   pointmaps/%04d.pfm   3-channel float world positions, NaN = invalid
//   featmaps/%04d.pfm    planar F-channel float features (optional)
//   masks/%04d.png       0/255 dynamic-pixel ground truth (optional)
//   poses.json           intrinsics + world_to_cam (16 floats, row-major) + t
//   meta.json            format version, feature_dim, scene_scale hint,
//                        background color
void write_bundle(const ReferenceBundle& bundle, const std::string& dir);

// Reads and validates a bundle directory. Missing feature maps fall back to
// features built from RGB, image gradient, and pixel coordinates, flagged via
// ReferenceBundle::fallback_features. Throws std::invalid_argument naming the
// offending frame on any inconsistency.
ReferenceBundle ingest_bundle(const std::string& dir);

}  // namespace hsplat
