// Copyright (c) 2026 HybridSplat Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include "hsplat/core/image.hpp"

namespace hsplat {

// PFM: "PF" (3 channels) or "Pf" (1 channel), dimensions, negative scale for
// little-endian, 32-bit float scanlines stored bottom-up. Maps with more than
// three channels are written as a single "Pf" image whose height is
// channels * H: plane c occupies image rows [c*H, (c+1)*H).
void write_pfm(const std::string& path, const ImageD& img);
ImageD read_pfm(const std::string& path);

// Planar wrappers for C-channel maps (C may be any positive count).
void write_pfm_planar(const std::string& path, const ImageD& img);
ImageD read_pfm_planar(const std::string& path, int channels);

}  // namespace hsplat
