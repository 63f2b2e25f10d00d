// Copyright (c) 2026 HybridSplat Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include "hsplat/core/image.hpp"

namespace hsplat {

// 8-bit PNG, RGB (3 channels) or grayscale (1 channel).
void write_png(const std::string& path, const ImageU8& img);
ImageU8 read_png(const std::string& path);

}  // namespace hsplat
