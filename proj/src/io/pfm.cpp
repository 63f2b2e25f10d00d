// Copyright (c) 2026 HybridSplat Authors
// SPDX-License-Identifier: Apache-2.0
#include "hsplat/io/pfm.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace hsplat {

namespace {

void write_pfm_stream(std::ofstream& f, const ImageD& img, int channels) {
  f << (channels == 3 ? "PF" : "Pf") << "\n"
    << img.width << " " << img.height << "\n"
    << "-1.0\n";  // negative scale = little-endian
  std::vector<float> row(static_cast<size_t>(img.width) * channels);
  for (int y = img.height - 1; y >= 0; --y) {  // bottom-up
    for (int x = 0; x < img.width; ++x) {
      for (int c = 0; c < channels; ++c) {
        row[static_cast<size_t>(x) * channels + c] = static_cast<float>(img.at(y, x, c));
      }
    }
    f.write(reinterpret_cast<const char*>(row.data()),
            static_cast<std::streamsize>(row.size() * sizeof(float)));
  }
}

}  // namespace

void write_pfm(const std::string& path, const ImageD& img) {
  if (img.channels != 1 && img.channels != 3) {
    throw std::invalid_argument("write_pfm: channel count must be 1 or 3 (use write_pfm_planar)");
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("write_pfm: cannot open " + path);
  write_pfm_stream(f, img, img.channels);
  if (!f) throw std::runtime_error("write_pfm: write failed for " + path);
}

ImageD read_pfm(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::invalid_argument("read_pfm: cannot open " + path);
  std::string magic;
  f >> magic;
  int channels;
  if (magic == "PF") {
    channels = 3;
  } else if (magic == "Pf") {
    channels = 1;
  } else {
    throw std::invalid_argument("read_pfm: bad magic in " + path);
  }
  int w = 0, h = 0;
  double scale = 0;
  f >> w >> h >> scale;
  if (!f || w <= 0 || h <= 0 || scale == 0) {
    throw std::invalid_argument("read_pfm: malformed header in " + path);
  }
  f.get();  // single whitespace after scale
  const bool little_endian = scale < 0;
  if (!little_endian) {
    throw std::invalid_argument("read_pfm: big-endian PFM not supported: " + path);
  }
  ImageD img(h, w, channels);
  std::vector<float> row(static_cast<size_t>(w) * channels);
  for (int y = h - 1; y >= 0; --y) {
    f.read(reinterpret_cast<char*>(row.data()),
           static_cast<std::streamsize>(row.size() * sizeof(float)));
    if (!f) throw std::invalid_argument("read_pfm: truncated file " + path);
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < channels; ++c) {
        img.at(y, x, c) = row[static_cast<size_t>(x) * channels + c];
      }
    }
  }
  return img;
}

void write_pfm_planar(const std::string& path, const ImageD& img) {
  if (img.channels == 1 || img.channels == 3) {
    write_pfm(path, img);
    return;
  }
  // Stack channels vertically into one grayscale image.
  ImageD flat(img.height * img.channels, img.width, 1);
  for (int c = 0; c < img.channels; ++c) {
    for (int y = 0; y < img.height; ++y) {
      for (int x = 0; x < img.width; ++x) {
        flat.at(c * img.height + y, x, 0) = img.at(y, x, c);
      }
    }
  }
  write_pfm(path, flat);
}

ImageD read_pfm_planar(const std::string& path, int channels) {
  ImageD raw = read_pfm(path);
  if (raw.channels == channels) return raw;
  if (raw.channels != 1 || raw.height % channels != 0) {
    throw std::invalid_argument("read_pfm_planar: layout of " + path + " does not match " +
                             std::to_string(channels) + " channels");
  }
  const int h = raw.height / channels;
  ImageD img(h, raw.width, channels);
  for (int c = 0; c < channels; ++c) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < raw.width; ++x) {
        img.at(y, x, c) = raw.at(c * h + y, x, 0);
      }
    }
  }
  return img;
}

}  // namespace hsplat
