#pragma once

// File formats for rasters.
//
// GRID: 16-byte header (magic "GRID", u32 height, u32 width, u32 channels,
// all little-endian) followed by channels*height*width little-endian f32
// values, plane after plane, row-major within a plane.
//
// PGM: binary portable graymap (P5, maxval 255) for visual inspection;
// values are clamped to [0,1] and quantized to 8 bits on export.

#include <string>

#include "midseg/grid.hpp"

namespace midseg {

void save_grid(const Grid& g, const std::string& path);
void save_multigrid(const MultiGrid& g, const std::string& path);

/// Loads a GRID file with any channel count.
MultiGrid load_multigrid(const std::string& path);

/// Loads a GRID file and requires exactly one channel.
Grid load_grid(const std::string& path);

/// Labels travel as one-channel GRID files holding class indices.
void save_labelfield(const LabelField& l, int classes, const std::string& path);
LabelField load_labelfield(const std::string& path, int classes);

void save_pgm(const Grid& g, const std::string& path);
Grid load_pgm(const std::string& path);

}  // namespace midseg
