#pragma once

#include <string>

#include "atnatlas/matrix.hpp"

namespace atnatlas {

enum class HeatmapNorm { GlobalMax, PerRow };

// Binary PGM (P5, maxval 255), one pixel per cell, darker = larger:
// pixel = round(255 * (1 - v / vmax)). An all-zero normalization group uses
// vmax = 1, which renders white. Requires finite non-negative input.
std::string encode_pgm(const Matrix& m, HeatmapNorm norm = HeatmapNorm::GlobalMax);

void render_heatmap(const Matrix& m, const std::string& path,
                    HeatmapNorm norm = HeatmapNorm::GlobalMax);

}  // namespace atnatlas
