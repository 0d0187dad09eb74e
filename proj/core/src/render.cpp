#include "atnatlas/render.hpp"

#include <algorithm>
#include <cmath>

#include "atnatlas/errors.hpp"
#include "wire.hpp"

namespace atnatlas {

namespace {

unsigned char pixel_for(double v, double vmax) {
  if (vmax == 0.0) vmax = 1.0;
  const double p = std::round(255.0 * (1.0 - v / vmax));
  return static_cast<unsigned char>(std::clamp(p, 0.0, 255.0));
}

}  // namespace

std::string encode_pgm(const Matrix& m, HeatmapNorm norm) {
  if (m.empty()) throw DataError("encode_pgm: empty matrix");
  for (std::size_t i = 0; i < m.size(); ++i) {
    const double v = m.data()[i];
    if (!std::isfinite(v) || v < 0.0) {
      throw DataError("encode_pgm: input must be finite and non-negative");
    }
  }

  std::string out = "P5\n" + std::to_string(m.cols()) + " " + std::to_string(m.rows()) +
                    "\n255\n";
  out.reserve(out.size() + m.size());
  if (norm == HeatmapNorm::GlobalMax) {
    double vmax = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) vmax = std::max(vmax, m.data()[i]);
    for (std::size_t i = 0; i < m.size(); ++i) {
      out.push_back(static_cast<char>(pixel_for(m.data()[i], vmax)));
    }
  } else {
    for (std::size_t i = 0; i < m.rows(); ++i) {
      const auto row = m.row(i);
      double vmax = 0.0;
      for (double v : row) vmax = std::max(vmax, v);
      for (double v : row) out.push_back(static_cast<char>(pixel_for(v, vmax)));
    }
  }
  return out;
}

void render_heatmap(const Matrix& m, const std::string& path, HeatmapNorm norm) {
  detail::write_file_bytes(path, encode_pgm(m, norm));
}

}  // namespace atnatlas
