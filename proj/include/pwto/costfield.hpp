#pragma once

#include <Eigen/Core>

#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "pwto/rng.hpp"

namespace pwto {

// One isotropic Gaussian bump. sigma is the variance (the diagonal entry of
// the 2x2 covariance), not the standard deviation.
struct GaussianComponent {
  Eigen::Vector2d mu;
  double sigma = 1.0;
};

// Continuous traversal-cost field over the unit workspace: the sum of
// normalized isotropic bivariate Gaussian densities,
//   C(p) = sum_m 1/(2 pi sigma_m) * exp(-|p - mu_m|^2 / (2 sigma_m)).
// The field is finite, non-negative and smooth everywhere; evaluation is not
// clamped to [0,1]^2 so optimizer iterates that step outside the workspace
// still see consistent values and derivatives.
//
// An empty component list is the all-zero field; tests and the min-time
// oracle rely on it.
class CostField {
 public:
  CostField() = default;
  explicit CostField(std::vector<GaussianComponent> components, std::uint64_t seed = 0)
      : components_(std::move(components)), seed_(seed) {
    for (const auto& c : components_) {
      if (!(c.sigma > 0.0)) throw std::invalid_argument("CostField: sigma must be positive");
    }
  }

  const std::vector<GaussianComponent>& components() const { return components_; }
  std::uint64_t seed() const { return seed_; }
  bool empty() const { return components_.empty(); }

  double eval(const Eigen::Vector2d& p) const {
    double sum = 0.0;
    for (const auto& c : components_) {
      const double r2 = (p - c.mu).squaredNorm();
      sum += peak(c.sigma) * std::exp(-r2 / (2.0 * c.sigma));
    }
    return sum;
  }

  double eval(double x, double y) const { return eval(Eigen::Vector2d(x, y)); }

  Eigen::Vector2d grad(const Eigen::Vector2d& p) const {
    Eigen::Vector2d g = Eigen::Vector2d::Zero();
    for (const auto& c : components_) {
      const Eigen::Vector2d d = p - c.mu;
      const double v = peak(c.sigma) * std::exp(-d.squaredNorm() / (2.0 * c.sigma));
      g -= (v / c.sigma) * d;
    }
    return g;
  }

  // Symmetric by construction: the off-diagonal entry is computed once.
  Eigen::Matrix2d hessian(const Eigen::Vector2d& p) const {
    Eigen::Matrix2d h = Eigen::Matrix2d::Zero();
    for (const auto& c : components_) {
      const Eigen::Vector2d d = p - c.mu;
      const double v = peak(c.sigma) * std::exp(-d.squaredNorm() / (2.0 * c.sigma));
      const double inv_s = 1.0 / c.sigma;
      const double hxx = v * (d.x() * d.x() * inv_s - 1.0) * inv_s;
      const double hyy = v * (d.y() * d.y() * inv_s - 1.0) * inv_s;
      const double hxy = v * d.x() * d.y() * inv_s * inv_s;
      h(0, 0) += hxx;
      h(1, 1) += hyy;
      h(0, 1) += hxy;
    }
    h(1, 0) = h(0, 1);
    return h;
  }

 private:
  static double peak(double sigma) { return 1.0 / (6.283185307179586476925286766559 * sigma); }

  std::vector<GaussianComponent> components_;
  std::uint64_t seed_ = 0;
};

// Draws m component means i.i.d. uniform over [0,1]^2; every component gets
// variance drawn uniformly from [sigma_lo, sigma_hi].
inline CostField sample_field(int m, double sigma_lo, double sigma_hi, std::uint64_t seed) {
  if (m < 1) throw std::invalid_argument("sample_field: m must be >= 1");
  if (!(sigma_lo > 0.0) || !(sigma_hi >= sigma_lo))
    throw std::invalid_argument("sample_field: need 0 < sigma_lo <= sigma_hi");
  Rng rng(seed);
  std::vector<GaussianComponent> comps;
  comps.reserve(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    GaussianComponent c;
    c.mu = Eigen::Vector2d(rng.uniform01(), rng.uniform01());
    c.sigma = (sigma_hi > sigma_lo) ? rng.uniform(sigma_lo, sigma_hi) : sigma_lo;
    comps.push_back(c);
  }
  return CostField(std::move(comps), seed);
}

inline CostField sample_field(int m, double sigma, std::uint64_t seed) {
  return sample_field(m, sigma, sigma, seed);
}

// Uniform raster of a cost field; value (i,j) is the field at the cell
// center ((i+0.5)/nx, (j+0.5)/ny). Stored row-major with i fastest.
struct GridField {
  int nx = 0;
  int ny = 0;
  std::vector<double> values;
  std::array<double, 4> extent{0.0, 1.0, 0.0, 1.0};
  std::uint64_t seed = 0;

  double& at(int i, int j) { return values[static_cast<std::size_t>(j) * nx + i]; }
  double at(int i, int j) const { return values[static_cast<std::size_t>(j) * nx + i]; }
};

inline GridField rasterize(const CostField& field, int nx, int ny) {
  if (nx < 2 || ny < 2) throw std::invalid_argument("rasterize: nx, ny must be >= 2");
  GridField g;
  g.nx = nx;
  g.ny = ny;
  g.seed = field.seed();
  g.values.resize(static_cast<std::size_t>(nx) * ny);
  for (int j = 0; j < ny; ++j) {
    const double y = (j + 0.5) / ny;
    for (int i = 0; i < nx; ++i) {
      g.at(i, j) = field.eval((i + 0.5) / nx, y);
    }
  }
  return g;
}

namespace detail {

inline std::string sidecar_path(const std::string& csv_path) { return csv_path + ".json"; }

[[noreturn]] inline void parse_fail(const std::string& path, int line, const std::string& what) {
  throw std::runtime_error(path + ":" + std::to_string(line) + ": " + what);
}

}  // namespace detail

// Grid files are a CSV of row-major values (one line per j-row) next to a
// JSON sidecar <path>.json holding nx, ny, extent and the generator seed.
// Values are printed with 17 significant digits so save/load round-trips
// bit-exactly.
inline void save_grid(const GridField& grid, const std::string& path) {
  std::ofstream csv(path);
  if (!csv) throw std::runtime_error("save_grid: cannot open " + path);
  char buf[64];
  for (int j = 0; j < grid.ny; ++j) {
    for (int i = 0; i < grid.nx; ++i) {
      std::snprintf(buf, sizeof(buf), "%.17g", grid.at(i, j));
      csv << buf << (i + 1 < grid.nx ? "," : "\n");
    }
  }
  if (!csv.good()) throw std::runtime_error("save_grid: write failed for " + path);
  csv.close();

  std::ofstream side(detail::sidecar_path(path));
  if (!side) throw std::runtime_error("save_grid: cannot open " + detail::sidecar_path(path));
  side << "{\"nx\": " << grid.nx << ", \"ny\": " << grid.ny << ", \"extent\": [" << grid.extent[0]
       << ", " << grid.extent[1] << ", " << grid.extent[2] << ", " << grid.extent[3]
       << "], \"seed\": " << grid.seed << "}\n";
}

inline GridField load_grid(const std::string& path) {
  const std::string side_path = detail::sidecar_path(path);
  std::ifstream side(side_path);
  if (!side)
    throw std::runtime_error("load_grid: missing sidecar " + side_path);
  std::stringstream ss;
  ss << side.rdbuf();
  const std::string meta = ss.str();

  GridField g;
  // the sidecar is a flat JSON object; a scanf-style parse keeps this header
  // free of the json dependency (the CLI layer owns the richer formats)
  const auto grab = [&](const char* key) -> std::string {
    const auto pos = meta.find(key);
    if (pos == std::string::npos) detail::parse_fail(side_path, 1, std::string("missing key ") + key);
    auto colon = meta.find(':', pos);
    if (colon == std::string::npos) detail::parse_fail(side_path, 1, std::string("malformed key ") + key);
    auto end = meta.find_first_of(",}", colon);
    return meta.substr(colon + 1, end - colon - 1);
  };
  try {
    g.nx = std::stoi(grab("\"nx\""));
    g.ny = std::stoi(grab("\"ny\""));
    g.seed = std::stoull(grab("\"seed\""));
  } catch (const std::logic_error&) {
    detail::parse_fail(side_path, 1, "malformed sidecar value");
  }
  if (g.nx < 1 || g.ny < 1) detail::parse_fail(side_path, 1, "non-positive grid dims");

  std::ifstream csv(path);
  if (!csv) throw std::runtime_error("load_grid: cannot open " + path);
  g.values.resize(static_cast<std::size_t>(g.nx) * g.ny);
  std::string line;
  for (int j = 0; j < g.ny; ++j) {
    if (!std::getline(csv, line)) detail::parse_fail(path, j + 1, "unexpected end of file");
    std::stringstream row(line);
    std::string cell;
    for (int i = 0; i < g.nx; ++i) {
      if (!std::getline(row, cell, ',')) detail::parse_fail(path, j + 1, "row too short");
      char* endp = nullptr;
      const double v = std::strtod(cell.c_str(), &endp);
      if (endp == cell.c_str()) detail::parse_fail(path, j + 1, "not a number: " + cell);
      g.at(i, j) = v;
    }
  }
  return g;
}

// Grayscale PGM (P2 or P5) import mapping pixel/maxval to cost in [0,1].
// Row 0 of the image is mapped to the top of the workspace (j = ny-1).
inline GridField import_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("import_pgm: cannot open " + path);
  std::string magic;
  in >> magic;
  if (magic != "P2" && magic != "P5") detail::parse_fail(path, 1, "not a P2/P5 PGM file");
  const auto next_int = [&]() -> long {
    // skips whitespace and '#' comments
    while (true) {
      int ch = in.peek();
      if (ch == '#') {
        std::string skip;
        std::getline(in, skip);
      } else if (std::isspace(ch)) {
        in.get();
      } else {
        break;
      }
      if (!in.good()) detail::parse_fail(path, 1, "truncated header");
    }
    long v = 0;
    if (!(in >> v)) detail::parse_fail(path, 1, "truncated header");
    return v;
  };
  const long w = next_int();
  const long h = next_int();
  const long maxval = next_int();
  if (w < 1 || h < 1 || maxval < 1) detail::parse_fail(path, 1, "bad PGM dimensions");

  GridField g;
  g.nx = static_cast<int>(w);
  g.ny = static_cast<int>(h);
  g.values.resize(static_cast<std::size_t>(w) * h);
  if (magic == "P2") {
    for (long row = 0; row < h; ++row) {
      for (long i = 0; i < w; ++i) {
        long v;
        if (!(in >> v)) detail::parse_fail(path, static_cast<int>(row) + 2, "truncated pixel data");
        g.at(static_cast<int>(i), static_cast<int>(h - 1 - row)) = static_cast<double>(v) / maxval;
      }
    }
  } else {
    in.get();  // single whitespace after maxval
    if (maxval > 255) detail::parse_fail(path, 1, "16-bit P5 not supported");
    std::vector<unsigned char> bytes(static_cast<std::size_t>(w) * h);
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (in.gcount() != static_cast<std::streamsize>(bytes.size()))
      detail::parse_fail(path, 1, "truncated pixel data");
    for (long row = 0; row < h; ++row)
      for (long i = 0; i < w; ++i)
        g.at(static_cast<int>(i), static_cast<int>(h - 1 - row)) =
            static_cast<double>(bytes[static_cast<std::size_t>(row) * w + i]) / maxval;
  }
  return g;
}

}  // namespace pwto
