#include "rendersynth/tag_model.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

namespace rendersynth {

namespace {

using Eigen::Matrix2d;
using Eigen::Matrix3d;
using Eigen::Vector2d;

constexpr double kTwoPi = 2.0 * M_PI;
constexpr double kCellArc = kTwoPi / kNumBits;  // 30 degrees

Matrix3d pose_rotation(const TagLabel& label) {
  const double cy = std::cos(label.yaw), sy = std::sin(label.yaw);
  const double cp = std::cos(label.pitch), sp = std::sin(label.pitch);
  const double cr = std::cos(label.roll), sr = std::sin(label.roll);
  Matrix3d yaw;   // about z (in-plane spin)
  yaw << cy, -sy, 0, sy, cy, 0, 0, 0, 1;
  Matrix3d pitch;  // about x
  pitch << 1, 0, 0, 0, cp, -sp, 0, sp, cp;
  Matrix3d roll;   // about y
  roll << cr, 0, sr, 0, 1, 0, -sr, 0, cr;
  return roll * pitch * yaw;
}

struct Frame {
  Matrix2d a;          // local tag-plane coords -> image offset
  Matrix2d inv_a;      // image offset -> local tag-plane coords
  Vector2d center;     // tag center in px
  double z0, z1;       // plane z per unit local u, v
  double sigma_min;    // smallest singular value of the local->image map
  double r_out, r_ring_in, r_disk;

  // Image-space length of a local step of size `len` along unit direction d.
  double stretch(double dx, double dy, double len) const {
    return (a * Vector2d(dx, dy)).norm() * len;
  }
  // Image-space distance to the local line through the origin with unit
  // normal n, evaluated at local point p (exact under the affine map).
  double line_distance(const Vector2d& n, const Vector2d& p) const {
    return std::abs(n.dot(p)) / (inv_a.transpose() * n).norm();
  }
};

Frame make_frame(const TagLabel& label, int resolution, const TagGeometry& geom) {
  const Matrix3d rot = pose_rotation(label);
  const double px_per_unit = label.scale * static_cast<double>(resolution) / kReferenceResolution;
  Matrix2d a;
  a << rot(0, 0), rot(0, 1), rot(1, 0), rot(1, 1);
  a *= px_per_unit;

  Frame f;
  f.a = a;
  f.inv_a = a.inverse();
  f.center = Vector2d(label.center_x, label.center_y);
  f.z0 = rot(2, 0);
  f.z1 = rot(2, 1);
  Eigen::JacobiSVD<Matrix2d> svd(a);
  f.sigma_min = svd.singularValues()(1);
  if (f.sigma_min <= 0.0)
    throw std::invalid_argument("render: degenerate projection");
  f.r_out = geom.outer_radius;
  f.r_ring_in = geom.ring_inner_frac * geom.outer_radius;
  f.r_disk = geom.disk_frac * geom.outer_radius;
  return f;
}

void validate(const TagLabel& label, int resolution, const TagGeometry& geom) {
  if (resolution < 16)
    throw std::invalid_argument("render: resolution must be at least 16 px");
  if (!(label.scale > 0.0))
    throw std::invalid_argument("render: scale must be positive");
  if (std::abs(label.pitch) >= geom.max_tilt || std::abs(label.roll) >= geom.max_tilt)
    throw std::invalid_argument("render: pitch/roll outside the configured tilt bound");
}

// Which of the 12 ring cells owns local angle theta. Cell i is centered on
// direction i*30deg from the +u (arrow) axis, counterclockwise.
int ring_cell(double u, double v) {
  double a = std::atan2(v, u) + 0.5 * kCellArc;
  a = std::fmod(a, kTwoPi);
  if (a < 0.0) a += kTwoPi;
  int idx = static_cast<int>(a / kCellArc);
  return idx >= kNumBits ? kNumBits - 1 : idx;
}

// Tag color at a local point inside the outer radius.
double classify(double u, double v, const Frame& f, const std::array<bool, kNumBits>& bits) {
  const double rho = std::hypot(u, v);
  if (rho <= f.r_disk) return u > 0.0 ? 1.0 : -1.0;  // arrow-side semicircle is white
  if (rho < f.r_ring_in) return 1.0;                 // separator annulus
  return bits[static_cast<size_t>(ring_cell(u, v))] ? 1.0 : -1.0;
}

}  // namespace

std::string bits_to_string(const std::array<bool, kNumBits>& bits) {
  std::string s(kNumBits, '0');
  for (int i = 0; i < kNumBits; ++i)
    if (bits[static_cast<size_t>(i)]) s[static_cast<size_t>(i)] = '1';
  return s;
}

std::array<bool, kNumBits> bits_from_string(const std::string& s) {
  if (s.size() != kNumBits) throw std::invalid_argument("bits string must have 12 characters");
  std::array<bool, kNumBits> bits{};
  for (int i = 0; i < kNumBits; ++i) {
    const char c = s[static_cast<size_t>(i)];
    if (c != '0' && c != '1') throw std::invalid_argument("bits string must be binary");
    bits[static_cast<size_t>(i)] = (c == '1');
  }
  return bits;
}

TagLabel sample_label(Rng& rng, int resolution, const LabelDistribution& dist) {
  TagLabel label;
  if (dist.fix_bits)
    label.bits = dist.bits;
  else
    for (auto& b : label.bits) b = rng.bernoulli(0.5);
  const double jitter = dist.center_jitter * resolution / kReferenceResolution;
  label.center_x = resolution / 2.0 + rng.uniform(-jitter, jitter);
  label.center_y = resolution / 2.0 + rng.uniform(-jitter, jitter);
  label.yaw = rng.uniform(dist.yaw_min, dist.yaw_max);
  label.pitch = rng.truncated_normal(dist.tilt_sigma, dist.tilt_bound);
  label.roll = rng.truncated_normal(dist.tilt_sigma, dist.tilt_bound);
  label.scale = rng.uniform(dist.scale_min, dist.scale_max);
  return label;
}

RenderOutput render(const TagLabel& label, int resolution, const TagGeometry& geom) {
  validate(label, resolution, geom);
  const Frame f = make_frame(label, resolution, geom);
  const int ss = geom.supersample;
  const double sub_step = 1.0 / ss;
  const int sub_total = ss * ss;

  RenderOutput out;
  out.image.resize(resolution, resolution);
  out.bg_mask.resize(resolution, resolution);
  out.depth = Imaged::Zero(resolution, resolution);

  for (int i = 0; i < resolution; ++i) {
    for (int j = 0; j < resolution; ++j) {
      double sum = 0.0;
      int hits = 0;
      for (int sy = 0; sy < ss; ++sy) {
        for (int sx = 0; sx < ss; ++sx) {
          const double px = j + (sx + 0.5) * sub_step;
          const double py = i + (sy + 0.5) * sub_step;
          const Vector2d local = f.inv_a * (Vector2d(px, py) - f.center);
          if (local.squaredNorm() > f.r_out * f.r_out) {
            sum += -1.0;  // canvas behind the tag is black
          } else {
            ++hits;
            sum += classify(local.x(), local.y(), f, label.bits);
          }
        }
      }
      out.image(i, j) = sum / sub_total;
      out.bg_mask(i, j) = (hits * 2 < sub_total) ? 1.0 : 0.0;  // coverage < 0.5
    }
  }

  // Plane depth at pixel centers, min-max normalized over tag pixels.
  double zmin = 0.0, zmax = 0.0;
  bool first = true;
  Imaged zraw = Imaged::Zero(resolution, resolution);
  for (int i = 0; i < resolution; ++i) {
    for (int j = 0; j < resolution; ++j) {
      if (out.bg_mask(i, j) != 0.0) continue;
      const Vector2d local = f.inv_a * (Vector2d(j + 0.5, i + 0.5) - f.center);
      const double z = f.z0 * local.x() + f.z1 * local.y();
      zraw(i, j) = z;
      if (first || z < zmin) zmin = z;
      if (first || z > zmax) zmax = z;
      first = false;
    }
  }
  const double range = zmax - zmin;
  for (int i = 0; i < resolution; ++i)
    for (int j = 0; j < resolution; ++j)
      if (out.bg_mask(i, j) == 0.0)
        out.depth(i, j) = range > 1e-12 ? (zraw(i, j) - zmin) / range : 0.5;

  return out;
}

Imaged white_mask(const Imaged& x) {
  return (x > 0.0).cast<double>();
}

std::optional<CellMasks> cell_regions(const TagLabel& label, int resolution,
                                      const TagGeometry& geom) {
  validate(label, resolution, geom);
  const Frame f = make_frame(label, resolution, geom);
  const double margin = geom.erosion_px;  // image-space pixels

  CellMasks masks;
  for (auto& m : masks) m = Imaged::Zero(resolution, resolution);

  for (int i = 0; i < resolution; ++i) {
    for (int j = 0; j < resolution; ++j) {
      const Vector2d local = f.inv_a * (Vector2d(j + 0.5, i + 0.5) - f.center);
      const double u = local.x(), v = local.y();
      const double rho = std::hypot(u, v);
      if (rho <= 0.0) continue;
      const double ru = u / rho, rv = v / rho;

      if (rho <= f.r_disk) {
        // Distance to the disk rim (first order) and, exactly, to the
        // dividing diameter, both measured in image pixels.
        const double d_rim = f.stretch(ru, rv, f.r_disk - rho);
        const double d_split = f.line_distance(Vector2d(1.0, 0.0), local);
        if (std::min(d_rim, d_split) >= margin) masks[u > 0.0 ? 12 : 13](i, j) = 1.0;
        continue;
      }
      if (rho < f.r_ring_in || rho > f.r_out) continue;

      const int cell = ring_cell(u, v);
      const double d_in = f.stretch(ru, rv, rho - f.r_ring_in);
      const double d_out = f.stretch(ru, rv, f.r_out - rho);
      const double lo = cell * kCellArc - 0.5 * kCellArc;
      const double hi = cell * kCellArc + 0.5 * kCellArc;
      const double d_lo = f.line_distance(Vector2d(-std::sin(lo), std::cos(lo)), local);
      const double d_hi = f.line_distance(Vector2d(-std::sin(hi), std::cos(hi)), local);
      if (std::min({d_in, d_out, d_lo, d_hi}) >= margin) masks[static_cast<size_t>(cell)](i, j) = 1.0;
    }
  }

  for (const auto& m : masks)
    if (m.sum() < 1.0) return std::nullopt;
  return masks;
}

DecodeResult decode_oracle(const Imaged& x, const TagLabel& label_geometry,
                           const TagGeometry& geom) {
  const auto masks = cell_regions(label_geometry, static_cast<int>(x.rows()), geom);
  if (!masks) {
    DecodeResult result;
    result.status = DecodeStatus::bad_geometry;
    return result;
  }
  return decode_with_masks(x, *masks);
}

DecodeResult decode_with_masks(const Imaged& x, const CellMasks& masks) {
  DecodeResult result;
  auto masked_mean = [&](const Imaged& m) { return (x * m).sum() / m.sum(); };
  const double w = masked_mean(masks[12]);
  const double b = masked_mean(masks[13]);
  if (w <= b) {
    result.status = DecodeStatus::inverted_reference;
    return result;
  }
  const double mid = 0.5 * (w + b);
  for (int i = 0; i < kNumBits; ++i)
    result.bits[static_cast<size_t>(i)] = masked_mean(masks[static_cast<size_t>(i)]) > mid;
  result.status = DecodeStatus::ok;
  return result;
}

}  // namespace rendersynth
