#include "trapnoise/voronoi.hpp"

#include "trapnoise/error.hpp"

#include <algorithm>
#include <cmath>

namespace trapnoise::voronoi {

std::vector<Point2> poisson_points(const BoundingBox& box, double density, std::mt19937_64& rng) {
  if (!(density > 0.0) || !std::isfinite(density)) {
    throw Error(ErrorKind::InvalidInput, "point density must be positive");
  }
  const double mean = density * box.width() * box.height();
  std::poisson_distribution<long long> count_dist(mean);
  const long long n = count_dist(rng);
  std::uniform_real_distribution<double> ux(box.xmin, box.xmax);
  std::uniform_real_distribution<double> uy(box.ymin, box.ymax);
  std::vector<Point2> points;
  points.reserve(static_cast<std::size_t>(n));
  for (long long i = 0; i < n; ++i) {
    const double x = ux(rng);
    const double y = uy(rng);
    points.push_back({x, y});
  }
  return points;
}

namespace {

void clip_into(std::span<const Point2> polygon, Point2 origin, Point2 normal, double offset,
               std::vector<Point2>& out) {
  out.clear();
  const std::size_t n = polygon.size();
  if (n == 0) return;
  const auto side = [&](Point2 p) {
    return (p.x - origin.x) * normal.x + (p.y - origin.y) * normal.y - offset;
  };
  double sa = side(polygon[0]);
  for (std::size_t i = 0; i < n; ++i) {
    const Point2 a = polygon[i];
    const Point2 b = polygon[(i + 1) % n];
    const double sb = side(b);
    if (sa <= 0.0) out.push_back(a);
    if ((sa < 0.0 && sb > 0.0) || (sa > 0.0 && sb < 0.0)) {
      const double t = sa / (sa - sb);
      out.push_back({a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)});
    }
    sa = sb;
  }
}

}  // namespace

std::vector<Point2> clip_half_plane(std::span<const Point2> polygon, Point2 origin, Point2 normal,
                                    double offset) {
  std::vector<Point2> out;
  out.reserve(polygon.size() + 1);
  clip_into(polygon, origin, normal, offset, out);
  return out;
}

std::vector<Point2> clip_convex(std::span<const Point2> subject, std::span<const Point2> window) {
  std::vector<Point2> out(subject.begin(), subject.end());
  const std::size_t n = window.size();
  for (std::size_t i = 0; i < n && !out.empty(); ++i) {
    const Point2 a = window[i];
    const Point2 b = window[(i + 1) % n];
    // Outward normal of a counter-clockwise edge is (dy, -dx).
    const Point2 normal{b.y - a.y, -(b.x - a.x)};
    out = clip_half_plane(out, a, normal, 0.0);
  }
  return out;
}

std::vector<std::vector<Point2>> cells(std::span<const Point2> sites, const BoundingBox& box) {
  const std::size_t n = sites.size();
  std::vector<std::vector<Point2>> result(n);
  if (n == 0) return result;

  // Bucket grid with about one site per bucket.
  const double h = std::max(std::sqrt(box.width() * box.height() / static_cast<double>(n)),
                            1e-300);
  const int gx = std::max(1, static_cast<int>(std::ceil(box.width() / h)));
  const int gy = std::max(1, static_cast<int>(std::ceil(box.height() / h)));
  std::vector<std::vector<std::size_t>> buckets(static_cast<std::size_t>(gx) * gy);
  const auto bucket_of = [&](Point2 p) {
    const int bx = std::clamp(static_cast<int>((p.x - box.xmin) / h), 0, gx - 1);
    const int by = std::clamp(static_cast<int>((p.y - box.ymin) / h), 0, gy - 1);
    return std::pair{bx, by};
  };
  for (std::size_t i = 0; i < n; ++i) {
    const auto [bx, by] = bucket_of(sites[i]);
    buckets[static_cast<std::size_t>(by) * gx + bx].push_back(i);
  }

  const std::vector<Point2> frame{
      {box.xmin, box.ymin}, {box.xmax, box.ymin}, {box.xmax, box.ymax}, {box.xmin, box.ymax}};
  const int max_ring = std::max(gx, gy);

  for (std::size_t i = 0; i < n; ++i) {
    const Point2 s = sites[i];
    std::vector<Point2> cell = frame;
    std::vector<Point2> scratch;
    // Squared distance from the site to the farthest cell vertex.
    double radius_sq = box.width() * box.width() + box.height() * box.height();
    const auto [bx, by] = bucket_of(s);
    for (int ring = 0; ring <= max_ring && !cell.empty(); ++ring) {
      for (int dy = -ring; dy <= ring; ++dy) {
        for (int dx = -ring; dx <= ring; ++dx) {
          if (std::max(std::abs(dx), std::abs(dy)) != ring) continue;
          const int cx = bx + dx;
          const int cy = by + dy;
          if (cx < 0 || cy < 0 || cx >= gx || cy >= gy) continue;
          for (const std::size_t j : buckets[static_cast<std::size_t>(cy) * gx + cx]) {
            if (j == i) continue;
            const Point2 t = sites[j];
            const Point2 normal{t.x - s.x, t.y - s.y};
            const double dist_sq = normal.x * normal.x + normal.y * normal.y;
            // The bisector misses the cell when the site is beyond twice its radius.
            if (dist_sq == 0.0 || dist_sq > 4.0 * radius_sq) continue;
            clip_into(cell, s, normal, 0.5 * dist_sq, scratch);
            cell.swap(scratch);
            radius_sq = 0.0;
            for (const auto& v : cell) {
              const double vx = v.x - s.x;
              const double vy = v.y - s.y;
              radius_sq = std::max(radius_sq, vx * vx + vy * vy);
            }
          }
        }
      }
      // Sites in ring + 1 are at least ring * h away.
      if (ring * h > 2.0 * std::sqrt(radius_sq)) break;
    }
    result[i] = std::move(cell);
  }
  return result;
}

}  // namespace trapnoise::voronoi
