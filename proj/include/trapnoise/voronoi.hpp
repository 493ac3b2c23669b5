#pragma once

#include "trapnoise/geometry.hpp"

#include <random>
#include <span>
#include <vector>

namespace trapnoise::voronoi {

// Homogeneous Poisson point process of the given intensity (points per m^2)
// on `box`.
std::vector<Point2> poisson_points(const BoundingBox& box, double density, std::mt19937_64& rng);

// Voronoi cell of every site, clipped to `box`, as counter-clockwise convex
// vertex lists (empty if a cell degenerates). Each cell is the intersection of
// bisector half-planes with nearby sites; the neighbour search stops once no
// unvisited site can be closer than twice the current cell radius, so the
// cells are exact.
std::vector<std::vector<Point2>> cells(std::span<const Point2> sites, const BoundingBox& box);

// Keeps the part of `polygon` where (p - origin) . normal <= offset.
std::vector<Point2> clip_half_plane(std::span<const Point2> polygon, Point2 origin, Point2 normal,
                                    double offset);

// Sutherland-Hodgman clipping of an arbitrary polygon by a convex
// counter-clockwise window.
std::vector<Point2> clip_convex(std::span<const Point2> subject, std::span<const Point2> window);

}  // namespace trapnoise::voronoi
