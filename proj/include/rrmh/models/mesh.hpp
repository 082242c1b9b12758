#pragma once

#include "rrmh/core.hpp"

#include <array>
#include <string>
#include <vector>

namespace rrmh::models {

/// Boundary tag of a mesh node.
inline constexpr int kInteriorNode = -1;
inline constexpr int kGroundNode = 0;
// Tags >= 1 name electrode (tag - 1).

/// Triangulated unit disk with tagged boundary nodes and region-labelled elements.
struct TriMesh {
  std::vector<std::array<double, 2>> nodes;
  std::vector<int> node_tag;
  std::vector<std::array<int, 3>> elements;
  std::vector<int> region;

  std::size_t num_nodes() const { return nodes.size(); }
  std::size_t num_elements() const { return elements.size(); }
  /// Highest electrode index + 1.
  int num_electrodes() const;
  int num_regions() const;
  /// Throws if element indices are out of range or any triangle is not
  /// counter-clockwise with positive area.
  void validate() const;
};

struct DiskMeshOptions {
  /// Ring k (1..rings) carries 8 * density * k nodes.
  int density = 1;
  int rings = 3;
  int electrodes = 8;
  /// Angular width of each electrode, degrees.
  double electrode_width_deg = 22.5;
  /// Radii separating the centre disk, the annulus quadrants, and background.
  double inner_radius = 1.0 / 3.0;
  double outer_radius = 2.0 / 3.0;
};

/// Structured concentric-ring triangulation of the unit disk.
///
/// Each 45-degree sector is triangulated identically, so the mesh is invariant
/// under rotation by 45 degrees. Regions (by element centroid):
/// 0 background (r > outer_radius), 1 centre disk (r < inner_radius),
/// 2..5 quadrants of the annulus between them.
TriMesh generate_disk_mesh(const DiskMeshOptions& opts);

/// Plain-text mesh format:
///
///   # comment lines
///   nodes <N>
///   <x> <y> <tag>          (N lines; tag -1 interior, 0 grounded, k>=1 electrode k-1)
///   elements <E>
///   <n0> <n1> <n2> <region> (E lines, 0-based node indices)
void write_mesh(const TriMesh& mesh, const std::string& path);
TriMesh read_mesh(const std::string& path);

}  // namespace rrmh::models
