#include "rrmh/models/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>

namespace rrmh::models {

int TriMesh::num_electrodes() const {
  int n = 0;
  for (int t : node_tag) n = std::max(n, t);
  return n;
}

int TriMesh::num_regions() const {
  int n = 0;
  for (int r : region) n = std::max(n, r + 1);
  return n;
}

void TriMesh::validate() const {
  if (node_tag.size() != nodes.size()) throw Error("mesh: node tag count mismatch");
  if (region.size() != elements.size()) throw Error("mesh: region count mismatch");
  const int n = static_cast<int>(nodes.size());
  for (std::size_t e = 0; e < elements.size(); ++e) {
    const auto& t = elements[e];
    for (int v : t) {
      if (v < 0 || v >= n) throw Error("mesh: element " + std::to_string(e) + " index out of range");
    }
    const auto& a = nodes[t[0]];
    const auto& b = nodes[t[1]];
    const auto& c = nodes[t[2]];
    const double area2 = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
    if (!(area2 > 0.0)) throw Error("mesh: element " + std::to_string(e) + " is not counter-clockwise");
    if (region[e] < 0) throw Error("mesh: negative region label");
  }
}

TriMesh generate_disk_mesh(const DiskMeshOptions& opts) {
  if (opts.density < 1 || opts.rings < 1) throw Error("disk mesh: density and rings must be >= 1");
  if (opts.electrodes < 1) throw Error("disk mesh: need at least one electrode");
  constexpr int kSectors = 8;
  const double two_pi = 2.0 * std::numbers::pi;
  TriMesh mesh;

  // ring_start[k] = index of node 0 on ring k; ring 0 is the centre.
  std::vector<int> ring_start(static_cast<std::size_t>(opts.rings) + 1);
  std::vector<int> ring_count(static_cast<std::size_t>(opts.rings) + 1);
  mesh.nodes.push_back({0.0, 0.0});
  mesh.node_tag.push_back(kInteriorNode);
  ring_start[0] = 0;
  ring_count[0] = 1;
  for (int k = 1; k <= opts.rings; ++k) {
    const int nk = kSectors * opts.density * k;
    ring_start[k] = static_cast<int>(mesh.nodes.size());
    ring_count[k] = nk;
    const double r = static_cast<double>(k) / opts.rings;
    for (int j = 0; j < nk; ++j) {
      const double th = two_pi * j / nk;
      mesh.nodes.push_back({r * std::cos(th), r * std::sin(th)});
      mesh.node_tag.push_back(kInteriorNode);
    }
  }

  // Boundary tagging on the outer ring.
  {
    const int k = opts.rings;
    const int nk = ring_count[k];
    const double half_width = opts.electrode_width_deg / 2.0;
    for (int j = 0; j < nk; ++j) {
      const double deg = 360.0 * j / nk;
      int tag = kGroundNode;
      for (int e = 0; e < opts.electrodes; ++e) {
        const double centre = 360.0 * e / opts.electrodes;
        double diff = std::fmod(std::abs(deg - centre), 360.0);
        diff = std::min(diff, 360.0 - diff);
        if (diff <= half_width + 1e-9) {
          tag = e + 1;
          break;
        }
      }
      mesh.node_tag[static_cast<std::size_t>(ring_start[k] + j)] = tag;
    }
  }

  auto node = [&](int k, int j) {
    const int nk = ring_count[k];
    return ring_start[k] + (k == 0 ? 0 : ((j % nk) + nk) % nk);
  };
  auto add_triangle = [&](int a, int b, int c) {
    const auto& pa = mesh.nodes[a];
    const auto& pb = mesh.nodes[b];
    const auto& pc = mesh.nodes[c];
    const double area2 = (pb[0] - pa[0]) * (pc[1] - pa[1]) - (pc[0] - pa[0]) * (pb[1] - pa[1]);
    if (area2 < 0.0) std::swap(b, c);
    mesh.elements.push_back({a, b, c});
  };

  // Strip between ring k-1 and ring k, sector by sector.
  for (int k = 1; k <= opts.rings; ++k) {
    const int p = opts.density * (k - 1);  // inner segments per sector
    const int q = opts.density * k;        // outer segments per sector
    for (int s = 0; s < kSectors; ++s) {
      int i = 0, j = 0;
      while (i < p || j < q) {
        bool advance_outer;
        if (i == p) {
          advance_outer = true;
        } else if (j == q) {
          advance_outer = false;
        } else {
          // Compare (j+1)/q with (i+1)/p exactly in integers; ties go outward.
          advance_outer = (j + 1) * p <= (i + 1) * q;
        }
        const int in_i = k == 1 ? node(0, 0) : node(k - 1, s * p + i);
        const int out_j = node(k, s * q + j);
        if (advance_outer) {
          add_triangle(in_i, out_j, node(k, s * q + j + 1));
          ++j;
        } else {
          add_triangle(in_i, out_j, node(k - 1, s * p + i + 1));
          ++i;
        }
      }
    }
  }

  // Regions by centroid.
  mesh.region.reserve(mesh.elements.size());
  for (const auto& t : mesh.elements) {
    double cx = 0.0, cy = 0.0;
    for (int v : t) {
      cx += mesh.nodes[v][0] / 3.0;
      cy += mesh.nodes[v][1] / 3.0;
    }
    const double r = std::hypot(cx, cy);
    int reg = 0;
    if (r < opts.inner_radius) {
      reg = 1;
    } else if (r < opts.outer_radius) {
      double th = std::atan2(cy, cx);
      if (th < 0.0) th += two_pi;
      reg = 2 + std::min(3, static_cast<int>(th / (two_pi / 4.0)));
    }
    mesh.region.push_back(reg);
  }
  mesh.validate();
  return mesh;
}

void write_mesh(const TriMesh& mesh, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write mesh file " + path);
  out << "# unit-disk triangulation\n";
  out << "# node: x y tag (tag -1 interior, 0 grounded, k>=1 electrode k-1)\n";
  out << "# element: n0 n1 n2 region\n";
  out << "nodes " << mesh.nodes.size() << "\n" << std::setprecision(17);
  for (std::size_t i = 0; i < mesh.nodes.size(); ++i) {
    out << mesh.nodes[i][0] << ' ' << mesh.nodes[i][1] << ' ' << mesh.node_tag[i] << '\n';
  }
  out << "elements " << mesh.elements.size() << "\n";
  for (std::size_t e = 0; e < mesh.elements.size(); ++e) {
    const auto& t = mesh.elements[e];
    out << t[0] << ' ' << t[1] << ' ' << t[2] << ' ' << mesh.region[e] << '\n';
  }
  if (!out) throw Error("error writing mesh file " + path);
}

namespace {

std::string next_content_line(std::istream& in) {
  std::string line;
  while (std::getline(in, line)) {
    const auto pos = line.find_first_not_of(" \t\r");
    if (pos == std::string::npos || line[pos] == '#') continue;
    return line;
  }
  return {};
}

std::size_t read_header(std::istream& in, const std::string& keyword, const std::string& path) {
  std::istringstream hs(next_content_line(in));
  std::string word;
  std::size_t n = 0;
  if (!(hs >> word >> n) || word != keyword) {
    throw FormatError("mesh file " + path + ": expected '" + keyword + " <count>'");
  }
  return n;
}

}  // namespace

TriMesh read_mesh(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open mesh file " + path);
  TriMesh mesh;
  const std::size_t nn = read_header(in, "nodes", path);
  mesh.nodes.resize(nn);
  mesh.node_tag.resize(nn);
  for (std::size_t i = 0; i < nn; ++i) {
    std::istringstream ls(next_content_line(in));
    if (!(ls >> mesh.nodes[i][0] >> mesh.nodes[i][1] >> mesh.node_tag[i])) {
      throw FormatError("mesh file " + path + ": bad node line " + std::to_string(i));
    }
  }
  const std::size_t ne = read_header(in, "elements", path);
  mesh.elements.resize(ne);
  mesh.region.resize(ne);
  for (std::size_t e = 0; e < ne; ++e) {
    std::istringstream ls(next_content_line(in));
    auto& t = mesh.elements[e];
    if (!(ls >> t[0] >> t[1] >> t[2] >> mesh.region[e])) {
      throw FormatError("mesh file " + path + ": bad element line " + std::to_string(e));
    }
  }
  try {
    mesh.validate();
  } catch (const Error& e) {
    throw FormatError("mesh file " + path + ": " + e.what());
  }
  return mesh;
}

}  // namespace rrmh::models
