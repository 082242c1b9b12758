#include "rrmh/models/ect.hpp"

#include <Eigen/SparseCholesky>

#include <cmath>

namespace rrmh::models {

EctSolver::EctSolver(TriMesh mesh) : mesh_(std::move(mesh)) {
  mesh_.validate();
  n_electrodes_ = mesh_.num_electrodes();
  if (n_electrodes_ < 2) throw Error("ect: mesh needs at least two electrodes");
  boundary_.resize(mesh_.num_nodes());
  bool any_free = false;
  for (std::size_t i = 0; i < mesh_.num_nodes(); ++i) {
    boundary_[i] = mesh_.node_tag[i] != kInteriorNode;
    any_free = any_free || !boundary_[i];
  }
  if (!any_free) throw Error("ect: mesh has no interior nodes");

  local_.reserve(mesh_.num_elements());
  for (const auto& t : mesh_.elements) {
    const auto& p0 = mesh_.nodes[t[0]];
    const auto& p1 = mesh_.nodes[t[1]];
    const auto& p2 = mesh_.nodes[t[2]];
    const double area2 = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
    // grad phi_i = (b_i, c_i) / area2
    const double b[3] = {p1[1] - p2[1], p2[1] - p0[1], p0[1] - p1[1]};
    const double c[3] = {p2[0] - p1[0], p0[0] - p2[0], p1[0] - p0[0]};
    std::array<double, 9> k{};
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) k[3 * i + j] = (b[i] * b[j] + c[i] * c[j]) / (2.0 * area2);
    }
    local_.push_back(k);
  }
}

Vector EctSolver::element_permittivity(const Vector& region_eps) const {
  if (region_eps.size() < mesh_.num_regions()) {
    throw DimensionError("ect: permittivity vector shorter than region count");
  }
  Vector e(static_cast<Index>(mesh_.num_elements()));
  for (std::size_t i = 0; i < mesh_.num_elements(); ++i) {
    const double v = region_eps[mesh_.region[i]];
    if (!(v > 0.0) || !std::isfinite(v)) throw SolverError("ect: permittivity must be positive");
    e[static_cast<Index>(i)] = v;
  }
  return e;
}

Eigen::SparseMatrix<double> EctSolver::stiffness(const Vector& elem_eps) const {
  require_dim(elem_eps.size(), static_cast<Index>(mesh_.num_elements()), "element permittivity");
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(9 * mesh_.num_elements());
  for (std::size_t e = 0; e < mesh_.num_elements(); ++e) {
    const auto& t = mesh_.elements[e];
    const double w = elem_eps[static_cast<Index>(e)];
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) trip.emplace_back(t[i], t[j], w * local_[e][3 * i + j]);
    }
  }
  const auto n = static_cast<Index>(mesh_.num_nodes());
  Eigen::SparseMatrix<double> k(n, n);
  k.setFromTriplets(trip.begin(), trip.end());
  return k;
}

namespace {

struct Partition {
  std::vector<Index> free_index;  // global -> free, -1 if fixed
  std::vector<Index> free_nodes;
};

Partition partition(const std::vector<bool>& fixed) {
  Partition p;
  p.free_index.assign(fixed.size(), -1);
  for (std::size_t i = 0; i < fixed.size(); ++i) {
    if (!fixed[i]) {
      p.free_index[i] = static_cast<Index>(p.free_nodes.size());
      p.free_nodes.push_back(static_cast<Index>(i));
    }
  }
  return p;
}

using Ldlt = Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>;

/// K_ff and the coupling K_fb as one matrix acting on the full vector.
void split(const Eigen::SparseMatrix<double>& k, const Partition& p,
           Eigen::SparseMatrix<double>& kff, Eigen::SparseMatrix<double>& kfx) {
  const auto nf = static_cast<Index>(p.free_nodes.size());
  std::vector<Eigen::Triplet<double>> tf, tx;
  for (Index col = 0; col < k.outerSize(); ++col) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(k, col); it; ++it) {
      const Index fr = p.free_index[static_cast<std::size_t>(it.row())];
      if (fr < 0) continue;
      const Index fc = p.free_index[static_cast<std::size_t>(it.col())];
      if (fc >= 0) {
        tf.emplace_back(fr, fc, it.value());
      } else {
        tx.emplace_back(fr, it.col(), it.value());
      }
    }
  }
  kff.resize(nf, nf);
  kff.setFromTriplets(tf.begin(), tf.end());
  kfx.resize(nf, k.cols());
  kfx.setFromTriplets(tx.begin(), tx.end());
}

void factor(Ldlt& ldlt, const Eigen::SparseMatrix<double>& kff) {
  ldlt.compute(kff);
  if (ldlt.info() != Eigen::Success) throw SolverError("ect: stiffness factorization failed");
  const Vector d = ldlt.vectorD();
  if (!(d.array() > 0.0).all()) throw SolverError("ect: reduced stiffness is not positive definite");
}

}  // namespace

Vector EctSolver::solve_dirichlet(const Vector& elem_eps, const std::vector<bool>& fixed,
                                  const Vector& values) const {
  require_dim(static_cast<Index>(fixed.size()), static_cast<Index>(mesh_.num_nodes()), "fixed mask");
  require_dim(values.size(), static_cast<Index>(mesh_.num_nodes()), "dirichlet values");
  const Partition p = partition(fixed);
  Vector v = values;
  if (p.free_nodes.empty()) return v;
  Eigen::SparseMatrix<double> kff, kfx;
  split(stiffness(elem_eps), p, kff, kfx);
  Ldlt ldlt;
  factor(ldlt, kff);
  Vector vb = values;
  for (Index i : p.free_nodes) vb[i] = 0.0;
  const Vector vf = ldlt.solve(-(kfx * vb));
  for (std::size_t i = 0; i < p.free_nodes.size(); ++i) v[p.free_nodes[i]] = vf[static_cast<Index>(i)];
  return v;
}

Vector EctSolver::solve(const Vector& region_eps, int excited, double v0) const {
  if (excited < 0 || excited >= n_electrodes_) throw Error("ect: electrode index out of range");
  Vector values = Vector::Zero(static_cast<Index>(mesh_.num_nodes()));
  for (std::size_t i = 0; i < mesh_.num_nodes(); ++i) {
    if (mesh_.node_tag[i] == excited + 1) values[static_cast<Index>(i)] = v0;
  }
  return solve_dirichlet(element_permittivity(region_eps), boundary_, values);
}

Matrix EctSolver::capacitance_matrix(const Vector& region_eps, double v0) const {
  const Vector eps = element_permittivity(region_eps);
  const Eigen::SparseMatrix<double> k = stiffness(eps);
  const Partition p = partition(boundary_);
  Eigen::SparseMatrix<double> kff, kfx;
  split(k, p, kff, kfx);
  Ldlt ldlt;
  factor(ldlt, kff);

  const auto n = static_cast<Index>(mesh_.num_nodes());
  Matrix c(n_electrodes_, n_electrodes_);
  for (int i = 0; i < n_electrodes_; ++i) {
    Vector v = Vector::Zero(n);
    for (Index a = 0; a < n; ++a) {
      if (mesh_.node_tag[static_cast<std::size_t>(a)] == i + 1) v[a] = v0;
    }
    const Vector vf = ldlt.solve(-(kfx * v));
    for (std::size_t a = 0; a < p.free_nodes.size(); ++a) v[p.free_nodes[a]] = vf[static_cast<Index>(a)];
    const Vector q = k * v;
    Vector charge = Vector::Zero(n_electrodes_);
    for (Index a = 0; a < n; ++a) {
      const int tag = mesh_.node_tag[static_cast<std::size_t>(a)];
      if (tag >= 1) charge[tag - 1] += q[a];
    }
    for (int j = 0; j < n_electrodes_; ++j) c(i, j) = (j == i ? charge[j] : -charge[j]) / v0;
  }
  return c;
}

DataVector upper_triangle(const Matrix& c) {
  const Index n = c.rows();
  DataVector out(n * (n - 1) / 2);
  Index k = 0;
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) out[k++] = c(i, j);
  }
  return out;
}

namespace {

TriMesh load_or_generate(const std::optional<std::string>& path, const DiskMeshOptions& opts) {
  return path ? read_mesh(*path) : generate_disk_mesh(opts);
}

}  // namespace

EctModel::EctModel(const EctOptions& opts)
    : fine_(load_or_generate(opts.fine_mesh_path, opts.fine)),
      coarse_(load_or_generate(opts.coarse_mesh_path, opts.coarse)),
      v0_(opts.v0),
      background_(opts.background_eps) {
  if (fine_.num_electrodes() != coarse_.num_electrodes()) {
    throw Error("ect: fine and coarse meshes have different electrode counts");
  }
  if (fine_.mesh().num_regions() != 6 || coarse_.mesh().num_regions() != 6) {
    throw Error("ect: meshes must carry regions 0..5");
  }
}

Index EctModel::data_dim() const {
  const Index n = fine_.num_electrodes();
  return n * (n - 1) / 2;
}

Vector EctModel::region_eps(const ParameterVector& x) const {
  require_dim(x.size(), 5, "ect permittivity");
  Vector e(6);
  e[0] = background_;
  e.tail(5) = x;
  return e;
}

DataVector EctModel::exact(const ParameterVector& x) const {
  return upper_triangle(fine_.capacitance_matrix(region_eps(x), v0_));
}

DataVector EctModel::reduced_raw(const ParameterVector& x) const {
  return upper_triangle(coarse_.capacitance_matrix(region_eps(x), v0_));
}

DataVector EctModel::reduced(const ParameterVector& x) const {
  DataVector raw = reduced_raw(x);
  return calibration_ ? calibration_->apply(raw) : raw;
}

ParameterVector ect_empty_frame() { return ParameterVector::Ones(5); }

ParameterVector ect_inclusion_frame() {
  ParameterVector x = ParameterVector::Ones(5);
  x[0] = 3.0;
  return x;
}

}  // namespace rrmh::models
