#pragma once

#include "rrmh/eem.hpp"
#include "rrmh/forward_pair.hpp"
#include "rrmh/models/mesh.hpp"

#include <Eigen/Sparse>

#include <optional>

namespace rrmh::models {

/// P1 finite elements for div(eps grad V) = 0 on a TriMesh, with Dirichlet
/// data on every boundary-tagged node.
class EctSolver {
 public:
  explicit EctSolver(TriMesh mesh);

  const TriMesh& mesh() const { return mesh_; }
  int num_electrodes() const { return n_electrodes_; }

  /// Per-element permittivity from per-region values.
  Vector element_permittivity(const Vector& region_eps) const;

  /// Global stiffness matrix for the given per-element permittivity.
  Eigen::SparseMatrix<double> stiffness(const Vector& elem_eps) const;

  /// Solve with V fixed at `values[i]` wherever `fixed[i]` is true.
  /// Throws SolverError if the reduced stiffness is not SPD.
  Vector solve_dirichlet(const Vector& elem_eps, const std::vector<bool>& fixed,
                         const Vector& values) const;

  /// Potential with electrode `excited` at v0, every other boundary node at 0.
  Vector solve(const Vector& region_eps, int excited, double v0 = 1.0) const;

  /// Full n_e x n_e capacitance matrix: C(i,j) = -(1/v0) sum_{k in electrode j} (K V_i)_k
  /// for i != j, and the self-charge on the diagonal. One factorization for all excitations.
  Matrix capacitance_matrix(const Vector& region_eps, double v0 = 1.0) const;

 private:
  TriMesh mesh_;
  int n_electrodes_ = 0;
  /// Local stiffness per element for unit permittivity (row-major 3x3).
  std::vector<std::array<double, 9>> local_;
  std::vector<bool> boundary_;
};

/// Upper-triangle entries C(i,j), i<j, row by row.
DataVector upper_triangle(const Matrix& c);

struct EctOptions {
  std::optional<std::string> fine_mesh_path;
  std::optional<std::string> coarse_mesh_path;
  DiskMeshOptions fine{2, 6};
  DiskMeshOptions coarse{1, 3};
  double v0 = 1.0;
  double background_eps = 1.0;
};

/// Forward pair over the five ROI permittivities (centre disk, four annulus
/// quadrants). Exact = fine mesh, reduced = coarse mesh with an optional
/// offset-gain calibration applied to its output.
class EctModel final : public ForwardModel {
 public:
  explicit EctModel(const EctOptions& opts = {});

  Index param_dim() const override { return 5; }
  Index data_dim() const override;
  DataVector exact(const ParameterVector& x) const override;
  DataVector reduced(const ParameterVector& x) const override;
  std::string name() const override { return "ect"; }

  /// Coarse map without calibration.
  DataVector reduced_raw(const ParameterVector& x) const;
  void set_calibration(std::optional<GainOffset> cal) { calibration_ = std::move(cal); }
  const std::optional<GainOffset>& calibration() const { return calibration_; }

  const EctSolver& fine() const { return fine_; }
  const EctSolver& coarse() const { return coarse_; }
  Vector region_eps(const ParameterVector& x) const;

 private:
  EctSolver fine_, coarse_;
  double v0_;
  double background_;
  std::optional<GainOffset> calibration_;
};

/// Calibration parameter vectors: empty pipe (all 1) and a centred inclusion
/// (centre disk 3, rest 1).
ParameterVector ect_empty_frame();
ParameterVector ect_inclusion_frame();

}  // namespace rrmh::models
