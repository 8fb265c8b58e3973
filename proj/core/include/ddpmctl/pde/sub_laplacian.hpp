#pragma once

#include <Eigen/SparseCore>
#include <vector>

#include "ddpmctl/pde/grid.hpp"
#include "ddpmctl/systems.hpp"

namespace ddpmctl::pde {

struct SparseOperator {
  Eigen::SparseMatrix<double, Eigen::RowMajor> matrix;
  bool symmetric = false;

  [[nodiscard]] Eigen::Index size() const { return matrix.rows(); }
  [[nodiscard]] Eigen::VectorXd apply(const Eigen::Ref<const Eigen::VectorXd>& v) const { return matrix * v; }
};

/// Interior (or periodic wrap) face between `cell` and its +1 neighbor on `axis`.
struct Face {
  Eigen::Index cell = 0;
  Eigen::Index upper = 0;
  int axis = 0;
};

/// Discretized operators of the control fields on a grid.
///
/// Each Y_i = g_i . grad is sampled on every face: the normal derivative is
/// the compact two-cell difference, tangential derivatives average the
/// centered differences of the two adjacent cells. The sub-Laplacian is the
/// Gram sum A = sum_i D_i^T D_i where D_i weights the face samples of Y_i by
/// sqrt((g_i . n)^2 / |g_i|^2), so the weights over the face families of
/// one point add up to one. For coordinate fields this reduces to the
/// standard compact Neumann Laplacian (with sign flipped).
struct SubLaplacian {
  GridSpec grid;
  std::vector<Face> faces;
  /// fields x faces: g_i evaluated at face midpoints (d-vectors).
  std::vector<Eigen::MatrixXd> face_fields;
  /// Unweighted Y_i sampled on faces (faces x cells).
  std::vector<Eigen::SparseMatrix<double, Eigen::RowMajor>> derivative;
  /// Face fluxes (faces x cells) with A phi = -div_h(flux * phi) exactly: the
  /// discrete counterpart of sum_i g_i (Y_i phi), where the tangential parts of
  /// each face sample are routed through the faces they difference across.
  Eigen::SparseMatrix<double, Eigen::RowMajor> flux;
  SparseOperator op;
};

/// Builds A for the system's control fields. The system state dimension must
/// equal the grid dimension. Throws std::invalid_argument when some
/// zero-flux wall point sees every field tangentially (a characteristic
/// boundary point).
SubLaplacian assemble_sub_laplacian(const GridSpec& grid, const ControlAffineSystem& fields);

/// Max over cells of |A 1|.
double constant_defect(const SparseOperator& op);

}  // namespace ddpmctl::pde
