#include "ddpmctl/pde/sub_laplacian.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace ddpmctl::pde {

namespace {

using Triplets = std::vector<Eigen::Triplet<double>>;

// Adds coefficient * (centered difference along `axis` at `cell`) to row `row`.
void add_centered(const GridSpec& grid, Eigen::Index row, Eigen::Index cell, int axis, double coefficient,
                  Triplets& out) {
  const auto hi = grid.neighbor(cell, axis, +1).value_or(cell);
  const auto lo = grid.neighbor(cell, axis, -1).value_or(cell);
  const double s = coefficient / (2.0 * grid.spacing(axis));
  out.emplace_back(row, hi, s);
  out.emplace_back(row, lo, -s);
}

void check_non_characteristic(const GridSpec& grid, const ControlAffineSystem& sys) {
  Eigen::MatrixXd G(sys.state_dim, sys.input_dim);
  for (int a = 0; a < grid.dims(); ++a) {
    if (grid.boundary[static_cast<std::size_t>(a)] != Boundary::zero_flux) continue;
    const double h = grid.spacing(a);
    for (Eigen::Index c = 0; c < grid.size(); ++c) {
      for (int dir : {-1, +1}) {
        if (grid.neighbor(c, a, dir)) continue;
        Eigen::VectorXd x = grid.center(c);
        x[a] += 0.5 * dir * h;
        sys.fields(x, G);
        const double scale = std::max(1.0, G.cwiseAbs().maxCoeff());
        if (G.row(a).cwiseAbs().maxCoeff() <= 1e-12 * scale) {
          throw std::invalid_argument("sub-Laplacian: every control field is tangential to the zero-flux wall on axis " +
                                      std::to_string(a) + " (characteristic boundary point)");
        }
      }
    }
  }
}

}  // namespace

SubLaplacian assemble_sub_laplacian(const GridSpec& grid, const ControlAffineSystem& sys) {
  grid.validate();
  if (sys.state_dim != grid.dims()) {
    throw std::invalid_argument("sub-Laplacian: system dimension does not match the grid dimension");
  }
  check_non_characteristic(grid, sys);

  SubLaplacian out;
  out.grid = grid;
  for (int a = 0; a < grid.dims(); ++a)
    for (Eigen::Index c = 0; c < grid.size(); ++c)
      if (auto up = grid.neighbor(c, a, +1)) out.faces.push_back(Face{c, *up, a});

  const auto n_faces = static_cast<Eigen::Index>(out.faces.size());
  const Eigen::Index d = sys.state_dim;
  const Eigen::Index m = sys.input_dim;
  out.face_fields.assign(static_cast<std::size_t>(m), Eigen::MatrixXd(d, n_faces));
  Eigen::MatrixXd G(d, m);
  for (Eigen::Index f = 0; f < n_faces; ++f) {
    const Face& face = out.faces[static_cast<std::size_t>(f)];
    Eigen::VectorXd x = grid.center(face.cell);
    x[face.axis] += 0.5 * grid.spacing(face.axis);
    sys.fields(x, G);
    for (Eigen::Index i = 0; i < m; ++i) out.face_fields[static_cast<std::size_t>(i)].col(f) = G.col(i);
  }

  // up_face[b][c]: face between c and its +1 neighbor on axis b, or -1.
  std::vector<std::vector<Eigen::Index>> up_face(static_cast<std::size_t>(grid.dims()),
                                                 std::vector<Eigen::Index>(static_cast<std::size_t>(grid.size()), -1));
  for (Eigen::Index f = 0; f < n_faces; ++f) {
    const Face& face = out.faces[static_cast<std::size_t>(f)];
    up_face[static_cast<std::size_t>(face.axis)][static_cast<std::size_t>(face.cell)] = f;
  }

  Eigen::SparseMatrix<double, Eigen::RowMajor> gram(grid.size(), grid.size());
  Eigen::SparseMatrix<double, Eigen::RowMajor> flux(n_faces, grid.size());
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto& gi = out.face_fields[static_cast<std::size_t>(i)];
    Triplets plain, weighted, routing;
    Eigen::VectorXd w2 = Eigen::VectorXd::Zero(n_faces);
    for (Eigen::Index f = 0; f < n_faces; ++f) {
      const Face& face = out.faces[static_cast<std::size_t>(f)];
      const Eigen::VectorXd g = gi.col(f);
      const double g2 = g.squaredNorm();
      if (g2 == 0.0) continue;
      Triplets row;
      const double normal = g[face.axis] / grid.spacing(face.axis);
      row.emplace_back(f, face.upper, normal);
      row.emplace_back(f, face.cell, -normal);
      routing.emplace_back(f, f, g[face.axis]);
      for (int b = 0; b < grid.dims(); ++b) {
        if (b == face.axis || g[b] == 0.0) continue;
        for (const Eigen::Index c : {face.cell, face.upper}) {
          add_centered(grid, f, c, b, 0.5 * g[b], row);
          // The centered difference at c spans the b-faces on either side of c.
          const auto& ups = up_face[static_cast<std::size_t>(b)];
          if (auto lo = grid.neighbor(c, b, -1)) {
            if (ups[static_cast<std::size_t>(*lo)] >= 0) routing.emplace_back(ups[static_cast<std::size_t>(*lo)], f, 0.25 * g[b]);
          }
          if (ups[static_cast<std::size_t>(c)] >= 0) routing.emplace_back(ups[static_cast<std::size_t>(c)], f, 0.25 * g[b]);
        }
      }
      plain.insert(plain.end(), row.begin(), row.end());
      w2[f] = g[face.axis] * g[face.axis] / g2;
      const double w = std::sqrt(w2[f]);
      if (w == 0.0) continue;
      for (const auto& t : row) weighted.emplace_back(t.row(), t.col(), w * t.value());
    }
    Eigen::SparseMatrix<double, Eigen::RowMajor> y(n_faces, grid.size());
    y.setFromTriplets(plain.begin(), plain.end());
    Eigen::SparseMatrix<double, Eigen::RowMajor> dw(n_faces, grid.size());
    dw.setFromTriplets(weighted.begin(), weighted.end());
    Eigen::SparseMatrix<double, Eigen::RowMajor> contribution = Eigen::SparseMatrix<double, Eigen::RowMajor>(dw.transpose()) * dw;
    gram += contribution;
    Eigen::SparseMatrix<double, Eigen::RowMajor> route(n_faces, n_faces);
    route.setFromTriplets(routing.begin(), routing.end());
    Eigen::SparseMatrix<double, Eigen::RowMajor> weighted_y = w2.asDiagonal() * y;
    Eigen::SparseMatrix<double, Eigen::RowMajor> part = route * weighted_y;
    flux += part;
    out.derivative.push_back(std::move(y));
  }
  gram.prune(0.0);
  flux.prune(0.0);
  out.flux = std::move(flux);
  out.op.matrix = std::move(gram);
  out.op.symmetric = true;
  return out;
}

double constant_defect(const SparseOperator& op) {
  return op.apply(Eigen::VectorXd::Ones(op.size())).cwiseAbs().maxCoeff();
}

}  // namespace ddpmctl::pde
