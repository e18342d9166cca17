#include "kreinkit/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "lapack_wrap.hpp"

namespace kreinkit::models {

namespace {

using numlin::QuadRule;

void require(bool cond, const std::string& what) {
  if (!cond) throw std::invalid_argument(what);
}

// ---------------------------------------------------------------------------
// tridiagonal LU with partial pivoting (gttrf/gtts2 scheme)
// ---------------------------------------------------------------------------
struct TriFactor {
  ComplexVector dl, d, du, du2;
  std::vector<char> piv;

  void factor(ComplexVector sub, ComplexVector diag, ComplexVector sup) {
    const Eigen::Index n = diag.size();
    dl = std::move(sub);
    d = std::move(diag);
    du = std::move(sup);
    du2 = ComplexVector::Zero(std::max<Eigen::Index>(n - 2, 0));
    piv.assign(static_cast<std::size_t>(std::max<Eigen::Index>(n - 1, 0)), 0);
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
      if (std::abs(d(i)) >= std::abs(dl(i))) {
        if (d(i) != Complex(0.0)) {
          const Complex fact = dl(i) / d(i);
          dl(i) = fact;
          d(i + 1) -= fact * du(i);
        }
        if (i + 2 < n) du2(i) = 0.0;
      } else {
        const Complex fact = d(i) / dl(i);
        d(i) = dl(i);
        dl(i) = fact;
        const Complex temp = du(i);
        du(i) = d(i + 1);
        d(i + 1) = temp - fact * d(i + 1);
        if (i + 2 < n) {
          du2(i) = du(i + 1);
          du(i + 1) = -fact * du(i + 1);
        }
        piv[static_cast<std::size_t>(i)] = 1;
      }
    }
    if (n > 0 && d(n - 1) == Complex(0.0))
      throw std::runtime_error("singular tridiagonal system");
  }

  void solve_in_place(Eigen::Ref<ComplexVector> b) const {
    const Eigen::Index n = d.size();
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
      if (!piv[static_cast<std::size_t>(i)]) {
        b(i + 1) -= dl(i) * b(i);
      } else {
        const Complex temp = b(i);
        b(i) = b(i + 1);
        b(i + 1) = temp - dl(i) * b(i);
      }
    }
    b(n - 1) /= d(n - 1);
    if (n > 1) b(n - 2) = (b(n - 2) - du(n - 2) * b(n - 1)) / d(n - 2);
    for (Eigen::Index i = n - 3; i >= 0; --i)
      b(i) = (b(i) - du(i) * b(i + 1) - du2(i) * b(i + 2)) / d(i);
  }
};

// ---------------------------------------------------------------------------
// block layout
// ---------------------------------------------------------------------------
struct Block {
  Eigen::Index n = 0;
  Eigen::Index offset = 0;
  double x0 = 0.0;      // global coordinate of the left face
  double len = 0.0;
  double h = 0.0;
  double shift = 0.0;
  bool left_port = false;
  bool right_port = false;
};

struct PortRef {
  int block;
  bool left;
};

}  // namespace

// ---------------------------------------------------------------------------
// GridModel
// ---------------------------------------------------------------------------
namespace {

class GridModel final : public Model {
 public:
  GridModel(std::string kind, std::vector<Block> blocks, double eps)
      : kind_(std::move(kind)), blocks_(std::move(blocks)), epsilon_(eps) {
    Eigen::Index total = 0;
    for (auto& b : blocks_) {
      b.offset = total;
      total += b.n;
    }
    RealVector nodes(total), weights(total);
    double length = 0.0;
    for (const auto& b : blocks_) {
      for (Eigen::Index i = 0; i < b.n; ++i) {
        nodes(b.offset + i) = b.x0 + (static_cast<double>(i) + 0.5) * b.h;
        weights(b.offset + i) = b.h;
      }
      length += b.len;
    }
    numlin::Domain dom{blocks_.front().x0, blocks_.front().x0 + length,
                       kind_.rfind("halfline", 0) == 0};
    space_ = std::make_shared<numlin::GridSpace>(dom, std::move(nodes),
                                                 std::move(weights),
                                                 QuadRule::Midpoint);
    for (int bi = 0; bi < static_cast<int>(blocks_.size()); ++bi) {
      const auto& b = blocks_[static_cast<std::size_t>(bi)];
      if (b.left_port) {
        ports_.push_back({bi, true});
        flagged_.push_back(b.offset);
      }
      if (b.right_port) {
        ports_.push_back({bi, false});
        flagged_.push_back(b.offset + b.n - 1);
      }
      boundary_rows_.push_back(b.offset);
      boundary_rows_.push_back(b.offset + b.n - 1);
    }
    kernel_modes_ = solution_modes(0.0);
    build_basis(kernel_modes_, kernel_basis_, kernel_basis_traces_);
    auto nplus_modes = solution_modes(Complex(0.0, 1.0));
    SubspaceBasis nb;
    ComplexMatrix unused;
    build_basis(nplus_modes, nb, unused);
    nplus_basis_ = std::move(nb);
    krein_bc_ = bc_annihilating(kernel_basis_traces_);
  }

  std::string kind() const override { return kind_; }
  const SpacePtr& space() const override { return space_; }
  double epsilon() const override { return epsilon_; }
  int deficiency_index() const override { return static_cast<int>(ports_.size()); }
  int port_count() const override { return static_cast<int>(ports_.size()); }
  const std::vector<Eigen::Index>& flagged_rows() const override { return flagged_; }
  const std::vector<Eigen::Index>& boundary_rows() const override {
    return boundary_rows_;
  }

  GridFun apply_adjoint(const GridFun& u) const override {
    require(u.space->same_as(*space_), "grid space mismatch");
    ComplexVector out = stencil(u.values, /*zero_ghosts=*/false);
    for (auto row : flagged_) out(row) = 0.0;
    return GridFun(space_, std::move(out));
  }

  ComplexVector apply_adjoint_minimal(const ComplexVector& u) const override {
    return stencil(u, /*zero_ghosts=*/true);
  }

  std::vector<Mode> solution_modes(Complex z) const override {
    std::vector<Mode> modes;
    const auto r = static_cast<Eigen::Index>(2 * ports_.size());
    for (int bi = 0; bi < static_cast<int>(blocks_.size()); ++bi) {
      const auto& b = blocks_[static_cast<std::size_t>(bi)];
      const Complex beta = 2.0 + b.h * b.h * (b.shift - z);
      const bool degenerate = std::abs(beta - 2.0) < 1e-13 * std::max(1.0, std::abs(beta));
      const Eigen::Index total = space_->size();
      auto blank = [&] {
        Mode m;
        m.values = ComplexVector::Zero(total);
        m.traces = ComplexVector::Zero(r);
        return m;
      };
      const int pl = port_id(bi, true);
      const int pr = port_id(bi, false);
      if (degenerate) {
        require(b.left_port && b.right_port,
                "degenerate recurrence on a truncated block");
        Mode c = blank();  // constant
        Mode x = blank();  // local coordinate
        for (Eigen::Index i = 0; i < b.n; ++i) {
          c.values(b.offset + i) = 1.0;
          x.values(b.offset + i) = (static_cast<double>(i) + 0.5) * b.h;
        }
        c.traces(2 * pl) = 1.0;
        c.traces(2 * pr) = 1.0;
        x.traces(2 * pl) = 0.0;
        x.traces(2 * pl + 1) = 1.0;
        x.traces(2 * pr) = b.len;
        x.traces(2 * pr + 1) = 1.0;
        modes.push_back(std::move(c));
        modes.push_back(std::move(x));
        continue;
      }
      const Complex disc = std::sqrt(beta * beta - 4.0);
      if (std::abs(disc) < 1e-13)
        throw std::runtime_error("degenerate spectral parameter for this grid");
      Complex rho = (beta + disc) / 2.0;
      if (std::abs(rho) > 1.0) rho = (beta - disc) / 2.0;
      const Complex rinv = 1.0 / rho;
      auto powv = [&](bool reversed) {
        ComplexVector v(b.n);
        Complex p = 1.0;
        for (Eigen::Index i = 0; i < b.n; ++i) {
          v(reversed ? b.n - 1 - i : i) = p;
          p *= rho;
        }
        return v;
      };
      const Complex rn = [&] {
        Complex p = 1.0;
        for (Eigen::Index i = 0; i < b.n; ++i) p *= rho;
        return p;
      }();
      if (b.left_port && b.right_port) {
        Mode m1 = blank();  // rho^j, decays from the left face
        m1.values.segment(b.offset, b.n) = powv(false);
        m1.traces(2 * pl) = (rinv + 1.0) / 2.0;
        m1.traces(2 * pl + 1) = (1.0 - rinv) / b.h;
        m1.traces(2 * pr) = (rn / rho + rn) / 2.0;
        m1.traces(2 * pr + 1) = (rn - rn / rho) / b.h;
        Mode m2 = blank();  // rho^{n-1-j}
        m2.values.segment(b.offset, b.n) = powv(true);
        m2.traces(2 * pl) = (rn + rn / rho) / 2.0;
        m2.traces(2 * pl + 1) = (rn / rho - rn) / b.h;
        m2.traces(2 * pr) = (1.0 + rinv) / 2.0;
        m2.traces(2 * pr + 1) = (rinv - 1.0) / b.h;
        modes.push_back(std::move(m1));
        modes.push_back(std::move(m2));
      } else if (b.left_port && !b.right_port) {
        // right face carries the built-in truncation (Dirichlet at the face):
        // w_j = rho^j - rho^{2n-1-j} vanishes at that face exactly
        Mode m = blank();
        ComplexVector fwd = powv(false), bwd = powv(true);
        const Complex r2n = rn * rn;
        m.values.segment(b.offset, b.n) = fwd - rn * bwd;
        m.traces(2 * pl) = (rinv - r2n + 1.0 - r2n * rinv) / 2.0;
        m.traces(2 * pl + 1) = (1.0 - r2n * rinv - rinv + r2n) / b.h;
        modes.push_back(std::move(m));
      } else {
        throw std::runtime_error("unsupported block port layout");
      }
    }
    return modes;
  }

  const std::vector<Mode>& kernel_modes() const override { return kernel_modes_; }
  const SubspaceBasis& kernel_basis() const override { return kernel_basis_; }
  const SubspaceBasis& nplus_basis() const override { return nplus_basis_; }

  SubspaceBasis deficiency_basis_at(Complex z) const override {
    auto modes = solution_modes(z);
    SubspaceBasis basis;
    ComplexMatrix unused;
    build_basis(modes, basis, unused);
    return basis;
  }

  ComplexMatrix friedrichs_bc() const override {
    const auto r = static_cast<Eigen::Index>(ports_.size());
    ComplexMatrix bc = ComplexMatrix::Zero(r, 2 * r);
    for (Eigen::Index p = 0; p < r; ++p) bc(p, 2 * p) = 1.0;
    return bc;
  }

  ComplexMatrix krein_bc() const override { return krein_bc_; }

  ComplexMatrix kernel_basis_traces() const override { return kernel_basis_traces_; }

  ComplexVector resolve(const ComplexMatrix& bc, Complex z,
                        const ComplexVector& f) const override {
    Factorization fac = make_factorization(bc, z);
    return solve_with(fac, f);
  }

  ComplexMatrix resolve_dense(const ComplexMatrix& bc, Complex z) const override {
    Factorization fac = make_factorization(bc, z);
    const Eigen::Index n = space_->size();
    ComplexMatrix out(n, n);
    ComplexVector e = ComplexVector::Zero(n);
    for (Eigen::Index c = 0; c < n; ++c) {
      e(c) = 1.0;
      out.col(c) = solve_with(fac, e);
      e(c) = 0.0;
    }
    return out;
  }

  ComplexMatrix operator_dense(const ComplexMatrix& bc) const override {
    const Eigen::Index n = space_->size();
    ComplexMatrix t = ComplexMatrix::Zero(n, n);
    for (const auto& b : blocks_) {
      for (Eigen::Index i = 0; i < b.n; ++i) {
        const Eigen::Index g = b.offset + i;
        t(g, g) = 2.0 / (b.h * b.h) + b.shift;
        if (i > 0) t(g, g - 1) = -1.0 / (b.h * b.h);
        if (i + 1 < b.n) t(g, g + 1) = -1.0 / (b.h * b.h);
      }
      // built-in Dirichlet closure on every face
      t(b.offset, b.offset) += 1.0 / (b.h * b.h);
      t(b.offset + b.n - 1, b.offset + b.n - 1) += 1.0 / (b.h * b.h);
    }
    const Closure cl = make_closure(bc);
    for (std::size_t p = 0; p < ports_.size(); ++p)
      for (std::size_t q = 0; q < ports_.size(); ++q)
        t(adjacent_cell(static_cast<int>(p)), adjacent_cell(static_cast<int>(q))) +=
            cl.delta(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(q));
    return t;
  }

  ComplexVector dirichlet_traces(const ComplexVector& u) const override {
    const auto r = static_cast<Eigen::Index>(ports_.size());
    ComplexVector tr = ComplexVector::Zero(2 * r);
    for (Eigen::Index p = 0; p < r; ++p) {
      const auto& port = ports_[static_cast<std::size_t>(p)];
      const auto& b = blocks_[static_cast<std::size_t>(port.block)];
      const Complex uadj = u(adjacent_cell(static_cast<int>(p)));
      tr(2 * p) = 0.0;  // face value vanishes for the Dirichlet solve
      tr(2 * p + 1) = (port.left ? 2.0 : -2.0) * uadj / b.h;
    }
    return tr;
  }

  ComplexVector pde_face_values(const ComplexVector& u, const ComplexVector& f,
                                Complex z) const override {
    const auto r = static_cast<Eigen::Index>(ports_.size());
    ComplexVector out(r);
    for (Eigen::Index p = 0; p < r; ++p) {
      const auto& port = ports_[static_cast<std::size_t>(p)];
      const auto& b = blocks_[static_cast<std::size_t>(port.block)];
      const Eigen::Index adj = adjacent_cell(static_cast<int>(p));
      const Eigen::Index inward = port.left ? adj + 1 : adj - 1;
      const Complex ghost = 2.0 * u(adj) - u(inward) +
                            b.h * b.h * ((b.shift - z) * u(adj) - f(adj));
      out(p) = (ghost + u(adj)) / 2.0;
    }
    return out;
  }

  ComplexVector port_face_values(const ComplexVector& u) const override {
    const auto r = static_cast<Eigen::Index>(ports_.size());
    ComplexVector out(r);
    for (Eigen::Index p = 0; p < r; ++p) {
      const auto& port = ports_[static_cast<std::size_t>(p)];
      const auto& b = blocks_[static_cast<std::size_t>(port.block)];
      const Eigen::Index adj = adjacent_cell(static_cast<int>(p));
      const Eigen::Index inward = port.left ? adj + 1 : adj - 1;
      out(p) = 1.5 * u(adj) - 0.5 * u(inward);
    }
    return out;
  }

  GridFun sample_domain_element(std::mt19937_64& rng) const override {
    std::normal_distribution<double> gauss(0.0, 1.0);
    ComplexVector v = ComplexVector::Zero(space_->size());
    for (const auto& b : blocks_) {
      if (kind_.rfind("halfline", 0) == 0) {
        // x^2 e^{-x}-type envelope times a low-order polynomial
        double c0 = gauss(rng), c1 = gauss(rng), c2 = gauss(rng);
        for (Eigen::Index i = 0; i < b.n; ++i) {
          const double x = (static_cast<double>(i) + 0.5) * b.h;
          v(b.offset + i) = x * x * std::exp(-x) * (c0 + c1 * x + c2 * x * x / 10.0);
        }
      } else {
        // low sine modes with 1/k^2 falloff
        constexpr int kmax = 8;
        double coef[kmax];
        for (int k = 0; k < kmax; ++k) coef[k] = gauss(rng) / ((k + 1.0) * (k + 1.0));
        for (Eigen::Index i = 0; i < b.n; ++i) {
          const double xi = (static_cast<double>(i) + 0.5) * b.h / b.len;
          double s = 0.0;
          for (int k = 0; k < kmax; ++k)
            s += coef[k] * std::sin((k + 1) * M_PI * xi);
          v(b.offset + i) = s;
        }
      }
    }
    for (auto row : flagged_) v(row) = 0.0;
    GridFun g(space_, std::move(v));
    const double nrm = numlin::norm(g);
    if (nrm > 0) g.values /= nrm;
    return g;
  }

  std::shared_ptr<const Model> resized(Eigen::Index n) const override;
  std::shared_ptr<const Model> with_shift(double c) const override;

  // --- internals shared with the factories ---------------------------------
  struct Closure {
    ComplexMatrix recon;   // ghosts = recon * adjacent cells
    ComplexMatrix delta;   // correction to the all-Dirichlet reference
  };

  struct Factorization {
    Complex z;
    std::vector<TriFactor> blocks;
    ComplexMatrix delta;              // r x r
    ComplexMatrix f_cols;             // n x r: (T0 - z)^{-1} E
    Eigen::PartialPivLU<ComplexMatrix> capacitance;
  };

  Closure make_closure(const ComplexMatrix& bc) const {
    const auto r = static_cast<Eigen::Index>(ports_.size());
    require(bc.rows() == r && bc.cols() == 2 * r,
            "boundary-condition matrix has the wrong shape");
    ComplexMatrix mghost(r, r), madj(r, r);
    for (Eigen::Index i = 0; i < r; ++i) {
      for (Eigen::Index p = 0; p < r; ++p) {
        const auto& port = ports_[static_cast<std::size_t>(p)];
        const double h = blocks_[static_cast<std::size_t>(port.block)].h;
        const double sg = port.left ? -1.0 : 1.0;
        mghost(i, p) = bc(i, 2 * p) * 0.5 + bc(i, 2 * p + 1) * (sg / h);
        madj(i, p) = bc(i, 2 * p) * 0.5 - bc(i, 2 * p + 1) * (sg / h);
      }
    }
    Eigen::FullPivLU<ComplexMatrix> lu(mghost);
    lu.setThreshold(1e-12);
    if (lu.rank() < r)
      throw std::invalid_argument(
          "boundary-condition matrix is rank-deficient at the ghost cells");
    Closure cl;
    cl.recon = -lu.solve(madj);
    cl.delta.resize(r, r);
    for (Eigen::Index p = 0; p < r; ++p) {
      const double h = blocks_[static_cast<std::size_t>(
                                   ports_[static_cast<std::size_t>(p)].block)].h;
      for (Eigen::Index q = 0; q < r; ++q)
        cl.delta(p, q) = -(cl.recon(p, q) + (p == q ? 1.0 : 0.0)) / (h * h);
    }
    // weighted Hermitian symmetrization (weights are h per block)
    ComplexMatrix wd = cl.delta;
    for (Eigen::Index p = 0; p < r; ++p)
      wd.row(p) *= blocks_[static_cast<std::size_t>(
                               ports_[static_cast<std::size_t>(p)].block)].h;
    const double defect = (wd - wd.adjoint()).norm();
    if (defect > 1e-6 * (wd.norm() + 1.0))
      throw std::invalid_argument("boundary conditions are not self-adjoint");
    wd = 0.5 * (wd + wd.adjoint()).eval();
    for (Eigen::Index p = 0; p < r; ++p)
      cl.delta.row(p) = wd.row(p) /
                        blocks_[static_cast<std::size_t>(
                                    ports_[static_cast<std::size_t>(p)].block)].h;
    return cl;
  }

  Factorization make_factorization(const ComplexMatrix& bc, Complex z) const {
    Factorization fac;
    fac.z = z;
    const Closure cl = make_closure(bc);
    fac.delta = cl.delta;
    fac.blocks.resize(blocks_.size());
    for (std::size_t bi = 0; bi < blocks_.size(); ++bi) {
      const auto& b = blocks_[bi];
      const double ih2 = 1.0 / (b.h * b.h);
      ComplexVector diag = ComplexVector::Constant(b.n, 2.0 * ih2 + b.shift - z);
      diag(0) += ih2;
      diag(b.n - 1) += ih2;
      ComplexVector off = ComplexVector::Constant(std::max<Eigen::Index>(b.n - 1, 0), -ih2);
      fac.blocks[bi].factor(off, std::move(diag), off);
    }
    const auto r = static_cast<Eigen::Index>(ports_.size());
    const Eigen::Index n = space_->size();
    fac.f_cols.resize(n, r);
    for (Eigen::Index p = 0; p < r; ++p) {
      ComplexVector e = ComplexVector::Zero(n);
      e(adjacent_cell(static_cast<int>(p))) = 1.0;
      block_solve(fac, e);
      fac.f_cols.col(p) = e;
    }
    ComplexMatrix cap = ComplexMatrix::Identity(r, r);
    for (Eigen::Index q = 0; q < r; ++q)
      cap.col(q) += fac.delta * etf(fac, q);
    fac.capacitance.compute(cap);
    return fac;
  }

  // E^T * f_col(q): values of the q-th solved column at the adjacent cells
  ComplexVector etf(const Factorization& fac, Eigen::Index q) const {
    const auto r = static_cast<Eigen::Index>(ports_.size());
    ComplexVector v(r);
    for (Eigen::Index p = 0; p < r; ++p)
      v(p) = fac.f_cols(adjacent_cell(static_cast<int>(p)), q);
    return v;
  }

  void block_solve(const Factorization& fac, Eigen::Ref<ComplexVector> x) const {
    for (std::size_t bi = 0; bi < blocks_.size(); ++bi) {
      const auto& b = blocks_[bi];
      fac.blocks[bi].solve_in_place(x.segment(b.offset, b.n));
    }
  }

  ComplexVector solve_with(const Factorization& fac, const ComplexVector& f) const {
    const auto r = static_cast<Eigen::Index>(ports_.size());
    ComplexVector y = f;
    block_solve(fac, y);
    ComplexVector ety(r);
    for (Eigen::Index p = 0; p < r; ++p)
      ety(p) = y(adjacent_cell(static_cast<int>(p)));
    const ComplexVector corr = fac.capacitance.solve((fac.delta * ety).eval());
    y.noalias() -= fac.f_cols * corr;
    return y;
  }

  Eigen::Index adjacent_cell(int port) const {
    const auto& pr = ports_[static_cast<std::size_t>(port)];
    const auto& b = blocks_[static_cast<std::size_t>(pr.block)];
    return pr.left ? b.offset : b.offset + b.n - 1;
  }

  const std::vector<Block>& blocks() const { return blocks_; }

 private:
  int port_id(int block, bool left) const {
    for (int p = 0; p < static_cast<int>(ports_.size()); ++p)
      if (ports_[static_cast<std::size_t>(p)].block == block &&
          ports_[static_cast<std::size_t>(p)].left == left)
        return p;
    return -1;
  }

  ComplexVector stencil(const ComplexVector& u, bool zero_ghosts) const {
    ComplexVector out = ComplexVector::Zero(space_->size());
    for (const auto& b : blocks_) {
      const double ih2 = 1.0 / (b.h * b.h);
      for (Eigen::Index i = 1; i + 1 < b.n; ++i) {
        const Eigen::Index g = b.offset + i;
        out(g) = (-u(g - 1) + 2.0 * u(g) - u(g + 1)) * ih2 + b.shift * u(g);
      }
      // faces: ghost is zero on the minimal domain, Dirichlet (-u) when the
      // face is a built-in truncation
      const Complex gl = (b.left_port && zero_ghosts) ? Complex(0.0)
                        : (b.left_port ? Complex(0.0) : -u(b.offset));
      const Complex gr = (b.right_port && zero_ghosts) ? Complex(0.0)
                        : (b.right_port ? Complex(0.0) : -u(b.offset + b.n - 1));
      out(b.offset) = (-gl + 2.0 * u(b.offset) -
                       (b.n > 1 ? u(b.offset + 1) : Complex(0.0))) * ih2 +
                      b.shift * u(b.offset);
      const Eigen::Index last = b.offset + b.n - 1;
      out(last) = (-(b.n > 1 ? u(last - 1) : Complex(0.0)) + 2.0 * u(last) - gr) * ih2 +
                  b.shift * u(last);
    }
    return out;
  }

  void build_basis(const std::vector<Mode>& modes, SubspaceBasis& basis,
                   ComplexMatrix& basis_traces) const {
    const auto r = static_cast<Eigen::Index>(modes.size());
    ComplexMatrix raw(space_->size(), r), traces(2 * ports_.size(), r);
    for (Eigen::Index k = 0; k < r; ++k) {
      raw.col(k) = modes[static_cast<std::size_t>(k)].values;
      traces.col(k) = modes[static_cast<std::size_t>(k)].traces;
    }
    basis = numlin::orthonormalize_columns(space_, raw);
    // coefficient matrix S with basis.columns = raw * S
    const auto& w = space_->weights();
    ComplexMatrix gram = raw.adjoint() * (w.cast<Complex>().asDiagonal() * raw);
    ComplexMatrix rhs = raw.adjoint() * (w.cast<Complex>().asDiagonal() * basis.columns);
    ComplexMatrix s = gram.ldlt().solve(rhs);
    basis_traces = traces * s;
  }

  ComplexMatrix bc_annihilating(const ComplexMatrix& trace_cols) const {
    const auto r = static_cast<Eigen::Index>(ports_.size());
    Eigen::JacobiSVD<ComplexMatrix> svd(trace_cols, Eigen::ComputeFullU);
    if (svd.rank() < trace_cols.cols())
      throw std::runtime_error("kernel-mode traces are rank deficient");
    ComplexMatrix bc = svd.matrixU().rightCols(2 * r - trace_cols.cols()).adjoint();
    if (bc.imag().cwiseAbs().maxCoeff() < 1e-13 * bc.norm())
      bc.imag().setZero();
    return bc;
  }

  std::string kind_;
  std::vector<Block> blocks_;
  double epsilon_;
  SpacePtr space_;
  std::vector<PortRef> ports_;
  std::vector<Eigen::Index> flagged_;
  std::vector<Eigen::Index> boundary_rows_;
  std::vector<Mode> kernel_modes_;
  SubspaceBasis kernel_basis_;
  ComplexMatrix kernel_basis_traces_;
  SubspaceBasis nplus_basis_;
  ComplexMatrix krein_bc_;
};

}  // namespace

// ---------------------------------------------------------------------------
// factories
// ---------------------------------------------------------------------------
namespace {

std::shared_ptr<GridModel> make_interval(Eigen::Index n, double shift) {
  require(n >= 64, "interval model needs n >= 64");
  Block b;
  b.n = n;
  b.x0 = 0.0;
  b.len = 1.0;
  b.h = 1.0 / static_cast<double>(n);
  b.shift = shift;
  b.left_port = b.right_port = true;
  const double eps = M_PI * M_PI + shift;
  return std::make_shared<GridModel>(
      shift == 0.0 ? "interval" : "interval+shift", std::vector<Block>{b}, eps);
}

std::shared_ptr<GridModel> make_halfline(Eigen::Index n, double L, double shift) {
  require(n >= 512, "halfline model needs n >= 512");
  require(L >= 20.0, "halfline model needs L >= 20");
  if (std::exp(-L) > 1e-8)
    throw std::invalid_argument("truncation too short for the decay tolerance");
  Block b;
  b.n = n;
  b.x0 = 0.0;
  b.len = L;
  b.h = L / static_cast<double>(n);
  b.shift = 1.0 + shift;
  b.left_port = true;
  b.right_port = false;
  return std::make_shared<GridModel>("halfline", std::vector<Block>{b}, 1.0 + shift);
}

}  // namespace

ModelPtr interval_laplacian(Eigen::Index n) { return make_interval(n, 0.0); }

ModelPtr halfline_schroedinger(Eigen::Index n, double L) {
  return make_halfline(n, L, 0.0);
}

ModelPtr direct_sum(const std::vector<ModelPtr>& parts) {
  require(!parts.empty(), "direct sum of an empty list");
  require(parts.size() >= 2, "direct sum needs at least two parts");
  std::vector<Block> blocks;
  double eps = std::numeric_limits<double>::infinity();
  double x0 = 0.0;
  std::string kind = "dsum(";
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const auto* gm = dynamic_cast<const GridModel*>(parts[k].get());
    require(gm != nullptr, "direct sum parts must be grid models");
    for (Block b : gm->blocks()) {
      b.x0 = x0;
      x0 += b.len;
      blocks.push_back(b);
    }
    eps = std::min(eps, parts[k]->epsilon());
    kind += parts[k]->kind();
    kind += (k + 1 < parts.size()) ? "," : "";
  }
  kind += ")";
  return std::make_shared<GridModel>(kind, std::move(blocks), eps);
}

std::shared_ptr<const Model> GridModel::resized(Eigen::Index n) const {
  std::vector<Block> blocks = blocks_;
  Eigen::Index total = 0;
  for (const auto& b : blocks) total += b.n;
  double x0 = blocks.front().x0;
  for (auto& b : blocks) {
    b.n = std::max<Eigen::Index>(8, (b.n * n) / total);
    b.h = b.len / static_cast<double>(b.n);
    b.x0 = x0;
    x0 += b.len;
  }
  return std::make_shared<GridModel>(kind_, std::move(blocks), epsilon_);
}

std::shared_ptr<const Model> GridModel::with_shift(double c) const {
  std::vector<Block> blocks = blocks_;
  for (auto& b : blocks) b.shift += c;
  return std::make_shared<GridModel>(kind_ + "+shift", std::move(blocks),
                                     epsilon_ + c);
}

// ---------------------------------------------------------------------------
// unitary conjugation
// ---------------------------------------------------------------------------
namespace {

class ConjugatedModel final : public Model {
 public:
  ConjugatedModel(ModelPtr base, ComplexMatrix u, ComplexMatrix uinv)
      : base_(std::move(base)), u_(std::move(u)), uinv_(std::move(uinv)) {
    auto conj_basis = [&](const SubspaceBasis& b) {
      SubspaceBasis out = b;
      out.columns = u_ * b.columns;
      return out;
    };
    kernel_basis_ = conj_basis(base_->kernel_basis());
    nplus_basis_ = conj_basis(base_->nplus_basis());
    kernel_modes_ = base_->kernel_modes();
    for (auto& m : kernel_modes_) m.values = u_ * m.values;
  }

  std::string kind() const override { return "conjugated(" + base_->kind() + ")"; }
  const SpacePtr& space() const override { return base_->space(); }
  double epsilon() const override { return base_->epsilon(); }
  int deficiency_index() const override { return base_->deficiency_index(); }
  int port_count() const override { return base_->port_count(); }

  GridFun apply_adjoint(const GridFun& f) const override {
    GridFun pulled(f.space, uinv_ * f.values);
    GridFun base_out = base_->apply_adjoint(pulled);
    return GridFun(f.space, u_ * base_out.values);
  }

  const std::vector<Eigen::Index>& flagged_rows() const override {
    return base_->flagged_rows();
  }
  const std::vector<Eigen::Index>& boundary_rows() const override {
    return base_->boundary_rows();
  }

  ComplexVector apply_adjoint_minimal(const ComplexVector& v) const override {
    return u_ * base_->apply_adjoint_minimal(uinv_ * v);
  }

  std::vector<Mode> solution_modes(Complex z) const override {
    auto modes = base_->solution_modes(z);
    for (auto& m : modes) m.values = u_ * m.values;
    return modes;
  }

  const std::vector<Mode>& kernel_modes() const override { return kernel_modes_; }
  const SubspaceBasis& kernel_basis() const override { return kernel_basis_; }
  const SubspaceBasis& nplus_basis() const override { return nplus_basis_; }

  SubspaceBasis deficiency_basis_at(Complex z) const override {
    SubspaceBasis b = base_->deficiency_basis_at(z);
    b.columns = u_ * b.columns;
    return b;
  }

  ComplexMatrix friedrichs_bc() const override { return base_->friedrichs_bc(); }
  ComplexMatrix krein_bc() const override { return base_->krein_bc(); }
  ComplexMatrix kernel_basis_traces() const override {
    return base_->kernel_basis_traces();
  }

  ComplexVector resolve(const ComplexMatrix& bc, Complex z,
                        const ComplexVector& f) const override {
    return u_ * base_->resolve(bc, z, uinv_ * f);
  }
  ComplexMatrix resolve_dense(const ComplexMatrix& bc, Complex z) const override {
    return u_ * base_->resolve_dense(bc, z) * uinv_;
  }
  ComplexMatrix operator_dense(const ComplexMatrix& bc) const override {
    return u_ * base_->operator_dense(bc) * uinv_;
  }
  ComplexVector dirichlet_traces(const ComplexVector& v) const override {
    return base_->dirichlet_traces(uinv_ * v);
  }
  ComplexVector port_face_values(const ComplexVector& v) const override {
    return base_->port_face_values(uinv_ * v);
  }
  ComplexVector pde_face_values(const ComplexVector& v, const ComplexVector& f,
                                Complex z) const override {
    return base_->pde_face_values(uinv_ * v, uinv_ * f, z);
  }
  GridFun sample_domain_element(std::mt19937_64& rng) const override {
    GridFun g = base_->sample_domain_element(rng);
    return GridFun(g.space, u_ * g.values);
  }
  std::shared_ptr<const Model> resized(Eigen::Index) const override {
    throw std::logic_error("conjugated models do not support resizing");
  }
  std::shared_ptr<const Model> with_shift(double c) const override {
    return std::make_shared<ConjugatedModel>(base_->with_shift(c), u_, uinv_);
  }

 private:
  ModelPtr base_;
  ComplexMatrix u_, uinv_;
  std::vector<Mode> kernel_modes_;
  SubspaceBasis kernel_basis_;
  SubspaceBasis nplus_basis_;
};

}  // namespace

ModelPtr unitary_conjugate(const ModelPtr& model, const KernelOperator& u) {
  require(u.space->same_as(*model->space()), "grid space mismatch");
  const ComplexMatrix uadj = numlin::weighted_adjoint(*u.space, u.matrix);
  const double defect =
      numlin::operator_norm_estimate(ComplexMatrix(uadj * u.matrix -
                                                   ComplexMatrix::Identity(u.size(), u.size())));
  if (defect > 1e-10) throw std::invalid_argument("conjugation requires a unitary");
  return std::make_shared<ConjugatedModel>(model, u.matrix, uadj);
}

KernelOperator friedrichs_green(const Model& model, Complex z) {
  ComplexMatrix r = model.resolve_dense(model.friedrichs_bc(), z);
  return KernelOperator(model.space(), std::move(r), z.imag() == 0.0);
}

}  // namespace kreinkit::models
