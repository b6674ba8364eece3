#ifndef FRACFLOW_GRID_HPP
#define FRACFLOW_GRID_HPP

#include "fracflow/types.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <memory>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace fracflow {

/// Uniform cell-midpoint grid over a collar box B that contains the box
/// domain Omega. Nodes are ordered with x fastest.
template <typename Scalar>
class GridDomain {
 public:
  using Point = std::array<Scalar, 2>;

  int dim() const { return dim_; }
  int n_cells() const { return n_cells_; }
  /// Cells per axis of the collar box.
  int collar_cells() const { return collar_cells_; }
  Scalar collar_factor() const { return collar_factor_; }
  Scalar dx() const { return dx_; }
  Scalar vol() const { return vol_; }

  Index size() const { return static_cast<Index>(coords_.size()); }
  const Point& coord(Index i) const { return coords_[static_cast<std::size_t>(i)]; }
  bool is_interior(Index i) const { return interior_mask_[static_cast<std::size_t>(i)] != 0; }
  const std::vector<Index>& interior_indices() const { return interior_; }
  Index interior_count() const { return static_cast<Index>(interior_.size()); }

  Scalar omega_min(int axis) const { return omega_min_[axis]; }
  Scalar omega_max(int axis) const { return omega_max_[axis]; }
  Scalar collar_min(int axis) const { return collar_min_[axis]; }
  Scalar collar_max(int axis) const { return collar_max_[axis]; }

  Scalar omega_measure() const {
    Scalar m = 1;
    for (int a = 0; a < dim_; ++a) m *= omega_max_[a] - omega_min_[a];
    return m;
  }

  Scalar omega_diameter() const {
    Scalar d2 = 0;
    for (int a = 0; a < dim_; ++a) {
      const Scalar e = omega_max_[a] - omega_min_[a];
      d2 += e * e;
    }
    using std::sqrt;
    return sqrt(d2);
  }

  Scalar distance(Index i, Index j) const {
    Scalar d2 = 0;
    for (int a = 0; a < dim_; ++a) {
      const Scalar e = coord(i)[a] - coord(j)[a];
      d2 += e * e;
    }
    using std::sqrt;
    return sqrt(d2);
  }

  bool same_geometry(const GridDomain& o) const {
    if (dim_ != o.dim_ || n_cells_ != o.n_cells_ || collar_cells_ != o.collar_cells_) return false;
    for (int a = 0; a < dim_; ++a) {
      if (omega_min_[a] != o.omega_min_[a] || omega_max_[a] != o.omega_max_[a]) return false;
    }
    return true;
  }

  template <typename S>
  friend std::shared_ptr<const GridDomain<S>> build_grid(int, const std::vector<S>&,
                                                          const std::vector<S>&, int, S);

 private:
  GridDomain() = default;

  int dim_ = 1;
  int n_cells_ = 0;
  int collar_cells_ = 0;
  Scalar collar_factor_ = 1;
  Scalar dx_ = 0;
  Scalar vol_ = 0;
  Point omega_min_{};
  Point omega_max_{};
  Point collar_min_{};
  Point collar_max_{};
  std::vector<Point> coords_;
  std::vector<std::uint8_t> interior_mask_;
  std::vector<Index> interior_;
};

template <typename Scalar>
using DomainPtr = std::shared_ptr<const GridDomain<Scalar>>;

/// Builds the collar grid. The collar box keeps the cell width of Omega and
/// adds the same number of cells on both sides, so the number of collar
/// cells per axis is n_cells + 2*round((collar_factor - 1) * n_cells / 2).
template <typename Scalar>
std::shared_ptr<const GridDomain<Scalar>> build_grid(int dim, const std::vector<Scalar>& omega_min,
                                                      const std::vector<Scalar>& omega_max,
                                                      int n_cells, Scalar collar_factor) {
  using std::abs;
  using std::isfinite;
  if (dim != 1 && dim != 2) throw std::invalid_argument("dim must be 1 or 2");
  if (static_cast<int>(omega_min.size()) != dim || static_cast<int>(omega_max.size()) != dim)
    throw std::invalid_argument("omega_min/omega_max must have dim components");
  if (n_cells < 2) throw std::invalid_argument("n_cells must be at least 2");
  if (!(collar_factor >= Scalar(1)) || !isfinite(collar_factor))
    throw std::invalid_argument("collar_factor must be >= 1");
  for (int a = 0; a < dim; ++a) {
    if (!isfinite(omega_min[a]) || !isfinite(omega_max[a]) || !(omega_max[a] > omega_min[a]))
      throw std::invalid_argument("omega extent must be positive on every axis");
  }
  const Scalar extent = omega_max[0] - omega_min[0];
  if (dim == 2) {
    const Scalar extent_y = omega_max[1] - omega_min[1];
    if (abs(extent_y - extent) > Scalar(1e-12) * extent)
      throw std::invalid_argument("2D domains must be square (uniform cell width per axis)");
  }

  auto g = std::shared_ptr<GridDomain<Scalar>>(new GridDomain<Scalar>());
  g->dim_ = dim;
  g->n_cells_ = n_cells;
  g->collar_factor_ = collar_factor;
  const long pad = std::lround(static_cast<double>((collar_factor - Scalar(1)) * Scalar(n_cells) / Scalar(2)));
  g->collar_cells_ = n_cells + 2 * static_cast<int>(pad);
  g->dx_ = extent / Scalar(n_cells);
  g->vol_ = dim == 1 ? g->dx_ : g->dx_ * g->dx_;
  for (int a = 0; a < dim; ++a) {
    g->omega_min_[a] = omega_min[a];
    g->omega_max_[a] = omega_max[a];
    g->collar_min_[a] = omega_min[a] - Scalar(pad) * g->dx_;
    g->collar_max_[a] = omega_max[a] + Scalar(pad) * g->dx_;
  }

  const int m = g->collar_cells_;
  const std::size_t total = dim == 1 ? static_cast<std::size_t>(m) : static_cast<std::size_t>(m) * m;
  g->coords_.resize(total);
  g->interior_mask_.assign(total, 0);
  // Cell k of the collar covers cells k - pad .. of Omega; its midpoint is
  // omega_min + (k - pad + 1/2) dx, so interior cells are exactly k in [pad, pad + n_cells).
  auto mid = [&](int axis, int k) {
    return g->omega_min_[axis] + (Scalar(k - pad) + Scalar(0.5)) * g->dx_;
  };
  auto inside = [&](int k) { return k >= pad && k < pad + n_cells; };
  for (std::size_t idx = 0; idx < total; ++idx) {
    const int kx = static_cast<int>(idx % static_cast<std::size_t>(m));
    const int ky = dim == 1 ? 0 : static_cast<int>(idx / static_cast<std::size_t>(m));
    auto& c = g->coords_[idx];
    c[0] = mid(0, kx);
    c[1] = dim == 1 ? Scalar(0) : mid(1, ky);
    const bool in = inside(kx) && (dim == 1 || inside(ky));
    g->interior_mask_[idx] = in ? 1 : 0;
    if (in) g->interior_.push_back(static_cast<Index>(idx));
  }
  return g;
}

template <typename Scalar>
std::shared_ptr<const GridDomain<Scalar>> build_grid(int dim, Scalar omega_min, Scalar omega_max,
                                                      int n_cells, Scalar collar_factor = Scalar(2)) {
  return build_grid<Scalar>(dim, std::vector<Scalar>(static_cast<std::size_t>(dim), omega_min),
                            std::vector<Scalar>(static_cast<std::size_t>(dim), omega_max), n_cells,
                            collar_factor);
}

/// Real values on every collar node, identically zero on exterior nodes.
template <typename Scalar>
class GridFunction {
 public:
  using Vector = VectorX<Scalar>;

  explicit GridFunction(DomainPtr<Scalar> domain)
      : domain_(std::move(domain)), values_(Vector::Zero(domain_->size())) {}

  GridFunction(DomainPtr<Scalar> domain, Vector values)
      : domain_(std::move(domain)), values_(std::move(values)) {
    if (values_.size() != domain_->size())
      throw std::invalid_argument("grid function length does not match the domain");
    for (Index i = 0; i < values_.size(); ++i) {
      using std::isfinite;
      if (!isfinite(values_[i])) throw std::invalid_argument("grid function values must be finite");
      if (!domain_->is_interior(i) && values_[i] != Scalar(0))
        throw std::invalid_argument("grid function must vanish on exterior nodes");
    }
  }

  static GridFunction from_interior(DomainPtr<Scalar> domain, const Vector& interior) {
    if (interior.size() != domain->interior_count())
      throw std::invalid_argument("interior vector length does not match the domain");
    Vector v = Vector::Zero(domain->size());
    const auto& idx = domain->interior_indices();
    for (std::size_t k = 0; k < idx.size(); ++k) v[idx[k]] = interior[static_cast<Index>(k)];
    return GridFunction(std::move(domain), std::move(v));
  }

  const DomainPtr<Scalar>& domain() const { return domain_; }
  const Vector& values() const { return values_; }
  Scalar operator[](Index i) const { return values_[i]; }
  Index size() const { return values_.size(); }

  Vector interior_values() const {
    const auto& idx = domain_->interior_indices();
    Vector x(static_cast<Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) x[static_cast<Index>(k)] = values_[idx[k]];
    return x;
  }

  bool is_zero() const { return values_.cwiseAbs().maxCoeff() == Scalar(0); }

  Scalar linf() const { return values_.size() ? values_.cwiseAbs().maxCoeff() : Scalar(0); }

 private:
  DomainPtr<Scalar> domain_;
  Vector values_;
};

namespace detail {
template <typename Scalar>
void require_same_domain(const GridFunction<Scalar>& a, const GridFunction<Scalar>& b) {
  if (a.domain() != b.domain() && !a.domain()->same_geometry(*b.domain()))
    throw std::invalid_argument("grid functions live on different domains");
}
}  // namespace detail

template <typename Scalar>
GridFunction<Scalar> operator+(const GridFunction<Scalar>& a, const GridFunction<Scalar>& b) {
  detail::require_same_domain(a, b);
  return GridFunction<Scalar>(a.domain(), a.values() + b.values());
}

template <typename Scalar>
GridFunction<Scalar> operator-(const GridFunction<Scalar>& a, const GridFunction<Scalar>& b) {
  detail::require_same_domain(a, b);
  return GridFunction<Scalar>(a.domain(), a.values() - b.values());
}

template <typename Scalar>
GridFunction<Scalar> operator*(Scalar lambda, const GridFunction<Scalar>& a) {
  return GridFunction<Scalar>(a.domain(), lambda * a.values());
}

enum class PresetKind { Bump, Step, Random, Csv };

struct Preset {
  PresetKind kind = PresetKind::Bump;
  std::uint64_t seed = 1;
  std::string path;

  static Preset bump() { return {PresetKind::Bump, 1, {}}; }
  static Preset step() { return {PresetKind::Step, 1, {}}; }
  static Preset random(std::uint64_t seed) { return {PresetKind::Random, seed, {}}; }
  static Preset csv(std::string path) { return {PresetKind::Csv, 1, std::move(path)}; }
};

/// Reads one value per line, one line per collar node (x fastest).
template <typename Scalar>
VectorX<Scalar> read_node_csv(const std::string& path, Index expected) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open initial data file '" + path + "'");
  std::vector<Scalar> vals;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    std::istringstream ss(line.substr(first));
    long double v = 0;
    if (!(ss >> v)) {
      throw std::runtime_error("initial data file '" + path + "' line " + std::to_string(lineno) +
                               ": not a number");
    }
    vals.push_back(static_cast<Scalar>(v));
  }
  if (static_cast<Index>(vals.size()) != expected) {
    throw std::runtime_error("initial data file '" + path + "' has " + std::to_string(vals.size()) +
                             " values, expected " + std::to_string(expected));
  }
  return Eigen::Map<VectorX<Scalar>>(vals.data(), static_cast<Index>(vals.size()));
}

/// Initial data presets sampled at node centers; exterior nodes are zero.
template <typename Scalar>
GridFunction<Scalar> eval_preset(const DomainPtr<Scalar>& domain, const Preset& preset, Scalar amplitude) {
  using std::isfinite;
  if (!isfinite(amplitude)) throw std::invalid_argument("amplitude must be finite");
  const auto& g = *domain;
  VectorX<Scalar> v = VectorX<Scalar>::Zero(g.size());
  switch (preset.kind) {
    case PresetKind::Bump:
      for (Index i : g.interior_indices()) {
        Scalar b = 1;
        for (int a = 0; a < g.dim(); ++a) {
          const Scalar xi = (g.coord(i)[a] - g.omega_min(a)) / (g.omega_max(a) - g.omega_min(a));
          b *= Scalar(16) * xi * xi * (Scalar(1) - xi) * (Scalar(1) - xi);
        }
        v[i] = amplitude * b;
      }
      break;
    case PresetKind::Step:
      for (Index i : g.interior_indices()) {
        bool in = true;
        for (int a = 0; a < g.dim(); ++a) {
          const Scalar len = g.omega_max(a) - g.omega_min(a);
          const Scalar x = g.coord(i)[a];
          in = in && x >= g.omega_min(a) + len / Scalar(4) && x <= g.omega_max(a) - len / Scalar(4);
        }
        v[i] = in ? amplitude : Scalar(0);
      }
      break;
    case PresetKind::Random: {
      std::mt19937_64 rng(preset.seed);
      std::uniform_real_distribution<double> dist(-1.0, 1.0);
      for (Index i : g.interior_indices()) v[i] = amplitude * static_cast<Scalar>(dist(rng));
      break;
    }
    case PresetKind::Csv: {
      v = amplitude * read_node_csv<Scalar>(preset.path, g.size());
      for (Index i = 0; i < g.size(); ++i) {
        if (!g.is_interior(i) && v[i] != Scalar(0))
          throw std::runtime_error("initial data file '" + preset.path + "' has a nonzero value at exterior node " +
                                   std::to_string(i));
      }
      break;
    }
  }
  return GridFunction<Scalar>(domain, std::move(v));
}

}  // namespace fracflow

#endif  // FRACFLOW_GRID_HPP
