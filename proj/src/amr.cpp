/* Copyright 2026 the amtbench authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "amtbench/amr.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <stdexcept>

#include "amtbench/errors.hpp"

namespace amt {

namespace {

constexpr int kAxisU[3] = {1, 0, 0};  // transverse axes per face axis,
constexpr int kAxisV[3] = {2, 2, 1};  // in ascending-axis order

int child_octant(int cx, int cy, int cz) { return cx | (cy << 1) | (cz << 2); }

}  // namespace

// ---------------------------------------------------------------------------
// ScenarioConfig

double ScenarioConfig::initial_value(double x, double y, double z) const {
  double value = 0.0;
  for (const auto& blob : blobs) {
    const double dx = x - blob.center[0];
    const double dy = y - blob.center[1];
    const double dz = z - blob.center[2];
    const double r2 = dx * dx + dy * dy + dz * dz;
    value += blob.amplitude * std::exp(-r2 / (2.0 * blob.width * blob.width));
  }
  return value;
}

std::array<double, 3> ScenarioConfig::velocity(double x, double y,
                                               double /*z*/) const {
  return {-omega * (y - 0.5), omega * (x - 0.5), 0.0};
}

double ScenarioConfig::effective_dt() const {
  if (dt > 0.0) return dt;
  const double h_min = 1.0 / (static_cast<double>(n_cells) * (1 << max_level));
  // |vx| + |vy| <= omega over the unit cube.
  const double v_sum = omega > 0.0 ? omega : 1.0;
  return cfl * h_min / v_sum;
}

void ScenarioConfig::validate() const {
  if (max_level < 0) throw ConfigError("max_level must be >= 0");
  if (max_level > 12) throw ConfigError("max_level is unreasonably deep");
  if (n_cells < 2 || n_cells % 2 != 0)
    throw ConfigError("n_cells must be even and >= 2");
  if (threshold <= 0.0) throw ConfigError("threshold must be positive");
  if (regrid_interval < 1) throw ConfigError("regrid_interval must be >= 1");
  if (steps < 0) throw ConfigError("steps must be >= 0");
  if (cfl <= 0.0 || cfl > 1.0) throw ConfigError("cfl must be in (0, 1]");
  for (const auto& blob : blobs)
    if (blob.width <= 0.0) throw ConfigError("blob width must be positive");
  if (dt > 0.0 && omega > 0.0) {
    const double h_min =
        1.0 / (static_cast<double>(n_cells) * (1 << max_level));
    if (dt * omega / h_min > 1.0 + 1e-12)
      throw ConfigError("dt violates the CFL stability bound");
  }
}

std::string ScenarioConfig::digest() const {
  std::ostringstream os;
  os << max_level << '|' << n_cells << '|' << threshold << '|'
     << regrid_interval << '|' << omega << '|' << cfl << '|' << dt << '|'
     << steps;
  for (const auto& blob : blobs)
    os << '|' << blob.center[0] << ',' << blob.center[1] << ','
       << blob.center[2] << ',' << blob.width << ',' << blob.amplitude;
  const std::string text = os.str();
  std::uint64_t hash = 1469598103934665603ull;  // FNV-1a
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(hash));
  return buf;
}

// ---------------------------------------------------------------------------
// SubGrid / Octree

double SubGrid::box_lo(int axis) const {
  return static_cast<double>(index[axis]) / (1 << level);
}

double SubGrid::box_hi(int axis) const {
  return static_cast<double>(index[axis] + 1) / (1 << level);
}

double SubGrid::cell_size(int n_cells) const {
  return 1.0 / (static_cast<double>(n_cells) * (1 << level));
}

Octree::Octree(int n_cells) : n_cells_(n_cells) {
  if (n_cells < 2 || n_cells % 2 != 0)
    throw ConfigError("n_cells must be even and >= 2");
  root_ = std::make_unique<SubGrid>();
}

namespace {

template <typename GridT, typename F>
void walk_leaves(GridT& node, F&& fn) {
  if (node.is_leaf()) {
    fn(node);
    return;
  }
  for (auto& child : node.children) walk_leaves(*child, fn);
}

}  // namespace

std::vector<SubGrid*> Octree::leaves() {
  std::vector<SubGrid*> out;
  walk_leaves(*root_, [&](SubGrid& g) { out.push_back(&g); });
  return out;
}

std::vector<const SubGrid*> Octree::leaves() const {
  std::vector<const SubGrid*> out;
  walk_leaves(*root_, [&](const SubGrid& g) { out.push_back(&g); });
  return out;
}

std::uint64_t Octree::node_count() const {
  std::uint64_t n = 0;
  std::function<void(const SubGrid&)> rec = [&](const SubGrid& g) {
    ++n;
    if (!g.is_leaf())
      for (const auto& child : g.children) rec(*child);
  };
  rec(*root_);
  return n;
}

const SubGrid* Octree::node_towards(int level, int i, int j, int k) const {
  const SubGrid* node = root_.get();
  for (int d = level - 1; d >= 0; --d) {
    if (node->is_leaf()) break;
    const int cx = (i >> d) & 1;
    const int cy = (j >> d) & 1;
    const int cz = (k >> d) & 1;
    node = node->children[child_octant(cx, cy, cz)].get();
  }
  return node;
}

void Octree::refine(SubGrid& leaf, bool prolong_field) {
  if (!leaf.is_leaf()) throw std::logic_error("refine of a non-leaf");
  const int n = n_cells_;
  for (int cz = 0; cz < 2; ++cz)
    for (int cy = 0; cy < 2; ++cy)
      for (int cx = 0; cx < 2; ++cx) {
        auto child = std::make_unique<SubGrid>();
        child->level = leaf.level + 1;
        child->index = {leaf.index[0] * 2 + cx, leaf.index[1] * 2 + cy,
                        leaf.index[2] * 2 + cz};
        child->parent = &leaf;
        child->owner = leaf.owner;
        if (prolong_field && !leaf.cells.empty()) {
          child->cells.resize(static_cast<std::size_t>(n) * n * n);
          for (int ck = 0; ck < n; ++ck)
            for (int cj = 0; cj < n; ++cj)
              for (int ci = 0; ci < n; ++ci) {
                const int pi = (cx * n + ci) / 2;
                const int pj = (cy * n + cj) / 2;
                const int pk = (cz * n + ck) / 2;
                child->cells[(static_cast<std::size_t>(ck) * n + cj) * n + ci] =
                    leaf.cells[(static_cast<std::size_t>(pk) * n + pj) * n + pi];
              }
        }
        leaf.children[child_octant(cx, cy, cz)] = std::move(child);
      }
  leaf.cells.clear();
  leaf.cells.shrink_to_fit();
  leaf.frozen.clear();
  leaf.frozen.shrink_to_fit();
}

void Octree::coarsen(SubGrid& node) {
  if (node.is_leaf()) throw std::logic_error("coarsen of a leaf");
  const int n = n_cells_;
  for (const auto& child : node.children) {
    if (!child->is_leaf()) throw std::logic_error("coarsen with non-leaf children");
    if (child->cells.empty())
      throw std::logic_error("coarsen with uninitialized children");
  }
  node.cells.assign(static_cast<std::size_t>(n) * n * n, 0.0);
  for (int ck = 0; ck < n; ++ck)
    for (int cj = 0; cj < n; ++cj)
      for (int ci = 0; ci < n; ++ci) {
        // Pairwise summation: for 8 equal fine values every partial sum
        // is a power-of-two multiple, so the mean recovers an injected
        // value bitwise (sequential 3v/5v/7v partials would round).
        double fine[8];
        for (int dz = 0; dz < 2; ++dz)
          for (int dy = 0; dy < 2; ++dy)
            for (int dx = 0; dx < 2; ++dx) {
              const int fi = 2 * ci + dx;
              const int fj = 2 * cj + dy;
              const int fk = 2 * ck + dz;
              const SubGrid& child =
                  *node.children[child_octant(fi / n, fj / n, fk / n)];
              fine[(dz * 2 + dy) * 2 + dx] =
                  child.cells[(static_cast<std::size_t>(fk % n) * n +
                               (fj % n)) * n + (fi % n)];
            }
        const double sum = ((fine[0] + fine[1]) + (fine[2] + fine[3])) +
                           ((fine[4] + fine[5]) + (fine[6] + fine[7]));
        node.cells[(static_cast<std::size_t>(ck) * n + cj) * n + ci] =
            sum / 8.0;
      }
  for (auto& child : node.children) child.reset();
  node.frozen.clear();
}

// ---------------------------------------------------------------------------
// Neighbors

FaceNeighbor face_neighbor(const Octree& tree, const SubGrid& leaf, int axis,
                           int dir) {
  FaceNeighbor out;
  const int level = leaf.level;
  const int extent = 1 << level;
  std::array<int, 3> ni = leaf.index;
  ni[axis] += dir;
  if (ni[axis] < 0 || ni[axis] >= extent) {
    out.kind = FaceNeighbor::Kind::kBoundary;
    return out;
  }

  const SubGrid* node = tree.node_towards(level, ni[0], ni[1], ni[2]);
  if (node->is_leaf()) {
    if (node->level == level) {
      out.kind = FaceNeighbor::Kind::kSame;
    } else if (node->level == level - 1) {
      out.kind = FaceNeighbor::Kind::kCoarse;
    } else {
      throw std::logic_error("tree violates 2:1 balance");
    }
    out.neighbor = node;
    return out;
  }

  // Finer neighbors: the four near-side children of the face-adjacent node.
  out.kind = FaceNeighbor::Kind::kFine;
  const int ca = dir > 0 ? 0 : 1;
  const int au = kAxisU[axis];
  const int av = kAxisV[axis];
  for (int dv = 0; dv < 2; ++dv)
    for (int du = 0; du < 2; ++du) {
      std::array<int, 3> bits{};
      bits[axis] = ca;
      bits[au] = du;
      bits[av] = dv;
      const SubGrid* child =
          node->children[child_octant(bits[0], bits[1], bits[2])].get();
      if (!child->is_leaf())
        throw std::logic_error("tree violates 2:1 balance");
      out.fine[dv * 2 + du] = child;
    }
  return out;
}

// ---------------------------------------------------------------------------
// Build and balance

namespace {

bool field_exceeds_threshold(const ScenarioConfig& config, const SubGrid& g) {
  const int n = config.n_cells;
  const double h = g.cell_size(n);
  for (int ck = 0; ck < n; ++ck)
    for (int cj = 0; cj < n; ++cj)
      for (int ci = 0; ci < n; ++ci) {
        const double x = g.box_lo(0) + (ci + 0.5) * h;
        const double y = g.box_lo(1) + (cj + 0.5) * h;
        const double z = g.box_lo(2) + (ck + 0.5) * h;
        if (config.initial_value(x, y, z) > config.threshold) return true;
      }
  return false;
}

}  // namespace

void enforce_two_to_one(Octree& tree, bool prolong_field) {
  bool changed = true;
  while (changed) {
    changed = false;
    for (SubGrid* leaf : tree.leaves()) {
      const int level = leaf->level;
      const int extent = 1 << level;
      for (int axis = 0; axis < 3; ++axis)
        for (int dir = -1; dir <= 1; dir += 2) {
          std::array<int, 3> ni = leaf->index;
          ni[axis] += dir;
          if (ni[axis] < 0 || ni[axis] >= extent) continue;
          const SubGrid* node = tree.node_towards(level, ni[0], ni[1], ni[2]);
          if (node->is_leaf() && node->level < level - 1) {
            tree.refine(const_cast<SubGrid&>(*node), prolong_field);
            changed = true;
          }
        }
    }
  }
}

Octree build_initial_tree(const ScenarioConfig& config) {
  config.validate();
  Octree tree(config.n_cells);

  std::function<void(SubGrid&)> refine_rec = [&](SubGrid& g) {
    if (g.level >= config.max_level) return;
    if (!field_exceeds_threshold(config, g)) return;
    tree.refine(g, false);
    for (auto& child : g.children) refine_rec(*child);
  };
  refine_rec(tree.root());
  enforce_two_to_one(tree, false);

  const int n = config.n_cells;
  for (SubGrid* leaf : tree.leaves()) {
    leaf->cells.resize(static_cast<std::size_t>(n) * n * n);
    const double h = leaf->cell_size(n);
    for (int ck = 0; ck < n; ++ck)
      for (int cj = 0; cj < n; ++cj)
        for (int ci = 0; ci < n; ++ci) {
          const double x = leaf->box_lo(0) + (ci + 0.5) * h;
          const double y = leaf->box_lo(1) + (cj + 0.5) * h;
          const double z = leaf->box_lo(2) + (ck + 0.5) * h;
          leaf->cells[(static_cast<std::size_t>(ck) * n + cj) * n + ci] =
              config.initial_value(x, y, z);
        }
  }
  return tree;
}

std::uint64_t count_amr_boundaries(const Octree& tree) {
  std::uint64_t count = 0;
  for (const SubGrid* leaf : tree.leaves())
    for (int axis = 0; axis < 3; ++axis)
      for (int dir = -1; dir <= 1; dir += 2)
        if (face_neighbor(tree, *leaf, axis, dir).kind ==
            FaceNeighbor::Kind::kCoarse)
          ++count;
  return count;
}

// ---------------------------------------------------------------------------
// Ghost layers

namespace {

const std::vector<double>& field_of(const SubGrid& g, bool use_frozen) {
  const std::vector<double>& data = use_frozen ? g.frozen : g.cells;
  if (data.empty())
    throw std::logic_error("missing neighbor data during ghost exchange");
  return data;
}

std::size_t cell_index(int n, int ci, int cj, int ck) {
  return (static_cast<std::size_t>(ck) * n + cj) * n + ci;
}

// Value at (a-coordinate ca, transverse u, v) for face axis `axis`.
double at_face(const std::vector<double>& cells, int n, int axis, int ca,
               int u, int v) {
  std::array<int, 3> c{};
  c[axis] = ca;
  c[kAxisU[axis]] = u;
  c[kAxisV[axis]] = v;
  return cells[cell_index(n, c[0], c[1], c[2])];
}

}  // namespace

GhostLayers fill_ghosts(const Octree& tree, const SubGrid& leaf,
                        bool use_frozen) {
  const int n = tree.n_cells();
  GhostLayers ghosts;
  for (int axis = 0; axis < 3; ++axis)
    for (int dir = -1; dir <= 1; dir += 2) {
      GhostFace& face = ghosts[axis * 2 + (dir > 0 ? 1 : 0)];
      face.values.resize(static_cast<std::size_t>(n) * n);
      const FaceNeighbor fn = face_neighbor(tree, leaf, axis, dir);
      face.kind = fn.kind;
      const int au = kAxisU[axis];
      const int av = kAxisV[axis];

      switch (fn.kind) {
        case FaceNeighbor::Kind::kBoundary: {
          // Reflecting: mirror the leaf's own boundary layer.
          const auto& own = field_of(leaf, use_frozen);
          const int ca = dir > 0 ? n - 1 : 0;
          for (int v = 0; v < n; ++v)
            for (int u = 0; u < n; ++u)
              face.values[static_cast<std::size_t>(v) * n + u] =
                  at_face(own, n, axis, ca, u, v);
          break;
        }
        case FaceNeighbor::Kind::kSame: {
          const auto& nb = field_of(*fn.neighbor, use_frozen);
          const int ca = dir > 0 ? 0 : n - 1;
          for (int v = 0; v < n; ++v)
            for (int u = 0; u < n; ++u)
              face.values[static_cast<std::size_t>(v) * n + u] =
                  at_face(nb, n, axis, ca, u, v);
          break;
        }
        case FaceNeighbor::Kind::kCoarse: {
          // Piecewise-constant injection from the coarse neighbor.
          const auto& nb = field_of(*fn.neighbor, use_frozen);
          const int ca = dir > 0 ? 0 : n - 1;
          for (int v = 0; v < n; ++v)
            for (int u = 0; u < n; ++u) {
              const long gu = static_cast<long>(leaf.index[au]) * n + u;
              const long gv = static_cast<long>(leaf.index[av]) * n + v;
              const int cu =
                  static_cast<int>(gu / 2 - static_cast<long>(
                                                fn.neighbor->index[au]) * n);
              const int cv =
                  static_cast<int>(gv / 2 - static_cast<long>(
                                                fn.neighbor->index[av]) * n);
              face.values[static_cast<std::size_t>(v) * n + u] =
                  at_face(nb, n, axis, ca, cu, cv);
            }
          break;
        }
        case FaceNeighbor::Kind::kFine: {
          // Restriction: arithmetic mean of the four covering fine cells.
          const int fa = dir > 0 ? 0 : n - 1;
          for (int v = 0; v < n; ++v)
            for (int u = 0; u < n; ++u) {
              const long gu = static_cast<long>(leaf.index[au]) * n + u;
              const long gv = static_cast<long>(leaf.index[av]) * n + v;
              double sum = 0.0;
              for (int dv = 0; dv < 2; ++dv)
                for (int du = 0; du < 2; ++du) {
                  const long fgu = 2 * gu + du;
                  const long fgv = 2 * gv + dv;
                  const int off_u = static_cast<int>(fgu / n) % 2;
                  const int off_v = static_cast<int>(fgv / n) % 2;
                  const SubGrid* fine = fn.fine[off_v * 2 + off_u];
                  const auto& fdata = field_of(*fine, use_frozen);
                  sum += at_face(fdata, n, axis, fa,
                                 static_cast<int>(fgu % n),
                                 static_cast<int>(fgv % n));
                }
              face.values[static_cast<std::size_t>(v) * n + u] = sum / 4.0;
            }
          break;
        }
      }
    }
  return ghosts;
}

// ---------------------------------------------------------------------------
// Advection kernel

namespace {

// Face-normal velocity evaluated from global integer face coordinates at
// `level`, so both sides of any face compute bitwise-identical values.
double face_normal_velocity(const ScenarioConfig& config, int axis, int level,
                            long gface, long gt1, long gt2) {
  const double h = 1.0 / (static_cast<double>(config.n_cells) * (1 << level));
  std::array<double, 3> pos{};
  pos[axis] = static_cast<double>(gface) * h;
  pos[kAxisU[axis]] = (static_cast<double>(gt1) + 0.5) * h;
  pos[kAxisV[axis]] = (static_cast<double>(gt2) + 0.5) * h;
  return config.velocity(pos[0], pos[1], pos[2])[axis];
}

double upwind_flux(double vn, double u_minus, double u_plus) {
  return vn >= 0.0 ? vn * u_minus : vn * u_plus;
}

}  // namespace

std::vector<double> advect_leaf(const Octree& tree, const SubGrid& leaf,
                                const ScenarioConfig& config,
                                int* amr_faces_out) {
  const int n = tree.n_cells();
  const int level = leaf.level;
  const double h = leaf.cell_size(n);
  const double dt = config.effective_dt();
  const double dtoh = dt / h;

  const std::vector<double>& old = field_of(leaf, true);
  std::vector<double> out = old;
  const GhostLayers ghosts = fill_ghosts(tree, leaf, true);
  int amr_faces = 0;

  // Interior faces.
  for (int axis = 0; axis < 3; ++axis) {
    const int au = kAxisU[axis];
    const int av = kAxisV[axis];
    for (int t2 = 0; t2 < n; ++t2)
      for (int t1 = 0; t1 < n; ++t1)
        for (int f = 1; f < n; ++f) {
          const long gface = static_cast<long>(leaf.index[axis]) * n + f;
          const long gt1 = static_cast<long>(leaf.index[au]) * n + t1;
          const long gt2 = static_cast<long>(leaf.index[av]) * n + t2;
          const double vn =
              face_normal_velocity(config, axis, level, gface, gt1, gt2);
          std::array<int, 3> lo{};
          lo[axis] = f - 1;
          lo[au] = t1;
          lo[av] = t2;
          std::array<int, 3> hi = lo;
          hi[axis] = f;
          const std::size_t i_lo = cell_index(n, lo[0], lo[1], lo[2]);
          const std::size_t i_hi = cell_index(n, hi[0], hi[1], hi[2]);
          const double flux = upwind_flux(vn, old[i_lo], old[i_hi]);
          out[i_lo] -= dtoh * flux;
          out[i_hi] += dtoh * flux;
        }
  }

  // Boundary faces of the sub-grid.
  for (int axis = 0; axis < 3; ++axis) {
    const int au = kAxisU[axis];
    const int av = kAxisV[axis];
    for (int dir = -1; dir <= 1; dir += 2) {
      const GhostFace& ghost = ghosts[axis * 2 + (dir > 0 ? 1 : 0)];
      const int ca = dir > 0 ? n - 1 : 0;

      switch (ghost.kind) {
        case FaceNeighbor::Kind::kBoundary:
          break;  // closed walls: zero flux
        case FaceNeighbor::Kind::kSame:
        case FaceNeighbor::Kind::kCoarse: {
          if (ghost.kind == FaceNeighbor::Kind::kCoarse) ++amr_faces;
          const long gface = static_cast<long>(leaf.index[axis]) * n +
                             (dir > 0 ? n : 0);
          for (int t2 = 0; t2 < n; ++t2)
            for (int t1 = 0; t1 < n; ++t1) {
              const long gt1 = static_cast<long>(leaf.index[au]) * n + t1;
              const long gt2 = static_cast<long>(leaf.index[av]) * n + t2;
              const double vn =
                  face_normal_velocity(config, axis, level, gface, gt1, gt2);
              std::array<int, 3> c{};
              c[axis] = ca;
              c[au] = t1;
              c[av] = t2;
              const std::size_t idx = cell_index(n, c[0], c[1], c[2]);
              const double u_own = old[idx];
              const double u_nbr =
                  ghost.values[static_cast<std::size_t>(t2) * n + t1];
              if (dir > 0)
                out[idx] -= dtoh * upwind_flux(vn, u_own, u_nbr);
              else
                out[idx] += dtoh * upwind_flux(vn, u_nbr, u_own);
            }
          break;
        }
        case FaceNeighbor::Kind::kFine: {
          // The fine side owns the flux: apply the mean of the four fine
          // sub-face fluxes, evaluated at the fine level so both sides use
          // identical numbers.
          const FaceNeighbor fn = face_neighbor(tree, leaf, axis, dir);
          const long gface_fine =
              2L * (static_cast<long>(leaf.index[axis]) * n +
                    (dir > 0 ? n : 0));
          const int fa = dir > 0 ? 0 : n - 1;
          for (int t2 = 0; t2 < n; ++t2)
            for (int t1 = 0; t1 < n; ++t1) {
              std::array<int, 3> c{};
              c[axis] = ca;
              c[au] = t1;
              c[av] = t2;
              const std::size_t idx = cell_index(n, c[0], c[1], c[2]);
              const double u_own = old[idx];
              double flux_sum = 0.0;
              for (int dv = 0; dv < 2; ++dv)
                for (int du = 0; du < 2; ++du) {
                  const long fgt1 =
                      2L * (static_cast<long>(leaf.index[au]) * n + t1) + du;
                  const long fgt2 =
                      2L * (static_cast<long>(leaf.index[av]) * n + t2) + dv;
                  const double vn = face_normal_velocity(
                      config, axis, level + 1, gface_fine, fgt1, fgt2);
                  const int off_u = static_cast<int>(fgt1 / n) % 2;
                  const int off_v = static_cast<int>(fgt2 / n) % 2;
                  const SubGrid* fine = fn.fine[off_v * 2 + off_u];
                  const double u_fine =
                      at_face(field_of(*fine, true), n, axis, fa,
                              static_cast<int>(fgt1 % n),
                              static_cast<int>(fgt2 % n));
                  flux_sum += dir > 0 ? upwind_flux(vn, u_own, u_fine)
                                      : upwind_flux(vn, u_fine, u_own);
                }
              if (dir > 0)
                out[idx] -= dtoh * (flux_sum / 4.0);
              else
                out[idx] += dtoh * (flux_sum / 4.0);
            }
          break;
        }
      }
    }
  }

  if (amr_faces_out) *amr_faces_out = amr_faces;
  return out;
}

void freeze_fields(Octree& tree) {
  for (SubGrid* leaf : tree.leaves()) leaf->frozen = leaf->cells;
}

void step_serial(Octree& tree, const ScenarioConfig& config) {
  freeze_fields(tree);
  for (SubGrid* leaf : tree.leaves())
    leaf->cells = advect_leaf(tree, *leaf, config);
}

// ---------------------------------------------------------------------------
// Regridding

namespace {

bool any_above(const std::vector<double>& cells, double threshold) {
  for (double v : cells)
    if (v > threshold) return true;
  return false;
}

}  // namespace

void regrid(Octree& tree, const ScenarioConfig& config) {
  // Coarsen sibling groups entirely below threshold/2 (hysteresis).
  std::function<void(SubGrid&)> coarsen_rec = [&](SubGrid& g) {
    if (g.is_leaf()) return;
    for (auto& child : g.children) coarsen_rec(*child);
    bool can_coarsen = true;
    for (auto& child : g.children) {
      if (!child->is_leaf() || child->cells.empty() ||
          any_above(child->cells, config.threshold / 2.0)) {
        can_coarsen = false;
        break;
      }
    }
    if (can_coarsen) tree.coarsen(g);
  };
  coarsen_rec(tree.root());

  // Refine wherever the field exceeds the threshold.
  std::function<void(SubGrid&)> refine_rec = [&](SubGrid& g) {
    if (!g.is_leaf()) {
      for (auto& child : g.children) refine_rec(*child);
      return;
    }
    if (g.level >= config.max_level || g.cells.empty()) return;
    if (!any_above(g.cells, config.threshold)) return;
    tree.refine(g, true);
    for (auto& child : g.children) refine_rec(*child);
  };
  refine_rec(tree.root());

  enforce_two_to_one(tree, true);
}

double total_mass(const Octree& tree) {
  const int n = tree.n_cells();
  double mass = 0.0;
  for (const SubGrid* leaf : tree.leaves()) {
    const double h = leaf->cell_size(n);
    const double volume = h * h * h;
    double sum = 0.0;
    for (double v : leaf->cells) sum += v;
    mass += sum * volume;
  }
  return mass;
}

std::vector<int> assign_owners(Octree& tree, int localities) {
  if (localities < 1) throw ConfigError("localities must be >= 1");
  std::vector<SubGrid*> leaves = tree.leaves();  // Morton order
  const std::size_t count = leaves.size();
  const std::size_t base = count / localities;
  const std::size_t rem = count % localities;

  std::vector<int> per_locality(localities, 0);
  std::size_t cursor = 0;
  for (int l = 0; l < localities; ++l) {
    const std::size_t chunk = base + (static_cast<std::size_t>(l) < rem ? 1 : 0);
    for (std::size_t i = 0; i < chunk; ++i) leaves[cursor++]->owner = l;
    per_locality[l] = static_cast<int>(chunk);
  }

  // Interior nodes inherit the owner of their first leaf descendant.
  std::function<void(SubGrid&)> rec = [&](SubGrid& g) {
    if (g.is_leaf()) return;
    for (auto& child : g.children) rec(*child);
    g.owner = g.children[0]->owner;
  };
  rec(tree.root());
  return per_locality;
}

void validate_partition(const Octree& tree) {
  std::function<void(const SubGrid&)> rec = [&](const SubGrid& g) {
    if (g.is_leaf()) return;
    for (int cz = 0; cz < 2; ++cz)
      for (int cy = 0; cy < 2; ++cy)
        for (int cx = 0; cx < 2; ++cx) {
          const SubGrid* child = g.children[child_octant(cx, cy, cz)].get();
          if (!child) throw std::logic_error("internal node missing a child");
          if (child->level != g.level + 1 ||
              child->index[0] != g.index[0] * 2 + cx ||
              child->index[1] != g.index[1] * 2 + cy ||
              child->index[2] != g.index[2] * 2 + cz)
            throw std::logic_error("child index inconsistent with octant");
          rec(*child);
        }
  };
  rec(tree.root());

  double volume = 0.0;
  for (const SubGrid* leaf : tree.leaves()) {
    const double edge = 1.0 / (1 << leaf->level);
    volume += edge * edge * edge;
  }
  if (std::abs(volume - 1.0) > 1e-12)
    throw std::logic_error("leaf boxes do not tile the domain");
}

}  // namespace amt
