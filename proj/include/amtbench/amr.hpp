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

#ifndef AMTBENCH_AMR_HPP
#define AMTBENCH_AMR_HPP

#include <array>
#include <atomic>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "amtbench/agas.hpp"

namespace amt {

struct Blob {
  std::array<double, 3> center{0.5, 0.5, 0.5};
  double width = 0.08;
  double amplitude = 1.0;
};

// Scalar advection on an octree of N^3 sub-grids covering the unit cube.
// The velocity field is solid-body rotation about the z axis through the
// domain center; the two default blobs orbit it like a binary.
struct ScenarioConfig {
  int max_level = 4;
  int n_cells = 8;
  double threshold = 0.25;
  int regrid_interval = 10;
  std::vector<Blob> blobs = {
      Blob{{0.3, 0.5, 0.5}, 0.08, 1.0},
      Blob{{0.7, 0.5, 0.5}, 0.08, 1.0},
  };
  double omega = 1.0;  // rotation rate, radians per time unit
  double cfl = 0.4;
  double dt = 0.0;  // 0 = derive from cfl and the finest cell size
  int steps = 100;

  // Throws ConfigError when structurally invalid or the time step violates
  // the upwind stability bound.
  void validate() const;
  double effective_dt() const;  // dt, or the CFL-derived step when dt == 0
  double initial_value(double x, double y, double z) const;
  std::array<double, 3> velocity(double x, double y, double z) const;
  std::string digest() const;  // stable hex hash of all fields
};

// One octree node: an N^3 block of cells. Only leaves carry field data.
// Child octant c encodes (x,y,z) offsets in bits (0,1,2); child indices
// append that bit to the parent index, which makes a depth-first traversal
// in child order a Morton (z-order) walk of the leaves.
struct SubGrid {
  int level = 0;
  std::array<int, 3> index{0, 0, 0};
  SubGrid* parent = nullptr;
  std::array<std::unique_ptr<SubGrid>, 8> children{};  // all null or all set

  std::vector<double> cells;   // current field, leaves only
  std::vector<double> frozen;  // previous-step snapshot used for updates

  int owner = 0;
  GlobalId gid{};

  bool is_leaf() const noexcept { return children[0] == nullptr; }
  double box_lo(int axis) const;
  double box_hi(int axis) const;
  double cell_size(int n_cells) const;
};

// Classification of what lies across one face of a leaf. Fine neighbors
// are the four near-side children of the face-adjacent node, indexed
// [dv * 2 + du] over the transverse axes in ascending-axis order.
struct FaceNeighbor {
  enum class Kind { kBoundary, kSame, kCoarse, kFine };
  Kind kind = Kind::kBoundary;
  const SubGrid* neighbor = nullptr;          // kSame / kCoarse
  std::array<const SubGrid*, 4> fine{};       // kFine
};

// Ghost values for one face at the leaf's own resolution, N x N, indexed
// [v * N + u]. Domain boundary faces are reflecting.
struct GhostFace {
  FaceNeighbor::Kind kind = FaceNeighbor::Kind::kBoundary;
  std::vector<double> values;
};
using GhostLayers = std::array<GhostFace, 6>;  // face = axis * 2 + (dir > 0)

class Octree {
 public:
  explicit Octree(int n_cells);

  Octree(Octree&&) = default;
  Octree& operator=(Octree&&) = default;

  SubGrid& root() { return *root_; }
  const SubGrid& root() const { return *root_; }
  int n_cells() const noexcept { return n_cells_; }

  std::vector<SubGrid*> leaves();
  std::vector<const SubGrid*> leaves() const;
  std::uint64_t node_count() const;

  // Deepest existing node on the path towards (level, i, j, k); never null.
  const SubGrid* node_towards(int level, int i, int j, int k) const;

  void refine(SubGrid& leaf, bool prolong_field);
  void coarsen(SubGrid& node);  // node's 8 leaf children -> node is a leaf

 private:
  int n_cells_;
  std::unique_ptr<SubGrid> root_;
};

// Neighbor across a face of `leaf` (axis 0..2, dir -1/+1). Throws
// std::logic_error if the tree violates 2:1 balance at that face.
FaceNeighbor face_neighbor(const Octree& tree, const SubGrid& leaf, int axis,
                           int dir);

// Root leaf refined wherever any cell-center value of the analytic initial
// field exceeds the threshold, up to max_level; 2:1 balanced; fields
// initialized by cell-center evaluation.
Octree build_initial_tree(const ScenarioConfig& config);

// Refines the coarser side of any face with a level gap > 1 until the mesh
// is 2:1 balanced. Idempotent. When prolong_field is set, refined leaves
// get piecewise-constant injected values.
void enforce_two_to_one(Octree& tree, bool prolong_field);

// Number of (fine leaf, coarse neighbor, face) triples.
std::uint64_t count_amr_boundaries(const Octree& tree);

// Ghost layers for one leaf, from the frozen (use_frozen) or current field
// of the neighbors. Throws std::logic_error when a needed neighbor has no
// data (a scheduling bug, not a user error).
GhostLayers fill_ghosts(const Octree& tree, const SubGrid& leaf,
                        bool use_frozen = true);

// First-order upwind finite-volume update of one leaf from frozen data.
// Face fluxes are evaluated at the finest level touching each face so both
// sides of a coarse/fine face apply identical flux values, keeping total
// mass conserved. Domain walls are closed (zero flux). Returns the new cell
// values; amr_faces_out counts the coarse-neighbor faces handled.
std::vector<double> advect_leaf(const Octree& tree, const SubGrid& leaf,
                                const ScenarioConfig& config,
                                int* amr_faces_out = nullptr);

// Snapshot every leaf's field into its frozen buffer.
void freeze_fields(Octree& tree);

// Serial reference step: freeze, then update every leaf. The task-parallel
// driver must produce bitwise-identical fields.
void step_serial(Octree& tree, const ScenarioConfig& config);

// Refine where the criterion holds, coarsen sibling groups entirely below
// threshold/2, rebalance; conserves mass exactly.
void regrid(Octree& tree, const ScenarioConfig& config);

double total_mass(const Octree& tree);

// Morton-ordered leaves split into contiguous per-locality chunks whose
// sizes differ by at most one. Interior nodes take the owner of their
// first leaf descendant. Returns per-locality leaf counts.
std::vector<int> assign_owners(Octree& tree, int localities);

// Structural sanity: child indexing, leaf volumes summing to the domain,
// unique leaf keys. Throws std::logic_error on violation.
void validate_partition(const Octree& tree);

}  // namespace amt

#endif  // AMTBENCH_AMR_HPP
