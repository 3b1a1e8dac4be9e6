#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "legalis/common.hpp"

namespace legalis::ir {

/// Hard cap on total dynamic instances per program so brute-force
/// enumeration stays bounded. Overridable per call site.
inline constexpr int64_t kDefaultMaxPoints = 200000;

struct Buffer {
  int32_t id = 0;
  std::vector<int64_t> extents;  // one per dimension, all > 0

  int dims() const { return static_cast<int>(extents.size()); }
};

/// Affine access: rows = buffer dims, columns = loop depth + 1. The last
/// column is the constant offset; address(iter) = M * (iter ++ [1]).
struct AccessMatrix {
  int rows = 0;
  int cols = 0;                // depth + 1
  std::vector<int64_t> m;      // row-major, rows*cols entries

  int64_t at(int r, int c) const { return m[static_cast<size_t>(r) * cols + c]; }
  int64_t& at(int r, int c) { return m[static_cast<size_t>(r) * cols + c]; }

  static AccessMatrix zero(int rows, int cols) {
    AccessMatrix a;
    a.rows = rows;
    a.cols = cols;
    a.m.assign(static_cast<size_t>(rows) * cols, 0);
    return a;
  }
  /// Identity on the trailing iterators: row r reads iterator (cols-1-rows+r).
  static AccessMatrix identity(int rows, int depth) {
    AccessMatrix a = zero(rows, depth + 1);
    for (int r = 0; r < rows; ++r) a.at(r, depth - rows + r) = 1;
    return a;
  }
};

struct Access {
  int32_t buffer = 0;
  AccessMatrix matrix;
};

struct OpCounts {
  int64_t adds = 0, subs = 0, muls = 0, divs = 0;
};

struct Computation {
  int32_t id = 0;
  int depth = 0;  // number of enclosing loops
  Access write;
  std::vector<Access> reads;
  OpCounts ops;
};

struct Loop;
using LoopChild = std::variant<std::unique_ptr<Loop>, Computation>;

struct Loop {
  int32_t id = 0;
  int64_t lower = 0;
  int64_t upper = 0;  // exclusive
  std::vector<LoopChild> children;

  int64_t extent() const { return upper - lower; }
};

struct Program {
  std::string name;
  std::vector<std::unique_ptr<Loop>> roots;
  std::vector<Buffer> buffers;
};

/// 2d+1 lexicographic timestamp: [s0, x0, s1, x1, ..., x_{d-1}, s_d] where
/// s are static child positions and x are loop iteration values, padded
/// with zeros to the program-uniform width 2*max_depth+1.
using Timestamp = std::vector<int64_t>;

struct Violation {
  std::string code;
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
  std::string to_string() const;
};

/// Flattened view of one computation: its path of enclosing loops and the
/// static positions along it. statics has depth+1 entries: root index,
/// then the child index taken at each level (the last entry is the
/// computation's own position within its innermost loop).
struct CompSite {
  const Computation* comp = nullptr;
  std::vector<const Loop*> path;  // outermost first, size == comp->depth
  std::vector<int64_t> statics;   // size == comp->depth + 1
  int root_index = 0;
  int64_t points = 0;             // product of path extents
};

/// Index of all computations in pre-order, plus program-wide facts the
/// transform and oracle layers keep re-deriving.
struct ProgramIndex {
  std::vector<CompSite> sites;    // indexed by position in pre-order
  int max_depth = 0;
  int64_t total_points = 0;
  int ts_width() const { return 2 * max_depth + 1; }

  const CompSite* site_for(int32_t comp_id) const;
};

ProgramIndex build_index(const Program& p);

ValidationReport validate_program(const Program& p,
                                  int64_t max_points = kDefaultMaxPoints);

/// m * (iter ++ [1]); iter.size() must equal cols-1.
std::vector<int64_t> access_address(const AccessMatrix& m,
                                    const std::vector<int64_t>& iter);

struct Instance {
  int32_t comp_id = 0;
  std::vector<int64_t> iter;
  Timestamp ts;
};

/// Visits every dynamic instance in ascending timestamp order. The callback
/// receives (comp id, iteration vector, timestamp); vectors are reused
/// between calls, so copy if you keep them.
void for_each_instance(
    const Program& p, const ProgramIndex& idx,
    const std::function<void(int32_t, const std::vector<int64_t>&,
                             const Timestamp&)>& fn);

/// Materialized enumeration, mostly for tests.
std::vector<Instance> enumerate_instances(const Program& p);

/// Deep copy (Programs hold unique_ptr trees).
Program clone(const Program& p);

}  // namespace legalis::ir
