#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "legalis/ir.hpp"

namespace legalis::transform {

// Levels always index the *current* dynamic dimensions of loop-nest root 0,
// i.e. the dimensions produced by the transformations applied so far.

struct Interchange {
  int a = 0, b = 0;
};
struct Reversal {
  int level = 0;
};
/// x_b := factor_a * x_a + factor_b * x_b, with a < b.
struct Skewing {
  int a = 0, b = 0;
  int64_t factor_a = 0, factor_b = 1;
};
struct Parallelization {
  int level = 0;
};
/// Splits a contiguous band of levels into (tile, point) pairs; tile dims
/// are hoisted above the band's point dims. Quotient/remainder are taken on
/// the zero-based offset within each dimension's current value range.
struct Tiling {
  std::vector<int> levels;     // contiguous, ascending, 1..3 entries
  std::vector<int64_t> sizes;  // same length, each >= 2
};
/// Order-neutral: unrolling never changes instance order. It exists so
/// schedules (and the encoder) can carry it as a feature.
struct Unrolling {
  int level = 0;
  int64_t factor = 2;
};

using Transformation = std::variant<Interchange, Reversal, Skewing,
                                    Parallelization, Tiling, Unrolling>;

const char* kind_name(const Transformation& t);

struct Schedule {
  std::vector<Transformation> transforms;
  std::string target;  // program name; empty matches any program
};

inline constexpr int kDefaultMaxScheduleLen = 6;

ir::ValidationReport validate_schedule(const ir::Program& p, const Schedule& s,
                                       int max_len = kDefaultMaxScheduleLen);

/// Tracks how the current dynamic dimensions of root 0 relate to the
/// original loop levels while a schedule is applied left to right. Shared by
/// the iteration map, schedule validation, and the encoder (which writes
/// transformation tags back onto original levels).
class DimFrame {
 public:
  explicit DimFrame(int original_depth);

  int dims() const { return static_cast<int>(origin_.size()); }
  int origin_level(int dim) const { return origin_[static_cast<size_t>(dim)]; }
  bool parallel(int dim) const { return parallel_[static_cast<size_t>(dim)]; }
  /// Original static index following this dim (-1 for tile dims).
  int follow(int dim) const { return follow_[static_cast<size_t>(dim)]; }

  void apply(const Transformation& t);

 private:
  std::vector<int> origin_;
  std::vector<bool> parallel_;
  std::vector<int> follow_;
};

/// Compiled per-computation action with bound-dependent constants resolved.
struct ActSwap {
  int a, b;
};
struct ActReverse {
  int dim;
  int64_t c;  // x := c - x, c = min+max of the dim's current value range
};
struct ActSkew {
  int a, b;
  int64_t fa, fb;
};
struct ActTile {
  int start, width;
  std::vector<int64_t> sizes;
  std::vector<int64_t> base;  // per-dim minimum at application time
};
using Action = std::variant<ActSwap, ActReverse, ActSkew, ActTile>;

/// The schedule's action on dynamic instances: per computation, a compiled
/// transformation of its iteration vector, plus the bookkeeping needed to
/// rebuild comparable 2d+1 timestamps (statics stay in their slots).
class IterationMap {
 public:
  /// Transformed dynamic vector for one instance of comp_id.
  std::vector<int64_t> transform_iter(int32_t comp_id,
                                      const std::vector<int64_t>& iter) const;

  /// Transformed, program-uniform-width timestamp for one instance.
  ir::Timestamp transform_timestamp(int32_t comp_id,
                                    const std::vector<int64_t>& iter) const;

  /// Same, into a caller-provided buffer (no allocation). scratch is
  /// internal working space.
  void transform_timestamp_into(int32_t comp_id,
                                const std::vector<int64_t>& iter,
                                std::vector<int64_t>& scratch,
                                ir::Timestamp& out) const;

  /// Timestamp slot indices of dimensions marked parallel.
  const std::vector<int>& parallel_slots() const { return parallel_slots_; }

  /// Uniform transformed timestamp width (2 * max dims + 1).
  int width() const { return width_; }

  int out_dims(int32_t comp_id) const;
  int depth(int32_t comp_id) const;

 private:
  friend IterationMap build_iteration_map(const ir::Program&,
                                          const ir::ProgramIndex&,
                                          const Schedule&, int);
  struct CompData {
    int depth = 0;
    int out_dims = 0;
    std::vector<int64_t> statics;  // depth+1 entries
    std::vector<int> follow;       // per out dim: static index or -1
    std::vector<Action> actions;
  };
  std::vector<CompData> comps_;  // indexed by computation id
  std::vector<int> parallel_slots_;
  int width_ = 1;
};

/// Requires a validated program and a valid schedule (throws
/// ValidationError otherwise).
IterationMap build_iteration_map(const ir::Program& p,
                                 const ir::ProgramIndex& idx, const Schedule& s,
                                 int max_len = kDefaultMaxScheduleLen);

/// Rewrites an original-order timestamp (as produced by enumerate_instances)
/// under the map: dynamic slots are transformed, static slots kept.
ir::Timestamp transformed_timestamp(const IterationMap& map,
                                    const ir::Timestamp& ts, int32_t comp_id);

nlohmann::json to_json(const Schedule& s);
Schedule schedule_from_json(const nlohmann::json& j);
Schedule load_schedule(const std::string& path);
void save_schedule(const Schedule& s, const std::string& path);

/// Compact canonical serialization; used for dedupe and cost-proxy hashing.
std::string serialize(const Schedule& s);

}  // namespace legalis::transform
