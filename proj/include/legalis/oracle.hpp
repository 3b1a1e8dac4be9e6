#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "legalis/ir.hpp"
#include "legalis/transform.hpp"

namespace legalis::oracle {

enum class DepKind : int8_t { flow = 0, anti = 1, output = 2 };

const char* kind_name(DepKind k);

/// One ordered pair of dynamic instances that must keep its execution order:
/// both touch `cell` of `buffer` and at least one writes.
struct Dependence {
  int32_t src_comp = 0, dst_comp = 0;
  std::vector<int64_t> src_iter, dst_iter;
  DepKind kind = DepKind::flow;
  int32_t buffer = 0;
  std::vector<int64_t> cell;
};

/// All dependences of a program, stored columnar (packed iteration vectors)
/// so that multi-million-pair sets from reduction-heavy programs stay cheap.
class DependenceSet {
 public:
  std::string program;
  int64_t points_used = 0;

  size_t size() const { return kind_.size(); }
  bool empty() const { return kind_.empty(); }

  Dependence dep(size_t i) const;
  DepKind kind(size_t i) const { return static_cast<DepKind>(kind_[i]); }
  int32_t src_comp(size_t i) const { return src_comp_[i]; }
  int32_t dst_comp(size_t i) const { return dst_comp_[i]; }
  const int64_t* src_iter(size_t i) const {
    return src_iter_.data() + i * static_cast<size_t>(iter_stride_);
  }
  const int64_t* dst_iter(size_t i) const {
    return dst_iter_.data() + i * static_cast<size_t>(iter_stride_);
  }
  int iter_stride() const { return iter_stride_; }

  /// Depth (= meaningful iter entries) of a computation.
  int comp_depth(int32_t comp_id) const {
    return comp_depth_.at(static_cast<size_t>(comp_id));
  }

 private:
  friend DependenceSet compute_dependences(const ir::Program&,
                                           const ir::ProgramIndex&, int64_t);
  int iter_stride_ = 0;
  int cell_stride_ = 0;
  std::vector<int32_t> src_comp_, dst_comp_;
  std::vector<int64_t> src_iter_, dst_iter_;  // packed, stride = iter_stride_
  std::vector<int8_t> kind_;
  std::vector<int32_t> buffer_;
  std::vector<int64_t> cell_;  // packed, stride = cell_stride_
  std::vector<int> comp_depth_;
  std::vector<int> buffer_dims_;
};

DependenceSet compute_dependences(const ir::Program& p,
                                  const ir::ProgramIndex& idx,
                                  int64_t max_points = ir::kDefaultMaxPoints);
DependenceSet compute_dependences(const ir::Program& p,
                                  int64_t max_points = ir::kDefaultMaxPoints);

struct DepViolation {
  Dependence dep;
  std::string reason;  // "order-reversed" | "carried-at-parallel-level"
};

struct LegalityVerdict {
  bool legal = false;
  std::vector<DepViolation> violations;
  int64_t check_nanos = 0;
};

/// Stop at the first violation (labeling) or collect them all (reporting).
enum class Collect { first, all };

LegalityVerdict check_legality(const ir::Program& p,
                               const ir::ProgramIndex& idx,
                               const transform::Schedule& s,
                               const DependenceSet& deps,
                               Collect mode = Collect::all);
LegalityVerdict check_legality(const ir::Program& p,
                               const transform::Schedule& s,
                               const DependenceSet& deps,
                               Collect mode = Collect::all);

/// Dataset label: legality bit plus the wall time spent deciding it.
/// The no-cache overload computes dependences from scratch (the honest cost
/// of one exact check); the cached overload reuses a per-program set.
struct LabelResult {
  bool legal = false;
  int64_t check_nanos = 0;
};
LabelResult label(const ir::Program& p, const transform::Schedule& s);
LabelResult label(const ir::Program& p, const ir::ProgramIndex& idx,
                  const transform::Schedule& s, const DependenceSet& deps);

nlohmann::json to_json(const LegalityVerdict& v);

}  // namespace legalis::oracle
