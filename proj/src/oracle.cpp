#include "legalis/oracle.hpp"

#include <algorithm>
#include <unordered_map>

namespace legalis::oracle {

const char* kind_name(DepKind k) {
  switch (k) {
    case DepKind::flow: return "flow";
    case DepKind::anti: return "anti";
    case DepKind::output: return "output";
  }
  return "?";
}

Dependence DependenceSet::dep(size_t i) const {
  Dependence d;
  d.src_comp = src_comp_[i];
  d.dst_comp = dst_comp_[i];
  d.kind = static_cast<DepKind>(kind_[i]);
  d.buffer = buffer_[i];
  int sd = comp_depth(d.src_comp);
  int dd = comp_depth(d.dst_comp);
  d.src_iter.assign(src_iter(i), src_iter(i) + sd);
  d.dst_iter.assign(dst_iter(i), dst_iter(i) + dd);
  const int64_t* c = cell_.data() + i * static_cast<size_t>(cell_stride_);
  int dims = buffer_dims_.at(static_cast<size_t>(d.buffer));
  d.cell.assign(c, c + dims);
  return d;
}

namespace {

struct CellKey {
  int32_t buffer;
  uint64_t hash;
  uint32_t offset;  // into packed cell storage
  int len;
};

struct PackedCellHash {
  size_t operator()(uint64_t h) const { return static_cast<size_t>(h); }
};

}  // namespace

DependenceSet compute_dependences(const ir::Program& p,
                                  const ir::ProgramIndex& idx,
                                  int64_t max_points) {
  if (idx.total_points > max_points)
    throw BudgetExceeded("program has " + std::to_string(idx.total_points) +
                         " instances, budget is " + std::to_string(max_points));

  DependenceSet out;
  out.program = p.name;
  out.points_used = idx.total_points;
  out.iter_stride_ = std::max(1, idx.max_depth);

  int32_t max_id = -1;
  int max_buf_dims = 1;
  for (const auto& b : p.buffers) {
    max_buf_dims = std::max(max_buf_dims, b.dims());
    out.buffer_dims_.push_back(b.dims());
  }
  out.cell_stride_ = max_buf_dims;
  for (const auto& s : idx.sites) max_id = std::max(max_id, s.comp->id);
  out.comp_depth_.assign(static_cast<size_t>(max_id + 1), 0);
  std::vector<const ir::Computation*> comp_of(static_cast<size_t>(max_id + 1),
                                              nullptr);
  for (const auto& s : idx.sites) {
    out.comp_depth_[static_cast<size_t>(s.comp->id)] =
        static_cast<int>(s.path.size());
    comp_of[static_cast<size_t>(s.comp->id)] = s.comp;
  }

  // Instance table in timestamp order.
  std::vector<int32_t> inst_comp;
  std::vector<int64_t> inst_iter;  // packed, stride = iter_stride_
  inst_comp.reserve(static_cast<size_t>(idx.total_points));

  // Per-cell accessor lists: (instance index, read/write flags), ordered.
  struct Entry {
    uint32_t inst;
    uint8_t flags;  // 1 = read, 2 = write
  };
  std::vector<std::vector<Entry>> cells;       // first-touch order
  std::vector<int64_t> cell_coords;            // packed, stride cell_stride_
  std::vector<int32_t> cell_buffer;
  std::unordered_map<uint64_t, std::vector<uint32_t>> cell_lookup;

  std::vector<int64_t> addr;
  auto touch = [&](int32_t buf, const std::vector<int64_t>& coords,
                   uint32_t inst, uint8_t flag) {
    uint64_t h = 0x9e3779b97f4a7c15ull ^ static_cast<uint64_t>(buf);
    for (int64_t c : coords)
      h = splitmix64(h ^ static_cast<uint64_t>(c) * 0x100000001b3ull);
    auto& bucket = cell_lookup[h];
    uint32_t cell_id = UINT32_MAX;
    for (uint32_t cand : bucket) {
      if (cell_buffer[cand] != buf) continue;
      const int64_t* stored =
          cell_coords.data() + static_cast<size_t>(cand) * out.cell_stride_;
      bool same = true;
      for (size_t k = 0; k < coords.size(); ++k)
        if (stored[k] != coords[k]) {
          same = false;
          break;
        }
      if (same) {
        cell_id = cand;
        break;
      }
    }
    if (cell_id == UINT32_MAX) {
      cell_id = static_cast<uint32_t>(cells.size());
      cells.emplace_back();
      cell_buffer.push_back(buf);
      size_t base = cell_coords.size();
      cell_coords.resize(base + static_cast<size_t>(out.cell_stride_), 0);
      std::copy(coords.begin(), coords.end(), cell_coords.begin() + base);
      bucket.push_back(cell_id);
    }
    auto& list = cells[cell_id];
    if (!list.empty() && list.back().inst == inst)
      list.back().flags |= flag;
    else
      list.push_back({inst, flag});
  };

  ir::for_each_instance(
      p, idx,
      [&](int32_t cid, const std::vector<int64_t>& iter, const ir::Timestamp&) {
        uint32_t inst = static_cast<uint32_t>(inst_comp.size());
        inst_comp.push_back(cid);
        size_t base = inst_iter.size();
        inst_iter.resize(base + static_cast<size_t>(out.iter_stride_), 0);
        std::copy(iter.begin(), iter.end(), inst_iter.begin() + base);

        const ir::Computation& comp = *comp_of[static_cast<size_t>(cid)];
        addr = ir::access_address(comp.write.matrix, iter);
        touch(comp.write.buffer, addr, inst, 2);
        for (const ir::Access& rd : comp.reads) {
          addr = ir::access_address(rd.matrix, iter);
          touch(rd.buffer, addr, inst, 1);
        }
      });

  auto emit = [&](uint32_t a, uint32_t b, DepKind kind, uint32_t cell_id) {
    out.src_comp_.push_back(inst_comp[a]);
    out.dst_comp_.push_back(inst_comp[b]);
    out.kind_.push_back(static_cast<int8_t>(kind));
    out.buffer_.push_back(cell_buffer[cell_id]);
    size_t sb = out.src_iter_.size();
    out.src_iter_.resize(sb + static_cast<size_t>(out.iter_stride_));
    std::copy_n(inst_iter.begin() + static_cast<size_t>(a) * out.iter_stride_,
                out.iter_stride_, out.src_iter_.begin() + sb);
    size_t db = out.dst_iter_.size();
    out.dst_iter_.resize(db + static_cast<size_t>(out.iter_stride_));
    std::copy_n(inst_iter.begin() + static_cast<size_t>(b) * out.iter_stride_,
                out.iter_stride_, out.dst_iter_.begin() + db);
    size_t cb = out.cell_.size();
    out.cell_.resize(cb + static_cast<size_t>(out.cell_stride_));
    std::copy_n(cell_coords.begin() + static_cast<size_t>(cell_id) * out.cell_stride_,
                out.cell_stride_, out.cell_.begin() + cb);
  };

  for (uint32_t cell_id = 0; cell_id < cells.size(); ++cell_id) {
    const auto& list = cells[cell_id];
    for (size_t j = 1; j < list.size(); ++j) {
      for (size_t i = 0; i < j; ++i) {
        uint8_t fa = list[i].flags, fb = list[j].flags;
        if ((fa & 2) && (fb & 1)) emit(list[i].inst, list[j].inst, DepKind::flow, cell_id);
        if ((fa & 1) && (fb & 2)) emit(list[i].inst, list[j].inst, DepKind::anti, cell_id);
        if ((fa & 2) && (fb & 2)) emit(list[i].inst, list[j].inst, DepKind::output, cell_id);
      }
    }
  }
  return out;
}

DependenceSet compute_dependences(const ir::Program& p, int64_t max_points) {
  return compute_dependences(p, ir::build_index(p), max_points);
}

namespace {

// first index at which the two timestamps differ, or -1 if equal
int first_diff(const ir::Timestamp& a, const ir::Timestamp& b) {
  for (size_t k = 0; k < a.size(); ++k)
    if (a[k] != b[k]) return static_cast<int>(k);
  return -1;
}

}  // namespace

LegalityVerdict check_legality(const ir::Program& p, const ir::ProgramIndex& idx,
                               const transform::Schedule& s,
                               const DependenceSet& deps, Collect mode) {
  int64_t t0 = now_nanos();
  transform::IterationMap map = transform::build_iteration_map(p, idx, s);

  LegalityVerdict verdict;
  verdict.legal = true;

  const auto& par_slots = map.parallel_slots();
  std::vector<int64_t> iter_a, iter_b, scratch;
  ir::Timestamp ts_a, ts_b;

  for (size_t i = 0; i < deps.size(); ++i) {
    int32_t sc = deps.src_comp(i), dc = deps.dst_comp(i);
    iter_a.assign(deps.src_iter(i), deps.src_iter(i) + deps.comp_depth(sc));
    iter_b.assign(deps.dst_iter(i), deps.dst_iter(i) + deps.comp_depth(dc));
    map.transform_timestamp_into(sc, iter_a, scratch, ts_a);
    map.transform_timestamp_into(dc, iter_b, scratch, ts_b);

    int fd = first_diff(ts_a, ts_b);
    const char* reason = nullptr;
    if (fd < 0 || ts_a[static_cast<size_t>(fd)] > ts_b[static_cast<size_t>(fd)]) {
      reason = "order-reversed";
    } else {
      for (int slot : par_slots)
        if (fd == slot) {
          reason = "carried-at-parallel-level";
          break;
        }
    }
    if (reason) {
      verdict.legal = false;
      verdict.violations.push_back({deps.dep(i), reason});
      if (mode == Collect::first) break;
    }
  }
  verdict.check_nanos = now_nanos() - t0;
  return verdict;
}

LegalityVerdict check_legality(const ir::Program& p, const transform::Schedule& s,
                               const DependenceSet& deps, Collect mode) {
  return check_legality(p, ir::build_index(p), s, deps, mode);
}

LabelResult label(const ir::Program& p, const transform::Schedule& s) {
  int64_t t0 = now_nanos();
  ir::ProgramIndex idx = ir::build_index(p);
  DependenceSet deps = compute_dependences(p, idx);
  LegalityVerdict v = check_legality(p, idx, s, deps, Collect::first);
  return {v.legal, now_nanos() - t0};
}

LabelResult label(const ir::Program& p, const ir::ProgramIndex& idx,
                  const transform::Schedule& s, const DependenceSet& deps) {
  LegalityVerdict v = check_legality(p, idx, s, deps, Collect::first);
  return {v.legal, v.check_nanos};
}

nlohmann::json to_json(const LegalityVerdict& v) {
  nlohmann::json viols = nlohmann::json::array();
  for (const auto& viol : v.violations) {
    viols.push_back(nlohmann::json{
        {"kind", kind_name(viol.dep.kind)},
        {"src", {{"comp", viol.dep.src_comp}, {"iter", viol.dep.src_iter}}},
        {"dst", {{"comp", viol.dep.dst_comp}, {"iter", viol.dep.dst_iter}}},
        {"buffer", viol.dep.buffer},
        {"cell", viol.dep.cell},
        {"reason", viol.reason}});
  }
  return nlohmann::json{{"legal", v.legal},
                        {"violations", viols},
                        {"check_nanos", v.check_nanos}};
}

}  // namespace legalis::oracle
