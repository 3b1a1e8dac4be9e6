#include "legalis/transform.hpp"

#include <algorithm>
#include <fstream>

namespace legalis::transform {

using ir::Program;
using ir::ProgramIndex;
using ir::ValidationReport;

const char* kind_name(const Transformation& t) {
  struct Visitor {
    const char* operator()(const Interchange&) const { return "interchange"; }
    const char* operator()(const Reversal&) const { return "reversal"; }
    const char* operator()(const Skewing&) const { return "skewing"; }
    const char* operator()(const Parallelization&) const {
      return "parallelization";
    }
    const char* operator()(const Tiling&) const { return "tiling"; }
    const char* operator()(const Unrolling&) const { return "unrolling"; }
  };
  return std::visit(Visitor{}, t);
}

DimFrame::DimFrame(int original_depth) {
  origin_.resize(static_cast<size_t>(original_depth));
  parallel_.assign(static_cast<size_t>(original_depth), false);
  follow_.resize(static_cast<size_t>(original_depth));
  for (int d = 0; d < original_depth; ++d) {
    origin_[static_cast<size_t>(d)] = d;
    follow_[static_cast<size_t>(d)] = d + 1;
  }
}

void DimFrame::apply(const Transformation& t) {
  if (const auto* ic = std::get_if<Interchange>(&t)) {
    // values, origins and parallel marks move; statics keep their slots
    std::swap(origin_[static_cast<size_t>(ic->a)],
              origin_[static_cast<size_t>(ic->b)]);
    bool pa = parallel_[static_cast<size_t>(ic->a)];
    bool pb = parallel_[static_cast<size_t>(ic->b)];
    parallel_[static_cast<size_t>(ic->a)] = pb;
    parallel_[static_cast<size_t>(ic->b)] = pa;
  } else if (const auto* par = std::get_if<Parallelization>(&t)) {
    parallel_[static_cast<size_t>(par->level)] = true;
  } else if (const auto* tl = std::get_if<Tiling>(&t)) {
    int start = tl->levels.front();
    int w = static_cast<int>(tl->levels.size());
    std::vector<int> origin2;
    std::vector<bool> parallel2;
    std::vector<int> follow2;
    for (int d = 0; d < start; ++d) {
      origin2.push_back(origin_[static_cast<size_t>(d)]);
      parallel2.push_back(parallel_[static_cast<size_t>(d)]);
      follow2.push_back(follow_[static_cast<size_t>(d)]);
    }
    for (int i = 0; i < w; ++i) {  // tile dims: no trailing static
      size_t d = static_cast<size_t>(start + i);
      origin2.push_back(origin_[d]);
      parallel2.push_back(parallel_[d]);
      follow2.push_back(-1);
    }
    for (int i = 0; i < w; ++i) {  // point dims keep the body attachment
      size_t d = static_cast<size_t>(start + i);
      origin2.push_back(origin_[d]);
      parallel2.push_back(parallel_[d]);
      follow2.push_back(follow_[d]);
    }
    for (size_t d = static_cast<size_t>(start + w); d < origin_.size(); ++d) {
      origin2.push_back(origin_[d]);
      parallel2.push_back(parallel_[d]);
      follow2.push_back(follow_[d]);
    }
    origin_ = std::move(origin2);
    parallel_ = std::move(parallel2);
    follow_ = std::move(follow2);
  }
  // reversal, skewing, unrolling: dim identities unchanged
}

namespace {

struct GapComp {
  int32_t id;
  int dims;
};

// Computations in the root-0 subtree whose current dim count falls strictly
// inside (lo, hi]; such comps would be partially covered by a two-level op.
std::vector<GapComp> gap_comps(const std::vector<int>& comp_dims,
                               const std::vector<int32_t>& comp_ids, int lo,
                               int hi) {
  std::vector<GapComp> out;
  for (size_t i = 0; i < comp_dims.size(); ++i)
    if (comp_dims[i] > lo && comp_dims[i] <= hi)
      out.push_back({comp_ids[i], comp_dims[i]});
  return out;
}

}  // namespace

ValidationReport validate_schedule(const Program& p, const Schedule& s,
                                   int max_len) {
  ValidationReport rep;
  auto fail = [&](std::string code, std::string msg) {
    rep.violations.push_back({std::move(code), std::move(msg)});
  };

  if (!s.target.empty() && s.target != p.name) {
    fail("target", "schedule targets program \"" + s.target +
                       "\" but was applied to \"" + p.name + "\"");
    return rep;
  }
  if (static_cast<int>(s.transforms.size()) > max_len) {
    fail("length", "schedule has " + std::to_string(s.transforms.size()) +
                       " transformations, limit is " + std::to_string(max_len));
    return rep;
  }

  ProgramIndex idx = ir::build_index(p);
  // schedules act on root 0 only
  std::vector<int> comp_dims;
  std::vector<int32_t> comp_ids;
  int frame_dims = 0;
  for (const auto& site : idx.sites) {
    if (site.root_index != 0) continue;
    comp_dims.push_back(static_cast<int>(site.path.size()));
    comp_ids.push_back(site.comp->id);
    frame_dims = std::max(frame_dims, comp_dims.back());
  }
  if (frame_dims == 0) {
    fail("target", "program has no computations under root 0");
    return rep;
  }

  int parallel_count = 0;
  for (size_t k = 0; k < s.transforms.size(); ++k) {
    const Transformation& t = s.transforms[k];
    bool last = (k + 1 == s.transforms.size());
    auto level_ok = [&](int l) {
      if (l < 0 || l >= frame_dims) {
        fail("level", std::string(kind_name(t)) + ": level " +
                          std::to_string(l) + " out of range (current depth " +
                          std::to_string(frame_dims) + ")");
        return false;
      }
      return true;
    };

    if (const auto* ic = std::get_if<Interchange>(&t)) {
      if (!level_ok(ic->a) || !level_ok(ic->b)) return rep;
      if (ic->a == ic->b) {
        fail("level", "interchange levels must differ");
        return rep;
      }
      int lo = std::min(ic->a, ic->b), hi = std::max(ic->a, ic->b);
      auto gaps = gap_comps(comp_dims, comp_ids, lo, hi);
      if (!gaps.empty()) {
        fail("coverage",
             "interchange(" + std::to_string(ic->a) + "," +
                 std::to_string(ic->b) + ") spans computation " +
                 std::to_string(gaps.front().id) + " at intermediate depth " +
                 std::to_string(gaps.front().dims));
        return rep;
      }
    } else if (const auto* rv = std::get_if<Reversal>(&t)) {
      if (!level_ok(rv->level)) return rep;
    } else if (const auto* sk = std::get_if<Skewing>(&t)) {
      if (!level_ok(sk->a) || !level_ok(sk->b)) return rep;
      if (sk->a >= sk->b) {
        fail("level", "skewing requires level_a < level_b");
        return rep;
      }
      if (sk->factor_b == 0) {
        fail("factor", "skewing factor_b must be non-zero");
        return rep;
      }
    } else if (const auto* pz = std::get_if<Parallelization>(&t)) {
      if (!level_ok(pz->level)) return rep;
      if (++parallel_count > 1) {
        fail("structure", "at most one parallelization per schedule");
        return rep;
      }
    } else if (const auto* tl = std::get_if<Tiling>(&t)) {
      if (tl->levels.empty() || tl->levels.size() > 3) {
        fail("structure", "tiling must name 1 to 3 levels");
        return rep;
      }
      if (tl->levels.size() != tl->sizes.size()) {
        fail("structure", "tiling levels and sizes must have equal length");
        return rep;
      }
      for (size_t i = 0; i < tl->levels.size(); ++i) {
        if (!level_ok(tl->levels[i])) return rep;
        if (i > 0 && tl->levels[i] != tl->levels[i - 1] + 1) {
          fail("structure", "tiling levels must form a contiguous ascending band");
          return rep;
        }
        if (tl->sizes[i] < 2) {
          fail("factor", "tile size must be at least 2");
          return rep;
        }
      }
      int lo = tl->levels.front(), hi = tl->levels.back();
      auto gaps = gap_comps(comp_dims, comp_ids, lo, hi);
      if (!gaps.empty()) {
        fail("coverage", "tiling band [" + std::to_string(lo) + ".." +
                             std::to_string(hi) + "] spans computation " +
                             std::to_string(gaps.front().id) +
                             " at intermediate depth " +
                             std::to_string(gaps.front().dims));
        return rep;
      }
      int w = static_cast<int>(tl->levels.size());
      for (size_t i = 0; i < comp_dims.size(); ++i)
        if (comp_dims[i] > hi) comp_dims[i] += w;
      frame_dims += w;
    } else if (const auto* ur = std::get_if<Unrolling>(&t)) {
      if (!level_ok(ur->level)) return rep;
      if (ur->factor < 2) {
        fail("factor", "unrolling factor must be at least 2");
        return rep;
      }
      if (!last) {
        fail("structure", "unrolling must be last");
        return rep;
      }
    }
  }
  return rep;
}

namespace {

struct Interval {
  int64_t lo, hi;  // inclusive value range
};

Interval skew_interval(const Interval& a, const Interval& b, int64_t fa,
                       int64_t fb) {
  int64_t c1 = fa * a.lo, c2 = fa * a.hi;
  int64_t c3 = fb * b.lo, c4 = fb * b.hi;
  return {std::min(c1, c2) + std::min(c3, c4),
          std::max(c1, c2) + std::max(c3, c4)};
}

}  // namespace

IterationMap build_iteration_map(const Program& p, const ProgramIndex& idx,
                                 const Schedule& s, int max_len) {
  ValidationReport rep = validate_schedule(p, s, max_len);
  if (!rep.ok())
    throw ValidationError("invalid schedule: " + rep.to_string());

  IterationMap map;
  int32_t max_id = -1;
  for (const auto& site : idx.sites) max_id = std::max(max_id, site.comp->id);
  map.comps_.resize(static_cast<size_t>(max_id + 1));

  struct State {
    IterationMap::CompData* data;
    std::vector<Interval> intervals;
    bool in_root0;
  };
  std::vector<State> states;
  int frame_depth = 0;
  for (const auto& site : idx.sites) {
    auto& data = map.comps_[static_cast<size_t>(site.comp->id)];
    data.depth = static_cast<int>(site.path.size());
    data.out_dims = data.depth;
    data.statics = site.statics;
    State st{&data, {}, site.root_index == 0};
    for (const ir::Loop* l : site.path)
      st.intervals.push_back({l->lower, l->upper - 1});
    if (st.in_root0) frame_depth = std::max(frame_depth, data.depth);
    states.push_back(std::move(st));
  }

  DimFrame frame(frame_depth);

  for (const Transformation& t : s.transforms) {
    if (std::holds_alternative<Unrolling>(t)) continue;
    if (std::holds_alternative<Parallelization>(t)) {
      frame.apply(t);
      continue;
    }
    for (State& st : states) {
      if (!st.in_root0) continue;
      int n = st.data->out_dims;
      if (const auto* ic = std::get_if<Interchange>(&t)) {
        if (n <= std::max(ic->a, ic->b)) continue;
        st.data->actions.push_back(ActSwap{ic->a, ic->b});
        std::swap(st.intervals[static_cast<size_t>(ic->a)],
                  st.intervals[static_cast<size_t>(ic->b)]);
      } else if (const auto* rv = std::get_if<Reversal>(&t)) {
        if (n <= rv->level) continue;
        const Interval& iv = st.intervals[static_cast<size_t>(rv->level)];
        st.data->actions.push_back(ActReverse{rv->level, iv.lo + iv.hi});
      } else if (const auto* sk = std::get_if<Skewing>(&t)) {
        if (n <= sk->b) continue;
        st.data->actions.push_back(
            ActSkew{sk->a, sk->b, sk->factor_a, sk->factor_b});
        st.intervals[static_cast<size_t>(sk->b)] =
            skew_interval(st.intervals[static_cast<size_t>(sk->a)],
                          st.intervals[static_cast<size_t>(sk->b)],
                          sk->factor_a, sk->factor_b);
      } else if (const auto* tl = std::get_if<Tiling>(&t)) {
        int start = tl->levels.front();
        int w = static_cast<int>(tl->levels.size());
        if (n <= tl->levels.back()) continue;
        ActTile act;
        act.start = start;
        act.width = w;
        act.sizes = tl->sizes;
        std::vector<Interval> tiles, points;
        for (int i = 0; i < w; ++i) {
          const Interval& iv = st.intervals[static_cast<size_t>(start + i)];
          int64_t size = tl->sizes[static_cast<size_t>(i)];
          act.base.push_back(iv.lo);
          int64_t span = iv.hi - iv.lo;
          tiles.push_back({0, span / size});
          points.push_back({0, std::min<int64_t>(size - 1, span)});
        }
        st.data->actions.push_back(std::move(act));
        std::vector<Interval> iv2(st.intervals.begin(),
                                  st.intervals.begin() + start);
        iv2.insert(iv2.end(), tiles.begin(), tiles.end());
        iv2.insert(iv2.end(), points.begin(), points.end());
        iv2.insert(iv2.end(), st.intervals.begin() + start + w,
                   st.intervals.end());
        st.intervals = std::move(iv2);
        st.data->out_dims += w;
      }
    }
    frame.apply(t);
  }

  int max_out = 0;
  for (const auto& site : idx.sites) {
    auto& data = map.comps_[static_cast<size_t>(site.comp->id)];
    max_out = std::max(max_out, data.out_dims);
    data.follow.resize(static_cast<size_t>(data.out_dims));
    for (int j = 0; j < data.out_dims; ++j) {
      if (site.root_index == 0 && j < frame.dims())
        data.follow[static_cast<size_t>(j)] = frame.follow(j);
      else
        data.follow[static_cast<size_t>(j)] = j + 1;  // untouched roots
    }
  }
  map.width_ = 2 * max_out + 1;
  for (int d = 0; d < frame.dims(); ++d)
    if (frame.parallel(d)) map.parallel_slots_.push_back(2 * d + 1);
  return map;
}

namespace {

void apply_actions(const std::vector<Action>& actions,
                   std::vector<int64_t>& dyn) {
  for (const Action& act : actions) {
    if (const auto* sw = std::get_if<ActSwap>(&act)) {
      std::swap(dyn[static_cast<size_t>(sw->a)], dyn[static_cast<size_t>(sw->b)]);
    } else if (const auto* rv = std::get_if<ActReverse>(&act)) {
      dyn[static_cast<size_t>(rv->dim)] = rv->c - dyn[static_cast<size_t>(rv->dim)];
    } else if (const auto* sk = std::get_if<ActSkew>(&act)) {
      dyn[static_cast<size_t>(sk->b)] = sk->fa * dyn[static_cast<size_t>(sk->a)] +
                                        sk->fb * dyn[static_cast<size_t>(sk->b)];
    } else if (const auto* tl = std::get_if<ActTile>(&act)) {
      std::vector<int64_t> out;
      out.reserve(dyn.size() + static_cast<size_t>(tl->width));
      out.insert(out.end(), dyn.begin(), dyn.begin() + tl->start);
      for (int i = 0; i < tl->width; ++i) {
        int64_t off = dyn[static_cast<size_t>(tl->start + i)] -
                      tl->base[static_cast<size_t>(i)];
        out.push_back(off / tl->sizes[static_cast<size_t>(i)]);
      }
      for (int i = 0; i < tl->width; ++i) {
        int64_t off = dyn[static_cast<size_t>(tl->start + i)] -
                      tl->base[static_cast<size_t>(i)];
        out.push_back(off % tl->sizes[static_cast<size_t>(i)]);
      }
      out.insert(out.end(), dyn.begin() + tl->start + tl->width, dyn.end());
      dyn = std::move(out);
    }
  }
}

}  // namespace

std::vector<int64_t> IterationMap::transform_iter(
    int32_t comp_id, const std::vector<int64_t>& iter) const {
  const CompData& c = comps_.at(static_cast<size_t>(comp_id));
  if (static_cast<int>(iter.size()) != c.depth)
    throw ValidationError("iteration vector has " + std::to_string(iter.size()) +
                          " entries, computation " + std::to_string(comp_id) +
                          " has depth " + std::to_string(c.depth));
  std::vector<int64_t> dyn = iter;
  apply_actions(c.actions, dyn);
  return dyn;
}

void IterationMap::transform_timestamp_into(int32_t comp_id,
                                            const std::vector<int64_t>& iter,
                                            std::vector<int64_t>& scratch,
                                            ir::Timestamp& out) const {
  const CompData& c = comps_.at(static_cast<size_t>(comp_id));
  scratch.assign(iter.begin(), iter.end());
  apply_actions(c.actions, scratch);
  out.assign(static_cast<size_t>(width_), 0);
  out[0] = c.statics[0];
  for (int j = 0; j < c.out_dims; ++j) {
    out[static_cast<size_t>(2 * j + 1)] = scratch[static_cast<size_t>(j)];
    int f = c.follow[static_cast<size_t>(j)];
    out[static_cast<size_t>(2 * j + 2)] =
        f < 0 ? 0 : c.statics[static_cast<size_t>(f)];
  }
}

ir::Timestamp IterationMap::transform_timestamp(
    int32_t comp_id, const std::vector<int64_t>& iter) const {
  std::vector<int64_t> scratch;
  ir::Timestamp out;
  transform_timestamp_into(comp_id, iter, scratch, out);
  return out;
}

int IterationMap::out_dims(int32_t comp_id) const {
  return comps_.at(static_cast<size_t>(comp_id)).out_dims;
}

int IterationMap::depth(int32_t comp_id) const {
  return comps_.at(static_cast<size_t>(comp_id)).depth;
}

ir::Timestamp transformed_timestamp(const IterationMap& map,
                                    const ir::Timestamp& ts, int32_t comp_id) {
  int d = map.depth(comp_id);
  if (static_cast<int>(ts.size()) < 2 * d + 1)
    throw ValidationError("timestamp too short for computation " +
                          std::to_string(comp_id));
  std::vector<int64_t> iter(static_cast<size_t>(d));
  for (int k = 0; k < d; ++k) iter[static_cast<size_t>(k)] = ts[static_cast<size_t>(2 * k + 1)];
  return map.transform_timestamp(comp_id, iter);
}

using nlohmann::json;

json to_json(const Schedule& s) {
  json arr = json::array();
  for (const Transformation& t : s.transforms) {
    json rec{{"kind", kind_name(t)}};
    if (const auto* ic = std::get_if<Interchange>(&t)) {
      rec["levels"] = {ic->a, ic->b};
    } else if (const auto* rv = std::get_if<Reversal>(&t)) {
      rec["levels"] = {rv->level};
    } else if (const auto* sk = std::get_if<Skewing>(&t)) {
      rec["levels"] = {sk->a, sk->b};
      rec["factors"] = {sk->factor_a, sk->factor_b};
    } else if (const auto* pz = std::get_if<Parallelization>(&t)) {
      rec["levels"] = {pz->level};
    } else if (const auto* tl = std::get_if<Tiling>(&t)) {
      rec["levels"] = tl->levels;
      rec["sizes"] = tl->sizes;
    } else if (const auto* ur = std::get_if<Unrolling>(&t)) {
      rec["levels"] = {ur->level};
      rec["factor"] = ur->factor;
    }
    arr.push_back(std::move(rec));
  }
  return arr;
}

Schedule schedule_from_json(const json& j) {
  Schedule s;
  const json* arr = &j;
  if (j.is_object()) {
    if (j.contains("target")) s.target = j.at("target").get<std::string>();
    arr = &j.at("transforms");
  }
  for (const auto& rec : *arr) {
    std::string kind = rec.at("kind").get<std::string>();
    auto levels = rec.value("levels", std::vector<int>{});
    auto need_levels = [&](size_t n) {
      if (levels.size() != n)
        throw ValidationError(kind + " expects " + std::to_string(n) +
                              " levels, got " + std::to_string(levels.size()));
    };
    if (kind == "interchange") {
      need_levels(2);
      s.transforms.push_back(Interchange{levels[0], levels[1]});
    } else if (kind == "reversal") {
      need_levels(1);
      s.transforms.push_back(Reversal{levels[0]});
    } else if (kind == "skewing") {
      need_levels(2);
      auto f = rec.at("factors").get<std::vector<int64_t>>();
      if (f.size() != 2) throw ValidationError("skewing expects 2 factors");
      s.transforms.push_back(Skewing{levels[0], levels[1], f[0], f[1]});
    } else if (kind == "parallelization") {
      need_levels(1);
      s.transforms.push_back(Parallelization{levels[0]});
    } else if (kind == "tiling") {
      Tiling t;
      t.levels = levels;
      t.sizes = rec.at("sizes").get<std::vector<int64_t>>();
      s.transforms.push_back(std::move(t));
    } else if (kind == "unrolling") {
      need_levels(1);
      s.transforms.push_back(Unrolling{levels[0], rec.value("factor", int64_t{2})});
    } else {
      throw ValidationError("unknown transformation kind: " + kind);
    }
  }
  return s;
}

Schedule load_schedule(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open schedule file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw IoError("cannot parse schedule file " + path + ": " + e.what());
  }
  try {
    return schedule_from_json(j);
  } catch (const json::exception& e) {
    throw ValidationError("malformed schedule in " + path + ": " + e.what());
  }
}

void save_schedule(const Schedule& s, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write schedule file: " + path);
  out << to_json(s).dump(2) << "\n";
}

std::string serialize(const Schedule& s) { return to_json(s).dump(); }

}  // namespace legalis::transform
