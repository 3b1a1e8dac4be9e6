#include "legalis/ir.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace legalis::ir {

std::string ValidationReport::to_string() const {
  if (ok()) return "ok";
  std::ostringstream out;
  for (size_t i = 0; i < violations.size(); ++i) {
    if (i) out << "; ";
    out << violations[i].code << ": " << violations[i].message;
  }
  return out.str();
}

const CompSite* ProgramIndex::site_for(int32_t comp_id) const {
  for (const auto& s : sites)
    if (s.comp->id == comp_id) return &s;
  return nullptr;
}

namespace {

void walk(const Loop& loop, int root_index, std::vector<const Loop*>& path,
          std::vector<int64_t>& statics, ProgramIndex& out) {
  path.push_back(&loop);
  for (size_t c = 0; c < loop.children.size(); ++c) {
    statics.push_back(static_cast<int64_t>(c));
    if (const auto* sub = std::get_if<std::unique_ptr<Loop>>(&loop.children[c])) {
      walk(**sub, root_index, path, statics, out);
    } else {
      const auto& comp = std::get<Computation>(loop.children[c]);
      CompSite site;
      site.comp = &comp;
      site.path = path;
      site.statics = statics;
      site.root_index = root_index;
      site.points = 1;
      for (const Loop* l : path) site.points *= std::max<int64_t>(l->extent(), 0);
      out.sites.push_back(std::move(site));
    }
    statics.pop_back();
  }
  path.pop_back();
}

}  // namespace

ProgramIndex build_index(const Program& p) {
  ProgramIndex idx;
  std::vector<const Loop*> path;
  std::vector<int64_t> statics;
  for (size_t r = 0; r < p.roots.size(); ++r) {
    statics.push_back(static_cast<int64_t>(r));
    walk(*p.roots[r], static_cast<int>(r), path, statics, idx);
    statics.pop_back();
  }
  for (const auto& s : idx.sites) {
    idx.max_depth = std::max(idx.max_depth, static_cast<int>(s.path.size()));
    idx.total_points += s.points;
  }
  return idx;
}

std::vector<int64_t> access_address(const AccessMatrix& m,
                                    const std::vector<int64_t>& iter) {
  if (static_cast<int>(iter.size()) != m.cols - 1)
    throw ValidationError("access_address: iteration vector has " +
                          std::to_string(iter.size()) + " entries, matrix expects " +
                          std::to_string(m.cols - 1));
  std::vector<int64_t> out(static_cast<size_t>(m.rows));
  for (int r = 0; r < m.rows; ++r) {
    int64_t v = m.at(r, m.cols - 1);
    for (int c = 0; c + 1 < m.cols; ++c) v += m.at(r, c) * iter[c];
    out[static_cast<size_t>(r)] = v;
  }
  return out;
}

namespace {

// Exact affine range of one access-matrix row over the rectangular domain.
std::pair<int64_t, int64_t> row_range(const AccessMatrix& m, int row,
                                      const std::vector<const Loop*>& path) {
  int64_t lo = m.at(row, m.cols - 1);
  int64_t hi = lo;
  for (int c = 0; c + 1 < m.cols; ++c) {
    int64_t coef = m.at(row, c);
    if (coef == 0) continue;
    int64_t a = coef * path[static_cast<size_t>(c)]->lower;
    int64_t b = coef * (path[static_cast<size_t>(c)]->upper - 1);
    lo += std::min(a, b);
    hi += std::max(a, b);
  }
  return {lo, hi};
}

void check_access(const Access& acc, const char* role, const CompSite& site,
                  const Program& p, ValidationReport& rep) {
  int32_t cid = site.comp->id;
  if (acc.buffer < 0 || acc.buffer >= static_cast<int32_t>(p.buffers.size())) {
    rep.violations.push_back(
        {"buffer", "computation " + std::to_string(cid) + " " + role +
                       " references unknown buffer " + std::to_string(acc.buffer)});
    return;
  }
  const Buffer& buf = p.buffers[static_cast<size_t>(acc.buffer)];
  const AccessMatrix& m = acc.matrix;
  if (m.rows != buf.dims()) {
    rep.violations.push_back(
        {"access", "computation " + std::to_string(cid) + " " + role + " has " +
                       std::to_string(m.rows) + " rows, buffer " +
                       std::to_string(acc.buffer) + " has " +
                       std::to_string(buf.dims()) + " dims"});
    return;
  }
  if (m.cols != site.comp->depth + 1) {
    rep.violations.push_back(
        {"access", "computation " + std::to_string(cid) + " " + role + " has " +
                       std::to_string(m.cols) + " columns, expected depth+1 = " +
                       std::to_string(site.comp->depth + 1)});
    return;
  }
  if (m.m.size() != static_cast<size_t>(m.rows) * m.cols) {
    rep.violations.push_back(
        {"access", "computation " + std::to_string(cid) + " " + role +
                       " matrix storage does not match rows*cols"});
    return;
  }
  for (int r = 0; r < m.rows; ++r) {
    auto [lo, hi] = row_range(m, r, site.path);
    if (lo < 0 || hi >= buf.extents[static_cast<size_t>(r)]) {
      rep.violations.push_back(
          {"extent", "computation " + std::to_string(cid) + " " + role +
                         " dim " + std::to_string(r) + " spans [" +
                         std::to_string(lo) + ", " + std::to_string(hi) +
                         "] outside buffer " + std::to_string(acc.buffer) +
                         " extent " +
                         std::to_string(buf.extents[static_cast<size_t>(r)])});
    }
  }
}

void collect_loops(const Loop& l, std::vector<const Loop*>& out) {
  out.push_back(&l);
  for (const auto& c : l.children)
    if (const auto* sub = std::get_if<std::unique_ptr<Loop>>(&c))
      collect_loops(**sub, out);
}

}  // namespace

ValidationReport validate_program(const Program& p, int64_t max_points) {
  ValidationReport rep;
  if (p.roots.empty())
    rep.violations.push_back({"tree", "program has no root loops"});

  std::vector<const Loop*> loops;
  for (const auto& r : p.roots)
    if (r) collect_loops(*r, loops);

  std::set<int32_t> loop_ids;
  for (const Loop* l : loops) {
    if (!loop_ids.insert(l->id).second)
      rep.violations.push_back(
          {"id", "duplicate loop id " + std::to_string(l->id)});
    if (l->upper <= l->lower)
      rep.violations.push_back(
          {"bound", "loop " + std::to_string(l->id) + " has empty domain [" +
                        std::to_string(l->lower) + ", " + std::to_string(l->upper) +
                        ")"});
    if (l->children.empty())
      rep.violations.push_back(
          {"tree", "loop " + std::to_string(l->id) + " has no children"});
  }

  for (size_t b = 0; b < p.buffers.size(); ++b) {
    const Buffer& buf = p.buffers[b];
    if (buf.id != static_cast<int32_t>(b))
      rep.violations.push_back(
          {"id", "buffer at position " + std::to_string(b) + " has id " +
                     std::to_string(buf.id) + " (ids must be 0..n-1 in order)"});
    if (buf.extents.empty())
      rep.violations.push_back(
          {"buffer", "buffer " + std::to_string(buf.id) + " has no dimensions"});
    for (int64_t e : buf.extents)
      if (e <= 0)
        rep.violations.push_back(
            {"buffer", "buffer " + std::to_string(buf.id) +
                           " has non-positive extent " + std::to_string(e)});
  }

  ProgramIndex idx = build_index(p);
  std::set<int32_t> comp_ids;
  int32_t expected_id = 0;
  for (const CompSite& site : idx.sites) {
    const Computation& comp = *site.comp;
    if (!comp_ids.insert(comp.id).second)
      rep.violations.push_back(
          {"id", "duplicate computation id " + std::to_string(comp.id)});
    else if (comp.id != expected_id)
      rep.violations.push_back(
          {"id", "computation id " + std::to_string(comp.id) +
                     " out of textual order (expected " +
                     std::to_string(expected_id) + ")"});
    ++expected_id;
    if (comp.depth != static_cast<int>(site.path.size()))
      rep.violations.push_back(
          {"depth", "computation " + std::to_string(comp.id) + " declares depth " +
                        std::to_string(comp.depth) + " but is nested under " +
                        std::to_string(site.path.size()) + " loops"});
    if (comp.depth < 1)
      rep.violations.push_back(
          {"depth", "computation " + std::to_string(comp.id) +
                        " must sit inside at least one loop"});
    if (comp.depth == static_cast<int>(site.path.size())) {
      check_access(comp.write, "write", site, p, rep);
      for (const Access& rd : comp.reads) check_access(rd, "read", site, p, rep);
    }
    if (comp.ops.adds < 0 || comp.ops.subs < 0 || comp.ops.muls < 0 ||
        comp.ops.divs < 0)
      rep.violations.push_back(
          {"ops", "computation " + std::to_string(comp.id) +
                      " has negative op counts"});
  }

  if (idx.total_points > max_points)
    rep.violations.push_back(
        {"budget", "program has " + std::to_string(idx.total_points) +
                       " instances, budget is " + std::to_string(max_points)});
  return rep;
}

void for_each_instance(
    const Program& p, const ProgramIndex& idx,
    const std::function<void(int32_t, const std::vector<int64_t>&,
                             const Timestamp&)>& fn) {
  const int width = idx.ts_width();
  std::vector<int64_t> iter;
  Timestamp ts(static_cast<size_t>(width), 0);

  // Recursive descent: ts is maintained incrementally; positions
  // 2k (static) and 2k+1 (dynamic) for level k, root index at slot 0.
  std::function<void(const Loop&, int)> descend = [&](const Loop& loop,
                                                      int level) {
    for (int64_t x = loop.lower; x < loop.upper; ++x) {
      ts[static_cast<size_t>(2 * level + 1)] = x;
      iter.push_back(x);
      for (size_t c = 0; c < loop.children.size(); ++c) {
        ts[static_cast<size_t>(2 * level + 2)] = static_cast<int64_t>(c);
        if (const auto* sub =
                std::get_if<std::unique_ptr<Loop>>(&loop.children[c])) {
          descend(**sub, level + 1);
          // clear the deeper slots we touched
          for (size_t k = static_cast<size_t>(2 * level + 3);
               k < static_cast<size_t>(width); ++k)
            ts[k] = 0;
        } else {
          fn(std::get<Computation>(loop.children[c]).id, iter, ts);
        }
      }
      iter.pop_back();
    }
    ts[static_cast<size_t>(2 * level + 1)] = 0;
    ts[static_cast<size_t>(2 * level + 2)] = 0;
  };

  for (size_t r = 0; r < p.roots.size(); ++r) {
    ts.assign(static_cast<size_t>(width), 0);
    ts[0] = static_cast<int64_t>(r);
    descend(*p.roots[r], 0);
  }
}

std::vector<Instance> enumerate_instances(const Program& p) {
  ProgramIndex idx = build_index(p);
  std::vector<Instance> out;
  out.reserve(static_cast<size_t>(idx.total_points));
  for_each_instance(p, idx,
                    [&](int32_t cid, const std::vector<int64_t>& iter,
                        const Timestamp& ts) {
                      out.push_back({cid, iter, ts});
                    });
  return out;
}

namespace {

std::unique_ptr<Loop> clone_loop(const Loop& l) {
  auto out = std::make_unique<Loop>();
  out->id = l.id;
  out->lower = l.lower;
  out->upper = l.upper;
  out->children.reserve(l.children.size());
  for (const auto& c : l.children) {
    if (const auto* sub = std::get_if<std::unique_ptr<Loop>>(&c))
      out->children.emplace_back(clone_loop(**sub));
    else
      out->children.emplace_back(std::get<Computation>(c));
  }
  return out;
}

}  // namespace

Program clone(const Program& p) {
  Program out;
  out.name = p.name;
  out.buffers = p.buffers;
  out.roots.reserve(p.roots.size());
  for (const auto& r : p.roots) out.roots.push_back(clone_loop(*r));
  return out;
}

}  // namespace legalis::ir
