#include "legalis/ir_json.hpp"

#include <fstream>

namespace legalis::ir {

using nlohmann::json;

namespace {

json access_to_json(const Access& a) {
  return json{{"buffer", a.buffer}, {"matrix", a.matrix.m}};
}

json node_to_json(const LoopChild& child);

json loop_to_json(const Loop& l) {
  json kids = json::array();
  for (const auto& c : l.children) kids.push_back(node_to_json(c));
  return json{{"loop",
               {{"id", l.id},
                {"lower", l.lower},
                {"upper", l.upper},
                {"children", kids}}}};
}

json node_to_json(const LoopChild& child) {
  if (const auto* sub = std::get_if<std::unique_ptr<Loop>>(&child))
    return loop_to_json(**sub);
  const Computation& comp = std::get<Computation>(child);
  json reads = json::array();
  for (const auto& r : comp.reads) reads.push_back(access_to_json(r));
  return json{{"comp",
               {{"id", comp.id},
                {"write", access_to_json(comp.write)},
                {"reads", reads},
                {"ops",
                 {{"add", comp.ops.adds},
                  {"sub", comp.ops.subs},
                  {"mul", comp.ops.muls},
                  {"div", comp.ops.divs}}}}}};
}

Access access_from_json(const json& j, const Program& p, int depth) {
  Access a;
  a.buffer = j.at("buffer").get<int32_t>();
  if (a.buffer < 0 || a.buffer >= static_cast<int32_t>(p.buffers.size()))
    throw ValidationError("access references unknown buffer " +
                          std::to_string(a.buffer));
  int rows = p.buffers[static_cast<size_t>(a.buffer)].dims();
  a.matrix.rows = rows;
  a.matrix.cols = depth + 1;
  a.matrix.m = j.at("matrix").get<std::vector<int64_t>>();
  if (a.matrix.m.size() != static_cast<size_t>(rows) * (depth + 1))
    throw ValidationError("access matrix for buffer " + std::to_string(a.buffer) +
                          " has " + std::to_string(a.matrix.m.size()) +
                          " entries, expected " +
                          std::to_string(rows * (depth + 1)));
  return a;
}

LoopChild node_from_json(const json& j, const Program& p, int depth);

std::unique_ptr<Loop> loop_from_json(const json& j, const Program& p,
                                     int depth) {
  auto l = std::make_unique<Loop>();
  l->id = j.at("id").get<int32_t>();
  l->lower = j.at("lower").get<int64_t>();
  l->upper = j.at("upper").get<int64_t>();
  for (const auto& c : j.at("children")) {
    l->children.push_back(node_from_json(c, p, depth + 1));
  }
  return l;
}

LoopChild node_from_json(const json& j, const Program& p, int depth) {
  if (j.contains("loop")) return loop_from_json(j.at("loop"), p, depth);
  if (!j.contains("comp"))
    throw ValidationError("tree node must contain either \"loop\" or \"comp\"");
  const json& c = j.at("comp");
  Computation comp;
  comp.id = c.at("id").get<int32_t>();
  comp.depth = depth;
  comp.write = access_from_json(c.at("write"), p, depth);
  if (c.contains("reads"))
    for (const auto& r : c.at("reads"))
      comp.reads.push_back(access_from_json(r, p, depth));
  if (c.contains("ops")) {
    const json& ops = c.at("ops");
    comp.ops.adds = ops.value("add", 0);
    comp.ops.subs = ops.value("sub", 0);
    comp.ops.muls = ops.value("mul", 0);
    comp.ops.divs = ops.value("div", 0);
  }
  return comp;
}

}  // namespace

json to_json(const Program& p) {
  json buffers = json::array();
  for (const auto& b : p.buffers)
    buffers.push_back(json{{"id", b.id}, {"extents", b.extents}});
  json tree = json::array();
  for (const auto& r : p.roots) tree.push_back(loop_to_json(*r));
  return json{{"name", p.name}, {"buffers", buffers}, {"tree", tree}};
}

Program program_from_json(const json& j) {
  Program p;
  p.name = j.at("name").get<std::string>();
  for (const auto& b : j.at("buffers")) {
    Buffer buf;
    buf.id = b.at("id").get<int32_t>();
    buf.extents = b.at("extents").get<std::vector<int64_t>>();
    p.buffers.push_back(std::move(buf));
  }
  for (const auto& node : j.at("tree")) {
    if (!node.contains("loop"))
      throw ValidationError("program roots must be loops");
    p.roots.push_back(loop_from_json(node.at("loop"), p, 0));
  }
  return p;
}

Program load_program(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open program file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw IoError("cannot parse program file " + path + ": " + e.what());
  }
  try {
    return program_from_json(j);
  } catch (const json::exception& e) {
    throw ValidationError("malformed program in " + path + ": " + e.what());
  }
}

void save_program(const Program& p, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write program file: " + path);
  out << to_json(p).dump(2) << "\n";
}

}  // namespace legalis::ir
