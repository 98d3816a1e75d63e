// Copyright 2026 The Taskforge Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "taskforge/mutation/mutation.hpp"

#include <algorithm>
#include <map>
#include <sstream>

#include "taskforge/common/error.hpp"
#include "taskforge/common/fs.hpp"
#include "taskforge/common/hash.hpp"

namespace taskforge {

using nlohmann::json;
using syntax::kNoNode;
using syntax::NodeId;
using syntax::QueryMatch;
using syntax::SyntaxTree;

EditSet normalize_edit_set(EditSet es, std::string_view source) {
  if (es.edits.empty()) throw Error(ErrorCode::InvalidEditSet, es.file_path, "no edits");
  std::stable_sort(es.edits.begin(), es.edits.end(),
                   [](const Edit& a, const Edit& b) { return a.start < b.start; });
  bool changes = false;
  for (std::size_t i = 0; i < es.edits.size(); ++i) {
    const Edit& e = es.edits[i];
    if (e.start > e.end || e.end > source.size()) {
      throw Error(ErrorCode::SpanOutOfBounds, es.file_path,
                  "[" + std::to_string(e.start) + "," + std::to_string(e.end) + ") in " +
                      std::to_string(source.size()) + " bytes");
    }
    if (i > 0) {
      const Edit& p = es.edits[i - 1];
      // Two insertions at one offset have no defined order either.
      if (e.start < p.end || (e.start == p.start && e.start == e.end && p.start == p.end)) {
        throw Error(ErrorCode::OverlappingEdits, es.file_path,
                    "edit at " + std::to_string(e.start) + " overlaps edit at " +
                        std::to_string(p.start));
      }
    }
    if (source.substr(e.start, e.end - e.start) != e.replacement) changes = true;
  }
  if (!changes) throw Error(ErrorCode::InvalidEditSet, es.file_path, "edits change nothing");
  return es;
}

std::string apply_edits(std::string_view source, const EditSet& edit_set) {
  EditSet es = normalize_edit_set(edit_set, source);
  std::string out(source);
  for (auto it = es.edits.rbegin(); it != es.edits.rend(); ++it) {
    out.replace(it->start, it->end - it->start, it->replacement);
  }
  return out;
}

namespace {

int method_count(const AnalysisReport& report, const std::string& class_id) {
  return static_cast<int>(std::count_if(
      report.entities.begin(), report.entities.end(), [&](const EntityRecord& e) {
        return e.kind == EntityKind::method && e.parent_id && *e.parent_id == class_id;
      }));
}

bool has_variant_group(const LanguageTemplate& tpl) {
  return std::any_of(tpl.operator_groups.begin(), tpl.operator_groups.end(),
                     [](const auto& g) { return g.second.size() >= 2; });
}

bool precondition_holds(std::string_view name, const EntityRecord& e,
                        const AnalysisReport& report) {
  if (name.starts_with("has_")) return e.has(name);
  if (name == "min_statements_2") return e.statement_count >= 2;
  if (name == "min_members_2") return e.kind == EntityKind::class_ && e.statement_count >= 2;
  if (name == "min_methods_2") {
    return e.kind == EntityKind::class_ && method_count(report, e.entity_id) >= 2;
  }
  if (name == "is_class") return e.kind == EntityKind::class_;
  if (name == "is_callable") return e.kind != EntityKind::class_;
  return false;
}

}  // namespace

bool check_preconditions(const MutationSpec& spec, const AnalysisReport& report,
                         const TemplateRegistry& registry) {
  if (spec.snapshot_id != report.snapshot_id) {
    throw Error(ErrorCode::SnapshotMismatch, spec.candidate_id,
                "planned against " + spec.snapshot_id + ", report is " + report.snapshot_id);
  }
  const EntityRecord* e = report.find(spec.target);
  if (!e || e->is_test) return false;
  const CompiledTemplate* tpl = registry.find(e->language_id);
  if (!tpl) return false;
  auto rule = tpl->tpl.injection_rules.find(spec.modifier);
  if (rule == tpl->tpl.injection_rules.end()) return false;

  bool class_entity = e->kind == EntityKind::class_;
  if (is_class_modifier(spec.modifier) != class_entity) return false;
  switch (spec.modifier) {
    case ModifierId::op_change:
      if (!has_variant_group(tpl->tpl)) return false;
      break;
    case ModifierId::op_flip:
      if (tpl->tpl.operator_inversions.empty()) return false;
      break;
    case ModifierId::stmt_shuffle:
      if (e->statement_count < 2) return false;
      break;
    case ModifierId::member_shuffle:
      if (e->statement_count < 2) return false;
      break;
    case ModifierId::method_drop:
      if (method_count(report, e->entity_id) < 2) return false;
      break;
    default:
      break;
  }
  return std::all_of(rule->second.preconditions.begin(), rule->second.preconditions.end(),
                     [&](const std::string& p) { return precondition_holds(p, *e, report); });
}

namespace {

bool is_blank(char c) { return c == ' ' || c == '\t' || c == '\r'; }

std::string line_indent(std::string_view src, std::size_t pos) {
  std::size_t ls = pos;
  while (ls > 0 && src[ls - 1] != '\n') --ls;
  std::size_t e = ls;
  while (e < src.size() && (src[e] == ' ' || src[e] == '\t')) ++e;
  return std::string(src.substr(ls, e - ls));
}

// Deletes [s, e), widened to whole lines when nothing else shares them.
Edit deletion(std::string_view src, std::size_t s, std::size_t e) {
  std::size_t ls = s;
  while (ls > 0 && is_blank(src[ls - 1])) --ls;
  std::size_t le = e;
  while (le < src.size() && is_blank(src[le])) ++le;
  bool own_line = (ls == 0 || src[ls - 1] == '\n') && (le == src.size() || src[le] == '\n');
  if (own_line) return {ls, le < src.size() ? le + 1 : le, ""};
  return {s, e, ""};
}

std::string dedent_tail(std::string_view text, std::string_view unit) {
  std::string out;
  std::size_t pos = 0;
  bool first = true;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? nl : nl - pos);
    if (!first && line.starts_with(unit)) line.remove_prefix(unit.size());
    out += line;
    first = false;
    if (nl == std::string_view::npos) break;
    out += '\n';
    pos = nl + 1;
  }
  return out;
}

// Sattolo's algorithm: a uniformly random cyclic permutation, hence a
// derangement for n >= 2.
std::vector<std::size_t> derangement(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> p(n);
  for (std::size_t i = 0; i < n; ++i) p[i] = i;
  std::uint64_t state = seed;
  for (std::size_t i = n; i-- > 1;) {
    state = splitmix64(state);
    std::size_t j = static_cast<std::size_t>(state % i);
    std::swap(p[i], p[j]);
  }
  return p;
}

[[noreturn]] void no_variant(const MutationSpec& spec, const std::string& why) {
  throw Error(ErrorCode::NoVariantAvailable, spec.candidate_id.empty() ? spec.target
                                                                      : spec.candidate_id,
              std::string(to_string(spec.modifier)) + ": " + why);
}

std::vector<Edit> shuffle_children(const SyntaxTree& tree, NodeId parent, std::uint64_t seed) {
  auto kids = tree.named_children(parent);
  auto perm = derangement(kids.size(), seed);
  std::vector<Edit> edits;
  for (std::size_t k = 0; k < kids.size(); ++k) {
    const auto& span = tree.node(kids[k]).span;
    edits.push_back({span.start, span.end, std::string(tree.text(kids[perm[k]]))});
  }
  return edits;
}

std::vector<Edit> delete_node(const EntityRecord& entity,
                              const SyntaxTree& tree, const CompiledTemplate& tpl, NodeId target) {
  const auto& src = tree.source();
  NodeId parent = tree.node(target).parent;
  // Removing the only statement of the entity body would leave it empty.
  if (parent != kNoNode && tree.node(parent).span == entity.body_span &&
      tree.named_children(parent).size() == 1) {
    std::string outer = line_indent(src, entity.body_span.start);
    return {{entity.body_span.start, entity.body_span.end, tpl.render_stub(outer)}};
  }
  const auto& span = tree.node(target).span;
  return {deletion(src, span.start, span.end)};
}

std::vector<Edit> transform(const MutationSpec& spec, const EntityRecord& entity,
                            const SyntaxTree& tree, const CompiledTemplate& tpl,
                            const QueryMatch& m) {
  const LanguageTemplate& t = tpl.tpl;
  NodeId target = m.capture("target");
  const auto& tspan = tree.node(target).span;
  auto span_of = [&](const char* cap) {
    NodeId n = m.capture(cap);
    if (n == kNoNode) no_variant(spec, std::string("missing @") + cap);
    return tree.node(n).span;
  };
  auto text_of = [&](const char* cap) { return std::string(tree.text(span_of(cap))); };

  switch (spec.modifier) {
    case ModifierId::op_change: {
      auto op = span_of("op");
      std::string cur(tree.text(op));
      for (const auto& [_, group] : t.operator_groups) {
        if (std::find(group.begin(), group.end(), cur) == group.end()) continue;
        std::vector<std::string> siblings;
        for (const auto& g : group) {
          if (g != cur) siblings.push_back(g);
        }
        if (siblings.empty()) break;
        const auto& pick = siblings[splitmix64(spec.seed) % siblings.size()];
        return {{op.start, op.end, pick}};
      }
      no_variant(spec, "operator '" + cur + "' has no group sibling");
    }
    case ModifierId::op_flip: {
      auto op = span_of("op");
      auto it = t.operator_inversions.find(std::string(tree.text(op)));
      if (it == t.operator_inversions.end()) no_variant(spec, "operator has no inverse");
      return {{op.start, op.end, it->second}};
    }
    case ModifierId::operand_swap: {
      auto l = span_of("left");
      auto r = span_of("right");
      return {{l.start, l.end, text_of("right")}, {r.start, r.end, text_of("left")}};
    }
    case ModifierId::chain_break:
      return {{tspan.start, tspan.end, text_of("left")}};
    case ModifierId::const_mod: {
      std::string lit(tree.text(tspan));
      bool decimal = !lit.empty() && lit.size() <= 18 &&
                     std::all_of(lit.begin(), lit.end(), [](char c) { return c >= '0' && c <= '9'; }) &&
                     (lit.size() == 1 || lit[0] != '0');
      if (!decimal) no_variant(spec, "literal '" + lit + "' is not a plain decimal");
      long long v = std::stoll(lit);
      long long nv = (spec.seed % 2 == 0) ? v + 1 : v - 1;
      if (nv < 0) nv = v + 1;
      return {{tspan.start, tspan.end, std::to_string(nv)}};
    }
    case ModifierId::branch_swap: {
      auto a = span_of("then");
      auto b = span_of("else");
      return {{a.start, a.end, text_of("else")}, {b.start, b.end, text_of("then")}};
    }
    case ModifierId::stmt_shuffle:
    case ModifierId::member_shuffle:
      if (tree.named_children(target).size() < 2) no_variant(spec, "fewer than two children");
      return shuffle_children(tree, target, spec.seed);
    case ModifierId::block_drop:
    case ModifierId::wrapper_drop:
    case ModifierId::method_drop:
      return delete_node(entity, tree, tpl, target);
    case ModifierId::wrapper_unwrap: {
      NodeId body = m.capture("body");
      auto kids = body == kNoNode ? std::vector<NodeId>{} : tree.named_children(body);
      if (kids.empty()) no_variant(spec, "empty wrapper body");
      syntax::ByteSpan inner{tree.node(kids.front()).span.start, tree.node(kids.back()).span.end};
      return {{tspan.start, tspan.end, dedent_tail(tree.text(inner), t.indent_unit)}};
    }
    case ModifierId::base_drop: {
      auto b = span_of("bases");
      std::size_t s = b.start;
      const auto& src = tree.source();
      while (s > tspan.start && (src[s - 1] == ' ' || src[s - 1] == '\t')) --s;
      return {{s, b.end, ""}};
    }
  }
  no_variant(spec, "unknown modifier");
}

}  // namespace

EditSet plan_edits(const MutationSpec& spec, const EntityRecord& entity, const SyntaxTree& tree,
                   const CompiledTemplate& tpl) {
  const std::string subject = spec.candidate_id.empty() ? spec.target : spec.candidate_id;
  if (spec.node_spans.empty()) throw Error(ErrorCode::TargetVanished, subject, "no node spans");
  auto q = tpl.injection_queries.find(spec.modifier);
  if (q == tpl.injection_queries.end()) {
    throw Error(ErrorCode::TargetVanished, subject, "template has no rule for the modifier");
  }
  NodeId entity_node = tree.find_exact(entity.byte_span);
  if (entity_node == kNoNode) throw Error(ErrorCode::TargetVanished, subject, "entity not found");

  const ByteSpan want = spec.node_spans.front();
  for (const auto& m : q->second.matches(tree, entity_node)) {
    NodeId target = m.capture("target");
    if (target == kNoNode || tree.node(target).span != want) continue;
    EditSet es{entity.file_path, transform(spec, entity, tree, tpl, m)};
    std::string mutated;
    try {
      es = normalize_edit_set(std::move(es), tree.source());
      mutated = apply_edits(tree.source(), es);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::InvalidEditSet) no_variant(spec, "transformation is a no-op");
      throw;
    }
    if (tpl.grammar->parse(std::move(mutated)).has_error()) {
      no_variant(spec, "result does not parse");
    }
    return es;
  }
  throw Error(ErrorCode::TargetVanished, subject,
              "no match at [" + std::to_string(want.start) + "," + std::to_string(want.end) + ")");
}

FileReader directory_reader(const std::filesystem::path& root) {
  return [root](const std::string& rel) { return fsutil::read_file(root / rel); };
}

namespace {

std::string make_candidate_id(const MutationSpec& s) {
  std::string key = s.snapshot_id + "\n" + s.target + "\n" + std::string(to_string(s.modifier)) +
                    "\n" + std::to_string(s.seed);
  return std::string(to_string(s.modifier)) + "-" + sha256_hex(key).substr(0, 12);
}

// For each match target, the entity that owns it: the innermost class for
// class modifiers, the innermost function or method otherwise.
const EntityRecord* owner_of(const std::vector<const EntityRecord*>& file_entities,
                             ByteSpan span, bool want_class) {
  const EntityRecord* best = nullptr;
  for (const EntityRecord* e : file_entities) {
    if ((e->kind == EntityKind::class_) != want_class) continue;
    if (!e->byte_span.contains(span)) continue;
    if (!best || best->byte_span.contains(e->byte_span)) best = e;
  }
  return best;
}

struct ParsedFile {
  std::unique_ptr<SyntaxTree> tree;
  const CompiledTemplate* tpl = nullptr;
  // modifier -> entity_id -> owned target spans in match order
  std::map<ModifierId, std::map<std::string, std::vector<ByteSpan>>> owned;
};

}  // namespace

std::vector<Candidate> enumerate_candidates(const AnalysisReport& report,
                                            const std::set<ModifierId>& modifiers,
                                            const TemplateRegistry& registry,
                                            std::uint64_t seed, const FileReader& read) {
  std::map<std::string, std::vector<const EntityRecord*>> by_file;
  for (const auto& e : report.entities) by_file[e.file_path].push_back(&e);

  std::map<std::string, ParsedFile> files;
  auto parsed = [&](const EntityRecord& e) -> ParsedFile& {
    auto it = files.find(e.file_path);
    if (it != files.end()) return it->second;
    ParsedFile pf;
    pf.tpl = &registry.require(e.language_id);
    pf.tree = std::make_unique<SyntaxTree>(parse_source(read(e.file_path), *pf.tpl));
    for (const auto& [mod, query] : pf.tpl->injection_queries) {
      if (!modifiers.contains(mod)) continue;
      auto& per_entity = pf.owned[mod];
      for (const auto& m : query.matches(*pf.tree)) {
        NodeId t = m.capture("target");
        if (t == kNoNode) continue;
        ByteSpan span = pf.tree->node(t).span;
        const EntityRecord* owner = owner_of(by_file[e.file_path], span, is_class_modifier(mod));
        if (!owner) continue;
        auto& spans = per_entity[owner->entity_id];
        if (std::find(spans.begin(), spans.end(), span) == spans.end()) spans.push_back(span);
      }
    }
    return files.emplace(e.file_path, std::move(pf)).first->second;
  };

  std::vector<Candidate> out;
  for (std::size_t ei = 0; ei < report.entities.size(); ++ei) {
    const EntityRecord& e = report.entities[ei];
    if (e.is_test || !registry.find(e.language_id)) continue;
    for (ModifierId mod : all_modifiers()) {
      if (!modifiers.contains(mod)) continue;
      MutationSpec spec;
      spec.modifier = mod;
      spec.target = e.entity_id;
      spec.snapshot_id = report.snapshot_id;
      spec.seed = derive_seed(seed, ei * kModifierCount + static_cast<std::size_t>(mod));
      if (!check_preconditions(spec, report, registry)) continue;
      ParsedFile& pf = parsed(e);
      if (pf.tree->has_error()) continue;
      auto it = pf.owned[mod].find(e.entity_id);
      if (it == pf.owned[mod].end() || it->second.empty()) continue;
      const auto& spans = it->second;
      spec.candidate_id = make_candidate_id(spec);
      std::size_t start = spec.seed % spans.size();
      for (std::size_t k = 0; k < spans.size(); ++k) {
        spec.node_spans = {spans[(start + k) % spans.size()]};
        try {
          EditSet es = plan_edits(spec, e, *pf.tree, *pf.tpl);
          out.push_back({spec, std::move(es)});
          break;
        } catch (const Error& err) {
          if (err.code() != ErrorCode::NoVariantAvailable &&
              err.code() != ErrorCode::TargetVanished) {
            throw;
          }
        }
      }
    }
  }
  return out;
}

std::vector<MutationSpec> enumerate_specs(const AnalysisReport& report,
                                          const std::set<ModifierId>& modifiers,
                                          const TemplateRegistry& registry, std::uint64_t seed,
                                          const FileReader& read) {
  std::vector<MutationSpec> out;
  for (auto& c : enumerate_candidates(report, modifiers, registry, seed, read)) {
    out.push_back(std::move(c.spec));
  }
  return out;
}

ProceduralSource::ProceduralSource(const TemplateRegistry& registry,
                                   std::set<ModifierId> modifiers, std::uint64_t seed,
                                   FileReader read)
    : registry_(&registry), modifiers_(std::move(modifiers)), seed_(seed), read_(std::move(read)) {}

std::vector<Candidate> ProceduralSource::candidates(const AnalysisReport& report) {
  return enumerate_candidates(report, modifiers_, *registry_, seed_, read_);
}

std::vector<Candidate> ManifestSource::candidates(const AnalysisReport& report) {
  auto cs = read_candidates(manifest_);
  for (const auto& c : cs) {
    if (c.spec.snapshot_id != report.snapshot_id) {
      throw Error(ErrorCode::SnapshotMismatch, c.spec.candidate_id,
                  "planned against " + c.spec.snapshot_id);
    }
  }
  return cs;
}

json to_json(const Candidate& c) {
  json j = json::object();
  j["candidate_id"] = c.spec.candidate_id;
  j["modifier"] = to_string(c.spec.modifier);
  j["target"] = c.spec.target;
  json spans = json::array();
  for (const auto& s : c.spec.node_spans) spans.push_back({s.start, s.end});
  j["node_spans"] = spans;
  j["seed"] = c.spec.seed;
  j["snapshot_id"] = c.spec.snapshot_id;
  j["file_path"] = c.edits.file_path;
  json edits = json::array();
  for (const auto& e : c.edits.edits) {
    edits.push_back({{"start", e.start}, {"end", e.end}, {"replacement", e.replacement}});
  }
  j["edits"] = edits;
  return j;
}

Candidate candidate_from_json(const json& j) {
  try {
    Candidate c;
    c.spec.candidate_id = j.at("candidate_id").get<std::string>();
    auto mod = parse_modifier(j.at("modifier").get<std::string>());
    if (!mod) {
      throw Error(ErrorCode::UnknownModifier, c.spec.candidate_id,
                  j.at("modifier").get<std::string>());
    }
    c.spec.modifier = *mod;
    c.spec.target = j.at("target").get<std::string>();
    for (const auto& s : j.at("node_spans")) {
      c.spec.node_spans.push_back({s.at(0).get<std::size_t>(), s.at(1).get<std::size_t>()});
    }
    c.spec.seed = j.at("seed").get<std::uint64_t>();
    c.spec.snapshot_id = j.at("snapshot_id").get<std::string>();
    c.edits.file_path = j.at("file_path").get<std::string>();
    for (const auto& e : j.at("edits")) {
      c.edits.edits.push_back({e.at("start").get<std::size_t>(), e.at("end").get<std::size_t>(),
                               e.at("replacement").get<std::string>()});
    }
    return c;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SchemaViolation, "candidate", e.what());
  }
}

void write_candidates(const std::vector<Candidate>& cs, const std::filesystem::path& path) {
  std::string out;
  for (const auto& c : cs) out += to_json(c).dump() + "\n";
  fsutil::write_file_atomic(path, out);
}

std::vector<Candidate> read_candidates(const std::filesystem::path& path) {
  std::vector<Candidate> out;
  std::istringstream in(fsutil::read_file(path));
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::SchemaViolation, path.string() + ":" + std::to_string(n), e.what());
    }
    out.push_back(candidate_from_json(j));
  }
  return out;
}

}  // namespace taskforge
