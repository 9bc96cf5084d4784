#pragma once

// Structure-consistent prompt transformations. Each scheme produces at most
// one variant of a prompt; selection of the parameter, local, compound
// assignment or if-statement to rewrite is always "first in source order",
// so variant generation is deterministic.

#include <algorithm>
#include <array>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "completest/corpus.hpp"
#include "completest/syntax/distance.hpp"
#include "completest/syntax/parser.hpp"
#include "completest/syntax/scope.hpp"

namespace completest {

enum class SchemeId : std::uint8_t { Original, RepR, RepC, RelR, RelC, Irr, Rtf, GraR, GraC, Ini };

/// ORIGINAL first, then the transformation-table order.
inline constexpr std::array<SchemeId, 10> kAllSchemes = {
    SchemeId::Original, SchemeId::RepR, SchemeId::RepC, SchemeId::RelR, SchemeId::RelC,
    SchemeId::Irr,      SchemeId::Rtf,  SchemeId::GraR, SchemeId::GraC, SchemeId::Ini};

[[nodiscard]] constexpr std::string_view to_string(SchemeId s) {
  switch (s) {
    case SchemeId::Original: return "ORIGINAL";
    case SchemeId::RepR: return "REP_R";
    case SchemeId::RepC: return "REP_C";
    case SchemeId::RelR: return "REL_R";
    case SchemeId::RelC: return "REL_C";
    case SchemeId::Irr: return "IRR";
    case SchemeId::Rtf: return "RTF";
    case SchemeId::GraR: return "GRA_R";
    case SchemeId::GraC: return "GRA_C";
    case SchemeId::Ini: return "INI";
  }
  return "?";
}

[[nodiscard]] inline std::optional<SchemeId> parse_scheme(std::string_view name) {
  for (SchemeId s : kAllSchemes) {
    if (to_string(s) == name) return s;
  }
  return std::nullopt;
}

/// Position in the ORIGINAL-first table order; used for tie-breaking.
[[nodiscard]] constexpr std::size_t scheme_rank(SchemeId s) { return static_cast<std::size_t>(s); }

[[nodiscard]] constexpr bool is_identifier_level(SchemeId s) {
  return s == SchemeId::RepR || s == SchemeId::RepC || s == SchemeId::RelR || s == SchemeId::RelC;
}

struct PromptCase {
  std::string seed_id;
  SchemeId scheme = SchemeId::Original;
  std::string prompt;
  std::string ground_truth;
};

struct MutationDefect {
  std::string seed_id;
  SchemeId scheme;
  std::string reason;
};

struct VariantSet {
  std::vector<PromptCase> cases;
  std::vector<MutationDefect> defects;
};

struct MutationOptions {
  double max_structural_distance = 0.2;
};

class SchemeNotApplicable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

struct Edit {
  std::uint32_t begin;
  std::uint32_t end;
  std::string replacement;
};

inline std::string apply_edits(std::string_view source, std::vector<Edit> edits) {
  std::sort(edits.begin(), edits.end(),
            [](const Edit& a, const Edit& b) { return a.begin > b.begin; });
  std::string out(source);
  for (const Edit& e : edits) out.replace(e.begin, e.end - e.begin, e.replacement);
  return out;
}

inline std::string fresh_name(const std::string& base, const std::set<std::string>& taken) {
  if (taken.count(base) == 0) return base;
  for (int k = 1;; ++k) {
    std::string candidate = base + "_" + std::to_string(k);
    if (taken.count(candidate) == 0) return candidate;
  }
}

// Parsed view of a function source with everything the schemes need.
struct FunctionView {
  explicit FunctionView(std::string_view source)
      : tree(syntax::parse(source)), scope(syntax::analyze_scope(tree)) {
    const auto& src = tree.source();
    for (syntax::NodeId id : tree.preorder()) {
      if (!within_function(id)) continue;
      const auto kind = tree.kind(id);
      if (kind == syntax::NodeKind::AugmentedAssignment && compound == syntax::kNoNode) {
        const auto op = tree.text(tree.node(id).children[1]);
        if (op == "+=" || op == "-=" || op == "*=" || op == "//=") compound = id;
      } else if (kind == syntax::NodeKind::IfStatement && first_if == syntax::kNoNode) {
        first_if = id;
      }
    }
    (void)src;
  }

  [[nodiscard]] bool within_function(syntax::NodeId id) const {
    const auto& fn = tree.node(scope.function);
    const auto& n = tree.node(id);
    return n.begin >= fn.begin && n.end <= fn.end && id != scope.function;
  }

  syntax::SyntaxTree tree;
  syntax::ScopeInfo scope;
  syntax::NodeId compound = syntax::kNoNode;
  syntax::NodeId first_if = syntax::kNoNode;
};

inline std::string line_indent(std::string_view src, std::uint32_t offset) {
  std::size_t line_start = src.rfind('\n', offset == 0 ? 0 : offset - 1);
  line_start = (line_start == std::string_view::npos || offset == 0) ? 0 : line_start + 1;
  std::size_t p = line_start;
  while (p < src.size() && (src[p] == ' ' || src[p] == '\t')) ++p;
  return std::string(src.substr(line_start, p - line_start));
}

inline std::string rename(const FunctionView& view, const syntax::IdentifierInfo& target,
                          const std::string& new_name) {
  std::vector<Edit> edits;
  for (const auto& span : target.occurrences()) edits.push_back({span.begin, span.end, new_name});
  return apply_edits(view.tree.source(), std::move(edits));
}

// Inserts `lines` (relative indentation already applied for nested lines)
// as the first statement of the function body.
inline std::string insert_first_statement(const FunctionView& view,
                                          const std::vector<std::string>& lines) {
  const auto& tree = view.tree;
  const std::string_view src = tree.source();
  const auto fn = view.scope.function;
  const auto body = syntax::function_body(tree, fn);
  const auto stmts = syntax::body_statements(tree, fn);
  const std::string def_indent = line_indent(src, tree.node(fn).begin);
  const auto first = tree.node(stmts.front());

  const bool indented = tree.kind(tree.node(body).children.front()) == syntax::NodeKind::Newline;
  std::string indent = indented ? line_indent(src, first.begin) : def_indent + "    ";
  if (indent.size() <= def_indent.size()) indent = def_indent + "    ";
  const std::string unit = indent.substr(def_indent.size());

  std::string block;
  for (const auto& line : lines) {
    std::size_t depth = 0;
    while (depth < line.size() && line[depth] == '\t') ++depth;
    for (std::size_t d = 0; d < depth; ++d) block += unit;
    block += line.substr(depth);
    block += "\n" + indent;
  }
  if (indented) return apply_edits(src, {{first.begin, first.begin, block}});

  // Single-line body: move it onto its own indented line.
  syntax::NodeId colon = syntax::kNoNode;
  for (syntax::NodeId c : tree.node(fn).children) {
    if (c == body) break;
    if (tree.is_token(c, ":")) colon = c;
  }
  return apply_edits(src, {{tree.node(colon).end, first.begin, "\n" + indent + block}});
}

inline bool needs_parentheses(const syntax::SyntaxTree& tree, syntax::NodeId expr) {
  using syntax::NodeKind;
  switch (tree.kind(expr)) {
    case NodeKind::Identifier:
    case NodeKind::Keyword:
    case NodeKind::Number:
    case NodeKind::String:
    case NodeKind::ConcatenatedString:
    case NodeKind::Call:
    case NodeKind::Attribute:
    case NodeKind::Subscript:
    case NodeKind::ParenthesizedExpression:
    case NodeKind::Tuple:
    case NodeKind::List:
    case NodeKind::Set:
    case NodeKind::Dictionary:
    case NodeKind::ListComprehension:
    case NodeKind::SetComprehension:
    case NodeKind::DictionaryComprehension:
    case NodeKind::GeneratorExpression:
    case NodeKind::Ellipsis:
    case NodeKind::UnaryOperator:
    case NodeKind::Await:
      return false;
    case NodeKind::BinaryOperator:
      return tree.text(tree.node(expr).children[1]) != "**";
    default:
      return true;
  }
}

inline std::set<std::string> reserved_names(std::string_view source) {
  std::set<std::string> names;
  try {
    for (const auto& tok : syntax::tokenize(source)) {
      if (tok.kind == syntax::TokenKind::Name) names.insert(std::string(tok.text(source)));
    }
  } catch (const syntax::LexError&) {
  }
  return names;
}

}  // namespace detail

/// Schemes that can rewrite the given function source.
[[nodiscard]] inline std::set<SchemeId> applicable_schemes(std::string_view function_source) {
  const detail::FunctionView view(function_source);
  std::set<SchemeId> out{SchemeId::Original, SchemeId::GraR, SchemeId::GraC, SchemeId::Ini};
  if (!view.scope.parameters.empty()) out.insert({SchemeId::RepR, SchemeId::RepC});
  if (!view.scope.locals.empty()) out.insert({SchemeId::RelR, SchemeId::RelC});
  if (view.compound != syntax::kNoNode) out.insert(SchemeId::Irr);
  if (view.first_if != syntax::kNoNode) out.insert(SchemeId::Rtf);
  return out;
}

[[nodiscard]] inline std::set<SchemeId> applicable_schemes(const SeedProgram& seed) {
  return applicable_schemes(seed.source);
}

/// Applies one scheme to a function source. `reserved` lists extra names a
/// freshly introduced identifier must avoid (e.g. names in the unseen rest of
/// the function).
[[nodiscard]] inline std::string mutate_source(std::string_view function_source, SchemeId scheme,
                                               const std::set<std::string>& reserved = {}) {
  const detail::FunctionView view(function_source);
  const auto& scope = view.scope;
  const auto& tree = view.tree;
  std::set<std::string> taken = scope.names;
  taken.insert(reserved.begin(), reserved.end());
  auto not_applicable = [&](const char* why) {
    return SchemeNotApplicable(std::string(to_string(scheme)) + ": " + why);
  };

  switch (scheme) {
    case SchemeId::Original: return std::string(function_source);
    case SchemeId::RepR:
    case SchemeId::RepC: {
      if (scope.parameters.empty()) throw not_applicable("function has no parameters");
      const auto& param = scope.parameters.front();
      const std::string base =
          scheme == SchemeId::RepR ? "Param1" : scope.function_name + "_" + param.name;
      return detail::rename(view, param, detail::fresh_name(base, taken));
    }
    case SchemeId::RelR:
    case SchemeId::RelC: {
      if (scope.locals.empty()) throw not_applicable("function has no local variables");
      const auto& local = scope.locals.front();
      const std::string base =
          scheme == SchemeId::RelR ? "LocalVar1" : scope.function_name + "_" + local.name;
      return detail::rename(view, local, detail::fresh_name(base, taken));
    }
    case SchemeId::Irr: {
      if (view.compound == syntax::kNoNode) throw not_applicable("no mappable compound assignment");
      const auto& node = tree.node(view.compound);
      const auto target = node.children[0];
      const auto op = tree.node(node.children[1]);
      const auto rhs = node.children[2];
      const std::string_view op_text = tree.text(node.children[1]);
      const std::string binary(op_text.substr(0, op_text.size() - 1));
      std::string value(tree.text(rhs));
      if (detail::needs_parentheses(tree, rhs)) value = "(" + value + ")";
      std::string replacement = "= " + std::string(tree.text(target)) + " " + binary + " " + value;
      return detail::apply_edits(tree.source(),
                                 {{op.begin, tree.node(rhs).end, std::move(replacement)}});
    }
    case SchemeId::Rtf: {
      if (view.first_if == syntax::kNoNode) throw not_applicable("no if statement");
      const auto cond = tree.node(view.first_if).children[1];
      const auto& c = tree.node(cond);
      return detail::apply_edits(tree.source(),
                                 {{c.begin, c.end, "(" + std::string(tree.text(cond)) + ") and True"}});
    }
    case SchemeId::GraR: {
      const std::string var = detail::fresh_name("TempVar", taken);
      return detail::insert_first_statement(view, {"if False:", "\t" + var + " = 0"});
    }
    case SchemeId::GraC: {
      const std::string var = detail::fresh_name(scope.function_name + "_TempVar", taken);
      if (scope.parameters.empty()) {
        return detail::insert_first_statement(view, {"if 1 != 1:", "\t" + var + " = 0"});
      }
      const std::string& p = scope.parameters.front().name;
      return detail::insert_first_statement(view,
                                            {"if " + p + " != " + p + ":", "\t" + var + " = " + p});
    }
    case SchemeId::Ini:
      return detail::insert_first_statement(view, {"print(\"" + scope.function_name + "\")"});
  }
  throw not_applicable("unknown scheme");
}

/// Rewrites the prompt half of a split seed; the ground truth is carried over.
[[nodiscard]] inline PromptCase apply_scheme(const SeedProgram& seed, const PromptSplit& split,
                                             SchemeId scheme) {
  auto reserved = detail::reserved_names(seed.source);
  return PromptCase{seed.id, scheme, mutate_source(split.prompt, scheme, reserved),
                    split.ground_truth};
}

/// One validated PromptCase per applicable, enabled scheme, ORIGINAL first.
/// Variants that fail to re-parse or exceed the structural-distance bound are
/// dropped and reported as mutation-engine defects.
[[nodiscard]] inline VariantSet generate_variants(const SeedProgram& seed, const PromptSplit& split,
                                                  const MutationOptions& options = {},
                                                  const std::set<SchemeId>& enabled = {
                                                      kAllSchemes.begin(), kAllSchemes.end()}) {
  VariantSet out;
  const auto reserved = detail::reserved_names(seed.source);
  std::set<SchemeId> applicable;
  std::optional<syntax::SyntaxTree> seed_tree;
  try {
    applicable = applicable_schemes(split.prompt);
    seed_tree.emplace(syntax::parse(split.prompt));
  } catch (const std::exception& e) {
    out.defects.push_back({seed.id, SchemeId::Original, std::string("prompt analysis failed: ") + e.what()});
    return out;
  }
  for (SchemeId scheme : kAllSchemes) {
    if (enabled.count(scheme) == 0 || applicable.count(scheme) == 0) continue;
    try {
      std::string prompt = mutate_source(split.prompt, scheme, reserved);
      const auto mutant_tree = syntax::parse(prompt);
      const double distance = syntax::structural_distance(*seed_tree, mutant_tree);
      if (is_identifier_level(scheme) && distance != 0.0) {
        out.defects.push_back({seed.id, scheme,
                               "identifier-level mutant changed structure (distance " +
                                   std::to_string(distance) + ")"});
        continue;
      }
      if (distance > options.max_structural_distance) {
        out.defects.push_back({seed.id, scheme,
                               "structural distance " + std::to_string(distance) +
                                   " exceeds bound"});
        continue;
      }
      out.cases.push_back(PromptCase{seed.id, scheme, std::move(prompt), split.ground_truth});
    } catch (const std::exception& e) {
      out.defects.push_back({seed.id, scheme, e.what()});
    }
  }
  return out;
}

}  // namespace completest
