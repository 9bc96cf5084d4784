#pragma once

// Name resolution for a single-function module: which identifier
// occurrences refer to the function's parameters and locals. Occurrences
// inside nested scopes that rebind a name (lambdas, comprehensions, nested
// defs) resolve to the nested binding and are excluded.

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "completest/syntax/lexer.hpp"
#include "completest/syntax/tree.hpp"

namespace completest::syntax {

struct Span {
  std::uint32_t begin = 0;
  std::uint32_t end = 0;

  friend bool operator==(const Span&, const Span&) = default;
  friend auto operator<=>(const Span&, const Span&) = default;
};

struct IdentifierInfo {
  std::string name;
  Span declaration;
  std::vector<Span> usages;

  /// Declaration followed by usages, in source order.
  [[nodiscard]] std::vector<Span> occurrences() const {
    std::vector<Span> all{declaration};
    all.insert(all.end(), usages.begin(), usages.end());
    std::sort(all.begin(), all.end());
    return all;
  }
};

struct ScopeInfo {
  std::string function_name;
  NodeId function = kNoNode;
  std::vector<IdentifierInfo> parameters;
  std::vector<IdentifierInfo> locals;
  std::set<std::string> names;  // every identifier spelled anywhere in the source
};

class AnalysisError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Byte ranges of the replacement-field expressions of an f-string token.
/// `base` is the token's offset in the enclosing source.
[[nodiscard]] inline std::vector<Span> fstring_expression_spans(std::string_view token,
                                                                std::uint32_t base) {
  std::vector<Span> out;
  std::size_t p = 0;
  bool formatted = false;
  while (p < token.size() && token[p] != '"' && token[p] != '\'') {
    formatted = formatted || token[p] == 'f' || token[p] == 'F';
    ++p;
  }
  if (!formatted || p >= token.size()) return out;
  const char quote = token[p];
  const std::size_t qlen = token.substr(p, 3) == std::string(3, quote) ? 3 : 1;
  const std::size_t body_begin = p + qlen;
  const std::size_t body_end = token.size() >= qlen ? token.size() - qlen : body_begin;

  // Scans one replacement field whose '{' is at `open`; returns the index of
  // its closing '}'.
  auto scan_field = [&](auto&& self, std::size_t open) -> std::size_t {
    std::size_t j = open + 1;
    int depth = 0;
    char in_string = 0;
    while (j < body_end) {
      const char c = token[j];
      if (in_string != 0) {
        if (c == in_string) in_string = 0;
        ++j;
        continue;
      }
      if (c == '\'' || c == '"') {
        in_string = c;
      } else if (c == '(' || c == '[' || c == '{') {
        ++depth;
      } else if ((c == ')' || c == ']' || c == '}') && depth > 0) {
        --depth;
      } else if (depth == 0 &&
                 (c == '}' || (c == '!' && token[j + 1] != '=') || c == ':')) {
        break;
      }
      ++j;
    }
    std::size_t expr_end = j;
    // Self-documenting "{expr=}".
    std::size_t k = expr_end;
    while (k > open + 1 && (token[k - 1] == ' ')) --k;
    if (k > open + 1 && token[k - 1] == '=' &&
        (k < 2 || (token[k - 2] != '=' && token[k - 2] != '!' && token[k - 2] != '<' &&
                   token[k - 2] != '>'))) {
      expr_end = k - 1;
    }
    out.push_back(Span{base + static_cast<std::uint32_t>(open + 1),
                       base + static_cast<std::uint32_t>(expr_end)});
    if (j < body_end && token[j] == '!') {
      while (j < body_end && token[j] != ':' && token[j] != '}') ++j;
    }
    if (j < body_end && token[j] == ':') {
      ++j;
      while (j < body_end && token[j] != '}') {
        if (token[j] == '{') {
          j = self(self, j) + 1;
        } else {
          ++j;
        }
      }
    }
    return j;
  };

  std::size_t i = body_begin;
  while (i < body_end) {
    if (token[i] == '{') {
      if (i + 1 < body_end && token[i + 1] == '{') {
        i += 2;
        continue;
      }
      i = scan_field(scan_field, i) + 1;
    } else {
      ++i;
    }
  }
  return out;
}

namespace detail {

enum class ScopeKind { Module, Function, Lambda, Comprehension, Class };

struct ScopeFrame {
  ScopeKind kind;
  int parent;
  NodeId owner;
  std::set<std::string, std::less<>> bound;
  std::set<std::string, std::less<>> globals;
  std::set<std::string, std::less<>> nonlocals;
};

struct Occurrence {
  std::string name;
  Span span;
  int scope;
  bool binding;
};

class ScopeBuilder {
 public:
  explicit ScopeBuilder(const SyntaxTree& tree) : tree_(tree) {
    scopes_.push_back(ScopeFrame{ScopeKind::Module, -1, tree.root(), {}, {}, {}});
  }

  void run() { visit(tree_.root(), 0); }

  [[nodiscard]] const std::vector<ScopeFrame>& scopes() const { return scopes_; }
  [[nodiscard]] const std::vector<Occurrence>& occurrences() const { return occurrences_; }
  [[nodiscard]] int scope_of(NodeId owner) const {
    for (std::size_t i = 0; i < scopes_.size(); ++i) {
      if (scopes_[i].owner == owner) return static_cast<int>(i);
    }
    return -1;
  }

  /// Scope index the name resolves to from `scope`, or -1 for global/builtin.
  [[nodiscard]] int resolve(std::string_view name, int scope) const {
    bool first = true;
    for (int s = scope; s >= 0; s = scopes_[static_cast<std::size_t>(s)].parent, first = false) {
      const ScopeFrame& f = scopes_[static_cast<std::size_t>(s)];
      if (f.kind == ScopeKind::Class && !first) continue;
      if (f.nonlocals.count(name) != 0) continue;
      if (f.globals.count(name) != 0) return -1;
      if (f.kind == ScopeKind::Module) return f.bound.count(name) != 0 ? s : -1;
      if (f.bound.count(name) != 0) return s;
    }
    return -1;
  }

 private:
  const Node& node(NodeId id) const { return tree_.node(id); }
  NodeKind kind(NodeId id) const { return tree_.kind(id); }

  int push_scope(ScopeKind kind, int parent, NodeId owner) {
    scopes_.push_back(ScopeFrame{kind, parent, owner, {}, {}, {}});
    return static_cast<int>(scopes_.size() - 1);
  }

  void record(NodeId ident, int scope, bool binding) {
    const Node& n = node(ident);
    std::string name(tree_.text(ident));
    if (binding) scopes_[static_cast<std::size_t>(scope)].bound.insert(name);
    occurrences_.push_back(Occurrence{std::move(name), Span{n.begin, n.end}, scope, binding});
  }

  void visit_fstring(NodeId leaf, int scope) {
    const Node& n = node(leaf);
    for (const Span& field : fstring_expression_spans(tree_.text(leaf), n.begin)) {
      const auto text = std::string_view(tree_.source()).substr(field.begin, field.end - field.begin);
      std::vector<Token> toks;
      try {
        toks = tokenize_expression(text);
      } catch (const LexError&) {
        continue;
      }
      for (std::size_t i = 0; i < toks.size(); ++i) {
        const Token& t = toks[i];
        if (t.kind != TokenKind::Name || is_keyword(t.text(text))) continue;
        if (i > 0 && toks[i - 1].kind == TokenKind::Op && toks[i - 1].text(text) == ".") continue;
        if (i + 1 < toks.size() && toks[i + 1].kind == TokenKind::Op &&
            toks[i + 1].text(text) == "=") {
          continue;
        }
        occurrences_.push_back(Occurrence{std::string(t.text(text)),
                                          Span{field.begin + t.begin, field.begin + t.end}, scope,
                                          false});
      }
    }
  }

  void visit_children(NodeId id, int scope) {
    for (NodeId c : node(id).children) visit(c, scope);
  }

  // Binds every name in an assignment target; attribute and subscript
  // targets only read their object/index expressions.
  void bind_target(NodeId id, int scope) {
    switch (kind(id)) {
      case NodeKind::Identifier: record(id, scope, true); return;
      case NodeKind::ExpressionList:
      case NodeKind::Tuple:
      case NodeKind::List:
      case NodeKind::ParenthesizedExpression:
      case NodeKind::ListSplat:
        for (NodeId c : node(id).children) {
          if (!node(c).is_leaf() || kind(c) == NodeKind::Identifier) bind_target(c, scope);
        }
        return;
      default: visit(id, scope);
    }
  }

  [[nodiscard]] int enclosing_non_comprehension(int scope) const {
    while (scopes_[static_cast<std::size_t>(scope)].kind == ScopeKind::Comprehension) {
      scope = scopes_[static_cast<std::size_t>(scope)].parent;
    }
    return scope;
  }

  // Parameter names bind in `inner`; defaults and annotations evaluate in `outer`.
  void visit_parameters(NodeId params, int outer, int inner) {
    for (NodeId p : node(params).children) {
      switch (kind(p)) {
        case NodeKind::Identifier: record(p, inner, true); break;
        case NodeKind::DefaultParameter:
        case NodeKind::TypedParameter:
        case NodeKind::TypedDefaultParameter: {
          const auto& kids = node(p).children;
          const NodeId head = kids.front();
          if (kind(head) == NodeKind::Identifier) {
            record(head, inner, true);
          } else {
            record(node(head).children.back(), inner, true);
          }
          for (std::size_t k = 1; k < kids.size(); ++k) visit(kids[k], outer);
          break;
        }
        case NodeKind::ListSplatPattern:
        case NodeKind::DictionarySplatPattern:
          record(node(p).children.back(), inner, true);
          break;
        default: break;
      }
    }
  }

  void visit_comprehension(NodeId id, int scope) {
    const int inner = push_scope(ScopeKind::Comprehension, scope, id);
    bool first_clause = true;
    std::vector<NodeId> deferred;
    for (NodeId c : node(id).children) {
      if (kind(c) == NodeKind::ForInClause) {
        const auto& kids = node(c).children;
        // [async] for <targets> in <iterable>
        std::size_t k = 0;
        while (k < kids.size() && !tree_.is_token(kids[k], "for")) ++k;
        const NodeId targets = kids[k + 1];
        const NodeId iterable = kids[k + 3];
        visit(iterable, first_clause ? scope : inner);
        bind_target(targets, inner);
        first_clause = false;
      } else if (kind(c) == NodeKind::IfClause) {
        visit(node(c).children.back(), inner);
      } else if (!node(c).is_leaf() || kind(c) == NodeKind::Identifier ||
                 kind(c) == NodeKind::String) {
        deferred.push_back(c);
      }
    }
    for (NodeId c : deferred) visit(c, inner);
  }

  void visit(NodeId id, int scope) {
    const Node& n = node(id);
    switch (n.kind) {
      case NodeKind::Identifier: record(id, scope, false); return;
      case NodeKind::String: visit_fstring(id, scope); return;
      case NodeKind::FunctionDefinition: {
        const int inner = push_scope(ScopeKind::Function, scope, id);
        for (std::size_t k = 0; k < n.children.size(); ++k) {
          const NodeId c = n.children[k];
          if (k > 0 && tree_.is_token(n.children[k - 1], "def")) {
            record(c, scope, true);
          } else if (kind(c) == NodeKind::Parameters) {
            visit_parameters(c, scope, inner);
          } else if (kind(c) == NodeKind::Block) {
            visit(c, inner);
          } else {
            visit(c, scope);  // return annotation
          }
        }
        return;
      }
      case NodeKind::Lambda: {
        const int inner = push_scope(ScopeKind::Lambda, scope, id);
        for (NodeId c : n.children) {
          if (kind(c) == NodeKind::LambdaParameters) {
            visit_parameters(c, scope, inner);
          } else if (!node(c).is_leaf() || kind(c) == NodeKind::Identifier ||
                     kind(c) == NodeKind::String) {
            visit(c, inner);
          }
        }
        return;
      }
      case NodeKind::ClassDefinition: {
        const int inner = push_scope(ScopeKind::Class, scope, id);
        for (std::size_t k = 0; k < n.children.size(); ++k) {
          const NodeId c = n.children[k];
          if (k == 1) {
            record(c, scope, true);
          } else if (kind(c) == NodeKind::Block) {
            visit(c, inner);
          } else {
            visit(c, scope);
          }
        }
        return;
      }
      case NodeKind::ListComprehension:
      case NodeKind::SetComprehension:
      case NodeKind::DictionaryComprehension:
      case NodeKind::GeneratorExpression:
        visit_comprehension(id, scope);
        return;
      case NodeKind::Assignment:
        bind_target(n.children[0], scope);
        visit(n.children[2], scope);
        for (std::size_t k = 3; k < n.children.size(); ++k) visit(n.children[k], scope);
        return;
      case NodeKind::AugmentedAssignment:
        bind_target(n.children[0], scope);
        for (std::size_t k = 1; k < n.children.size(); ++k) visit(n.children[k], scope);
        return;
      case NodeKind::AnnotatedAssignment:
        bind_target(n.children[0], scope);
        for (std::size_t k = 1; k < n.children.size(); ++k) visit(n.children[k], scope);
        return;
      case NodeKind::NamedExpression:
        record(n.children[0], enclosing_non_comprehension(scope), true);
        visit(n.children[2], scope);
        return;
      case NodeKind::ForStatement: {
        for (std::size_t k = 0; k < n.children.size(); ++k) {
          const NodeId c = n.children[k];
          if (k > 0 && tree_.is_token(n.children[k - 1], "for")) {
            bind_target(c, scope);
          } else {
            visit(c, scope);
          }
        }
        return;
      }
      case NodeKind::WithItem:
      case NodeKind::ExceptClause: {
        for (std::size_t k = 0; k < n.children.size(); ++k) {
          const NodeId c = n.children[k];
          if (k > 0 && tree_.is_token(n.children[k - 1], "as")) {
            bind_target(c, scope);
          } else {
            visit(c, scope);
          }
        }
        return;
      }
      case NodeKind::DeleteStatement:
        bind_target(n.children[1], scope);
        return;
      case NodeKind::GlobalStatement:
      case NodeKind::NonlocalStatement: {
        auto& frame = scopes_[static_cast<std::size_t>(scope)];
        for (NodeId c : n.children) {
          if (kind(c) != NodeKind::Identifier) continue;
          std::string name(tree_.text(c));
          (n.kind == NodeKind::GlobalStatement ? frame.globals : frame.nonlocals).insert(name);
          record(c, scope, false);
        }
        return;
      }
      case NodeKind::ImportStatement:
      case NodeKind::ImportFromStatement: {
        bool after_import = n.kind == NodeKind::ImportStatement;
        for (NodeId c : n.children) {
          if (tree_.is_token(c, "import")) after_import = true;
          if (!after_import) continue;
          if (kind(c) == NodeKind::DottedName) {
            record(node(c).children.front(), scope, true);
          } else if (kind(c) == NodeKind::AliasedImport) {
            record(node(c).children.back(), scope, true);
          }
        }
        return;
      }
      case NodeKind::Attribute:
        visit(n.children[0], scope);
        return;
      case NodeKind::KeywordArgument:
        visit(n.children[2], scope);
        return;
      default:
        if (!n.is_leaf()) visit_children(id, scope);
        return;
    }
  }

  const SyntaxTree& tree_;
  std::vector<ScopeFrame> scopes_;
  std::vector<Occurrence> occurrences_;
};

}  // namespace detail

/// The unique top-level function definition of the module.
[[nodiscard]] inline NodeId find_function(const SyntaxTree& tree) {
  std::vector<NodeId> found;
  for (NodeId c : tree.node(tree.root()).children) {
    if (tree.kind(c) == NodeKind::FunctionDefinition) {
      found.push_back(c);
    } else if (tree.kind(c) == NodeKind::DecoratedDefinition) {
      const NodeId def = tree.node(c).children.back();
      if (tree.kind(def) == NodeKind::FunctionDefinition) found.push_back(def);
    }
  }
  if (found.size() != 1) {
    throw AnalysisError("expected exactly one top-level function definition, found " +
                        std::to_string(found.size()));
  }
  return found.front();
}

[[nodiscard]] inline std::string_view function_name(const SyntaxTree& tree, NodeId function) {
  const auto& kids = tree.node(function).children;
  for (std::size_t k = 1; k < kids.size(); ++k) {
    if (tree.is_token(kids[k - 1], "def")) return tree.text(kids[k]);
  }
  return {};
}

[[nodiscard]] inline NodeId function_parameters(const SyntaxTree& tree, NodeId function) {
  for (NodeId c : tree.node(function).children) {
    if (tree.kind(c) == NodeKind::Parameters) return c;
  }
  return kNoNode;
}

/// Identifier leaf naming a parameter node, or kNoNode for separators.
[[nodiscard]] inline NodeId parameter_identifier(const SyntaxTree& tree, NodeId param) {
  switch (tree.kind(param)) {
    case NodeKind::Identifier: return param;
    case NodeKind::DefaultParameter:
    case NodeKind::TypedParameter:
    case NodeKind::TypedDefaultParameter: {
      const NodeId head = tree.node(param).children.front();
      return tree.kind(head) == NodeKind::Identifier ? head : tree.node(head).children.back();
    }
    case NodeKind::ListSplatPattern:
    case NodeKind::DictionarySplatPattern: return tree.node(param).children.back();
    default: return kNoNode;
  }
}

[[nodiscard]] inline NodeId function_body(const SyntaxTree& tree, NodeId function) {
  return tree.node(function).children.back();
}

/// Statements of a function body block, in order.
[[nodiscard]] inline std::vector<NodeId> body_statements(const SyntaxTree& tree, NodeId function) {
  std::vector<NodeId> out;
  for (NodeId c : tree.node(function_body(tree, function)).children) {
    const NodeKind k = tree.kind(c);
    if (k != NodeKind::Newline && k != NodeKind::Indent && k != NodeKind::Dedent) out.push_back(c);
  }
  return out;
}

[[nodiscard]] inline ScopeInfo analyze_scope(const SyntaxTree& tree) {
  const NodeId function = find_function(tree);
  detail::ScopeBuilder builder(tree);
  builder.run();
  const int target = builder.scope_of(function);

  ScopeInfo info;
  info.function = function;
  info.function_name = std::string(function_name(tree, function));
  for (const auto& occ : builder.occurrences()) info.names.insert(occ.name);
  for (NodeId id : tree.preorder()) {
    if (tree.kind(id) == NodeKind::Identifier) info.names.insert(std::string(tree.text(id)));
  }

  // Parameter order follows the signature.
  std::vector<std::string> param_names;
  std::map<std::string, Span, std::less<>> param_decl;
  for (NodeId p : tree.node(function_parameters(tree, function)).children) {
    const NodeId ident = parameter_identifier(tree, p);
    if (ident == kNoNode) continue;
    param_names.emplace_back(tree.text(ident));
    param_decl[param_names.back()] = Span{tree.node(ident).begin, tree.node(ident).end};
  }

  std::map<std::string, std::vector<Span>, std::less<>> spans_by_name;
  std::vector<std::string> first_seen;
  for (const auto& occ : builder.occurrences()) {
    if (builder.resolve(occ.name, occ.scope) != target) continue;
    auto& spans = spans_by_name[occ.name];
    if (spans.empty()) first_seen.push_back(occ.name);
    spans.push_back(occ.span);
  }
  for (auto& [name, spans] : spans_by_name) {
    std::sort(spans.begin(), spans.end());
    spans.erase(std::unique(spans.begin(), spans.end()), spans.end());
  }

  for (const auto& name : param_names) {
    IdentifierInfo id{name, param_decl[name], {}};
    for (const Span& s : spans_by_name[name]) {
      if (s != id.declaration) id.usages.push_back(s);
    }
    info.parameters.push_back(std::move(id));
  }

  const auto& frame = builder.scopes()[static_cast<std::size_t>(target)];
  std::vector<std::pair<Span, std::string>> local_order;
  for (const auto& name : first_seen) {
    if (param_decl.count(name) != 0 || frame.bound.count(name) == 0) continue;
    local_order.emplace_back(spans_by_name[name].front(), name);
  }
  std::sort(local_order.begin(), local_order.end());
  for (const auto& [first, name] : local_order) {
    const auto& spans = spans_by_name[name];
    IdentifierInfo id{name, spans.front(), {spans.begin() + 1, spans.end()}};
    info.locals.push_back(std::move(id));
  }
  return info;
}

}  // namespace completest::syntax
