#pragma once

// Recursive-descent parser for the Python 3 statement and expression
// grammar (match statements and type-parameter syntax excluded). Produces a
// lossless SyntaxTree whose leaves are the lexer's significant tokens.

#include <initializer_list>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "completest/syntax/lexer.hpp"
#include "completest/syntax/tree.hpp"

namespace completest::syntax {

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::uint32_t line, std::uint32_t column,
             std::size_t offset)
      : std::runtime_error(what + " (line " + std::to_string(line) + ", column " +
                           std::to_string(column) + ")"),
        line_(line),
        column_(column),
        offset_(offset) {}

  [[nodiscard]] std::uint32_t line() const { return line_; }
  [[nodiscard]] std::uint32_t column() const { return column_; }
  [[nodiscard]] std::size_t offset() const { return offset_; }

 private:
  std::uint32_t line_;
  std::uint32_t column_;
  std::size_t offset_;
};

namespace detail {

class Parser {
 public:
  Parser(std::string_view source, std::vector<Token> tokens)
      : src_(source), toks_(std::move(tokens)) {}

  SyntaxTree run() && {
    std::vector<NodeId> stmts;
    while (!at(TokenKind::EndMarker)) stmts.push_back(statement());
    stmts.push_back(leaf());
    const NodeId root = make(NodeKind::Module, std::move(stmts));
    nodes_[static_cast<std::size_t>(root)].begin = 0;
    nodes_[static_cast<std::size_t>(root)].end = static_cast<std::uint32_t>(src_.size());
    return SyntaxTree(std::string(src_), std::move(toks_), std::move(nodes_), root);
  }

 private:
  // ---- token helpers -------------------------------------------------------

  [[nodiscard]] const Token& cur() const { return toks_[pos_]; }
  [[nodiscard]] const Token& peek(std::size_t ahead = 1) const {
    return toks_[std::min(pos_ + ahead, toks_.size() - 1)];
  }
  [[nodiscard]] std::string_view text(const Token& t) const { return t.text(src_); }
  [[nodiscard]] bool at(TokenKind k) const { return cur().kind == k; }
  [[nodiscard]] bool at_op(std::string_view op) const {
    return cur().kind == TokenKind::Op && text(cur()) == op;
  }
  [[nodiscard]] bool at_kw(std::string_view kw) const {
    return cur().kind == TokenKind::Name && text(cur()) == kw;
  }
  [[nodiscard]] bool at_any_op(std::initializer_list<std::string_view> ops) const {
    for (auto op : ops) {
      if (at_op(op)) return true;
    }
    return false;
  }
  [[nodiscard]] bool at_name() const {
    return cur().kind == TokenKind::Name && !is_keyword(text(cur()));
  }

  [[noreturn]] void fail(const std::string& what) const {
    const Token& t = cur();
    std::string near = t.kind == TokenKind::EndMarker ? "end of input"
                       : t.kind == TokenKind::Newline ? "end of line"
                       : t.kind == TokenKind::Indent  ? "indent"
                       : t.kind == TokenKind::Dedent  ? "dedent"
                                                      : "'" + std::string(text(t)) + "'";
    throw ParseError(what + " near " + near, t.line, t.column, t.begin);
  }

  NodeId leaf() {
    const Token& t = cur();
    NodeKind kind = NodeKind::Operator;
    switch (t.kind) {
      case TokenKind::Name:
        kind = is_keyword(text(t)) ? NodeKind::Keyword : NodeKind::Identifier;
        break;
      case TokenKind::Number: kind = NodeKind::Number; break;
      case TokenKind::String: kind = NodeKind::String; break;
      case TokenKind::Op: kind = NodeKind::Operator; break;
      case TokenKind::Newline: kind = NodeKind::Newline; break;
      case TokenKind::Indent: kind = NodeKind::Indent; break;
      case TokenKind::Dedent: kind = NodeKind::Dedent; break;
      case TokenKind::EndMarker: kind = NodeKind::EndMarker; break;
    }
    Node n{kind, t.begin, t.end, kNoNode, static_cast<std::int32_t>(pos_), {}};
    nodes_.push_back(std::move(n));
    ++pos_;
    return static_cast<NodeId>(nodes_.size() - 1);
  }

  NodeId expect_op(std::string_view op) {
    if (!at_op(op)) fail("expected '" + std::string(op) + "'");
    return leaf();
  }
  NodeId expect_kw(std::string_view kw) {
    if (!at_kw(kw)) fail("expected '" + std::string(kw) + "'");
    return leaf();
  }
  NodeId expect_name() {
    if (!at_name()) fail("expected identifier");
    return leaf();
  }
  NodeId expect(TokenKind k, const char* what) {
    if (!at(k)) fail(std::string("expected ") + what);
    return leaf();
  }

  NodeId make(NodeKind kind, std::vector<NodeId> children) {
    Node n{kind, 0, 0, kNoNode, -1, std::move(children)};
    if (!n.children.empty()) {
      n.begin = nodes_[static_cast<std::size_t>(n.children.front())].begin;
      n.end = nodes_[static_cast<std::size_t>(n.children.back())].end;
    }
    nodes_.push_back(std::move(n));
    const auto id = static_cast<NodeId>(nodes_.size() - 1);
    for (NodeId c : nodes_.back().children) nodes_[static_cast<std::size_t>(c)].parent = id;
    return id;
  }

  void append_child(NodeId parent, NodeId child) {
    auto& p = nodes_[static_cast<std::size_t>(parent)];
    p.children.push_back(child);
    p.end = nodes_[static_cast<std::size_t>(child)].end;
    nodes_[static_cast<std::size_t>(child)].parent = parent;
  }

  // ---- statements ----------------------------------------------------------

  NodeId statement() {
    if (at(TokenKind::Indent)) fail("unexpected indent");
    if (at(TokenKind::Dedent)) fail("unexpected dedent");
    if (at_kw("if")) return if_statement();
    if (at_kw("while")) return while_statement();
    if (at_kw("for")) return for_statement({});
    if (at_kw("try")) return try_statement();
    if (at_kw("with")) return with_statement({});
    if (at_kw("def")) return function_definition({});
    if (at_kw("class")) return class_definition();
    if (at_op("@")) return decorated_definition();
    if (at_kw("async")) {
      const std::string_view next = text(peek());
      NodeId async_kw = leaf();
      if (next == "def") return function_definition({async_kw});
      if (next == "for") return for_statement({async_kw});
      if (next == "with") return with_statement({async_kw});
      fail("expected 'def', 'for' or 'with' after 'async'");
    }
    return simple_statements();
  }

  NodeId simple_statements() {
    std::vector<NodeId> parts{small_statement()};
    bool multiple = false;
    while (at_op(";")) {
      parts.push_back(leaf());
      multiple = true;
      if (at(TokenKind::Newline)) break;
      parts.push_back(small_statement());
    }
    const NodeId nl = expect(TokenKind::Newline, "end of statement");
    if (!multiple) {
      append_child(parts.front(), nl);
      return parts.front();
    }
    parts.push_back(nl);
    return make(NodeKind::SimpleStatements, std::move(parts));
  }

  [[nodiscard]] bool at_statement_end() const {
    return at(TokenKind::Newline) || at_op(";") || at(TokenKind::EndMarker);
  }

  NodeId small_statement() {
    if (at_kw("pass")) return make(NodeKind::PassStatement, {leaf()});
    if (at_kw("break")) return make(NodeKind::BreakStatement, {leaf()});
    if (at_kw("continue")) return make(NodeKind::ContinueStatement, {leaf()});
    if (at_kw("return")) {
      std::vector<NodeId> kids{leaf()};
      if (!at_statement_end()) kids.push_back(star_expressions());
      return make(NodeKind::ReturnStatement, std::move(kids));
    }
    if (at_kw("raise")) {
      std::vector<NodeId> kids{leaf()};
      if (!at_statement_end()) {
        kids.push_back(test());
        if (at_kw("from")) {
          kids.push_back(leaf());
          kids.push_back(test());
        }
      }
      return make(NodeKind::RaiseStatement, std::move(kids));
    }
    if (at_kw("global") || at_kw("nonlocal")) {
      const NodeKind kind = at_kw("global") ? NodeKind::GlobalStatement : NodeKind::NonlocalStatement;
      std::vector<NodeId> kids{leaf(), expect_name()};
      while (at_op(",")) {
        kids.push_back(leaf());
        kids.push_back(expect_name());
      }
      return make(kind, std::move(kids));
    }
    if (at_kw("del")) {
      std::vector<NodeId> kids{leaf(), target_list()};
      return make(NodeKind::DeleteStatement, std::move(kids));
    }
    if (at_kw("assert")) {
      std::vector<NodeId> kids{leaf(), test()};
      if (at_op(",")) {
        kids.push_back(leaf());
        kids.push_back(test());
      }
      return make(NodeKind::AssertStatement, std::move(kids));
    }
    if (at_kw("import")) return import_statement();
    if (at_kw("from")) return import_from_statement();
    return expression_statement();
  }

  NodeId dotted_name() {
    std::vector<NodeId> kids{expect_name()};
    while (at_op(".")) {
      kids.push_back(leaf());
      kids.push_back(expect_name());
    }
    return make(NodeKind::DottedName, std::move(kids));
  }

  NodeId import_statement() {
    std::vector<NodeId> kids{leaf()};
    while (true) {
      NodeId name = dotted_name();
      if (at_kw("as")) {
        NodeId as_kw = leaf();
        name = make(NodeKind::AliasedImport, {name, as_kw, expect_name()});
      }
      kids.push_back(name);
      if (!at_op(",")) break;
      kids.push_back(leaf());
    }
    return make(NodeKind::ImportStatement, std::move(kids));
  }

  NodeId import_from_statement() {
    std::vector<NodeId> kids{leaf()};
    bool has_module = false;
    while (at_op(".") || at_op("...")) {
      kids.push_back(leaf());
      has_module = true;
    }
    if (!at_kw("import")) {
      kids.push_back(dotted_name());
      has_module = true;
    }
    if (!has_module) fail("expected module name");
    kids.push_back(expect_kw("import"));
    if (at_op("*")) {
      kids.push_back(leaf());
      return make(NodeKind::ImportFromStatement, std::move(kids));
    }
    const bool parenthesized = at_op("(");
    if (parenthesized) kids.push_back(leaf());
    while (true) {
      NodeId name = dotted_name();
      if (at_kw("as")) {
        NodeId as_kw = leaf();
        name = make(NodeKind::AliasedImport, {name, as_kw, expect_name()});
      }
      kids.push_back(name);
      if (!at_op(",")) break;
      kids.push_back(leaf());
      if (parenthesized && at_op(")")) break;
    }
    if (parenthesized) kids.push_back(expect_op(")"));
    return make(NodeKind::ImportFromStatement, std::move(kids));
  }

  [[nodiscard]] bool at_augassign() const {
    return at_any_op({"+=", "-=", "*=", "/=", "//=", "%=", "**=", ">>=", "<<=", "&=", "|=",
                      "^=", "@="});
  }

  NodeId assignment_value() { return at_kw("yield") ? yield_expression() : star_expressions(); }

  NodeId expression_statement() {
    const NodeId first = assignment_value();
    if (at_op(":")) {
      std::vector<NodeId> kids{first, leaf(), test()};
      if (at_op("=")) {
        kids.push_back(leaf());
        kids.push_back(assignment_value());
      }
      return make(NodeKind::AnnotatedAssignment, std::move(kids));
    }
    if (at_augassign()) {
      NodeId op = leaf();
      return make(NodeKind::AugmentedAssignment, {first, op, assignment_value()});
    }
    if (at_op("=")) {
      std::vector<NodeId> operands{first};
      std::vector<NodeId> eqs;
      while (at_op("=")) {
        eqs.push_back(leaf());
        operands.push_back(assignment_value());
      }
      NodeId right = operands.back();
      for (std::size_t k = eqs.size(); k-- > 0;) {
        right = make(NodeKind::Assignment, {operands[k], eqs[k], right});
      }
      return right;
    }
    return make(NodeKind::ExpressionStatement, {first});
  }

  NodeId block() {
    if (!at(TokenKind::Newline)) return make(NodeKind::Block, {simple_statements()});
    std::vector<NodeId> kids{leaf()};
    kids.push_back(expect(TokenKind::Indent, "an indented block"));
    while (!at(TokenKind::Dedent) && !at(TokenKind::EndMarker)) kids.push_back(statement());
    kids.push_back(expect(TokenKind::Dedent, "dedent"));
    return make(NodeKind::Block, std::move(kids));
  }

  NodeId if_statement() {
    std::vector<NodeId> kids{leaf(), named_expression()};
    kids.push_back(expect_op(":"));
    kids.push_back(block());
    while (at_kw("elif")) {
      std::vector<NodeId> clause{leaf(), named_expression()};
      clause.push_back(expect_op(":"));
      clause.push_back(block());
      kids.push_back(make(NodeKind::ElifClause, std::move(clause)));
    }
    if (at_kw("else")) kids.push_back(else_clause());
    return make(NodeKind::IfStatement, std::move(kids));
  }

  NodeId else_clause() {
    std::vector<NodeId> kids{leaf()};
    kids.push_back(expect_op(":"));
    kids.push_back(block());
    return make(NodeKind::ElseClause, std::move(kids));
  }

  NodeId while_statement() {
    std::vector<NodeId> kids{leaf(), named_expression()};
    kids.push_back(expect_op(":"));
    kids.push_back(block());
    if (at_kw("else")) kids.push_back(else_clause());
    return make(NodeKind::WhileStatement, std::move(kids));
  }

  NodeId for_statement(std::vector<NodeId> kids) {
    kids.push_back(expect_kw("for"));
    kids.push_back(target_list());
    kids.push_back(expect_kw("in"));
    kids.push_back(star_expressions());
    kids.push_back(expect_op(":"));
    kids.push_back(block());
    if (at_kw("else")) kids.push_back(else_clause());
    return make(NodeKind::ForStatement, std::move(kids));
  }

  NodeId try_statement() {
    std::vector<NodeId> kids{leaf()};
    kids.push_back(expect_op(":"));
    kids.push_back(block());
    bool handlers = false;
    while (at_kw("except")) {
      handlers = true;
      std::vector<NodeId> clause{leaf()};
      if (at_op("*")) clause.push_back(leaf());
      if (!at_op(":")) {
        clause.push_back(test());
        if (at_op(",")) {
          // Python 2 style "except A, e" is not accepted.
          fail("invalid except clause");
        }
        if (at_kw("as")) {
          clause.push_back(leaf());
          clause.push_back(expect_name());
        }
      }
      clause.push_back(expect_op(":"));
      clause.push_back(block());
      kids.push_back(make(NodeKind::ExceptClause, std::move(clause)));
    }
    if (at_kw("else")) {
      if (!handlers) fail("'else' without 'except'");
      kids.push_back(else_clause());
    }
    if (at_kw("finally")) {
      std::vector<NodeId> clause{leaf()};
      clause.push_back(expect_op(":"));
      clause.push_back(block());
      kids.push_back(make(NodeKind::FinallyClause, std::move(clause)));
      handlers = true;
    }
    if (!handlers) fail("expected 'except' or 'finally'");
    return make(NodeKind::TryStatement, std::move(kids));
  }

  NodeId with_item() {
    std::vector<NodeId> kids{test()};
    if (at_kw("as")) {
      kids.push_back(leaf());
      kids.push_back(target());
    }
    return make(NodeKind::WithItem, std::move(kids));
  }

  NodeId with_statement(std::vector<NodeId> kids) {
    kids.push_back(expect_kw("with"));
    if (at_op("(")) {
      // Parenthesized item list; fall back to an ordinary expression when the
      // parenthesis turns out to belong to the first item.
      const std::size_t saved_pos = pos_;
      const std::size_t saved_nodes = nodes_.size();
      std::vector<NodeId> items;
      try {
        items.push_back(leaf());
        items.push_back(with_item());
        while (at_op(",")) {
          items.push_back(leaf());
          if (at_op(")")) break;
          items.push_back(with_item());
        }
        items.push_back(expect_op(")"));
        if (!at_op(":")) fail("expected ':'");
      } catch (const ParseError&) {
        pos_ = saved_pos;
        nodes_.resize(saved_nodes);
        items.clear();
      }
      if (!items.empty()) {
        kids.insert(kids.end(), items.begin(), items.end());
        kids.push_back(leaf());
        kids.push_back(block());
        return make(NodeKind::WithStatement, std::move(kids));
      }
    }
    kids.push_back(with_item());
    while (at_op(",")) {
      kids.push_back(leaf());
      kids.push_back(with_item());
    }
    kids.push_back(expect_op(":"));
    kids.push_back(block());
    return make(NodeKind::WithStatement, std::move(kids));
  }

  NodeId function_definition(std::vector<NodeId> kids) {
    kids.push_back(expect_kw("def"));
    kids.push_back(expect_name());
    kids.push_back(parameters());
    if (at_op("->")) {
      kids.push_back(leaf());
      kids.push_back(test());
    }
    kids.push_back(expect_op(":"));
    kids.push_back(block());
    return make(NodeKind::FunctionDefinition, std::move(kids));
  }

  NodeId class_definition() {
    std::vector<NodeId> kids{leaf(), expect_name()};
    if (at_op("(")) kids.push_back(argument_list());
    kids.push_back(expect_op(":"));
    kids.push_back(block());
    return make(NodeKind::ClassDefinition, std::move(kids));
  }

  NodeId decorated_definition() {
    std::vector<NodeId> kids;
    while (at_op("@")) {
      std::vector<NodeId> deco{leaf(), named_expression()};
      deco.push_back(expect(TokenKind::Newline, "end of decorator"));
      kids.push_back(make(NodeKind::Decorator, std::move(deco)));
    }
    if (at_kw("def")) {
      kids.push_back(function_definition({}));
    } else if (at_kw("class")) {
      kids.push_back(class_definition());
    } else if (at_kw("async") && text(peek()) == "def") {
      NodeId async_kw = leaf();
      kids.push_back(function_definition({async_kw}));
    } else {
      fail("expected function or class definition after decorator");
    }
    return make(NodeKind::DecoratedDefinition, std::move(kids));
  }

  // One parameter of a def (annotations allowed) or lambda (not allowed).
  NodeId parameter(bool annotations) {
    if (at_op("/")) return make(NodeKind::PositionalSeparator, {leaf()});
    if (at_op("*") || at_op("**")) {
      const bool dict = at_op("**");
      NodeId star = leaf();
      if (!dict && !at_name()) return make(NodeKind::KeywordSeparator, {star});
      NodeId pattern = make(dict ? NodeKind::DictionarySplatPattern : NodeKind::ListSplatPattern,
                            {star, expect_name()});
      if (annotations && at_op(":")) {
        NodeId colon = leaf();
        return make(NodeKind::TypedParameter, {pattern, colon, test()});
      }
      return pattern;
    }
    NodeId name = expect_name();
    if (annotations && at_op(":")) {
      NodeId colon = leaf();
      NodeId type = test();
      if (at_op("=")) {
        NodeId eq = leaf();
        return make(NodeKind::TypedDefaultParameter, {name, colon, type, eq, test()});
      }
      return make(NodeKind::TypedParameter, {name, colon, type});
    }
    if (at_op("=")) {
      NodeId eq = leaf();
      return make(NodeKind::DefaultParameter, {name, eq, test()});
    }
    return name;
  }

  NodeId parameters() {
    std::vector<NodeId> kids{expect_op("(")};
    while (!at_op(")")) {
      kids.push_back(parameter(true));
      if (!at_op(",")) break;
      kids.push_back(leaf());
    }
    kids.push_back(expect_op(")"));
    return make(NodeKind::Parameters, std::move(kids));
  }

  // ---- expressions ---------------------------------------------------------

  NodeId yield_expression() {
    std::vector<NodeId> kids{leaf()};
    if (at_kw("from")) {
      kids.push_back(leaf());
      kids.push_back(test());
    } else if (!at_statement_end() && !at_op(")") && !at_op("=")) {
      kids.push_back(star_expressions());
    }
    return make(NodeKind::Yield, std::move(kids));
  }

  NodeId star_expression() {
    if (at_op("*")) {
      NodeId star = leaf();
      return make(NodeKind::ListSplat, {star, bitwise_or()});
    }
    return test();
  }

  [[nodiscard]] bool at_expression_start() const {
    const Token& t = cur();
    switch (t.kind) {
      case TokenKind::Name: {
        const auto w = text(t);
        return !is_keyword(w) || w == "None" || w == "True" || w == "False" || w == "not" ||
               w == "lambda" || w == "await" || w == "yield";
      }
      case TokenKind::Number:
      case TokenKind::String: return true;
      case TokenKind::Op:
        return at_any_op({"(", "[", "{", "-", "+", "~", "*", "...", "**"});
      default: return false;
    }
  }

  // Comma-separated expressions; yields a single expression when no comma.
  NodeId star_expressions() {
    NodeId first = star_expression();
    if (!at_op(",")) return first;
    std::vector<NodeId> kids{first};
    while (at_op(",")) {
      kids.push_back(leaf());
      if (!at_expression_start() || at_op("**")) break;
      kids.push_back(star_expression());
    }
    return make(NodeKind::ExpressionList, std::move(kids));
  }

  NodeId target() {
    if (at_op("*")) {
      NodeId star = leaf();
      return make(NodeKind::ListSplat, {star, bitwise_or()});
    }
    return bitwise_or();
  }

  // Targets of for/del/comprehensions: no comparisons, so 'in' is not consumed.
  NodeId target_list() {
    NodeId first = target();
    if (!at_op(",")) return first;
    std::vector<NodeId> kids{first};
    while (at_op(",")) {
      kids.push_back(leaf());
      if (at_kw("in") || at_op("=") || at_statement_end()) break;
      kids.push_back(target());
    }
    return make(NodeKind::ExpressionList, std::move(kids));
  }

  NodeId named_expression() {
    if (at_name() && peek().kind == TokenKind::Op && text(peek()) == ":=") {
      NodeId name = leaf();
      NodeId op = leaf();
      return make(NodeKind::NamedExpression, {name, op, test()});
    }
    return test();
  }

  NodeId test() {
    if (at_kw("lambda")) return lambda();
    NodeId body = or_test();
    if (at_kw("if")) {
      NodeId if_kw = leaf();
      NodeId cond = or_test();
      NodeId else_kw = expect_kw("else");
      return make(NodeKind::ConditionalExpression, {body, if_kw, cond, else_kw, test()});
    }
    return body;
  }

  NodeId lambda() {
    std::vector<NodeId> kids{leaf()};
    if (!at_op(":")) {
      std::vector<NodeId> params;
      while (!at_op(":")) {
        params.push_back(parameter(false));
        if (!at_op(",")) break;
        params.push_back(leaf());
      }
      kids.push_back(make(NodeKind::LambdaParameters, std::move(params)));
    }
    kids.push_back(expect_op(":"));
    kids.push_back(test());
    return make(NodeKind::Lambda, std::move(kids));
  }

  NodeId or_test() {
    NodeId left = and_test();
    while (at_kw("or")) {
      NodeId op = leaf();
      left = make(NodeKind::BooleanOperator, {left, op, and_test()});
    }
    return left;
  }

  NodeId and_test() {
    NodeId left = not_test();
    while (at_kw("and")) {
      NodeId op = leaf();
      left = make(NodeKind::BooleanOperator, {left, op, not_test()});
    }
    return left;
  }

  NodeId not_test() {
    if (at_kw("not")) {
      NodeId op = leaf();
      return make(NodeKind::NotOperator, {op, not_test()});
    }
    return comparison();
  }

  [[nodiscard]] bool at_comparison_op() const {
    if (at_any_op({"<", ">", "==", ">=", "<=", "!="})) return true;
    if (at_kw("in") || at_kw("is")) return true;
    return at_kw("not") && peek().kind == TokenKind::Name && text(peek()) == "in";
  }

  NodeId comparison() {
    NodeId first = bitwise_or();
    if (!at_comparison_op()) return first;
    std::vector<NodeId> kids{first};
    while (at_comparison_op()) {
      if (at_kw("not")) {
        kids.push_back(leaf());
        kids.push_back(leaf());
      } else if (at_kw("is")) {
        kids.push_back(leaf());
        if (at_kw("not")) kids.push_back(leaf());
      } else {
        kids.push_back(leaf());
      }
      kids.push_back(bitwise_or());
    }
    return make(NodeKind::ComparisonOperator, std::move(kids));
  }

  template <typename Next>
  NodeId binary_level(std::initializer_list<std::string_view> ops, Next next) {
    NodeId left = (this->*next)();
    while (at_any_op(ops)) {
      NodeId op = leaf();
      left = make(NodeKind::BinaryOperator, {left, op, (this->*next)()});
    }
    return left;
  }

  NodeId bitwise_or() { return binary_level({"|"}, &Parser::bitwise_xor); }
  NodeId bitwise_xor() { return binary_level({"^"}, &Parser::bitwise_and); }
  NodeId bitwise_and() { return binary_level({"&"}, &Parser::shift_expr); }
  NodeId shift_expr() { return binary_level({"<<", ">>"}, &Parser::arith_expr); }
  NodeId arith_expr() { return binary_level({"+", "-"}, &Parser::term); }
  NodeId term() { return binary_level({"*", "/", "//", "%", "@"}, &Parser::factor); }

  NodeId factor() {
    if (at_any_op({"+", "-", "~"})) {
      NodeId op = leaf();
      return make(NodeKind::UnaryOperator, {op, factor()});
    }
    return power();
  }

  NodeId power() {
    NodeId base = await_primary();
    if (at_op("**")) {
      NodeId op = leaf();
      return make(NodeKind::BinaryOperator, {base, op, factor()});
    }
    return base;
  }

  NodeId await_primary() {
    if (at_kw("await")) {
      NodeId kw = leaf();
      return make(NodeKind::Await, {kw, primary()});
    }
    return primary();
  }

  NodeId primary() {
    NodeId node = atom();
    while (true) {
      if (at_op("(")) {
        node = make(NodeKind::Call, {node, argument_list()});
      } else if (at_op("[")) {
        std::vector<NodeId> kids{node, leaf()};
        append_subscript_items(kids);
        kids.push_back(expect_op("]"));
        node = make(NodeKind::Subscript, std::move(kids));
      } else if (at_op(".")) {
        NodeId dot = leaf();
        node = make(NodeKind::Attribute, {node, dot, expect_name()});
      } else {
        return node;
      }
    }
  }

  NodeId slice_or_expression() {
    std::vector<NodeId> kids;
    if (!at_op(":")) {
      NodeId first = at_op("*") ? star_expression() : named_expression();
      if (!at_op(":")) return first;
      kids.push_back(first);
    }
    kids.push_back(leaf());  // ':'
    if (!at_op(":") && !at_op("]") && !at_op(",")) kids.push_back(test());
    if (at_op(":")) {
      kids.push_back(leaf());
      if (!at_op("]") && !at_op(",")) kids.push_back(test());
    }
    return make(NodeKind::Slice, std::move(kids));
  }

  void append_subscript_items(std::vector<NodeId>& kids) {
    kids.push_back(slice_or_expression());
    while (at_op(",")) {
      kids.push_back(leaf());
      if (at_op("]")) break;
      kids.push_back(slice_or_expression());
    }
  }

  NodeId argument_list() {
    std::vector<NodeId> kids{leaf()};
    while (!at_op(")")) {
      if (at_op("*")) {
        NodeId star = leaf();
        kids.push_back(make(NodeKind::ListSplat, {star, test()}));
      } else if (at_op("**")) {
        NodeId star = leaf();
        kids.push_back(make(NodeKind::DictionarySplat, {star, test()}));
      } else if (at_name() && peek().kind == TokenKind::Op && text(peek()) == "=") {
        NodeId name = leaf();
        NodeId eq = leaf();
        kids.push_back(make(NodeKind::KeywordArgument, {name, eq, test()}));
      } else {
        NodeId value = named_expression();
        if (at_kw("for") || (at_kw("async") && text(peek()) == "for")) {
          std::vector<NodeId> gen{value};
          comprehension_clauses(gen);
          value = make(NodeKind::GeneratorExpression, std::move(gen));
        }
        kids.push_back(value);
      }
      if (!at_op(",")) break;
      kids.push_back(leaf());
    }
    kids.push_back(expect_op(")"));
    return make(NodeKind::ArgumentList, std::move(kids));
  }

  void comprehension_clauses(std::vector<NodeId>& kids) {
    while (true) {
      if (at_kw("for") || (at_kw("async") && text(peek()) == "for")) {
        std::vector<NodeId> clause;
        if (at_kw("async")) clause.push_back(leaf());
        clause.push_back(leaf());
        clause.push_back(target_list());
        clause.push_back(expect_kw("in"));
        clause.push_back(or_test_or_lambda());
        kids.push_back(make(NodeKind::ForInClause, std::move(clause)));
      } else if (at_kw("if")) {
        NodeId kw = leaf();
        kids.push_back(make(NodeKind::IfClause, {kw, or_test_or_lambda()}));
      } else {
        return;
      }
    }
  }

  NodeId or_test_or_lambda() { return at_kw("lambda") ? lambda() : or_test(); }

  [[nodiscard]] bool at_comprehension() const {
    return at_kw("for") || (at_kw("async") && text(peek()) == "for");
  }

  NodeId atom() {
    const Token& t = cur();
    if (t.kind == TokenKind::Number) return leaf();
    if (t.kind == TokenKind::String) {
      NodeId first = leaf();
      if (!at(TokenKind::String)) return first;
      std::vector<NodeId> kids{first};
      while (at(TokenKind::String)) kids.push_back(leaf());
      return make(NodeKind::ConcatenatedString, std::move(kids));
    }
    if (t.kind == TokenKind::Name) {
      const auto w = text(t);
      if (w == "None" || w == "True" || w == "False") return leaf();
      if (is_keyword(w)) fail("invalid syntax");
      return leaf();
    }
    if (at_op("...")) return make(NodeKind::Ellipsis, {leaf()});
    if (at_op("(")) return parenthesized();
    if (at_op("[")) return bracketed();
    if (at_op("{")) return braced();
    fail("invalid syntax");
  }

  NodeId parenthesized() {
    std::vector<NodeId> kids{leaf()};
    if (at_op(")")) {
      kids.push_back(leaf());
      return make(NodeKind::Tuple, std::move(kids));
    }
    if (at_kw("yield")) {
      kids.push_back(yield_expression());
      kids.push_back(expect_op(")"));
      return make(NodeKind::ParenthesizedExpression, std::move(kids));
    }
    NodeId first = at_op("*") ? star_expression() : named_expression();
    kids.push_back(first);
    if (at_comprehension()) {
      comprehension_clauses(kids);
      kids.push_back(expect_op(")"));
      return make(NodeKind::GeneratorExpression, std::move(kids));
    }
    if (at_op(",")) {
      while (at_op(",")) {
        kids.push_back(leaf());
        if (at_op(")")) break;
        kids.push_back(at_op("*") ? star_expression() : named_expression());
      }
      kids.push_back(expect_op(")"));
      return make(NodeKind::Tuple, std::move(kids));
    }
    kids.push_back(expect_op(")"));
    return make(NodeKind::ParenthesizedExpression, std::move(kids));
  }

  NodeId bracketed() {
    std::vector<NodeId> kids{leaf()};
    if (at_op("]")) {
      kids.push_back(leaf());
      return make(NodeKind::List, std::move(kids));
    }
    kids.push_back(at_op("*") ? star_expression() : named_expression());
    if (at_comprehension()) {
      comprehension_clauses(kids);
      kids.push_back(expect_op("]"));
      return make(NodeKind::ListComprehension, std::move(kids));
    }
    while (at_op(",")) {
      kids.push_back(leaf());
      if (at_op("]")) break;
      kids.push_back(at_op("*") ? star_expression() : named_expression());
    }
    kids.push_back(expect_op("]"));
    return make(NodeKind::List, std::move(kids));
  }

  NodeId dict_item() {
    if (at_op("**")) {
      NodeId star = leaf();
      return make(NodeKind::DictionarySplat, {star, bitwise_or()});
    }
    NodeId key = test();
    NodeId colon = expect_op(":");
    return make(NodeKind::Pair, {key, colon, test()});
  }

  NodeId braced() {
    std::vector<NodeId> kids{leaf()};
    if (at_op("}")) {
      kids.push_back(leaf());
      return make(NodeKind::Dictionary, std::move(kids));
    }
    bool is_dict = at_op("**");
    NodeId first;
    if (is_dict) {
      first = dict_item();
    } else {
      NodeId head = at_op("*") ? star_expression() : named_expression();
      if (at_op(":")) {
        is_dict = true;
        NodeId colon = leaf();
        first = make(NodeKind::Pair, {head, colon, test()});
      } else {
        first = head;
      }
    }
    kids.push_back(first);
    if (at_comprehension()) {
      comprehension_clauses(kids);
      kids.push_back(expect_op("}"));
      return make(is_dict ? NodeKind::DictionaryComprehension : NodeKind::SetComprehension,
                  std::move(kids));
    }
    while (at_op(",")) {
      kids.push_back(leaf());
      if (at_op("}")) break;
      if (is_dict) {
        kids.push_back(dict_item());
      } else {
        kids.push_back(at_op("*") ? star_expression() : named_expression());
      }
    }
    kids.push_back(expect_op("}"));
    return make(is_dict ? NodeKind::Dictionary : NodeKind::Set, std::move(kids));
  }

  std::string_view src_;
  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  std::vector<Node> nodes_;
};

}  // namespace detail

/// Parses a Python module. Lexical and syntactic failures both surface as
/// ParseError carrying the offending line and column.
[[nodiscard]] inline SyntaxTree parse(std::string_view source) {
  std::vector<Token> tokens;
  try {
    tokens = tokenize(source);
  } catch (const LexError& e) {
    throw ParseError(e.what(), e.line(), e.column(), e.offset());
  }
  return detail::Parser(source, std::move(tokens)).run();
}

}  // namespace completest::syntax
