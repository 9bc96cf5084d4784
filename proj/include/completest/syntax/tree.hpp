#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "completest/syntax/lexer.hpp"

namespace completest::syntax {

enum class NodeKind : std::uint8_t {
  // leaves
  Identifier,
  Keyword,
  Operator,
  Number,
  String,
  Newline,
  Indent,
  Dedent,
  EndMarker,
  // statements
  Module,
  FunctionDefinition,
  ClassDefinition,
  DecoratedDefinition,
  Decorator,
  Parameters,
  LambdaParameters,
  Parameter,
  DefaultParameter,
  TypedParameter,
  TypedDefaultParameter,
  ListSplatPattern,
  DictionarySplatPattern,
  KeywordSeparator,
  PositionalSeparator,
  Block,
  SimpleStatements,
  ExpressionStatement,
  Assignment,
  AugmentedAssignment,
  AnnotatedAssignment,
  ReturnStatement,
  PassStatement,
  BreakStatement,
  ContinueStatement,
  RaiseStatement,
  AssertStatement,
  DeleteStatement,
  GlobalStatement,
  NonlocalStatement,
  ImportStatement,
  ImportFromStatement,
  DottedName,
  AliasedImport,
  IfStatement,
  ElifClause,
  ElseClause,
  ForStatement,
  WhileStatement,
  TryStatement,
  ExceptClause,
  FinallyClause,
  WithStatement,
  WithItem,
  // expressions
  ExpressionList,
  NamedExpression,
  ConditionalExpression,
  Lambda,
  BooleanOperator,
  NotOperator,
  ComparisonOperator,
  BinaryOperator,
  UnaryOperator,
  Await,
  Call,
  ArgumentList,
  KeywordArgument,
  Attribute,
  Subscript,
  Slice,
  ParenthesizedExpression,
  Tuple,
  List,
  Set,
  Dictionary,
  Pair,
  ListComprehension,
  SetComprehension,
  DictionaryComprehension,
  GeneratorExpression,
  ForInClause,
  IfClause,
  ListSplat,
  DictionarySplat,
  Yield,
  ConcatenatedString,
  Ellipsis,
};

[[nodiscard]] inline std::string_view kind_name(NodeKind kind) {
  switch (kind) {
    case NodeKind::Identifier: return "identifier";
    case NodeKind::Keyword: return "keyword";
    case NodeKind::Operator: return "operator";
    case NodeKind::Number: return "number";
    case NodeKind::String: return "string";
    case NodeKind::Newline: return "NEWLINE";
    case NodeKind::Indent: return "INDENT";
    case NodeKind::Dedent: return "DEDENT";
    case NodeKind::EndMarker: return "ENDMARKER";
    case NodeKind::Module: return "module";
    case NodeKind::FunctionDefinition: return "function_definition";
    case NodeKind::ClassDefinition: return "class_definition";
    case NodeKind::DecoratedDefinition: return "decorated_definition";
    case NodeKind::Decorator: return "decorator";
    case NodeKind::Parameters: return "parameters";
    case NodeKind::LambdaParameters: return "lambda_parameters";
    case NodeKind::Parameter: return "parameter";
    case NodeKind::DefaultParameter: return "default_parameter";
    case NodeKind::TypedParameter: return "typed_parameter";
    case NodeKind::TypedDefaultParameter: return "typed_default_parameter";
    case NodeKind::ListSplatPattern: return "list_splat_pattern";
    case NodeKind::DictionarySplatPattern: return "dictionary_splat_pattern";
    case NodeKind::KeywordSeparator: return "keyword_separator";
    case NodeKind::PositionalSeparator: return "positional_separator";
    case NodeKind::Block: return "block";
    case NodeKind::SimpleStatements: return "simple_statements";
    case NodeKind::ExpressionStatement: return "expression_statement";
    case NodeKind::Assignment: return "assignment";
    case NodeKind::AugmentedAssignment: return "augmented_assignment";
    case NodeKind::AnnotatedAssignment: return "annotated_assignment";
    case NodeKind::ReturnStatement: return "return_statement";
    case NodeKind::PassStatement: return "pass_statement";
    case NodeKind::BreakStatement: return "break_statement";
    case NodeKind::ContinueStatement: return "continue_statement";
    case NodeKind::RaiseStatement: return "raise_statement";
    case NodeKind::AssertStatement: return "assert_statement";
    case NodeKind::DeleteStatement: return "delete_statement";
    case NodeKind::GlobalStatement: return "global_statement";
    case NodeKind::NonlocalStatement: return "nonlocal_statement";
    case NodeKind::ImportStatement: return "import_statement";
    case NodeKind::ImportFromStatement: return "import_from_statement";
    case NodeKind::DottedName: return "dotted_name";
    case NodeKind::AliasedImport: return "aliased_import";
    case NodeKind::IfStatement: return "if_statement";
    case NodeKind::ElifClause: return "elif_clause";
    case NodeKind::ElseClause: return "else_clause";
    case NodeKind::ForStatement: return "for_statement";
    case NodeKind::WhileStatement: return "while_statement";
    case NodeKind::TryStatement: return "try_statement";
    case NodeKind::ExceptClause: return "except_clause";
    case NodeKind::FinallyClause: return "finally_clause";
    case NodeKind::WithStatement: return "with_statement";
    case NodeKind::WithItem: return "with_item";
    case NodeKind::ExpressionList: return "expression_list";
    case NodeKind::NamedExpression: return "named_expression";
    case NodeKind::ConditionalExpression: return "conditional_expression";
    case NodeKind::Lambda: return "lambda";
    case NodeKind::BooleanOperator: return "boolean_operator";
    case NodeKind::NotOperator: return "not_operator";
    case NodeKind::ComparisonOperator: return "comparison_operator";
    case NodeKind::BinaryOperator: return "binary_operator";
    case NodeKind::UnaryOperator: return "unary_operator";
    case NodeKind::Await: return "await";
    case NodeKind::Call: return "call";
    case NodeKind::ArgumentList: return "argument_list";
    case NodeKind::KeywordArgument: return "keyword_argument";
    case NodeKind::Attribute: return "attribute";
    case NodeKind::Subscript: return "subscript";
    case NodeKind::Slice: return "slice";
    case NodeKind::ParenthesizedExpression: return "parenthesized_expression";
    case NodeKind::Tuple: return "tuple";
    case NodeKind::List: return "list";
    case NodeKind::Set: return "set";
    case NodeKind::Dictionary: return "dictionary";
    case NodeKind::Pair: return "pair";
    case NodeKind::ListComprehension: return "list_comprehension";
    case NodeKind::SetComprehension: return "set_comprehension";
    case NodeKind::DictionaryComprehension: return "dictionary_comprehension";
    case NodeKind::GeneratorExpression: return "generator_expression";
    case NodeKind::ForInClause: return "for_in_clause";
    case NodeKind::IfClause: return "if_clause";
    case NodeKind::ListSplat: return "list_splat";
    case NodeKind::DictionarySplat: return "dictionary_splat";
    case NodeKind::Yield: return "yield";
    case NodeKind::ConcatenatedString: return "concatenated_string";
    case NodeKind::Ellipsis: return "ellipsis";
  }
  return "unknown";
}

using NodeId = std::int32_t;
inline constexpr NodeId kNoNode = -1;

struct Node {
  NodeKind kind;
  std::uint32_t begin = 0;
  std::uint32_t end = 0;
  NodeId parent = kNoNode;
  std::int32_t token = -1;  // leaves only
  std::vector<NodeId> children;

  [[nodiscard]] bool is_leaf() const { return token >= 0; }
};

/// Concrete syntax tree over an owned copy of the source. Leaves are the
/// significant tokens; trivia lives in the gaps between leaf spans.
class SyntaxTree {
 public:
  SyntaxTree(std::string source, std::vector<Token> tokens, std::vector<Node> nodes, NodeId root)
      : source_(std::move(source)),
        tokens_(std::move(tokens)),
        nodes_(std::move(nodes)),
        root_(root) {}

  [[nodiscard]] const std::string& source() const { return source_; }
  [[nodiscard]] const std::vector<Token>& tokens() const { return tokens_; }
  [[nodiscard]] const std::vector<Node>& nodes() const { return nodes_; }
  [[nodiscard]] NodeId root() const { return root_; }
  [[nodiscard]] const Node& node(NodeId id) const { return nodes_[static_cast<std::size_t>(id)]; }
  [[nodiscard]] NodeKind kind(NodeId id) const { return node(id).kind; }

  [[nodiscard]] std::string_view text(NodeId id) const {
    const Node& n = node(id);
    return std::string_view(source_).substr(n.begin, n.end - n.begin);
  }

  /// Node-kind label with identifier and literal text erased. Keywords and
  /// operators keep their spelling since they are part of the structure.
  [[nodiscard]] std::string_view label(NodeId id) const {
    const Node& n = node(id);
    if (n.kind == NodeKind::Keyword || n.kind == NodeKind::Operator) return text(id);
    return kind_name(n.kind);
  }

  [[nodiscard]] std::vector<NodeId> preorder() const {
    std::vector<NodeId> order;
    order.reserve(nodes_.size());
    std::vector<NodeId> stack{root_};
    while (!stack.empty()) {
      const NodeId id = stack.back();
      stack.pop_back();
      order.push_back(id);
      const auto& kids = node(id).children;
      for (auto it = kids.rbegin(); it != kids.rend(); ++it) stack.push_back(*it);
    }
    return order;
  }

  [[nodiscard]] std::vector<std::string_view> erased_labels() const {
    std::vector<std::string_view> labels;
    for (NodeId id : preorder()) labels.push_back(label(id));
    return labels;
  }

  /// Rebuilds the text from leaf spans and the trivia between them.
  [[nodiscard]] std::string reserialize() const {
    std::string out;
    out.reserve(source_.size());
    std::uint32_t cursor = 0;
    for (NodeId id : preorder()) {
      const Node& n = node(id);
      if (!n.is_leaf()) continue;
      if (n.begin < cursor) return {};
      out.append(source_, cursor, n.begin - cursor);
      out.append(source_, n.begin, n.end - n.begin);
      cursor = n.end;
    }
    out.append(source_, cursor, std::string::npos);
    return out;
  }

  /// Direct children of `id` with kind `k`.
  [[nodiscard]] std::vector<NodeId> children_of_kind(NodeId id, NodeKind k) const {
    std::vector<NodeId> out;
    for (NodeId c : node(id).children) {
      if (kind(c) == k) out.push_back(c);
    }
    return out;
  }

  [[nodiscard]] std::vector<NodeId> find_all(NodeKind k) const {
    std::vector<NodeId> out;
    for (NodeId id : preorder()) {
      if (kind(id) == k) out.push_back(id);
    }
    return out;
  }

  [[nodiscard]] bool is_token(NodeId id, std::string_view spelling) const {
    const Node& n = node(id);
    return n.is_leaf() && text(id) == spelling;
  }

  [[nodiscard]] std::uint32_t line_of(std::uint32_t offset) const {
    std::uint32_t line = 1;
    for (std::uint32_t i = 0; i < offset && i < source_.size(); ++i) {
      if (source_[i] == '\n') ++line;
    }
    return line;
  }

 private:
  std::string source_;
  std::vector<Token> tokens_;
  std::vector<Node> nodes_;
  NodeId root_;
};

}  // namespace completest::syntax
