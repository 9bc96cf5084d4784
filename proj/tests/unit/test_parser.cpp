#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "test_support.hpp"

#include "completest/syntax/parser.hpp"

namespace sx = completest::syntax;

namespace {

void expect_nested_spans(const sx::SyntaxTree& tree) {
  for (sx::NodeId id : tree.preorder()) {
    const auto& n = tree.node(id);
    EXPECT_LE(n.begin, n.end);
    for (sx::NodeId c : n.children) {
      EXPECT_GE(tree.node(c).begin, n.begin);
      EXPECT_LE(tree.node(c).end, n.end);
      EXPECT_EQ(tree.node(c).parent, id);
    }
  }
}

std::vector<std::string> corpus_sources() {
  std::vector<std::string> out;
  std::ifstream in(support::fixtures() / "seeds.jsonl");
  std::string line;
  while (std::getline(in, line)) out.push_back(nlohmann::json::parse(line)["source"]);
  return out;
}

}  // namespace

TEST(Parse, MinimalFunctionHasOneParameter) {
  const auto tree = sx::parse("def f(a): return a");
  const auto defs = tree.find_all(sx::NodeKind::FunctionDefinition);
  ASSERT_EQ(defs.size(), 1u);
  const auto params = tree.children_of_kind(defs[0], sx::NodeKind::Parameters);
  ASSERT_EQ(params.size(), 1u);
  const auto idents = tree.children_of_kind(params[0], sx::NodeKind::Identifier);
  ASSERT_EQ(idents.size(), 1u);
  EXPECT_EQ(tree.text(idents[0]), "a");
}

TEST(Parse, ErrorAtOffendingToken) {
  try {
    (void)sx::parse("def f(:");
    FAIL() << "expected ParseError";
  } catch (const sx::ParseError& e) {
    EXPECT_EQ(e.line(), 1u);
    EXPECT_EQ(e.column(), 6u);
  }
}

TEST(Parse, ErrorCarriesLineAndColumn) {
  try {
    (void)sx::parse("def f(a):\n    return a +\n");
    FAIL() << "expected ParseError";
  } catch (const sx::ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  EXPECT_THROW((void)sx::parse("x = (1, 2\n"), sx::ParseError);
  EXPECT_THROW((void)sx::parse("def f(a):\nreturn a\n"), sx::ParseError);
}

TEST(Parse, StatementAndExpressionForms) {
  const std::string src =
      "@deco(1)\n"
      "async def f(a, /, b: int = 2, *args, c, **kw) -> None:\n"
      "    global g\n"
      "    x: list[int] = [i for i in range(3) if i]\n"
      "    y = z = {k: v for k, v in kw.items()}\n"
      "    with open(a) as fh, ctx() as (p, q):\n"
      "        pass\n"
      "    try:\n"
      "        raise ValueError('x') from None\n"
      "    except (TypeError, ValueError) as e:\n"
      "        del y\n"
      "    else:\n"
      "        assert x, 'msg'\n"
      "    finally:\n"
      "        await thing\n"
      "    for i, j in zip(a, b):\n"
      "        continue\n"
      "    else:\n"
      "        x += [*args, *(1, 2)]\n"
      "    while (n := len(x)) > 3 and not q:\n"
      "        break\n"
      "    lam = lambda u, *v, w=1: u if v else w\n"
      "    s = x[1:2, ::3]; t = f'{a!r:>{b}}' 'tail'\n"
      "    yield from b\n"
      "    return -a ** 2 @ b // c << 1 | d ^ e & f\n";
  const auto tree = sx::parse(src);
  EXPECT_EQ(tree.reserialize(), src);
  EXPECT_EQ(tree.find_all(sx::NodeKind::DecoratedDefinition).size(), 1u);
  EXPECT_EQ(tree.find_all(sx::NodeKind::NamedExpression).size(), 1u);
  EXPECT_EQ(tree.find_all(sx::NodeKind::Lambda).size(), 1u);
  EXPECT_EQ(tree.find_all(sx::NodeKind::TryStatement).size(), 1u);
  EXPECT_EQ(tree.find_all(sx::NodeKind::WithItem).size(), 2u);
  expect_nested_spans(tree);
}

TEST(Parse, ReserializationIsLossless) {
  for (const std::string src : {"", "\n", "# only\n", "x=1", "def f( a ,b ) :\n\treturn(a)\\\n  +b\n",
                                "class C(B, metaclass=M):\n    def m(self): ...\n"}) {
    EXPECT_EQ(sx::parse(src).reserialize(), src);
  }
}

TEST(Parse, PreorderIsDeterministic) {
  const std::string src = "def f(a):\n    return [x for x in a]\n";
  EXPECT_EQ(sx::parse(src).preorder(), sx::parse(src).preorder());
  EXPECT_EQ(sx::parse(src).erased_labels(), sx::parse(src).erased_labels());
}

TEST(Parse, FixtureCorpusRoundTrips) {
  const auto sources = corpus_sources();
  ASSERT_GE(sources.size(), 100u);
  for (const auto& src : sources) {
    const auto tree = sx::parse(src);
    EXPECT_EQ(tree.reserialize(), src);
    expect_nested_spans(tree);
  }
}

TEST(Parse, StandardLibraryRoundTrips) {
  const std::filesystem::path stdlib = "/usr/lib/python3.10";
  if (!std::filesystem::is_directory(stdlib)) GTEST_SKIP() << "no CPython 3.10 stdlib on this host";
  std::size_t files = 0;
  for (const auto& entry : std::filesystem::directory_iterator(stdlib)) {
    if (entry.path().extension() != ".py") continue;
    const std::string src = support::read_file(entry.path());
    if (src.find("\nmatch ") != std::string::npos || src.find(" match ") != std::string::npos) continue;
    try {
      EXPECT_EQ(sx::parse(src).reserialize(), src) << entry.path();
      ++files;
    } catch (const sx::ParseError& e) {
      ADD_FAILURE() << entry.path() << ": " << e.what();
    }
  }
  EXPECT_GT(files, 100u);
}

TEST(Labels, ErasedLabelsHideIdentifierAndLiteralText) {
  const auto a = sx::parse("def f(a):\n    return a + 1\n");
  const auto b = sx::parse("def g(zz):\n    return zz + 99\n");
  EXPECT_EQ(a.erased_labels(), b.erased_labels());
  const auto c = sx::parse("def f(a):\n    return a - 1\n");
  EXPECT_NE(a.erased_labels(), c.erased_labels());
}
