#include "casefold/embeddings.h"

#include "doctest.h"
#include "support/oracles.h"

using namespace casefold;
using namespace casefold::tagging;
using oracle::error_code;

TEST_CASE("plain text vectors") {
  const auto e = parse_static_embeddings("a 1 2\nb 3 4\n");
  CHECK(e.dim == 2);
  CHECK(e.table.size() == 2);
  CHECK(e.lookup("b") == std::vector<double>{3.0, 4.0});
  CHECK(e.lookup("zzz") == std::vector<double>{0.0, 0.0});
}

TEST_CASE("word2vec header is skipped") {
  const auto e = parse_static_embeddings("2 3\nx 0.5 -1 2e-1\ny 0 0 1\n");
  CHECK(e.dim == 3);
  CHECK(e.lookup("x") == std::vector<double>{0.5, -1.0, 0.2});
}

TEST_CASE("errors") {
  try {
    parse_static_embeddings("a 1 2\nb 3 4\nc 1 2 3\n");
    FAIL("expected RaggedDimensions");
  } catch (const Error& err) {
    CHECK(err.code() == "RaggedDimensions");
    CHECK(std::string(err.what()).find("3") != std::string::npos);
  }
  CHECK(error_code([] { parse_static_embeddings(""); }) == "EmptyFile");
  CHECK(error_code([] { parse_static_embeddings("a 1 x\n"); }) == "BadNumber");
}
