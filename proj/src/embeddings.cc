#include "casefold/embeddings.h"

#include <charconv>

#include "casefold/corpus.h"
#include "casefold/error.h"

namespace casefold::tagging {
namespace {

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

bool is_count(std::string_view field) {
  if (field.empty()) return false;
  for (char c : field) {
    if (c < '0' || c > '9') return false;
  }
  return true;
}

}  // namespace

std::vector<double> StaticEmbeddings::lookup(std::string_view word) const {
  auto it = table.find(std::string(word));
  return it == table.end() ? std::vector<double>(dim, 0.0) : it->second;
}

StaticEmbeddings parse_static_embeddings(std::string_view text) {
  StaticEmbeddings emb;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool first_content = true;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    auto fields = split(line);
    if (fields.empty()) continue;
    if (first_content && fields.size() == 2 && is_count(fields[0]) && is_count(fields[1])) {
      first_content = false;
      continue;
    }
    first_content = false;
    if (fields.size() < 2) {
      throw DataError("RaggedDimensions", "line " + std::to_string(line_no) + " has no vector");
    }
    const std::size_t d = fields.size() - 1;
    if (emb.dim == 0) emb.dim = d;
    if (d != emb.dim) {
      throw DataError("RaggedDimensions", "line " + std::to_string(line_no) + " has " +
                                              std::to_string(d) + " values, expected " +
                                              std::to_string(emb.dim));
    }
    std::vector<double> vec(d);
    for (std::size_t k = 0; k < d; ++k) {
      const std::string_view f = fields[k + 1];
      auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), vec[k]);
      if (ec != std::errc{} || ptr != f.data() + f.size()) {
        throw DataError("BadNumber", "line " + std::to_string(line_no) + ": '" +
                                         std::string(f) + "' is not a number");
      }
    }
    emb.table.insert_or_assign(std::string(fields[0]), std::move(vec));
  }
  if (emb.table.empty()) throw DataError("EmptyFile", "no embedding vectors found");
  return emb;
}

StaticEmbeddings load_static_embeddings(const std::string& path) {
  return parse_static_embeddings(read_file(path));
}

}  // namespace casefold::tagging
