#ifndef CASEFOLD_EMBEDDINGS_H_
#define CASEFOLD_EMBEDDINGS_H_

#include <cstddef>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace casefold::tagging {

// Word vectors read from a GloVe / word2vec text file.
struct StaticEmbeddings {
  std::size_t dim = 0;
  std::unordered_map<std::string, std::vector<double>> table;

  // Absent words get the zero vector.
  std::vector<double> lookup(std::string_view word) const;
};

// Lines are "word v1 ... vD"; D is taken from the first vector line. A leading
// word2vec header ("<count> <dim>", two integers) is skipped. Throws
// DataError "RaggedDimensions" (1-based line), "BadNumber" or "EmptyFile".
StaticEmbeddings parse_static_embeddings(std::string_view text);
StaticEmbeddings load_static_embeddings(const std::string& path);

}  // namespace casefold::tagging

#endif  // CASEFOLD_EMBEDDINGS_H_
