#ifndef CASEFOLD_MODEL_IO_H_
#define CASEFOLD_MODEL_IO_H_

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "casefold/autodiff.h"
#include "casefold/layers.h"

namespace casefold::nn {

// Binary model container (all integers little-endian):
//
//   "casefold-model v1\n"
//   u64 meta_length, then meta_length bytes of UTF-8 JSON
//   u64 parameter_count
//   per parameter:
//     u32 name_length, name bytes
//     u8  trainable (0 or 1)
//     u32 rank (always 2), u64 rows, u64 cols
//     rows * cols IEEE-754 binary64 values, row-major
struct StoredParameter {
  std::string name;
  bool trainable = true;
  Matrix data;
};

struct ModelFile {
  nlohmann::json meta;
  std::vector<StoredParameter> params;
};

std::string serialize_model(const nlohmann::json& meta, const ParameterStore& store);
// Throws DataError "BadModel" on any structural problem.
ModelFile parse_model(std::string_view bytes);

// Copies stored values into an already-built store. Every store parameter
// must be present with the same shape.
void load_parameters(const ModelFile& file, ParameterStore& store);

}  // namespace casefold::nn

#endif  // CASEFOLD_MODEL_IO_H_
