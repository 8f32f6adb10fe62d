#include "casefold/model_io.h"

#include <bit>
#include <cstdint>
#include <cstring>

#include "casefold/error.h"

namespace casefold::nn {
namespace {

constexpr std::string_view kMagic = "casefold-model v1\n";

static_assert(std::endian::native == std::endian::little ||
                  std::endian::native == std::endian::big,
              "mixed-endian platforms are not supported");

template <typename T>
void put(std::string& out, T value) {
  std::uint8_t bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
  }
  out.append(reinterpret_cast<const char*>(bytes), sizeof(T));
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    std::uint8_t raw[sizeof(T)];
    std::memcpy(raw, bytes_.data() + pos_, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) {
      for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(raw[i], raw[sizeof(T) - 1 - i]);
    }
    pos_ += sizeof(T);
    T value;
    std::memcpy(&value, raw, sizeof(T));
    return value;
  }

  std::string_view take(std::size_t n) {
    need(n);
    auto out = bytes_.substr(pos_, n);
    pos_ += n;
    return out;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw DataError("BadModel", "truncated model file");
  }

  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string serialize_model(const nlohmann::json& meta, const ParameterStore& store) {
  std::string out(kMagic);
  const std::string meta_text = meta.dump();
  put<std::uint64_t>(out, meta_text.size());
  out += meta_text;
  put<std::uint64_t>(out, store.params().size());
  for (const Parameter& p : store.params()) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(p.name.size()));
    out += p.name;
    put<std::uint8_t>(out, p.trainable ? 1 : 0);
    put<std::uint32_t>(out, 2);
    put<std::uint64_t>(out, p.value.rows());
    put<std::uint64_t>(out, p.value.cols());
    for (double v : p.value.data().data()) put<double>(out, v);
  }
  return out;
}

ModelFile parse_model(std::string_view bytes) {
  if (bytes.substr(0, kMagic.size()) != kMagic) {
    throw DataError("BadModel", "missing 'casefold-model v1' header");
  }
  Reader in(bytes.substr(kMagic.size()));
  ModelFile file;
  const auto meta_len = in.get<std::uint64_t>();
  try {
    file.meta = nlohmann::json::parse(in.take(meta_len));
  } catch (const nlohmann::json::exception& e) {
    throw DataError("BadModel", std::string("metadata is not valid JSON: ") + e.what());
  }
  const auto count = in.get<std::uint64_t>();
  for (std::uint64_t k = 0; k < count; ++k) {
    StoredParameter p;
    const auto name_len = in.get<std::uint32_t>();
    p.name = std::string(in.take(name_len));
    p.trainable = in.get<std::uint8_t>() != 0;
    if (in.get<std::uint32_t>() != 2) throw DataError("BadModel", "parameter rank must be 2");
    const auto rows = in.get<std::uint64_t>();
    const auto cols = in.get<std::uint64_t>();
    if (cols != 0 && rows > (bytes.size() / 8) / cols) {
      throw DataError("BadModel", "parameter '" + p.name + "' is larger than the file");
    }
    std::vector<double> data(rows * cols);
    for (double& v : data) v = in.get<double>();
    p.data = Matrix(rows, cols, std::move(data));
    file.params.push_back(std::move(p));
  }
  if (!in.done()) throw DataError("BadModel", "trailing bytes after parameters");
  return file;
}

void load_parameters(const ModelFile& file, ParameterStore& store) {
  if (file.params.size() != store.params().size()) {
    throw DataError("BadModel", "model has " + std::to_string(file.params.size()) +
                                    " parameters, architecture expects " +
                                    std::to_string(store.params().size()));
  }
  for (Parameter& p : store.params()) {
    const StoredParameter* found = nullptr;
    for (const StoredParameter& s : file.params) {
      if (s.name == p.name) found = &s;
    }
    if (found == nullptr) throw DataError("BadModel", "missing parameter '" + p.name + "'");
    if (!found->data.same_shape(p.value.data())) {
      throw DataError("BadModel", "parameter '" + p.name + "' has shape " +
                                      found->data.shape_string() + ", expected " +
                                      p.value.data().shape_string());
    }
    p.value.mutable_data() = found->data;
    p.trainable = found->trainable;
  }
}

}  // namespace casefold::nn
