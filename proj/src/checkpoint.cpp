#include "guti/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "guti/error.hpp"

namespace guti {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'G', 'U', 'T', 'I', 'C', 'K', 'P', 'T'};

template <typename V>
void put(std::string& out, V v) {
  char buf[sizeof(V)];
  std::memcpy(buf, &v, sizeof(V));
  out.append(buf, sizeof(V));
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  template <typename V>
  V get() {
    need(sizeof(V));
    V v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(V));
    pos_ += sizeof(V);
    return v;
  }
  void read(void* dst, std::size_t n) {
    need(n);
    std::memcpy(dst, bytes_.data() + pos_, n);
    pos_ += n;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw FormatError("checkpoint truncated");
  }
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string checkpoint_bytes(const ModelParams<float>& params) {
  const ModelConfig& c = params.config;
  std::string out(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kCheckpointVersion);
  for (int v : {c.n_layers, c.n_heads, c.d_model, c.d_ff, c.context_len, c.vocab_size})
    put<std::uint32_t>(out, static_cast<std::uint32_t>(v));
  put<double>(out, c.dropout_rate);
  put<std::uint8_t>(out, c.tie_embeddings ? 1 : 0);
  const auto tensors = params.named_tensors();
  put<std::uint32_t>(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t->shape.size()));
    for (auto d : t->shape) put<std::uint32_t>(out, static_cast<std::uint32_t>(d));
    out.append(reinterpret_cast<const char*>(t->ptr()), t->size() * sizeof(float));
  }
  return out;
}

ModelParams<float> parse_checkpoint(std::string_view bytes) {
  Reader r(bytes);
  char magic[sizeof(kMagic)];
  r.read(magic, sizeof(magic));
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) throw FormatError("not a checkpoint file (bad magic)");
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion)
    throw FormatError("unsupported checkpoint version " + std::to_string(version));

  ModelConfig c;
  for (int* v : {&c.n_layers, &c.n_heads, &c.d_model, &c.d_ff, &c.context_len, &c.vocab_size}) {
    const auto x = r.get<std::uint32_t>();
    if (x > (1u << 24)) throw FormatError("checkpoint config value out of range");
    *v = static_cast<int>(x);
  }
  c.dropout_rate = r.get<double>();
  c.tie_embeddings = r.get<std::uint8_t>() != 0;
  try {
    c.validate();
  } catch (const UsageError& e) {
    throw FormatError(std::string("checkpoint: ") + e.what());
  }

  ModelParams<float> params = ModelParams<float>::zeros(c);
  auto tensors = params.named_tensors();
  const auto count = r.get<std::uint32_t>();
  if (count != tensors.size())
    throw FormatError("checkpoint has " + std::to_string(count) + " tensors, config implies " +
                      std::to_string(tensors.size()));
  for (auto& [name, t] : tensors) {
    const auto ndim = r.get<std::uint32_t>();
    if (ndim != t->shape.size()) throw FormatError("checkpoint tensor " + name + " has wrong rank");
    for (auto d : t->shape)
      if (r.get<std::uint32_t>() != d) throw FormatError("checkpoint tensor " + name + " has wrong shape");
    r.read(t->ptr(), t->size() * sizeof(float));
  }
  if (!r.done()) throw FormatError("trailing bytes after checkpoint tensors");
  return params;
}

void save_checkpoint(const ModelParams<float>& params, const std::filesystem::path& path) {
  const std::string bytes = checkpoint_bytes(params);
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write checkpoint " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("error writing checkpoint " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move checkpoint into place at " + path.string() + ": " + ec.message());
}

ModelParams<float> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read checkpoint " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("error reading checkpoint " + path.string());
  return parse_checkpoint(ss.str());
}

}  // namespace guti
