#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "gerbera/error.hpp"
#include "gerbera/model.hpp"

// Checkpoint writer/reader. Byte layout is fixed and little-endian; the
// full format is documented in docs/checkpoint_format.md and must stay in
// sync with this file.

namespace gerbera {

namespace {

constexpr char kMagic[4] = {'G', 'R', 'B', 'R'};
constexpr uint32_t kFormatVersion = 1;

class Writer {
 public:
  void u8(uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void u32(uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<char>(v >> (8 * i)));
  }
  void u64(uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<char>(v >> (8 * i)));
  }
  void f64(double v) {
    uint64_t bits;
    std::memcpy(&bits, &v, 8);
    u64(bits);
  }
  void str(const std::string& s) {
    u32(static_cast<uint32_t>(s.size()));
    buf_.append(s);
  }
  void raw(const char* p, size_t n) { buf_.append(p, n); }
  const std::string& bytes() const { return buf_; }

 private:
  std::string buf_;
};

class Reader {
 public:
  explicit Reader(std::string bytes) : buf_(std::move(bytes)) {}

  uint8_t u8() { return static_cast<uint8_t>(take(1)[0]); }
  uint32_t u32() {
    const char* p = take(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<uint32_t>(static_cast<unsigned char>(p[i])) << (8 * i);
    return v;
  }
  uint64_t u64() {
    const char* p = take(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
      v |= static_cast<uint64_t>(static_cast<unsigned char>(p[i])) << (8 * i);
    return v;
  }
  double f64() {
    uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }
  std::string str() {
    uint32_t n = u32();
    const char* p = take(n);
    return std::string(p, n);
  }
  const char* raw(size_t n) { return take(n); }
  bool exhausted() const { return pos_ == buf_.size(); }

 private:
  const char* take(size_t n) {
    if (pos_ + n > buf_.size())
      throw CorruptCheckpointError("checkpoint truncated");
    const char* p = buf_.data() + pos_;
    pos_ += n;
    return p;
  }
  std::string buf_;
  size_t pos_ = 0;
};

}  // namespace

void save_checkpoint(const TaggerModel& model, const std::string& path) {
  Writer w;
  w.raw(kMagic, 4);
  w.u32(kFormatVersion);

  // Config block.
  w.u64(model.config.vocab_size);
  w.u64(model.config.embed_dim);
  w.u64(model.config.encoder_hidden_dim);
  w.u64(model.config.head_hidden_dim);
  w.f64(model.config.dropout_rate);
  w.u64(model.config.init_seed);

  // Vocab block.
  w.u8(model.vocab.fold_case() ? 1 : 0);
  w.u64(model.vocab.entries().size());
  for (const auto& surface : model.vocab.entries()) w.str(surface);

  // Task registry.
  w.u32(static_cast<uint32_t>(model.tasks.size()));
  for (const auto& spec : model.tasks) {
    w.u32(static_cast<uint32_t>(spec.task_id));
    w.str(spec.corpus_name);
    w.u8(spec.role == TaskRole::target ? 0 : 1);
    w.u8(spec.label_space.kind == TagSchemeKind::typed_bio ? 0 : 1);
    w.u32(static_cast<uint32_t>(spec.label_space.types.size()));
    for (const auto& type : spec.label_space.types) w.str(type);
  }

  // Parameter tensors.
  auto tensors = parameter_tensors(const_cast<TaggerModel&>(model));
  w.u32(static_cast<uint32_t>(tensors.size()));
  for (const auto& t : tensors) {
    w.str(t.name);
    w.u64(t.rows);
    w.u64(t.cols);
    for (size_t i = 0; i < t.size(); ++i) w.f64(t.data[i]);
  }

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write checkpoint: " + path);
  out.write(w.bytes().data(), static_cast<std::streamsize>(w.bytes().size()));
  if (!out) throw DataError("checkpoint write failed: " + path);
}

TaggerModel load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  Reader r(buf.str());

  char magic[4];
  std::memcpy(magic, r.raw(4), 4);
  if (std::memcmp(magic, kMagic, 4) != 0)
    throw CorruptCheckpointError("bad magic, not a checkpoint file");
  uint32_t version = r.u32();
  if (version != kFormatVersion)
    throw VersionMismatchError("checkpoint format version " +
                               std::to_string(version) + ", expected " +
                               std::to_string(kFormatVersion));

  ModelConfig config;
  config.vocab_size = r.u64();
  config.embed_dim = r.u64();
  config.encoder_hidden_dim = r.u64();
  config.head_hidden_dim = r.u64();
  config.dropout_rate = r.f64();
  config.init_seed = r.u64();
  config.validate();

  bool fold_case = r.u8() != 0;
  uint64_t n_entries = r.u64();
  if (n_entries + 2 != config.vocab_size)
    throw CorruptCheckpointError("vocab size disagrees with config");
  std::vector<std::string> entries;
  entries.reserve(n_entries);
  for (uint64_t i = 0; i < n_entries; ++i) entries.push_back(r.str());

  uint32_t n_tasks = r.u32();
  if (n_tasks == 0) throw CorruptCheckpointError("checkpoint has no tasks");
  std::vector<TaskSpec> tasks;
  for (uint32_t i = 0; i < n_tasks; ++i) {
    TaskSpec spec;
    spec.task_id = static_cast<int32_t>(r.u32());
    spec.corpus_name = r.str();
    spec.role = r.u8() == 0 ? TaskRole::target : TaskRole::source;
    spec.label_space.kind =
        r.u8() == 0 ? TagSchemeKind::typed_bio : TagSchemeKind::untyped_bio;
    uint32_t n_types = r.u32();
    for (uint32_t k = 0; k < n_types; ++k)
      spec.label_space.types.push_back(r.str());
    if (spec.label_space.kind == TagSchemeKind::untyped_bio &&
        !spec.label_space.types.empty())
      throw CorruptCheckpointError("untyped scheme carries types");
    tasks.push_back(std::move(spec));
  }

  TaggerModel model =
      init_model(config, tasks, Vocab::from_entries(entries, fold_case));

  uint32_t n_tensors = r.u32();
  auto tensors = parameter_tensors(model);
  if (n_tensors != tensors.size())
    throw CorruptCheckpointError("unexpected tensor count");
  for (auto& t : tensors) {
    std::string name = r.str();
    uint64_t rows = r.u64();
    uint64_t cols = r.u64();
    if (name != t.name || rows != t.rows || cols != t.cols)
      throw CorruptCheckpointError("tensor " + t.name +
                                   " has unexpected name or shape");
    for (size_t i = 0; i < t.size(); ++i) t.data[i] = r.f64();
  }
  if (!r.exhausted())
    throw CorruptCheckpointError("trailing bytes after parameters");
  return model;
}

}  // namespace gerbera
