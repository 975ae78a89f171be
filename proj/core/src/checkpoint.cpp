#include "sketchout/checkpoint.hpp"

#include <zlib.h>

#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

namespace sketchout {
namespace {

constexpr char kMagic[8] = {'S', 'K', 'O', 'U', 'T', 'C', 'K', 'P'};

class Writer {
 public:
  template <typename T>
  void pod(T v) {
    static_assert(std::is_trivially_copyable_v<T>);
    const auto* p = reinterpret_cast<const char*>(&v);
    buf_.append(p, sizeof(T));
  }
  void str(const std::string& s) {
    pod<uint64_t>(s.size());
    buf_.append(s);
  }
  void bytes(const void* data, size_t n) { buf_.append(static_cast<const char*>(data), n); }
  const std::string& data() const { return buf_; }

 private:
  std::string buf_;
};

class Reader {
 public:
  explicit Reader(std::string_view data) : data_(data) {}
  template <typename T>
  T pod() {
    T v{};
    need(sizeof(T));
    std::memcpy(&v, data_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string str() {
    const auto n = pod<uint64_t>();
    need(n);
    std::string s(data_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  std::string_view bytes(size_t n) {
    need(n);
    auto v = data_.substr(pos_, n);
    pos_ += n;
    return v;
  }
  bool done() const { return pos_ == data_.size(); }

 private:
  void need(size_t n) const {
    if (data_.size() - pos_ < n) throw CheckpointError("checkpoint payload is truncated");
  }
  std::string_view data_;
  size_t pos_ = 0;
};

void write_tensors(Writer& w, const std::vector<NamedTensor>& tensors) {
  w.pod<uint64_t>(tensors.size());
  for (const auto& [name, value] : tensors) {
    auto t = value.detach().cpu().contiguous();
    w.str(name);
    w.pod<int8_t>(static_cast<int8_t>(t.scalar_type()));
    w.pod<uint32_t>(static_cast<uint32_t>(t.dim()));
    for (auto d : t.sizes()) w.pod<int64_t>(d);
    const auto nbytes = static_cast<uint64_t>(t.nbytes());
    w.pod<uint64_t>(nbytes);
    w.bytes(t.data_ptr(), nbytes);
  }
}

std::vector<NamedTensor> read_tensors(Reader& r) {
  const auto count = r.pod<uint64_t>();
  std::vector<NamedTensor> out;
  for (uint64_t i = 0; i < count; ++i) {
    NamedTensor nt;
    nt.name = r.str();
    const auto dtype = static_cast<c10::ScalarType>(r.pod<int8_t>());
    const auto dims = r.pod<uint32_t>();
    if (dims > 8) throw CheckpointError("checkpoint tensor '" + nt.name + "' has bad rank");
    std::vector<int64_t> shape(dims);
    for (auto& d : shape) d = r.pod<int64_t>();
    const auto nbytes = r.pod<uint64_t>();
    auto t = torch::empty(shape, torch::TensorOptions().dtype(dtype));
    if (static_cast<uint64_t>(t.nbytes()) != nbytes) {
      throw CheckpointError("checkpoint tensor '" + nt.name + "' has inconsistent size");
    }
    const auto raw = r.bytes(nbytes);
    std::memcpy(t.data_ptr(), raw.data(), nbytes);
    nt.value = t;
    out.push_back(std::move(nt));
  }
  return out;
}

uint32_t crc_of(std::string_view data) {
  return static_cast<uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(data.data()), static_cast<uInt>(data.size())));
}

}  // namespace

void save_checkpoint(const ModelCheckpoint& ckpt, const std::filesystem::path& path) {
  Writer payload;
  payload.str(ckpt.fingerprint);
  payload.str(ckpt.config_text);
  payload.pod<int64_t>(ckpt.scale.half_height);
  payload.pod<int64_t>(ckpt.scale.half_width);
  payload.pod<int64_t>(ckpt.scale.channel_divisor);
  payload.pod<int64_t>(ckpt.epoch);
  payload.pod<int64_t>(ckpt.batch_in_epoch);
  payload.pod<int64_t>(ckpt.step);
  write_tensors(payload, ckpt.generator);
  write_tensors(payload, ckpt.critic_global);
  write_tensors(payload, ckpt.critic_local);
  write_tensors(payload, ckpt.generator_optimizer);
  write_tensors(payload, ckpt.critic_optimizer);

  Writer file;
  file.bytes(kMagic, sizeof(kMagic));
  file.pod<uint32_t>(ckpt.version);
  file.pod<uint64_t>(payload.data().size());
  file.bytes(payload.data().data(), payload.data().size());
  file.pod<uint32_t>(crc_of(payload.data()));

  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(file.data().data(), static_cast<std::streamsize>(file.data().size()));
    out.flush();
    if (!out) throw CheckpointError("cannot write checkpoint " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw CheckpointError("cannot move checkpoint into place at " + path.string() + ": " + ec.message());
}

ModelCheckpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string data = buffer.str();

  Reader header(data);
  const auto magic = header.bytes(sizeof(kMagic));
  if (std::memcmp(magic.data(), kMagic, sizeof(kMagic)) != 0) {
    throw CheckpointError(path.string() + " is not a sketchout checkpoint");
  }
  const auto version = header.pod<uint32_t>();
  if (version != kCheckpointVersion) {
    throw CheckpointError("checkpoint format version " + std::to_string(version) +
                          " is not supported (expected version " +
                          std::to_string(kCheckpointVersion) + ")");
  }
  const auto length = header.pod<uint64_t>();
  const auto payload_view = header.bytes(length);
  const auto stored_crc = header.pod<uint32_t>();
  if (!header.done()) throw CheckpointError("checkpoint has trailing bytes");
  if (crc_of(payload_view) != stored_crc) {
    throw CheckpointError("checkpoint integrity check failed (CRC mismatch) for " + path.string());
  }

  Reader r(payload_view);
  ModelCheckpoint ckpt;
  ckpt.version = version;
  ckpt.fingerprint = r.str();
  ckpt.config_text = r.str();
  ckpt.scale.half_height = r.pod<int64_t>();
  ckpt.scale.half_width = r.pod<int64_t>();
  ckpt.scale.channel_divisor = r.pod<int64_t>();
  ckpt.epoch = r.pod<int64_t>();
  ckpt.batch_in_epoch = r.pod<int64_t>();
  ckpt.step = r.pod<int64_t>();
  ckpt.generator = read_tensors(r);
  ckpt.critic_global = read_tensors(r);
  ckpt.critic_local = read_tensors(r);
  ckpt.generator_optimizer = read_tensors(r);
  ckpt.critic_optimizer = read_tensors(r);
  if (!r.done()) throw CheckpointError("checkpoint payload has unexpected trailing data");
  return ckpt;
}

std::vector<NamedTensor> snapshot(const torch::nn::Module& module) {
  std::vector<NamedTensor> out;
  for (const auto& item : module.named_parameters(true)) {
    out.push_back({item.key(), item.value().detach().clone().contiguous()});
  }
  for (const auto& item : module.named_buffers(true)) {
    out.push_back({"buffer:" + item.key(), item.value().detach().clone().contiguous()});
  }
  return out;
}

void restore(torch::nn::Module& module, const std::vector<NamedTensor>& tensors,
             const std::string& what) {
  std::map<std::string, torch::Tensor> targets;
  for (auto& item : module.named_parameters(true)) targets.emplace(item.key(), item.value());
  for (auto& item : module.named_buffers(true)) targets.emplace("buffer:" + item.key(), item.value());
  if (targets.size() != tensors.size()) {
    throw CheckpointError(what + ": checkpoint holds " + std::to_string(tensors.size()) +
                          " tensors, model expects " + std::to_string(targets.size()));
  }
  torch::NoGradGuard no_grad;
  for (const auto& [name, value] : tensors) {
    const auto it = targets.find(name);
    if (it == targets.end()) throw CheckpointError(what + ": unexpected tensor '" + name + "'");
    if (it->second.sizes() != value.sizes()) {
      throw CheckpointError(what + ": shape mismatch for '" + name + "': checkpoint " +
                            c10::str(value.sizes()) + ", model " + c10::str(it->second.sizes()));
    }
    it->second.copy_(value);
  }
}

}  // namespace sketchout
