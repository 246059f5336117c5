#include "nrsr/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace nrsr {

namespace {

constexpr std::size_t kMagicLength = 5;
constexpr std::uint32_t kMaxStringLength = 1u << 20;

void put_u32(std::ostream& out, std::uint32_t v) {
  const std::array<char, 4> bytes{static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                                  static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  out.write(bytes.data(), 4);
}

std::uint32_t get_u32(std::istream& in) {
  std::array<unsigned char, 4> b{};
  if (!in.read(reinterpret_cast<char*>(b.data()), 4)) throw FormatError("checkpoint: truncated file");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void put_string(std::ostream& out, const std::string& s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream& in) {
  const std::uint32_t len = get_u32(in);
  if (len > kMaxStringLength) throw FormatError("checkpoint: implausible string length");
  std::string s(len, '\0');
  if (!in.read(s.data(), len)) throw FormatError("checkpoint: truncated string");
  return s;
}

void put_floats(std::ostream& out, const std::vector<float>& values) {
  std::vector<char> buf(values.size() * 4);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto bits = std::bit_cast<std::uint32_t>(values[i]);
    for (int b = 0; b < 4; ++b) buf[4 * i + b] = static_cast<char>((bits >> (8 * b)) & 0xff);
  }
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

std::vector<float> get_floats(std::istream& in, std::size_t count) {
  std::vector<unsigned char> buf(count * 4);
  if (!in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()))) {
    throw FormatError("checkpoint: truncated tensor data");
  }
  std::vector<float> values(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(buf[4 * i + b]) << (8 * b);
    values[i] = std::bit_cast<float>(bits);
  }
  return values;
}

TensorRecord make_record(const std::string& name, const Tensor<float>& t) {
  return TensorRecord{name, t.shape(), std::vector<float>(t.values().begin(), t.values().end())};
}

void upsert(Checkpoint& checkpoint, TensorRecord record) {
  for (auto& r : checkpoint.records) {
    if (r.name == record.name) {
      r = std::move(record);
      return;
    }
  }
  checkpoint.records.push_back(std::move(record));
}

}  // namespace

const TensorRecord* Checkpoint::find(const std::string& name) const {
  for (const auto& r : records) {
    if (r.name == name) return &r;
  }
  return nullptr;
}

std::string Checkpoint::meta(const std::string& key, const std::string& fallback) const {
  auto it = metadata.find(key);
  return it == metadata.end() ? fallback : it->second;
}

void write_checkpoint(const Checkpoint& checkpoint, std::ostream& out) {
  out.write(kCheckpointMagic, kMagicLength);
  put_u32(out, static_cast<std::uint32_t>(checkpoint.metadata.size()));
  for (const auto& [k, v] : checkpoint.metadata) {
    put_string(out, k);
    put_string(out, v);
  }
  put_u32(out, static_cast<std::uint32_t>(checkpoint.records.size()));
  for (const auto& r : checkpoint.records) {
    if (r.values.size() != r.shape.numel()) throw FormatError("checkpoint: record " + r.name + " size mismatch");
    put_string(out, r.name);
    put_u32(out, static_cast<std::uint32_t>(r.shape.n));
    put_u32(out, static_cast<std::uint32_t>(r.shape.c));
    put_u32(out, static_cast<std::uint32_t>(r.shape.h));
    put_u32(out, static_cast<std::uint32_t>(r.shape.w));
    put_floats(out, r.values);
  }
}

Checkpoint read_checkpoint(std::istream& in) {
  char magic[kMagicLength] = {};
  if (!in.read(magic, kMagicLength) || std::memcmp(magic, kCheckpointMagic, kMagicLength) != 0) {
    throw FormatError("checkpoint: bad magic, expected NRSR1");
  }
  Checkpoint checkpoint;
  const std::uint32_t meta_count = get_u32(in);
  for (std::uint32_t i = 0; i < meta_count; ++i) {
    std::string key = get_string(in);
    checkpoint.metadata[key] = get_string(in);
  }
  const std::uint32_t record_count = get_u32(in);
  for (std::uint32_t i = 0; i < record_count; ++i) {
    TensorRecord r;
    r.name = get_string(in);
    r.shape.n = static_cast<int>(get_u32(in));
    r.shape.c = static_cast<int>(get_u32(in));
    r.shape.h = static_cast<int>(get_u32(in));
    r.shape.w = static_cast<int>(get_u32(in));
    if (r.shape.numel() > (std::size_t{1} << 32)) throw FormatError("checkpoint: implausible record size");
    r.values = get_floats(in, r.shape.numel());
    checkpoint.records.push_back(std::move(r));
  }
  return checkpoint;
}

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot write checkpoint " + tmp.string());
    write_checkpoint(checkpoint, out);
    if (!out) throw FormatError("failed writing checkpoint " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open checkpoint " + path.string());
  return read_checkpoint(in);
}

void store_parameters(Checkpoint& checkpoint, const ParameterList<float>& params) {
  for (const auto& p : params) upsert(checkpoint, make_record(p.name, p.var->value));
}

void restore_parameters(const Checkpoint& checkpoint, const ParameterList<float>& params) {
  for (const auto& p : params) {
    const TensorRecord* r = checkpoint.find(p.name);
    if (!r) throw FormatError("checkpoint: missing record " + p.name);
    if (!(r->shape == p.var->value.shape())) {
      throw FormatError("checkpoint: record " + p.name + " has shape " + r->shape.str() + ", model expects " +
                        p.var->value.shape().str());
    }
    p.var->value = Tensor<float>(r->shape, r->values);
  }
}

void store_optimizer(Checkpoint& checkpoint, const Adam<float>& adam) {
  checkpoint.metadata["adam.step"] = std::to_string(adam.steps());
  for (const auto& [name, m] : adam.moments()) {
    upsert(checkpoint, make_record("adam/m/" + name, m.first));
    upsert(checkpoint, make_record("adam/v/" + name, m.second));
  }
}

bool has_optimizer_state(const Checkpoint& checkpoint) { return checkpoint.metadata.count("adam.step") > 0; }

void restore_optimizer(const Checkpoint& checkpoint, Adam<float>& adam) {
  if (!has_optimizer_state(checkpoint)) throw FormatError("checkpoint: no optimizer state");
  adam.set_steps(std::stoll(checkpoint.meta("adam.step")));
  adam.moments().clear();
  constexpr std::string_view kFirst = "adam/m/";
  for (const auto& r : checkpoint.records) {
    if (r.name.rfind(kFirst, 0) != 0) continue;
    const std::string param = r.name.substr(kFirst.size());
    const TensorRecord* second = checkpoint.find("adam/v/" + param);
    if (!second) throw FormatError("checkpoint: missing second moment for " + param);
    auto& m = adam.moments()[param];
    m.first = Tensor<float>(r.shape, r.values);
    m.second = Tensor<float>(second->shape, second->values);
  }
}

}  // namespace nrsr
