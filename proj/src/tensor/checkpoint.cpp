#include "rsn/tensor/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace rsn {

namespace {

constexpr char kMagic[4] = {'R', 'S', 'N', '1'};

template <typename U>
U to_little(U v) {
  if constexpr (std::endian::native == std::endian::big) {
    unsigned char b[sizeof(U)];
    std::memcpy(b, &v, sizeof(U));
    std::reverse(b, b + sizeof(U));
    std::memcpy(&v, b, sizeof(U));
  }
  return v;
}

void write_u32(std::ostream& out, std::uint32_t v) {
  v = to_little(v);
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint32_t read_u32(std::istream& in) {
  std::uint32_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) throw CheckpointError("checkpoint truncated");
  return to_little(v);
}

template <typename T>
void write_payload(std::ostream& out, const Tensor<T>& t) {
  using Bits = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  std::vector<Bits> buf(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) buf[i] = to_little(std::bit_cast<Bits>(t[i]));
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(Bits)));
}

template <typename T>
Tensor<T> read_payload(std::istream& in, Shape shape) {
  using Bits = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  std::vector<Bits> buf(shape.numel());
  if (!in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(Bits)))) {
    throw CheckpointError("checkpoint payload truncated");
  }
  std::vector<T> values(buf.size());
  for (std::size_t i = 0; i < buf.size(); ++i) values[i] = std::bit_cast<T>(to_little(buf[i]));
  return Tensor<T>(shape, std::move(values));
}

}  // namespace

void Checkpoint::put_record(Record r) {
  for (auto& existing : records_) {
    if (existing.name == r.name) {
      existing = std::move(r);
      return;
    }
  }
  records_.push_back(std::move(r));
}

void Checkpoint::put(std::string name, Tensor<float> t) {
  t.drop_grad();
  put_record(Record{std::move(name), std::move(t)});
}

void Checkpoint::put(std::string name, Tensor<double> t) {
  t.drop_grad();
  put_record(Record{std::move(name), std::move(t)});
}

bool Checkpoint::contains(const std::string& name) const {
  return std::any_of(records_.begin(), records_.end(), [&](const Record& r) { return r.name == name; });
}

const Checkpoint::Record& Checkpoint::at(const std::string& name) const {
  for (const auto& r : records_)
    if (r.name == name) return r;
  throw CheckpointError("checkpoint has no tensor named '" + name + "'");
}

template <typename T>
Tensor<T> Checkpoint::get(const std::string& name) const {
  const Record& r = at(name);
  if (const auto* f = std::get_if<Tensor<float>>(&r.tensor)) return tensor_cast<T>(*f);
  return tensor_cast<T>(std::get<Tensor<double>>(r.tensor));
}

template Tensor<float> Checkpoint::get<float>(const std::string&) const;
template Tensor<double> Checkpoint::get<double>(const std::string&) const;

void Checkpoint::write(std::ostream& out) const {
  out.write(kMagic, 4);
  write_u32(out, kCheckpointVersion);
  write_u32(out, static_cast<std::uint32_t>(records_.size()));
  for (const auto& r : records_) {
    write_u32(out, static_cast<std::uint32_t>(r.name.size()));
    out.write(r.name.data(), static_cast<std::streamsize>(r.name.size()));
    const auto dtype = static_cast<std::uint8_t>(r.dtype());
    out.write(reinterpret_cast<const char*>(&dtype), 1);
    std::visit(
        [&](const auto& t) {
          const Shape s = t.shape();
          for (int d : {s.n, s.c, s.h, s.w}) write_u32(out, static_cast<std::uint32_t>(d));
          write_payload(out, t);
        },
        r.tensor);
  }
  if (!out) throw CheckpointError("failed writing checkpoint");
}

Checkpoint Checkpoint::read(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) throw CheckpointError("not an RSN1 checkpoint");
  const std::uint32_t version = read_u32(in);
  if (version != kCheckpointVersion) {
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  }
  const std::uint32_t count = read_u32(in);
  Checkpoint ck;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t len = read_u32(in);
    std::string name(len, '\0');
    if (!in.read(name.data(), len)) throw CheckpointError("checkpoint truncated in record name");
    std::uint8_t dtype = 0;
    if (!in.read(reinterpret_cast<char*>(&dtype), 1)) throw CheckpointError("checkpoint truncated");
    Shape s;
    s.n = static_cast<int>(read_u32(in));
    s.c = static_cast<int>(read_u32(in));
    s.h = static_cast<int>(read_u32(in));
    s.w = static_cast<int>(read_u32(in));
    if (dtype == static_cast<std::uint8_t>(DType::float32)) {
      ck.records_.push_back(Record{std::move(name), read_payload<float>(in, s)});
    } else if (dtype == static_cast<std::uint8_t>(DType::float64)) {
      ck.records_.push_back(Record{std::move(name), read_payload<double>(in, s)});
    } else {
      throw CheckpointError("record '" + name + "' has unknown dtype " + std::to_string(dtype));
    }
  }
  return ck;
}

void Checkpoint::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot open '" + path.string() + "' for writing");
  write(out);
}

Checkpoint Checkpoint::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open '" + path.string() + "'");
  return read(in);
}

}  // namespace rsn
