#pragma once

// Binary tensor archive:
//   "RSN1" | version u32 | count u32 | count x record
//   record = name_len u32 | name bytes (UTF-8) | dtype u8 | n c h w (u32 each) | payload
// All integers and IEEE-754 payloads are little-endian.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include "rsn/tensor/tensor.hpp"

namespace rsn {

inline constexpr std::uint32_t kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Checkpoint {
 public:
  struct Record {
    std::string name;
    std::variant<Tensor<float>, Tensor<double>> tensor;
    DType dtype() const { return tensor.index() == 0 ? DType::float32 : DType::float64; }
  };

  void put(std::string name, Tensor<float> t);
  void put(std::string name, Tensor<double> t);
  bool contains(const std::string& name) const;
  const Record& at(const std::string& name) const;
  /// Fetches a tensor converting its dtype when needed.
  template <typename T>
  Tensor<T> get(const std::string& name) const;
  const std::vector<Record>& records() const noexcept { return records_; }

  void write(std::ostream& out) const;
  static Checkpoint read(std::istream& in);
  void save(const std::filesystem::path& path) const;
  static Checkpoint load(const std::filesystem::path& path);

 private:
  void put_record(Record r);
  std::vector<Record> records_;
};

}  // namespace rsn
