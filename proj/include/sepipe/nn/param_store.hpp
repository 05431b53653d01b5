#pragma once

#include <map>
#include <string>

#include "sepipe/nn/tensor.hpp"

namespace sepipe::nn {

// Flat name -> tensor container with a plain-text index followed by raw
// little-endian f64 data. Round-trips are bit-exact. Layout:
//
//   SEPIPE_STORE 1
//   <entry count>
//   <name> f64 <b> <c> <t> <f>     (one line per entry, in data order)
//   DATA
//   <raw values>
class TensorStore {
 public:
  void put(const std::string& name, const Tensor& t);
  const Tensor& get(const std::string& name) const;
  bool contains(const std::string& name) const { return entries_.count(name) > 0; }
  std::size_t size() const { return entries_.size(); }
  const std::map<std::string, Tensor>& entries() const { return entries_; }

  void save(const std::string& path) const;
  static TensorStore load(const std::string& path);
  void save_stream(std::ostream& os) const;
  static TensorStore load_stream(std::istream& is, const std::string& origin);

 private:
  std::map<std::string, Tensor> entries_;
};

}  // namespace sepipe::nn
