#include "sepipe/nn/param_store.hpp"

#include <fstream>
#include <sstream>

namespace sepipe::nn {

void TensorStore::put(const std::string& name, const Tensor& t) {
  require(!name.empty() && name.find_first_of(" \n") == std::string::npos,
          "store: invalid tensor name '" + name + "'");
  entries_[name] = t;
}

const Tensor& TensorStore::get(const std::string& name) const {
  auto it = entries_.find(name);
  require(it != entries_.end(), "store: missing tensor '" + name + "'");
  return it->second;
}

void TensorStore::save_stream(std::ostream& f) const {
  f << "SEPIPE_STORE 1\n" << entries_.size() << "\n";
  for (const auto& [name, t] : entries_) {
    const Shape& s = t.shape();
    f << name << " f64 " << s.b << " " << s.c << " " << s.t << " " << s.f << "\n";
  }
  f << "DATA\n";
  for (const auto& [name, t] : entries_)
    f.write(reinterpret_cast<const char*>(t.data()),
            static_cast<std::streamsize>(t.size() * sizeof(double)));
}

void TensorStore::save(const std::string& path) const {
  std::ofstream f(path, std::ios::binary);
  require_runtime(static_cast<bool>(f), "cannot open for writing: " + path);
  save_stream(f);
  require_runtime(static_cast<bool>(f), "short write: " + path);
}

TensorStore TensorStore::load_stream(std::istream& f, const std::string& origin) {
  std::string magic;
  int version = 0;
  f >> magic >> version;
  require(magic == "SEPIPE_STORE", "not a tensor store: " + origin);
  require(version == 1, "unsupported store version " + std::to_string(version) + " in " + origin);
  std::size_t count = 0;
  f >> count;
  struct Hdr {
    std::string name;
    Shape shape;
  };
  std::vector<Hdr> hdrs(count);
  for (auto& h : hdrs) {
    std::string dtype;
    f >> h.name >> dtype >> h.shape.b >> h.shape.c >> h.shape.t >> h.shape.f;
    require(dtype == "f64", "unsupported dtype '" + dtype + "' in " + origin);
  }
  std::string data_tag;
  f >> data_tag;
  require(data_tag == "DATA", "corrupt store (missing DATA): " + origin);
  f.get();  // newline after DATA

  TensorStore store;
  for (const auto& h : hdrs) {
    Tensor t(h.shape);
    f.read(reinterpret_cast<char*>(t.data()),
           static_cast<std::streamsize>(t.size() * sizeof(double)));
    require(static_cast<bool>(f), "truncated store: " + origin);
    store.entries_[h.name] = std::move(t);
  }
  return store;
}

TensorStore TensorStore::load(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  require(static_cast<bool>(f), "cannot open store: " + path);
  return load_stream(f, path);
}

}  // namespace sepipe::nn
