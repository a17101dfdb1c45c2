#include "storex/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "storex/errors.hpp"

namespace storex {

using nlohmann::json;

double Checkpoint::meta_value(const std::string& key) const {
  for (const auto& [k, v] : meta) {
    if (k == key) return v;
  }
  throw ParseError("checkpoint: missing meta key '" + key + "'");
}

const nd::Matrix& Checkpoint::tensor(const std::string& name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return t.value;
  }
  throw ParseError("checkpoint: missing tensor '" + name + "'");
}

std::string checkpoint_to_json(const Checkpoint& cp) {
  json out;
  out["kind"] = cp.kind;
  json meta = json::object();
  for (const auto& [k, v] : cp.meta) meta[k] = v;
  out["meta"] = std::move(meta);
  json tensors = json::array();
  for (const auto& t : cp.tensors) {
    json jt;
    jt["name"] = t.name;
    jt["rows"] = t.value.rows();
    jt["cols"] = t.value.cols();
    jt["data"] = std::vector<double>(t.value.data().begin(), t.value.data().end());
    tensors.push_back(std::move(jt));
  }
  out["tensors"] = std::move(tensors);
  return out.dump();
}

Checkpoint checkpoint_from_json(const std::string& text) {
  try {
    const json doc = json::parse(text);
    Checkpoint cp;
    cp.kind = doc.at("kind").get<std::string>();
    for (const auto& [k, v] : doc.at("meta").items()) cp.meta.emplace_back(k, v.get<double>());
    for (const auto& jt : doc.at("tensors")) {
      const auto rows = jt.at("rows").get<std::size_t>();
      const auto cols = jt.at("cols").get<std::size_t>();
      auto data = jt.at("data").get<std::vector<double>>();
      if (data.size() != rows * cols) {
        throw ParseError("checkpoint: tensor '" + jt.at("name").get<std::string>() +
                         "' data length mismatch");
      }
      cp.tensors.push_back({jt.at("name").get<std::string>(), nd::Matrix(rows, cols, std::move(data))});
    }
    return cp;
  } catch (const json::exception& e) {
    throw ParseError(std::string("checkpoint: ") + e.what());
  }
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace storex
