#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "storex/ndiff.hpp"

namespace storex {

// Parameter checkpoints: {"kind": str, "meta": {...}, "tensors": [{"name",
// "rows", "cols", "data": [...]}]}. Doubles are written in shortest
// round-trip form, so a reload is bit-exact.

struct NamedMatrix {
  std::string name;
  nd::Matrix value;
};

struct Checkpoint {
  std::string kind;
  std::vector<std::pair<std::string, double>> meta;
  std::vector<NamedMatrix> tensors;

  double meta_value(const std::string& key) const;
  const nd::Matrix& tensor(const std::string& name) const;
};

std::string checkpoint_to_json(const Checkpoint& cp);
Checkpoint checkpoint_from_json(const std::string& text);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace storex
