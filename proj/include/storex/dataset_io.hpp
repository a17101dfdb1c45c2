#pragma once

#include <filesystem>
#include <string>

#include "storex/graph.hpp"

namespace storex {

// JSON layout:
//   {"seed": int, "provenance": str,
//    "graphs": [{"label": int, "features": [[..]], "edges": [[i, j, w]],
//                "gt_edges": [[i, j]] (optional), "split": "train|val|test"}]}
// Edges appear once per undirected pair with i < j.

std::string dataset_to_json(const Dataset& ds);
Dataset dataset_from_json(const std::string& text);

void save_dataset(const Dataset& ds, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

}  // namespace storex
