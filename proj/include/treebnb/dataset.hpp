// Copyright 2026 The treebnb Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Instance directories: *.json instance files plus an optional manifest.json
// holding precomputed optimal values.
//
//   {"format": "treebnb-manifest", "version": 1,
//    "instances": [{"file": "setcover-0.json", "optimum": 12.0,
//                   "family": "setcover", "seed": 17}, ...]}
//
// "family" and "seed" record how a generated instance was made and are
// optional.

#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "treebnb/common.hpp"
#include "treebnb/instance_io.hpp"
#include "treebnb/milp.hpp"

namespace treebnb {

struct DatasetEntry {
  std::string file;  // name inside the directory
  MilpInstance instance;
  std::optional<double> optimum;
  std::string family;  // empty when unknown
  std::optional<std::uint64_t> seed;
};

inline constexpr const char* kManifestName = "manifest.json";

inline void write_manifest(const std::string& dir, const std::vector<DatasetEntry>& entries) {
  nlohmann::json doc;
  doc["format"] = "treebnb-manifest";
  doc["version"] = 1;
  doc["instances"] = nlohmann::json::array();
  for (const auto& e : entries) {
    nlohmann::json item;
    item["file"] = e.file;
    if (e.optimum) {
      item["optimum"] = *e.optimum;
    } else {
      item["optimum"] = nullptr;
    }
    if (!e.family.empty()) item["family"] = e.family;
    if (e.seed) item["seed"] = *e.seed;
    doc["instances"].push_back(item);
  }
  const auto path = std::filesystem::path(dir) / kManifestName;
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << doc.dump(1) << "\n";
}

/// Loads every instance file of `dir` in file-name order, attaching optima
/// from the manifest when present.
inline std::vector<DatasetEntry> load_dataset(const std::string& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw Error("not a directory: " + dir);
  std::vector<std::string> files;
  for (const auto& de : fs::directory_iterator(dir)) {
    const auto name = de.path().filename().string();
    if (de.is_regular_file() && de.path().extension() == ".json" && name != kManifestName) {
      files.push_back(name);
    }
  }
  std::sort(files.begin(), files.end());
  std::vector<DatasetEntry> out;
  for (const auto& f : files) {
    DatasetEntry e;
    e.file = f;
    e.instance = read_instance((fs::path(dir) / f).string());
    out.push_back(std::move(e));
  }
  const auto manifest = fs::path(dir) / kManifestName;
  if (fs::exists(manifest)) {
    std::ifstream in(manifest);
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(manifest.string() + ": " + e.what());
    }
    if (doc.value("format", "") != "treebnb-manifest") {
      throw ParseError(manifest.string() + ": not a manifest");
    }
    if (doc.value("version", 0) != 1) throw VersionMismatch(manifest.string() + ": unsupported version");
    try {
      for (const auto& item : doc.at("instances")) {
        const auto file = item.at("file").get<std::string>();
        const auto it = std::find_if(out.begin(), out.end(),
                                     [&](const DatasetEntry& e) { return e.file == file; });
        if (it == out.end()) throw ParseError(manifest.string() + ": unknown file " + file);
        if (!item.at("optimum").is_null()) it->optimum = item.at("optimum").get<double>();
        it->family = item.value("family", "");
        if (item.contains("seed")) it->seed = item.at("seed").get<std::uint64_t>();
      }
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(manifest.string() + ": " + e.what());
    }
  }
  if (out.empty()) throw Error("no instances in " + dir);
  return out;
}

inline std::vector<MilpInstance> instances_of(const std::vector<DatasetEntry>& entries) {
  std::vector<MilpInstance> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back(e.instance);
  return out;
}

}  // namespace treebnb
