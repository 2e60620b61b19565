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

// Solve reports as JSON, version 1:
//
//   {"format": "treebnb-report", "version": 1,
//    "instance": "...", "rule": "...", "node_selection": "best-first",
//    "objective_limit": v | null, "status": "optimal", "obj": v, "glb": v,
//    "node_count": n, "incumbent": [x...] | null,
//    "episode": {"complete": true, "temporal_order": [...],
//                "nodes": [{"state_ref", "parent", "leaf", "left", "right",
//                           "reward", "action", "branch_var",
//                           "branch_value", "features"}, ...]}}
//
// Non-finite numbers are written as "inf" / "-inf". Wall time is left out so
// that a report depends only on the instance, the config and the seed.

#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "treebnb/bnb.hpp"
#include "treebnb/common.hpp"
#include "treebnb/instance_io.hpp"
#include "treebnb/tree_mdp.hpp"

namespace treebnb {

inline NodeSelection node_selection_from_string(const std::string& s) {
  if (s == "best-first") return NodeSelection::BestFirst;
  if (s == "dfs") return NodeSelection::DfsLeftFirst;
  if (s == "dfs-right") return NodeSelection::DfsRightFirst;
  throw InvalidConfig("unknown node selection '" + s + "'");
}

inline nlohmann::json episode_to_json(const EpisodeTree& tree) {
  using nlohmann::json;
  json nodes = json::array();
  for (const auto& v : tree.nodes) {
    json n;
    n["state_ref"] = v.state_ref;
    n["parent"] = v.parent;
    n["leaf"] = v.leaf;
    n["left"] = v.left_child;
    n["right"] = v.right_child;
    n["reward"] = v.reward;
    n["action"] = v.action;
    if (v.branch) {
      n["branch_var"] = v.branch->var;
      n["branch_value"] = v.branch->split_value;
    }
    if (!v.features.empty()) {
      json f = json::array();
      for (const auto& fv : v.features) f.push_back(json(fv));
      n["features"] = std::move(f);
    }
    nodes.push_back(std::move(n));
  }
  json doc;
  doc["complete"] = tree.complete;
  doc["temporal_order"] = tree.temporal_order;
  doc["nodes"] = std::move(nodes);
  return doc;
}

/// Parses and validates an episode. Throws ParseError on a bad document and
/// MalformedTree on an inconsistent tree.
inline EpisodeTree episode_from_json(const nlohmann::json& doc) {
  EpisodeTree tree;
  try {
    tree.complete = doc.at("complete").get<bool>();
    tree.temporal_order = doc.at("temporal_order").get<std::vector<int>>();
    for (const auto& n : doc.at("nodes")) {
      EpisodeNode v;
      v.state_ref = n.at("state_ref").get<int>();
      v.parent = n.at("parent").get<int>();
      v.leaf = n.at("leaf").get<bool>();
      v.left_child = n.at("left").get<int>();
      v.right_child = n.at("right").get<int>();
      v.reward = n.at("reward").get<double>();
      v.action = n.at("action").get<int>();
      if (n.contains("branch_var")) {
        v.branch = BranchAction{n.at("branch_var").get<int>(), n.at("branch_value").get<double>()};
      }
      if (n.contains("features")) v.features = n.at("features").get<std::vector<FeatureVector>>();
      tree.nodes.push_back(std::move(v));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("episode: ") + e.what());
  }
  tree.validate();
  return tree;
}

inline nlohmann::json report_to_json(const SolveReport& rep, const EpisodeTree& episode) {
  nlohmann::json doc;
  doc["format"] = "treebnb-report";
  doc["version"] = 1;
  doc["instance"] = rep.instance_name;
  doc["rule"] = rep.rule_name;
  doc["node_selection"] = to_string(rep.node_selection);
  if (rep.objective_limit) {
    doc["objective_limit"] = *rep.objective_limit;
  } else {
    doc["objective_limit"] = nullptr;
  }
  doc["status"] = to_string(rep.status);
  doc["obj"] = detail::bound_to_json(rep.obj);
  doc["glb"] = detail::bound_to_json(rep.glb);
  doc["node_count"] = rep.node_count;
  if (rep.incumbent) {
    doc["incumbent"] = rep.incumbent->x;
  } else {
    doc["incumbent"] = nullptr;
  }
  doc["episode"] = episode_to_json(episode);
  return doc;
}

inline void write_report(const SolveReport& rep, const EpisodeTree& episode, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << report_to_json(rep, episode).dump(1) << "\n";
}

/// The episode stored in a report file.
inline EpisodeTree read_report_episode(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
  if (doc.value("format", "") != "treebnb-report") throw ParseError(path + ": not a solve report");
  if (doc.value("version", 0) != 1) throw VersionMismatch(path + ": unsupported report version");
  if (!doc.contains("episode")) throw ParseError(path + ": missing field 'episode'");
  return episode_from_json(doc["episode"]);
}

}  // namespace treebnb
