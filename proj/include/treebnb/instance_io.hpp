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

// Instance file format, version 1. A JSON object, one field per line:
//
//   {"format": 1,
//    "name": "...",
//    "n_vars": n, "n_rows": m,
//    "obj": [c_0, ...],
//    "row_triplets": [[i, j, v], ...],
//    "rhs": [b_0, ...],
//    "lower": [l_0, ...], "upper": [u_0, ...],   // numbers or "inf" / "-inf"
//    "int_set": [j_0, j_1, ...]}                  // strictly increasing
//
// Every row reads sum_j A_ij x_j <= b_i and the objective is minimized.

#pragma once

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "treebnb/common.hpp"
#include "treebnb/milp.hpp"

namespace treebnb {

inline constexpr int kInstanceFormatVersion = 1;

namespace detail {

inline nlohmann::json bound_to_json(double v) {
  if (v == kInf) return "inf";
  if (v == -kInf) return "-inf";
  return v;
}

inline double bound_from_json(const nlohmann::json& v, const std::string& where) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "inf" || s == "+inf") return kInf;
    if (s == "-inf") return -kInf;
  }
  throw ParseError(where + ": expected a number, \"inf\" or \"-inf\"");
}

inline const nlohmann::json& require(const nlohmann::json& doc, const char* key) {
  auto it = doc.find(key);
  if (it == doc.end()) throw ParseError(std::string("missing field '") + key + "'");
  return *it;
}

inline std::vector<double> number_array(const nlohmann::json& doc, const char* key,
                                        std::size_t expected, bool allow_inf) {
  const auto& arr = require(doc, key);
  if (!arr.is_array()) throw ParseError(std::string("field '") + key + "': expected an array");
  if (arr.size() != expected) {
    throw ParseError(std::string("field '") + key + "': expected " + std::to_string(expected) +
                     " entries, found " + std::to_string(arr.size()));
  }
  std::vector<double> out;
  out.reserve(expected);
  for (std::size_t k = 0; k < arr.size(); ++k) {
    const std::string where = std::string("field '") + key + "'[" + std::to_string(k) + "]";
    if (allow_inf) {
      out.push_back(bound_from_json(arr[k], where));
    } else {
      if (!arr[k].is_number()) throw ParseError(where + ": expected a number");
      out.push_back(arr[k].get<double>());
    }
  }
  return out;
}

}  // namespace detail

inline std::string instance_to_string(const MilpInstance& inst) {
  using nlohmann::json;
  json lower = json::array(), upper = json::array(), trip = json::array();
  for (double v : inst.lower) lower.push_back(detail::bound_to_json(v));
  for (double v : inst.upper) upper.push_back(detail::bound_to_json(v));
  for (const auto& t : inst.rows.triplets()) trip.push_back(json::array({t.row, t.col, t.value}));

  std::ostringstream os;
  os << "{\"format\": " << kInstanceFormatVersion << ",\n";
  os << " \"name\": " << json(inst.name).dump() << ",\n";
  os << " \"n_vars\": " << inst.n_vars() << ",\n";
  os << " \"n_rows\": " << inst.n_rows() << ",\n";
  os << " \"obj\": " << json(inst.obj).dump() << ",\n";
  os << " \"row_triplets\": " << trip.dump() << ",\n";
  os << " \"rhs\": " << json(inst.rhs).dump() << ",\n";
  os << " \"lower\": " << lower.dump() << ",\n";
  os << " \"upper\": " << upper.dump() << ",\n";
  os << " \"int_set\": " << json(inst.int_set).dump() << "}\n";
  return os.str();
}

inline MilpInstance instance_from_string(const std::string& text) {
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed instance file: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError("instance file must hold a JSON object");
  const auto& fmt = detail::require(doc, "format");
  if (!fmt.is_number_integer()) throw ParseError("field 'format': expected an integer");
  if (fmt.get<int>() != kInstanceFormatVersion) {
    throw VersionMismatch("unsupported instance format " + fmt.dump());
  }

  auto count = [&](const char* key) {
    const auto& v = detail::require(doc, key);
    if (!v.is_number_integer() || v.get<long long>() < 0) {
      throw ParseError(std::string("field '") + key + "': expected a non-negative integer");
    }
    return v.get<int>();
  };

  MilpInstance inst;
  const auto& name = detail::require(doc, "name");
  if (!name.is_string()) throw ParseError("field 'name': expected a string");
  inst.name = name.get<std::string>();
  const int n = count("n_vars");
  const int m = count("n_rows");
  inst.obj = detail::number_array(doc, "obj", n, false);
  inst.rhs = detail::number_array(doc, "rhs", m, false);
  inst.lower = detail::number_array(doc, "lower", n, true);
  inst.upper = detail::number_array(doc, "upper", n, true);

  const auto& trip = detail::require(doc, "row_triplets");
  if (!trip.is_array()) throw ParseError("field 'row_triplets': expected an array");
  std::vector<Triplet> entries;
  entries.reserve(trip.size());
  for (std::size_t k = 0; k < trip.size(); ++k) {
    const auto& t = trip[k];
    const std::string where = "field 'row_triplets'[" + std::to_string(k) + "]";
    if (!t.is_array() || t.size() != 3 || !t[0].is_number_integer() ||
        !t[1].is_number_integer() || !t[2].is_number()) {
      throw ParseError(where + ": expected [row, col, value]");
    }
    const int i = t[0].get<int>();
    const int j = t[1].get<int>();
    if (i < 0 || i >= m) throw ParseError(where + ": row " + std::to_string(i) + " out of range");
    if (j < 0 || j >= n) throw ParseError(where + ": col " + std::to_string(j) + " out of range");
    entries.push_back({i, j, t[2].get<double>()});
  }
  inst.rows = SparseMatrix::from_triplets(m, n, std::move(entries));

  const auto& ints = detail::require(doc, "int_set");
  if (!ints.is_array()) throw ParseError("field 'int_set': expected an array");
  for (std::size_t k = 0; k < ints.size(); ++k) {
    const std::string where = "field 'int_set'[" + std::to_string(k) + "]";
    if (!ints[k].is_number_integer()) throw ParseError(where + ": expected an integer");
    const int j = ints[k].get<int>();
    if (j < 0 || j >= n) {
      throw ParseError(where + ": index " + std::to_string(j) + " not below n_vars " +
                       std::to_string(n));
    }
    if (!inst.int_set.empty() && inst.int_set.back() >= j) {
      throw ParseError(where + ": indices must be strictly increasing");
    }
    inst.int_set.push_back(j);
  }
  try {
    inst.validate();
  } catch (const InvalidConfig& e) {
    throw ParseError(e.what());
  }
  return inst;
}

inline void write_instance(const MilpInstance& inst, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path + " for writing");
  out << instance_to_string(inst);
  if (!out) throw Error("failed writing " + path);
}

inline MilpInstance read_instance(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return instance_from_string(ss.str());
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

}  // namespace treebnb
