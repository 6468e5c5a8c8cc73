#ifndef BMCARPET_IO_HPP
#define BMCARPET_IO_HPP

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "bmcarpet/carpet.hpp"
#include "bmcarpet/error.hpp"
#include "bmcarpet/symbolic.hpp"

namespace bmc::io {

// Spec files are JSON objects:
//   {"m": 2, "n": 3, "digits": [[0,0],[0,2],[1,1]], "probs": [0.33.., 0.33.., 0.33..]}
// Digits are [row, col] pairs.

class format_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline RawSpec parse_spec_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw format_error(std::string("spec: malformed JSON (") + e.what() + ")");
  }
  if (!doc.is_object()) throw format_error("spec: top level must be an object");
  for (const char* key : {"m", "n", "digits", "probs"})
    if (!doc.contains(key)) throw format_error(std::string("spec: missing field '") + key + "'");
  for (const auto& [key, value] : doc.items())
    if (key != "m" && key != "n" && key != "digits" && key != "probs")
      throw format_error("spec: unknown field '" + key + "'");

  RawSpec raw;
  if (!doc["m"].is_number_integer()) throw format_error("spec: field 'm' must be an integer");
  if (!doc["n"].is_number_integer()) throw format_error("spec: field 'n' must be an integer");
  raw.m = doc["m"].get<int>();
  raw.n = doc["n"].get<int>();
  if (!doc["digits"].is_array()) throw format_error("spec: field 'digits' must be an array");
  for (const auto& pair : doc["digits"]) {
    if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number_integer() || !pair[1].is_number_integer())
      throw format_error("spec: field 'digits' entries must be [row, col] integer pairs");
    raw.digits.push_back({pair[0].get<int>(), pair[1].get<int>()});
  }
  if (!doc["probs"].is_array()) throw format_error("spec: field 'probs' must be an array");
  for (const auto& p : doc["probs"]) {
    if (!p.is_number()) throw format_error("spec: field 'probs' entries must be numbers");
    raw.probs.push_back(p.get<double>());
  }
  return raw;
}

inline std::string serialize_spec(const CarpetSpec& spec) {
  nlohmann::json doc;
  doc["m"] = spec.m();
  doc["n"] = spec.n();
  doc["digits"] = nlohmann::json::array();
  for (const Digit& d : spec.digits()) doc["digits"].push_back({d.row, d.col});
  doc["probs"] = nlohmann::json::array();
  for (double p : spec.probs()) doc["probs"].push_back(p);
  return doc.dump() + "\n";
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw format_error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline CarpetSpec load_spec(const std::string& path) { return build_spec(parse_spec_json(read_file(path))); }

/// "row,col;row,col;..." -> digits.
inline std::vector<Digit> parse_prefix(std::string_view text) {
  std::vector<Digit> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t end = std::min(text.find(';', start), text.size());
    const std::string item(text.substr(start, end - start));
    int row = 0, col = 0;
    char tail = 0;
    if (std::sscanf(item.c_str(), " %d , %d %c", &row, &col, &tail) != 2)
      throw format_error("prefix: bad digit '" + item + "' (expected row,col)");
    out.push_back({row, col});
    start = end + 1;
  }
  return out;
}

inline std::string format_prefix(const SymbolicPrefix& prefix) {
  std::string out;
  for (int u = 1; u <= prefix.size(); ++u) {
    if (u > 1) out += ';';
    out += std::to_string(prefix.row(u)) + "," + std::to_string(prefix.col(u));
  }
  return out;
}

/// 15 significant digits, C locale.
inline std::string real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.15g", v);
  return buf;
}

}  // namespace bmc::io

#endif  // BMCARPET_IO_HPP
