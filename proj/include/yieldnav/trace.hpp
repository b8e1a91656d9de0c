#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace yieldnav {

// A full run as line-delimited JSON records: one header line, then one
// record per tick (plus occasional typed extras such as potential-field
// snapshots). The serialized form is byte-stable for identical runs.
struct RunTrace {
  nlohmann::json header;
  std::vector<nlohmann::json> records;

  std::string to_jsonl() const;
  static RunTrace from_jsonl(const std::string& text);
  static RunTrace load(const std::string& path);
  void save(const std::string& path) const;
};

}  // namespace yieldnav
