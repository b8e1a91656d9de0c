#include "yieldnav/trace.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace yieldnav {

std::string RunTrace::to_jsonl() const {
  std::string out = header.dump();
  out.push_back('\n');
  for (const auto& rec : records) {
    out += rec.dump();
    out.push_back('\n');
  }
  return out;
}

RunTrace RunTrace::from_jsonl(const std::string& text) {
  RunTrace trace;
  std::istringstream in(text);
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json rec = nlohmann::json::parse(line);
    if (first) {
      if (rec.value("type", "") != "header")
        throw std::runtime_error("trace does not start with a header record");
      trace.header = std::move(rec);
      first = false;
    } else {
      trace.records.push_back(std::move(rec));
    }
  }
  if (first) throw std::runtime_error("trace is empty");
  return trace;
}

RunTrace RunTrace::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open trace file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return from_jsonl(buf.str());
}

void RunTrace::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write trace file '" + path + "'");
  out << to_jsonl();
}

}  // namespace yieldnav
