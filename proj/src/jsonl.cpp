#include "legival/jsonl.hpp"

#include <fstream>

#include "legival/errors.hpp"
#include "legival/util.hpp"
#include "legival/version.hpp"

namespace legival::jsonl {

void for_each_record(const std::string& path,
                     const std::function<void(const json&, int)>& fn) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file: " + path);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (util::trim(line).empty()) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw DataError(path + ":" + std::to_string(lineno) +
                      ": malformed JSON: " + e.what());
    }
    if (rec.is_object() && rec.contains("_meta")) continue;
    fn(rec, lineno);
  }
}

json meta_record(const std::string& config_sha256) {
  json m;
  m["_meta"] = {{"tool", "legival"},
                {"version", kVersion},
                {"config_sha256", config_sha256}};
  return m;
}

std::string meta_comment(const std::string& config_sha256) {
  return std::string("# legival ") + kVersion + " config=" + config_sha256;
}

}  // namespace legival::jsonl
