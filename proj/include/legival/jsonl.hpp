#pragma once

#include <functional>
#include <string>

#include <json.hpp>

namespace legival::jsonl {

using json = nlohmann::ordered_json;

// Calls fn(record, line_number) for every JSON line in the file.
// Blank lines are skipped; records carrying a "_meta" key are skipped
// (they hold tool/config provenance, not data). Parse failures raise
// DataError with the 1-based line number.
void for_each_record(const std::string& path,
                     const std::function<void(const json&, int)>& fn);

// One meta record per emitted file: tool version plus config hash, so any
// output can be traced back to the exact run settings.
json meta_record(const std::string& config_sha256);

// "# legival <version> config=<hash>" — comment header for CSV outputs.
std::string meta_comment(const std::string& config_sha256);

}  // namespace legival::jsonl
