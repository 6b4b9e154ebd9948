#pragma once

#include <map>
#include <string>
#include <vector>

namespace evalm::util {

// One newline-delimited JSON record, flattened to string fields. All the
// dataset schemas used here are flat objects of strings (numbers and bools
// are kept in their JSON text form).
struct JsonRecord {
    std::map<std::string, std::string> fields;

    bool has(const std::string& key) const { return fields.count(key) != 0; }
    const std::string& at(const std::string& key) const { return fields.at(key); }
};

std::vector<JsonRecord> read_jsonl(const std::string& path);
void write_jsonl(const std::string& path, const std::vector<JsonRecord>& records);

}  // namespace evalm::util
