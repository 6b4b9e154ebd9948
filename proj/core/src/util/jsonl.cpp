#include "evalm/util/jsonl.hpp"

#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace evalm::util {

std::vector<JsonRecord> read_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open jsonl file: " + path);
    std::vector<JsonRecord> out;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const std::exception& e) {
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
        JsonRecord rec;
        for (auto it = j.begin(); it != j.end(); ++it) {
            if (it.value().is_string()) {
                rec.fields[it.key()] = it.value().get<std::string>();
            } else {
                rec.fields[it.key()] = it.value().dump();
            }
        }
        out.push_back(std::move(rec));
    }
    return out;
}

void write_jsonl(const std::string& path, const std::vector<JsonRecord>& records) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write jsonl file: " + path);
    for (const auto& rec : records) {
        nlohmann::json j;
        for (const auto& [k, v] : rec.fields) j[k] = v;
        out << j.dump() << "\n";
    }
}

}  // namespace evalm::util
