#pragma once

#include <map>
#include <string>
#include <vector>

namespace evalm::harness {

// Flat key-value configuration with one [section] per subcommand. Values are
// strings; command-line flags override whatever the file says.
struct ConfigFile {
    std::map<std::string, std::map<std::string, std::string>> sections;

    static ConfigFile parse(const std::string& path);
    static ConfigFile parse_text(const std::string& text, const std::string& origin = "<text>");

    bool has(const std::string& section, const std::string& key) const;
    std::string get(const std::string& section, const std::string& key,
                    const std::string& fallback = {}) const;
};

// EVALM_OUT_DIR, when set, overrides every experiment's output directory.
std::string output_dir_override();

}  // namespace evalm::harness
