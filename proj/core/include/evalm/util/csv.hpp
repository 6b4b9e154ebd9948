#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

namespace evalm::util {

std::string fmt_double(double v);

// CSV emitter with a declared header; every row must match the header width.
class CsvWriter {
public:
    CsvWriter(const std::string& path, std::vector<std::string> header);
    ~CsvWriter();

    void row(const std::vector<std::string>& cells);
    void flush();

    const std::vector<std::string>& header() const { return header_; }

private:
    std::ofstream out_;
    std::vector<std::string> header_;
};

// Minimal reader used by tests and the sweep summaries.
std::vector<std::vector<std::string>> read_csv(const std::string& path);

}  // namespace evalm::util
