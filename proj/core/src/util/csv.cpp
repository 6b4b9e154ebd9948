#include "evalm/util/csv.hpp"

#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace evalm::util {

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

CsvWriter::CsvWriter(const std::string& path, std::vector<std::string> header)
    : out_(path), header_(std::move(header)) {
    if (!out_) throw std::runtime_error("cannot write csv file: " + path);
    for (size_t i = 0; i < header_.size(); ++i) {
        if (i > 0) out_ << ",";
        out_ << header_[i];
    }
    out_ << "\n";
}

CsvWriter::~CsvWriter() = default;

void CsvWriter::row(const std::vector<std::string>& cells) {
    if (cells.size() != header_.size())
        throw std::invalid_argument("csv row width does not match header");
    for (size_t i = 0; i < cells.size(); ++i) {
        if (i > 0) out_ << ",";
        out_ << cells[i];
    }
    out_ << "\n";
}

void CsvWriter::flush() { out_.flush(); }

std::vector<std::vector<std::string>> read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read csv file: " + path);
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (!line.empty() && line.back() == ',') cells.push_back("");
        rows.push_back(std::move(cells));
    }
    return rows;
}

}  // namespace evalm::util
