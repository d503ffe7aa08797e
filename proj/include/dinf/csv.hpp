#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "dinf/errors.hpp"

namespace dinf {

// Shortest round-trip decimal form of a double; locale-independent.
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// Plain comma-separated output: a header row, then numeric rows. Values never
// contain commas or quotes, so no quoting is needed.
class csv_writer {
  public:
    csv_writer(const std::string& path, std::span<const std::string> header) : out_(path) {
        if (!out_) throw io_error("cannot open " + path + " for writing");
        path_ = path;
        columns_ = header.size();
        for (std::size_t i = 0; i < header.size(); ++i)
            out_ << header[i] << (i + 1 == header.size() ? '\n' : ',');
    }

    void row(std::span<const double> values) {
        if (values.size() != columns_)
            throw internal_error("csv row width does not match the header");
        for (std::size_t i = 0; i < values.size(); ++i)
            out_ << format_double(values[i]) << (i + 1 == values.size() ? '\n' : ',');
    }

    void close() {
        out_.close();
        if (out_.fail()) throw io_error("write failure on " + path_);
    }

  private:
    std::ofstream out_;
    std::string path_;
    std::size_t columns_ = 0;
};

struct csv_data {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

inline csv_data read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open " + path + " for reading");
    csv_data data;
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::size_t start = 0;
        while (true) {
            std::size_t comma = line.find(',', start);
            cells.push_back(line.substr(start, comma - start));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        if (lineno == 1) {
            data.header = cells;
            continue;
        }
        std::vector<double> row;
        for (const auto& cell : cells) {
            double v = 0.0;
            auto [end, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
            if (ec != std::errc())
                throw data_error(path + ": line " + std::to_string(lineno) +
                                 ": not a number: '" + cell + "'");
            if (end != cell.data() + cell.size())
                throw data_error(path + ": line " + std::to_string(lineno) +
                                 ": trailing characters in '" + cell + "'");
            row.push_back(v);
        }
        if (row.size() != data.header.size())
            throw data_error(path + ": line " + std::to_string(lineno) + ": expected " +
                             std::to_string(data.header.size()) + " columns, got " +
                             std::to_string(row.size()));
        data.rows.push_back(std::move(row));
    }
    return data;
}

}  // namespace dinf
