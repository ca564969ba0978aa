#include "pcc/dataset.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "pcc/error.hpp"

namespace pcc {

int Dataset::column_index(std::string_view name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
        if (columns[i] == name) return static_cast<int>(i);
    return -1;
}

int Dataset::require_column(std::string_view name) const {
    const int c = column_index(name);
    if (c < 0) throw DataError("missing column " + std::string(name));
    return c;
}

Dataset Dataset::select_rows(const std::vector<Eigen::Index>& rows) const {
    Dataset out{columns, Eigen::MatrixXd(static_cast<Eigen::Index>(rows.size()), values.cols())};
    for (std::size_t r = 0; r < rows.size(); ++r) out.values.row(static_cast<Eigen::Index>(r)) = values.row(rows[r]);
    return out;
}

std::vector<std::string> variable_names(int n, std::string_view prefix) {
    std::vector<std::string> out;
    for (int i = 1; i <= n; ++i) out.push_back(std::string(prefix) + std::to_string(i));
    return out;
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string to_csv(const Dataset& data) {
    if (static_cast<Eigen::Index>(data.columns.size()) != data.values.cols())
        throw DataError("column names do not match value matrix");
    std::string out;
    for (std::size_t c = 0; c < data.columns.size(); ++c) {
        if (c) out += ',';
        out += data.columns[c];
    }
    out += '\n';
    for (Eigen::Index r = 0; r < data.values.rows(); ++r) {
        for (Eigen::Index c = 0; c < data.values.cols(); ++c) {
            if (c) out += ',';
            out += format_double(data.values(r, c));
        }
        out += '\n';
    }
    return out;
}

namespace {

std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        cells.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                                           : comma - start));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    for (auto& c : cells) {
        while (!c.empty() && (c.front() == ' ' || c.front() == '\t')) c.remove_prefix(1);
        while (!c.empty() && (c.back() == ' ' || c.back() == '\t' || c.back() == '\r')) c.remove_suffix(1);
    }
    return cells;
}

double parse_cell(std::string_view cell, std::size_t line_no) {
    double v = 0.0;
    const char* begin = cell.data();
    if (!cell.empty() && cell.front() == '+') ++begin;
    const auto [ptr, ec] = std::from_chars(begin, cell.data() + cell.size(), v);
    if (cell.empty() || ec != std::errc{} || ptr != cell.data() + cell.size())
        throw DataError("non-numeric cell '" + std::string(cell) + "' on line " + std::to_string(line_no));
    return v;
}

}  // namespace

Dataset parse_csv(std::string_view text) {
    Dataset data;
    std::vector<std::vector<double>> rows;
    std::size_t pos = 0;
    std::size_t line_no = 0;
    bool have_header = false;
    while (pos < text.size()) {
        auto nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        std::string_view line = text.substr(pos, nl - pos);
        pos = nl + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;
        auto cells = split(line);
        if (!have_header) {
            for (auto c : cells) {
                if (c.empty()) throw DataError("empty column name in header");
                data.columns.emplace_back(c);
            }
            have_header = true;
            continue;
        }
        if (cells.size() != data.columns.size())
            throw DataError("ragged row on line " + std::to_string(line_no));
        std::vector<double> row;
        row.reserve(cells.size());
        for (auto c : cells) row.push_back(parse_cell(c, line_no));
        rows.push_back(std::move(row));
    }
    data.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(data.columns.size()));
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < rows[r].size(); ++c)
            data.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    return data;
}

void save_csv(const Dataset& data, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << to_csv(data);
    if (!out) throw Error("write failed for " + path.string());
}

Dataset load_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_csv(ss.str());
}

}  // namespace pcc
