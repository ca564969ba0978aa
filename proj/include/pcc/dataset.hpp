#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace pcc {

/// Row-per-sample table with named columns.
struct Dataset {
    std::vector<std::string> columns;
    Eigen::MatrixXd values;  // rows x columns

    Eigen::Index rows() const { return values.rows(); }
    Eigen::Index cols() const { return values.cols(); }
    /// -1 when absent.
    int column_index(std::string_view name) const;
    /// Throws DataError when absent.
    int require_column(std::string_view name) const;

    Dataset select_rows(const std::vector<Eigen::Index>& rows) const;
};

/// x1..xN
std::vector<std::string> variable_names(int n, std::string_view prefix = "x");

/// Header plus one line per row, 17 significant digits.
void save_csv(const Dataset& data, const std::filesystem::path& path);
Dataset load_csv(const std::filesystem::path& path);

std::string to_csv(const Dataset& data);
Dataset parse_csv(std::string_view text);

/// Shortest representation that parses back to the same double.
std::string format_double(double v);

}  // namespace pcc
