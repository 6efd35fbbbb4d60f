#pragma once
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace bham {

/// Column-oriented raw dataset as read from CSV. Cells that are empty or
/// "NA" are stored as NaN in numeric columns; a column holding any other
/// non-numeric cell is kept as text.
class DataFrame
{
public:
    struct Column {
        std::string name;
        bool numeric = true;
        std::vector<double> values;      // numeric columns
        std::vector<std::string> text;   // text columns
    };

    DataFrame() = default;

    void add_column(std::string name, std::vector<double> values);
    void add_text_column(std::string name, std::vector<std::string> text);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return columns_.size(); }
    std::vector<std::string> names() const;
    bool has(std::string_view name) const noexcept;

    const Column& column(std::string_view name) const;

    /// Numeric view of a column; throws SchemaError for unknown or text columns.
    std::span<const double> numeric(std::string_view name) const;

    /// Like numeric() but also rejects missing values.
    std::span<const double> complete_numeric(std::string_view name) const;

private:
    std::vector<Column> columns_;
    std::size_t rows_ = 0;
};

using CsvRecord = std::vector<std::string>;

/// RFC 4180 style records: quoted fields may contain commas, doubled
/// quotes and newlines. Trailing CR is stripped.
std::vector<CsvRecord> parse_csv_records(std::istream& in);

DataFrame parse_csv(std::istream& in);
DataFrame read_csv(const std::filesystem::path& path);

std::string csv_escape(std::string_view field);

/// Shortest decimal text that parses back to the identical double.
std::string format_double(double v);

/// Writes `content` to a temporary sibling file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

std::string read_file(const std::filesystem::path& path);

} // namespace bham
