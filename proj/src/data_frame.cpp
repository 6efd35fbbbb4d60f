#include <bham/data_frame.hpp>
#include <bham/errors.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace bham {

namespace {

bool is_na_token(std::string_view s)
{
    return s.empty() || s == "NA" || s == "na" || s == "NaN" || s == "nan";
}

std::string_view trim(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    return s;
}

bool parse_number(std::string_view s, double& out)
{
    s = trim(s);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    if (s.empty()) return false;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(out);
}

} // namespace

void DataFrame::add_column(std::string name, std::vector<double> values)
{
    if (!columns_.empty() && values.size() != rows_) {
        throw SchemaError("column '" + name + "' has " + std::to_string(values.size())
                          + " rows, expected " + std::to_string(rows_));
    }
    if (has(name)) throw SchemaError("duplicate column '" + name + "'");
    rows_ = values.size();
    columns_.push_back(Column{std::move(name), true, std::move(values), {}});
}

void DataFrame::add_text_column(std::string name, std::vector<std::string> text)
{
    if (!columns_.empty() && text.size() != rows_) {
        throw SchemaError("column '" + name + "' has " + std::to_string(text.size())
                          + " rows, expected " + std::to_string(rows_));
    }
    if (has(name)) throw SchemaError("duplicate column '" + name + "'");
    rows_ = text.size();
    columns_.push_back(Column{std::move(name), false, {}, std::move(text)});
}

std::vector<std::string> DataFrame::names() const
{
    std::vector<std::string> out;
    out.reserve(columns_.size());
    for (const auto& c : columns_) out.push_back(c.name);
    return out;
}

bool DataFrame::has(std::string_view name) const noexcept
{
    return std::any_of(columns_.begin(), columns_.end(),
                       [&](const Column& c) { return c.name == name; });
}

const DataFrame::Column& DataFrame::column(std::string_view name) const
{
    for (const auto& c : columns_) {
        if (c.name == name) return c;
    }
    throw SchemaError("unknown variable '" + std::string(name) + "'");
}

std::span<const double> DataFrame::numeric(std::string_view name) const
{
    const auto& c = column(name);
    if (!c.numeric) {
        throw SchemaError("column '" + std::string(name) + "' is not numeric");
    }
    return c.values;
}

std::span<const double> DataFrame::complete_numeric(std::string_view name) const
{
    auto v = numeric(name);
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (std::isnan(v[i])) {
            throw SchemaError("column '" + std::string(name) + "' has a missing value at row "
                              + std::to_string(i + 1));
        }
    }
    return v;
}

std::vector<CsvRecord> parse_csv_records(std::istream& in)
{
    std::vector<CsvRecord> records;
    CsvRecord current;
    std::string field;
    bool in_quotes = false;
    bool any = false;
    char ch;

    auto end_field = [&] {
        current.push_back(std::move(field));
        field.clear();
    };
    auto end_record = [&] {
        end_field();
        if (!current.empty() && !current.back().empty() && current.back().back() == '\r') {
            current.back().pop_back();
        }
        // drop fully blank lines
        if (!(current.size() == 1 && current[0].empty())) records.push_back(std::move(current));
        current.clear();
    };

    while (in.get(ch)) {
        any = true;
        if (in_quotes) {
            if (ch == '"') {
                if (in.peek() == '"') {
                    in.get(ch);
                    field.push_back('"');
                } else {
                    in_quotes = false;
                }
            } else {
                field.push_back(ch);
            }
            continue;
        }
        switch (ch) {
            case '"': in_quotes = true; break;
            case ',': end_field(); break;
            case '\n': end_record(); any = false; break;
            default: field.push_back(ch);
        }
    }
    if (in_quotes) throw ParseError("unterminated quoted CSV field");
    if (any) end_record();
    return records;
}

DataFrame parse_csv(std::istream& in)
{
    auto records = parse_csv_records(in);
    if (records.empty()) throw SchemaError("CSV input has no header row");
    const auto& header = records.front();
    const std::size_t ncol = header.size();
    for (std::size_t r = 1; r < records.size(); ++r) {
        if (records[r].size() != ncol) {
            throw ParseError("CSV row " + std::to_string(r + 1) + " has "
                             + std::to_string(records[r].size()) + " fields, expected "
                             + std::to_string(ncol));
        }
    }

    DataFrame df;
    const std::size_t nrow = records.size() - 1;
    for (std::size_t c = 0; c < ncol; ++c) {
        std::vector<double> values(nrow);
        bool numeric = true;
        for (std::size_t r = 0; r < nrow && numeric; ++r) {
            const auto& cell = records[r + 1][c];
            if (is_na_token(trim(cell))) {
                values[r] = std::numeric_limits<double>::quiet_NaN();
            } else if (!parse_number(cell, values[r])) {
                numeric = false;
            }
        }
        std::string name(trim(header[c]));
        if (numeric) {
            df.add_column(std::move(name), std::move(values));
        } else {
            std::vector<std::string> text(nrow);
            for (std::size_t r = 0; r < nrow; ++r) text[r] = records[r + 1][c];
            df.add_text_column(std::move(name), std::move(text));
        }
    }
    return df;
}

DataFrame read_csv(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
    return parse_csv(in);
}

std::string csv_escape(std::string_view field)
{
    if (field.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(field);
    std::string out = "\"";
    for (char ch : field) {
        if (ch == '"') out += "\"\"";
        else out.push_back(ch);
    }
    out.push_back('"');
    return out;
}

std::string format_double(double v)
{
    if (std::isnan(v)) return "NA";
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc()) throw NumericError("cannot format floating-point value");
    return std::string(buf, ptr);
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content)
{
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw IoError("write to '" + tmp.string() + "' failed");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw IoError("cannot move output into place at '" + path.string() + "'");
    }
}

std::string read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace bham
