#include "glmcausal/dataset.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace glmc {

namespace {

// Splits RFC 4180 text into rows of raw fields. Handles quoted fields,
// doubled quotes, and CRLF / LF line endings.
std::vector<std::vector<std::string>> split_csv(std::string_view text) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool in_quotes = false;
    bool field_started = false;
    std::size_t i = 0;
    auto end_field = [&] {
        row.push_back(std::move(field));
        field.clear();
        field_started = false;
    };
    auto end_row = [&] {
        end_field();
        rows.push_back(std::move(row));
        row.clear();
    };
    while (i < text.size()) {
        char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                field += c;
            }
        } else if (c == '"' && !field_started) {
            in_quotes = true;
            field_started = true;
        } else if (c == ',') {
            end_field();
        } else if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') {
            end_row();
            ++i;
        } else if (c == '\n') {
            end_row();
        } else {
            field += c;
            field_started = true;
        }
        ++i;
    }
    if (in_quotes) throw DataError("csv: unterminated quoted field");
    if (field_started || !row.empty() || !field.empty()) end_row();
    return rows;
}

bool parse_number(const std::string& s, double& out) {
    if (s.empty()) return false;
    const char* begin = s.c_str();
    char* end = nullptr;
    out = std::strtod(begin, &end);
    return end == begin + s.size();
}

bool needs_quoting(const std::string& s) {
    return s.find_first_of(",\"\n\r") != std::string::npos;
}

std::string quote_field(const std::string& s) {
    if (!needs_quoting(s)) return s;
    std::string out = "\"";
    for (char c : s) {
        out += c;
        if (c == '"') out += '"';  // RFC 4180: double embedded quotes
    }
    out += '"';
    return out;
}

std::string format_number(double v) {
    // Shortest representation that round-trips a double.
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, ptr);
}

}  // namespace

Dataset::Dataset(std::vector<Column> columns) : columns_(std::move(columns)) {
    if (columns_.empty()) {
        n_rows_ = 0;
        return;
    }
    n_rows_ = columns_.front().size();
    for (const auto& c : columns_) {
        if (c.size() != n_rows_)
            throw DataError("column '" + c.name + "' has length " +
                            std::to_string(c.size()) + ", expected " +
                            std::to_string(n_rows_));
    }
    for (std::size_t a = 0; a < columns_.size(); ++a)
        for (std::size_t b = a + 1; b < columns_.size(); ++b)
            if (columns_[a].name == columns_[b].name)
                throw DataError("duplicate column name '" + columns_[a].name + "'");
}

Dataset Dataset::from_csv_text(std::string_view text) {
    auto rows = split_csv(text);
    if (rows.empty()) throw DataError("csv: empty input");
    const auto& header = rows.front();
    std::size_t n_cols = header.size();
    std::size_t n_rows = rows.size() - 1;

    for (std::size_t r = 1; r < rows.size(); ++r)
        if (rows[r].size() != n_cols)
            throw DataError("csv: row " + std::to_string(r + 1) + " has " +
                            std::to_string(rows[r].size()) + " fields, expected " +
                            std::to_string(n_cols));

    std::vector<Column> cols(n_cols);
    for (std::size_t j = 0; j < n_cols; ++j) {
        cols[j].name = header[j];
        bool numeric = true;
        for (std::size_t r = 1; r <= n_rows; ++r) {
            const std::string& cell = rows[r][j];
            if (cell.empty())
                throw DataError("csv: missing value in column '" + header[j] +
                                "', row " + std::to_string(r + 1));
            double v;
            if (!parse_number(cell, v)) {
                numeric = false;
                break;
            }
        }
        if (numeric) {
            cols[j].kind = ColumnKind::Numeric;
            cols[j].values.reserve(n_rows);
            for (std::size_t r = 1; r <= n_rows; ++r) {
                double v;
                parse_number(rows[r][j], v);
                cols[j].values.push_back(v);
            }
        } else {
            cols[j].kind = ColumnKind::Categorical;
            cols[j].codes.reserve(n_rows);
            for (std::size_t r = 1; r <= n_rows; ++r) {
                const std::string& cell = rows[r][j];
                if (cell.empty())
                    throw DataError("csv: missing value in column '" + header[j] +
                                    "', row " + std::to_string(r + 1));
                int code = -1;
                for (std::size_t l = 0; l < cols[j].levels.size(); ++l)
                    if (cols[j].levels[l] == cell) {
                        code = static_cast<int>(l);
                        break;
                    }
                if (code < 0) {
                    code = static_cast<int>(cols[j].levels.size());
                    cols[j].levels.push_back(cell);
                }
                cols[j].codes.push_back(code);
            }
        }
    }
    return Dataset(std::move(cols));
}

Dataset Dataset::from_csv_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return from_csv_text(ss.str());
}

std::string Dataset::to_csv() const {
    std::string out;
    for (std::size_t j = 0; j < columns_.size(); ++j) {
        if (j) out += ',';
        out += quote_field(columns_[j].name);
    }
    out += '\n';
    for (std::size_t r = 0; r < n_rows_; ++r) {
        for (std::size_t j = 0; j < columns_.size(); ++j) {
            if (j) out += ',';
            const Column& c = columns_[j];
            if (c.kind == ColumnKind::Numeric)
                out += format_number(c.values[r]);
            else
                out += quote_field(c.levels[c.codes[r]]);
        }
        out += '\n';
    }
    return out;
}

void Dataset::write_csv(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path + "'");
    out << to_csv();
}

bool Dataset::has_column(std::string_view name) const {
    for (const auto& c : columns_)
        if (c.name == name) return true;
    return false;
}

const Column& Dataset::column(std::string_view name) const {
    for (const auto& c : columns_)
        if (c.name == name) return c;
    throw DataError("unknown column '" + std::string(name) + "'");
}

std::vector<std::string> Dataset::column_names() const {
    std::vector<std::string> out;
    out.reserve(columns_.size());
    for (const auto& c : columns_) out.push_back(c.name);
    return out;
}

}  // namespace glmc
