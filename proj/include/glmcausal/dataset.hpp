#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace glmc {

struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class ColumnKind { Numeric, Categorical };

// A single typed column. Numeric columns store values directly; categorical
// columns store level codes plus the level list in first-appearance order.
struct Column {
    std::string name;
    ColumnKind kind = ColumnKind::Numeric;
    std::vector<double> values;       // kind == Numeric
    std::vector<int> codes;           // kind == Categorical
    std::vector<std::string> levels;  // kind == Categorical

    std::size_t size() const {
        return kind == ColumnKind::Numeric ? values.size() : codes.size();
    }
};

// Rectangular in-memory table. Immutable once built; no missing values.
class Dataset {
public:
    Dataset() = default;
    explicit Dataset(std::vector<Column> columns);

    // RFC 4180 CSV, first row is the header. A column is numeric iff every
    // value parses fully as a decimal number; otherwise categorical.
    static Dataset from_csv_text(std::string_view text);
    static Dataset from_csv_file(const std::string& path);

    std::string to_csv() const;
    void write_csv(const std::string& path) const;

    std::size_t n_rows() const { return n_rows_; }
    std::size_t n_cols() const { return columns_.size(); }
    const std::vector<Column>& columns() const { return columns_; }
    bool has_column(std::string_view name) const;
    const Column& column(std::string_view name) const;
    std::vector<std::string> column_names() const;

private:
    std::vector<Column> columns_;
    std::size_t n_rows_ = 0;
};

}  // namespace glmc
