#pragma once

// Pre-tabulated decisions of tally designs, one cell per (n, y).

#include "doseframe/designs.hpp"

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace doseframe {

enum class TableEntry : std::uint8_t { E, S, D, DU };

std::string_view entry_tag(TableEntry e);

struct DecisionTable {
    DesignConfig design;
    int max_n = 30;
    /// cells[n - 1][y] for 1 <= n <= max_n, 0 <= y <= n.
    std::vector<std::vector<TableEntry>> cells;

    TableEntry at(int n, int y) const;

    friend bool operator==(const DecisionTable& a, const DecisionTable& b);
};

/// Cell (n, y) is DU when the excess-toxicity probability exceeds the
/// safety threshold, otherwise the design's move. Rejects Int-CRM and CRM.
DecisionTable build_table(const DesignConfig& cfg, int max_n = 30);

enum class TableFormat { Csv, Text };

/// Parses "csv" or "txt"; throws std::invalid_argument otherwise.
TableFormat parse_table_format(std::string_view tag);

/// Rows are y = 0..max_n, columns n = 1..max_n; cells with y > n are
/// empty. A leading comment line records the design parameters.
void emit(std::ostream& os, const DecisionTable& table, TableFormat format);
std::string emit_string(const DecisionTable& table, TableFormat format);

/// Inverse of emit for the comma-separated form.
DecisionTable parse_table_csv(std::istream& is);

} // namespace doseframe
