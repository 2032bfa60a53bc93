#include "doseframe/tables.hpp"

#include "doseframe/format.hpp"
#include "doseframe/trial.hpp"

#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace doseframe {

namespace {

std::vector<std::string> split(const std::string& line, char sep)
{
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, sep))
        out.push_back(field);
    if (!line.empty() && line.back() == sep)
        out.emplace_back();
    return out;
}

double parse_double(const std::string& s, const std::string& key)
{
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw std::invalid_argument("table header: bad value for " + key + ": '" + s + "'");
    return v;
}

TableEntry parse_entry(const std::string& s)
{
    if (s == "E")
        return TableEntry::E;
    if (s == "S")
        return TableEntry::S;
    if (s == "D")
        return TableEntry::D;
    if (s == "DU")
        return TableEntry::DU;
    throw std::invalid_argument("table: unknown entry '" + s + "'");
}

std::string header_line(const DesignConfig& cfg)
{
    std::string h = "# design=" + std::string(design_name(cfg.design)) + ",p_T=" + format_double(cfg.target) +
                    ",eps1=" + format_double(cfg.eps1) + ",eps2=" + format_double(cfg.eps2);
    if (cfg.boin_phi_e && cfg.boin_phi_d)
        h += ",boin_phi_E=" + format_double(*cfg.boin_phi_e) + ",boin_phi_D=" + format_double(*cfg.boin_phi_d);
    h += ",safety_threshold=" + format_double(cfg.safety_threshold);
    return h;
}

} // namespace

std::string_view entry_tag(TableEntry e)
{
    switch (e) {
    case TableEntry::E:
        return "E";
    case TableEntry::S:
        return "S";
    case TableEntry::D:
        return "D";
    case TableEntry::DU:
        return "DU";
    }
    return "?";
}

TableEntry DecisionTable::at(int n, int y) const
{
    if (n < 1 || n > max_n || y < 0 || y > n)
        throw std::out_of_range("DecisionTable: no cell (" + std::to_string(n) + ", " + std::to_string(y) + ")");
    return cells[static_cast<std::size_t>(n - 1)][static_cast<std::size_t>(y)];
}

bool operator==(const DecisionTable& a, const DecisionTable& b)
{
    const DesignConfig& x = a.design;
    const DesignConfig& y = b.design;
    return x.design == y.design && x.target == y.target && x.eps1 == y.eps1 && x.eps2 == y.eps2 &&
           x.boin_phi_e == y.boin_phi_e && x.boin_phi_d == y.boin_phi_d &&
           x.safety_threshold == y.safety_threshold && a.max_n == b.max_n && a.cells == b.cells;
}

DecisionTable build_table(const DesignConfig& cfg, int max_n)
{
    if (!is_tally_design(cfg.design))
        throw std::invalid_argument(std::string(design_name(cfg.design)) +
                                    " decisions depend on the whole history; no decision table exists");
    if (max_n < 1)
        throw std::invalid_argument("max_n: must be at least 1");
    DecisionEngine engine(cfg, 1);
    DecisionTable t;
    t.design = cfg;
    t.max_n = max_n;
    t.cells.resize(static_cast<std::size_t>(max_n));
    for (int n = 1; n <= max_n; ++n) {
        auto& column = t.cells[static_cast<std::size_t>(n - 1)];
        for (int y = 0; y <= n; ++y) {
            const DoseState s(n, y);
            if (excess_toxicity_prob(s, cfg.target) > cfg.safety_threshold) {
                column.push_back(TableEntry::DU);
                continue;
            }
            switch (engine.tally_move(s)) {
            case Move::Escalate:
                column.push_back(TableEntry::E);
                break;
            case Move::Stay:
                column.push_back(TableEntry::S);
                break;
            case Move::DeEscalate:
                column.push_back(TableEntry::D);
                break;
            }
        }
    }
    return t;
}

TableFormat parse_table_format(std::string_view tag)
{
    if (tag == "csv")
        return TableFormat::Csv;
    if (tag == "txt")
        return TableFormat::Text;
    throw std::invalid_argument("unsupported table format '" + std::string(tag) + "' (expected csv or txt)");
}

void emit(std::ostream& os, const DecisionTable& table, TableFormat format)
{
    os << header_line(table.design) << '\n';
    if (format == TableFormat::Csv) {
        os << "y\\n";
        for (int n = 1; n <= table.max_n; ++n)
            os << ',' << n;
        os << '\n';
        for (int y = 0; y <= table.max_n; ++y) {
            os << y;
            for (int n = 1; n <= table.max_n; ++n) {
                os << ',';
                if (y <= n)
                    os << entry_tag(table.at(n, y));
            }
            os << '\n';
        }
        return;
    }

    auto cell = [](std::string_view s, std::size_t width) {
        return std::string(width > s.size() ? width - s.size() : 0, ' ') + std::string(s);
    };
    os << cell("y\\n", 4);
    for (int n = 1; n <= table.max_n; ++n)
        os << cell(std::to_string(n), 4);
    os << '\n';
    for (int y = 0; y <= table.max_n; ++y) {
        std::string line = cell(std::to_string(y), 4);
        for (int n = 1; n <= table.max_n; ++n)
            line += cell(y <= n ? entry_tag(table.at(n, y)) : std::string_view{}, 4);
        while (!line.empty() && line.back() == ' ')
            line.pop_back();
        os << line << '\n';
    }
}

std::string emit_string(const DecisionTable& table, TableFormat format)
{
    std::ostringstream os;
    emit(os, table, format);
    return os.str();
}

DecisionTable parse_table_csv(std::istream& is)
{
    std::string line;
    if (!std::getline(is, line) || line.rfind("# ", 0) != 0)
        throw std::invalid_argument("table: missing '# design=...' header");

    DecisionTable t;
    bool have_design = false;
    for (const std::string& kv : split(line.substr(2), ',')) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("table header: expected key=value, got '" + kv + "'");
        const std::string key = kv.substr(0, eq);
        const std::string value = kv.substr(eq + 1);
        if (key == "design") {
            t.design.design = parse_design(value);
            have_design = true;
        } else if (key == "p_T") {
            t.design.target = parse_double(value, key);
        } else if (key == "eps1") {
            t.design.eps1 = parse_double(value, key);
        } else if (key == "eps2") {
            t.design.eps2 = parse_double(value, key);
        } else if (key == "boin_phi_E") {
            t.design.boin_phi_e = parse_double(value, key);
        } else if (key == "boin_phi_D") {
            t.design.boin_phi_d = parse_double(value, key);
        } else if (key == "safety_threshold") {
            t.design.safety_threshold = parse_double(value, key);
        } else {
            throw std::invalid_argument("table header: unknown key '" + key + "'");
        }
    }
    if (!have_design)
        throw std::invalid_argument("table header: no design");

    if (!std::getline(is, line))
        throw std::invalid_argument("table: missing column header");
    const std::vector<std::string> head = split(line, ',');
    if (head.empty() || head[0] != "y\\n")
        throw std::invalid_argument("table: column header must start with 'y\\n'");
    t.max_n = static_cast<int>(head.size()) - 1;
    for (int n = 1; n <= t.max_n; ++n)
        if (head[static_cast<std::size_t>(n)] != std::to_string(n))
            throw std::invalid_argument("table: column " + std::to_string(n) + " mislabelled");
    t.cells.assign(static_cast<std::size_t>(t.max_n), {});
    for (int n = 1; n <= t.max_n; ++n)
        t.cells[static_cast<std::size_t>(n - 1)].resize(static_cast<std::size_t>(n + 1));

    for (int y = 0; y <= t.max_n; ++y) {
        if (!std::getline(is, line))
            throw std::invalid_argument("table: missing row y=" + std::to_string(y));
        const std::vector<std::string> row = split(line, ',');
        if (row.size() != head.size() || row[0] != std::to_string(y))
            throw std::invalid_argument("table: malformed row y=" + std::to_string(y));
        for (int n = 1; n <= t.max_n; ++n) {
            const std::string& f = row[static_cast<std::size_t>(n)];
            if (y > n) {
                if (!f.empty())
                    throw std::invalid_argument("table: cell (" + std::to_string(n) + ", " + std::to_string(y) +
                                                ") must be empty");
                continue;
            }
            t.cells[static_cast<std::size_t>(n - 1)][static_cast<std::size_t>(y)] = parse_entry(f);
        }
    }
    return t;
}

} // namespace doseframe
