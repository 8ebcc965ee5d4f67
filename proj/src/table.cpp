#include "spinsim/table.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "spinsim/errors.hpp"
#include "spinsim/experiments.hpp"

namespace spinsim {

void Table::add_column(std::string name, std::vector<double> values) {
    if (!columns.empty() && values.size() != columns.front().size())
        throw ConfigError("table: column '" + name + "' length mismatch");
    column_names.push_back(std::move(name));
    columns.push_back(std::move(values));
}

std::string Table::to_string() const {
    std::ostringstream out;
    for (const auto& c : comments) out << "# " << c << "\n";
    out << "# ";
    for (std::size_t i = 0; i < column_names.size(); ++i)
        out << (i ? "," : "") << column_names[i];
    out << "\n";
    const std::size_t rows = columns.empty() ? 0 : columns.front().size();
    char buf[32];
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < columns.size(); ++c) {
            std::snprintf(buf, sizeof buf, "%.17g", columns[c][r]);
            out << (c ? "," : "") << buf;
        }
        out << "\n";
    }
    return out.str();
}

void Table::write(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("table: cannot write '" + path + "'");
    out << to_string();
}

Table table_from_trace(const TimeTrace& trace) {
    Table t;
    for (const auto& [k, v] : trace.metadata) t.comments.push_back(k + " = " + v);
    t.comments.push_back("times in s; '" + trace.primary + "' is the primary observable");
    t.add_column("time_s", trace.times);
    // primary column first, remainder in map (alphabetical) order
    if (trace.columns.count(trace.primary))
        t.add_column(trace.primary, trace.columns.at(trace.primary));
    for (const auto& [name, col] : trace.columns)
        if (name != trace.primary) t.add_column(name, col);
    return t;
}

Table table_from_phase_scan(const PhaseScan& scan) {
    Table t;
    for (const auto& [k, v] : scan.metadata) t.comments.push_back(k + " = " + v);
    for (const auto& f : scan.flags) t.comments.push_back("flag: " + f);
    char buf[160];
    std::snprintf(buf, sizeof buf, "delta_phi_rad = %.17g +- %.17g (raw shift %.17g)",
                  scan.delta_phi, scan.delta_phi_sigma, scan.raw_phase_shift);
    t.comments.push_back(buf);
    t.add_column("phi_rad", scan.phi);
    t.add_column("p_up", scan.p_up);
    return t;
}

} // namespace spinsim
