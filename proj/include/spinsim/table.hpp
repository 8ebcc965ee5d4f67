#pragma once

#include <string>
#include <vector>

namespace spinsim {

struct TimeTrace;
struct PhaseScan;

// Plain CSV with '#'-prefixed header lines carrying column names, units, and
// metadata. Values are printed with %.17g so identical inputs produce
// byte-identical files.
struct Table {
    std::vector<std::string> comments;              // emitted as "# ..."
    std::vector<std::string> column_names;          // "time_s", "coherence", ...
    std::vector<std::vector<double>> columns;       // equal lengths

    void add_column(std::string name, std::vector<double> values);
    void write(const std::string& path) const;
    std::string to_string() const;
};

Table table_from_trace(const TimeTrace& trace);
Table table_from_phase_scan(const PhaseScan& scan);

} // namespace spinsim
