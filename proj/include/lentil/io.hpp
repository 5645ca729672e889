#pragma once

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

namespace lentil {

// All file access goes through these so that LENTIL_AUDIT_LOG, when set,
// receives one line per opened path ("r <path>" or "w <path>").
std::ifstream open_input(const std::string& path);
std::ofstream open_output(const std::string& path);

nlohmann::json read_json(const std::string& path);
void write_json(const std::string& path, const nlohmann::json& j);

// Minimal CSV of numbers with a header row. Throws naming the file, line and
// column on malformed input.
struct CsvTable
{
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
    std::size_t column(const std::string& name, const std::string& path) const;
};
CsvTable read_csv(const std::string& path);
void write_csv(const std::string& path, const std::vector<std::string>& columns,
               const std::vector<std::vector<double>>& rows);

// Shortest round-trip decimal form.
std::string format_double(double v);

}  // namespace lentil
