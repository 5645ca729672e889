#include "lentil/io.hpp"

#include <charconv>
#include <cstdlib>
#include <mutex>
#include <sstream>

#include "lentil/error.hpp"

namespace lentil {

namespace {

void audit(char mode, const std::string& path)
{
    const char* log = std::getenv("LENTIL_AUDIT_LOG");
    if (!log || !*log)
        return;
    static std::mutex mu;
    std::lock_guard<std::mutex> lock(mu);
    std::ofstream out(log, std::ios::app);
    out << mode << ' ' << path << '\n';
}

}  // namespace

std::ifstream open_input(const std::string& path)
{
    audit('r', path);
    std::ifstream in(path);
    if (!in)
        fail(ErrorCode::io, "cannot open '" + path + "' for reading");
    return in;
}

std::ofstream open_output(const std::string& path)
{
    audit('w', path);
    std::ofstream out(path);
    if (!out)
        fail(ErrorCode::io, "cannot open '" + path + "' for writing");
    return out;
}

nlohmann::json read_json(const std::string& path)
{
    auto in = open_input(path);
    try
    {
        return nlohmann::json::parse(in);
    }
    catch (const nlohmann::json::parse_error& e)
    {
        fail(ErrorCode::parse, path + ": " + e.what());
    }
}

void write_json(const std::string& path, const nlohmann::json& j)
{
    auto out = open_output(path);
    out << j.dump(2) << '\n';
}

std::string format_double(double v)
{
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::size_t CsvTable::column(const std::string& name, const std::string& path) const
{
    for (std::size_t i = 0; i < columns.size(); ++i)
        if (columns[i] == name)
            return i;
    fail(ErrorCode::parse, path + ": missing column '" + name + "'");
}

CsvTable read_csv(const std::string& path)
{
    auto in = open_input(path);
    CsvTable t;
    std::string line;
    if (!std::getline(in, line))
        fail(ErrorCode::parse, path + ": empty file (expected a header row)");
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ','))
        {
            while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' '))
                cell.pop_back();
            t.columns.push_back(cell);
        }
    }
    std::size_t lineno = 1;
    while (std::getline(in, line))
    {
        ++lineno;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        std::vector<double> row;
        std::size_t start = 0;
        for (std::size_t col = 0;; ++col)
        {
            const std::size_t end = line.find(',', start);
            std::string cell = line.substr(start, end == std::string::npos ? std::string::npos : end - start);
            double v = 0.0;
            const char* b = cell.data();
            while (*b == ' ')
                ++b;
            auto res = std::from_chars(b, cell.data() + cell.size(), v);
            if (res.ec != std::errc() || res.ptr != cell.data() + cell.size())
                fail(ErrorCode::parse, path + ":" + std::to_string(lineno) + ": column '" +
                                           (col < t.columns.size() ? t.columns[col] : std::to_string(col)) +
                                           "' is not a number: '" + cell + "'");
            row.push_back(v);
            if (end == std::string::npos)
                break;
            start = end + 1;
        }
        if (row.size() != t.columns.size())
            fail(ErrorCode::parse, path + ":" + std::to_string(lineno) + ": expected " +
                                       std::to_string(t.columns.size()) + " columns, got " +
                                       std::to_string(row.size()));
        t.rows.push_back(std::move(row));
    }
    return t;
}

void write_csv(const std::string& path, const std::vector<std::string>& columns,
               const std::vector<std::vector<double>>& rows)
{
    auto out = open_output(path);
    for (std::size_t i = 0; i < columns.size(); ++i)
        out << (i ? "," : "") << columns[i];
    out << '\n';
    for (const auto& r : rows)
    {
        for (std::size_t i = 0; i < r.size(); ++i)
            out << (i ? "," : "") << format_double(r[i]);
        out << '\n';
    }
}

}  // namespace lentil
