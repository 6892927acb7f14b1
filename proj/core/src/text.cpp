#include "nnseg/text.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "nnseg/error.hpp"

namespace nnseg {

std::size_t CsvTable::column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return i;
    throw ValidationError("csv: missing column '" + std::string(name) + "'");
}

std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        if (pos == std::string_view::npos) {
            out.emplace_back(s.substr(start));
            break;
        }
        out.emplace_back(s.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(first, last - first + 1));
}

double parse_double(std::string_view s, std::string_view what) {
    const std::string t = trim(s);
    double v = 0.0;
    const auto* begin = t.data();
    const auto* end = t.data() + t.size();
    auto [ptr, ec] = std::from_chars(begin, end, v);
    if (t.empty() || ec != std::errc{} || ptr != end || !std::isfinite(v))
        throw ValidationError("invalid number for " + std::string(what) + ": '" + t + "'");
    return v;
}

long long parse_int(std::string_view s, std::string_view what) {
    const std::string t = trim(s);
    long long v = 0;
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || ec != std::errc{} || ptr != t.data() + t.size())
        throw ValidationError("invalid integer for " + std::string(what) + ": '" + t + "'");
    return v;
}

std::string format_fixed(double v, int decimals) {
    if (v == 0.0) v = 0.0; // drop negative zero
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed, decimals);
    std::string s(buf, ptr);
    if (s.starts_with('-') && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
    return s;
}

std::string format_shortest(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

KeyValues parse_key_values(std::string_view content, std::string_view origin) {
    KeyValues out;
    int line_no = 0;
    for (const auto& raw : split(content, '\n')) {
        ++line_no;
        const std::string line = trim(raw);
        if (line.empty() || line.front() == '#') continue;
        const auto eq = line.find('=');
        const std::string where = std::string(origin) + ":" + std::to_string(line_no);
        if (eq == std::string::npos) throw ValidationError(where + ": expected key=value");
        std::string key = trim(std::string_view(line).substr(0, eq));
        if (key.empty()) throw ValidationError(where + ": empty key");
        for (const auto& [k, v] : out)
            if (k == key) throw ValidationError(where + ": duplicate key '" + key + "'");
        out.emplace_back(std::move(key), trim(std::string_view(line).substr(eq + 1)));
    }
    return out;
}

KeyValues read_key_values(const std::filesystem::path& path) {
    return parse_key_values(read_text_file(path), path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

CsvTable read_csv(const std::filesystem::path& path, const std::vector<std::string>& expected_header) {
    const std::string content = read_text_file(path);
    CsvTable table;
    std::istringstream in(content);
    std::string line;
    int line_no = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty()) continue;
        if (t.front() == '#') {
            table.comments.push_back(trim(std::string_view(t).substr(1)));
            continue;
        }
        auto fields = split(t, ',');
        for (auto& f : fields) f = trim(f);
        if (!have_header) {
            if (fields != expected_header) {
                std::string want;
                for (const auto& h : expected_header) want += (want.empty() ? "" : ",") + h;
                throw ValidationError(path.string() + ": expected header '" + want + "'");
            }
            table.header = std::move(fields);
            have_header = true;
            continue;
        }
        if (fields.size() != table.header.size())
            throw ValidationError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                                  std::to_string(table.header.size()) + " fields");
        table.rows.push_back(std::move(fields));
        table.row_lines.push_back(line_no);
    }
    if (!have_header) throw ValidationError(path.string() + ": missing header");
    return table;
}

} // namespace nnseg
