#include "ivf/scm/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <unordered_map>

#include "ivf/error.hpp"

namespace ivf::scm {

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cell += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cell += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(std::move(cell));
            cell.clear();
        } else if (c != '\r') {
            cell += c;
        }
    }
    out.push_back(std::move(cell));
    return out;
}

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return {};
    auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

double parse_number(const std::string& raw, std::size_t line, const std::string& col) {
    const std::string s = trim(raw);
    double v = 0.0;
    const char* first = s.data();
    if (!s.empty() && s[0] == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v))
        throw DataError("line " + std::to_string(line) + ": column '" + col + "': " +
                        (s.empty() ? std::string("missing value") : "not a finite number: '" + s + "'"));
    return v;
}

} // namespace

bool Dataset::has(const std::string& name) const {
    return std::find(names_.begin(), names_.end(), name) != names_.end();
}

const std::vector<double>& Dataset::column(const std::string& name) const {
    auto it = std::find(names_.begin(), names_.end(), name);
    if (it == names_.end()) throw DataError("unknown column '" + name + "'");
    return data_[static_cast<std::size_t>(it - names_.begin())];
}

void Dataset::add_column(const std::string& name, std::vector<double> values) {
    if (name.empty()) throw DataError("empty column name");
    if (has(name) || (cluster_name_ && *cluster_name_ == name)) throw DataError("duplicate column '" + name + "'");
    if (!names_.empty() || cluster_name_) {
        if (values.size() != rows_) throw DataError("column '" + name + "' has wrong length");
    } else {
        rows_ = values.size();
    }
    for (double v : values)
        if (!std::isfinite(v)) throw DataError("column '" + name + "' has a missing or non-finite value");
    names_.push_back(name);
    data_.push_back(std::move(values));
}

Dataset Dataset::select(const std::vector<std::string>& names) const {
    Dataset out;
    for (const auto& n : names) out.add_column(n, column(n));
    if (names.empty()) out.rows_ = rows_;
    if (cluster_name_) {
        out.cluster_name_ = cluster_name_;
        out.cluster_codes_ = cluster_codes_;
        out.cluster_labels_ = cluster_labels_;
    }
    return out;
}

void Dataset::set_clusters(const std::string& name, const std::vector<std::string>& labels) {
    if (has(name)) throw DataError("duplicate column '" + name + "'");
    if (!names_.empty() && labels.size() != rows_) throw DataError("cluster column has wrong length");
    if (names_.empty()) rows_ = labels.size();
    std::unordered_map<std::string, std::size_t> code;
    cluster_codes_.clear();
    cluster_labels_.clear();
    for (const auto& l : labels) {
        if (l.empty()) throw DataError("cluster column '" + name + "' has a missing value");
        auto [it, inserted] = code.emplace(l, cluster_labels_.size());
        if (inserted) cluster_labels_.push_back(l);
        cluster_codes_.push_back(it->second);
    }
    cluster_name_ = name;
}

Dataset read_csv(std::istream& in, const std::optional<std::string>& cluster_column) {
    std::string line;
    if (!std::getline(in, line)) throw DataError("empty CSV input");
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    std::vector<std::string> header = split_line(line);
    for (auto& h : header) h = trim(h);
    std::set<std::string> seen;
    for (const auto& h : header) {
        if (h.empty()) throw DataError("empty column name in header");
        if (!seen.insert(h).second) throw DataError("duplicate column '" + h + "'");
    }
    std::optional<std::size_t> cluster_idx;
    if (cluster_column) {
        auto it = std::find(header.begin(), header.end(), *cluster_column);
        if (it == header.end()) throw DataError("cluster column '" + *cluster_column + "' not found");
        cluster_idx = static_cast<std::size_t>(it - header.begin());
    }
    std::vector<std::vector<double>> cols(header.size());
    std::vector<std::string> labels;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty() || line == "\r") continue;
        auto cells = split_line(line);
        if (cells.size() != header.size())
            throw DataError("line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                            " fields, got " + std::to_string(cells.size()));
        for (std::size_t j = 0; j < cells.size(); ++j) {
            if (cluster_idx && j == *cluster_idx) {
                std::string l = trim(cells[j]);
                if (l.empty()) throw DataError("line " + std::to_string(line_no) + ": missing cluster label");
                labels.push_back(std::move(l));
            } else {
                cols[j].push_back(parse_number(cells[j], line_no, header[j]));
            }
        }
    }
    Dataset out;
    for (std::size_t j = 0; j < header.size(); ++j)
        if (!cluster_idx || j != *cluster_idx) out.add_column(header[j], std::move(cols[j]));
    if (cluster_idx) out.set_clusters(header[*cluster_idx], labels);
    if (out.rows() == 0) throw DataError("CSV has no data rows");
    return out;
}

Dataset load_csv(const std::string& path, const std::optional<std::string>& cluster_column) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    return read_csv(in, cluster_column);
}

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    (void)ec;
    return std::string(buf, ptr);
}

void write_csv(std::ostream& out, const Dataset& data) {
    const auto& names = data.names();
    bool first = true;
    for (const auto& n : names) {
        out << (first ? "" : ",") << n;
        first = false;
    }
    if (data.cluster_name()) out << (first ? "" : ",") << *data.cluster_name();
    out << '\n';
    std::vector<const std::vector<double>*> cols;
    for (const auto& n : names) cols.push_back(&data.column(n));
    for (std::size_t i = 0; i < data.rows(); ++i) {
        for (std::size_t j = 0; j < cols.size(); ++j) out << (j ? "," : "") << format_double((*cols[j])[i]);
        if (data.cluster_name())
            out << (cols.empty() ? "" : ",") << data.cluster_labels()[data.cluster_codes()[i]];
        out << '\n';
    }
}

void save_csv(const std::string& path, const Dataset& data) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path + "'");
    write_csv(out, data);
    if (!out) throw IoError("write failed for '" + path + "'");
}

} // namespace ivf::scm
