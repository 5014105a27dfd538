#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace ivf::scm {

/// Column-oriented numeric table with an optional cluster-label column.
class Dataset {
public:
    Dataset() = default;

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return names_.size(); }
    const std::vector<std::string>& names() const { return names_; }

    bool has(const std::string& name) const;
    /// Throws DataError for an unknown column.
    const std::vector<double>& column(const std::string& name) const;
    /// Appends a column; length must match existing columns.
    void add_column(const std::string& name, std::vector<double> values);
    Dataset select(const std::vector<std::string>& names) const;

    /// Cluster labels are kept as dense integer codes in order of first appearance.
    void set_clusters(const std::string& name, const std::vector<std::string>& labels);
    const std::optional<std::string>& cluster_name() const { return cluster_name_; }
    const std::vector<std::size_t>& cluster_codes() const { return cluster_codes_; }
    std::size_t cluster_count() const { return cluster_labels_.size(); }
    const std::vector<std::string>& cluster_labels() const { return cluster_labels_; }

private:
    std::size_t rows_ = 0;
    std::vector<std::string> names_;
    std::vector<std::vector<double>> data_;
    std::optional<std::string> cluster_name_;
    std::vector<std::size_t> cluster_codes_;
    std::vector<std::string> cluster_labels_;
};

/// CSV with a header row. Every column is numeric except `cluster_column`,
/// which may hold arbitrary labels. Empty cells and NA/NaN are rejected.
Dataset read_csv(std::istream& in, const std::optional<std::string>& cluster_column = std::nullopt);
Dataset load_csv(const std::string& path, const std::optional<std::string>& cluster_column = std::nullopt);

/// Shortest round-trip decimal representation, `\n` line endings.
void write_csv(std::ostream& out, const Dataset& data);
void save_csv(const std::string& path, const Dataset& data);

std::string format_double(double v);

} // namespace ivf::scm
