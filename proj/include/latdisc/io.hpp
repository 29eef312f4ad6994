#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace latdisc {

/// %.17g, with inf / -inf / nan spelled out.
std::string format_number(double x);

/// Flat key = value store. `[section]` headers prefix the following keys as `section.key`.
class Config {
  public:
    static Config parse(const std::string& text);
    static Config load(const std::filesystem::path& path);

    /// Canonical text: top-level keys first, then one block per section, keys sorted.
    std::string to_text() const;

    void set(const std::string& key, std::string value);
    /// Applies `key=value`.
    void set_assignment(const std::string& assignment);
    bool contains(const std::string& key) const { return values_.count(key) != 0; }
    const std::map<std::string, std::string>& values() const { return values_; }

    /// Looks up `scope.key`, then `key`.
    std::optional<std::string> find(const std::string& scope, const std::string& key) const;
    std::string get_string(const std::string& scope, const std::string& key, const std::string& fallback) const;
    std::string require_string(const std::string& scope, const std::string& key) const;
    double get_double(const std::string& scope, const std::string& key, double fallback) const;
    double require_double(const std::string& scope, const std::string& key) const;
    long long get_int(const std::string& scope, const std::string& key, long long fallback) const;
    bool get_bool(const std::string& scope, const std::string& key, bool fallback) const;

    bool operator==(const Config&) const = default;

  private:
    std::map<std::string, std::string> values_;
};

double parse_double(const std::string& text, const std::string& field);

/// Comma or space separated numbers; `a..b:n` (n linear points), `2^a..2^b` (powers of two),
/// `log:a..b:n` (n log-spaced points).
std::vector<double> parse_grid(const std::string& text, const std::string& field);

using Metadata = std::vector<std::pair<std::string, std::string>>;

struct CsvTable {
    Metadata metadata;
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    void add_row(const std::vector<double>& values);
};

std::string to_csv(const CsvTable& table);
void write_text(const std::filesystem::path& path, const std::string& text);

struct PlotSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

struct PlotLine {
    double slope = 0.0;
    double intercept = 0.0;  // natural log
};

/// Static log-log plot; rejects an empty series set or nonpositive data.
std::string loglog_svg(const std::string& title, const std::vector<PlotSeries>& series,
                       const std::optional<PlotLine>& fit = std::nullopt);

}  // namespace latdisc
