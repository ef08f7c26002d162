#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace dirac::cli {

std::string version_string();

struct Provenance {
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string version;
  std::string command;

  std::string line() const;  // "diracsim <version> command=... config_hash=... seed=..."
};

// Shortest round-trip decimal; "nan"/"inf" spelled out.
std::string fmt(double x);
std::string csv_quote(const std::string& field);

// RFC-4180 quoting, LF line ends, one leading "#" provenance line.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> columns) : columns_(std::move(columns)) {}
  void add(std::vector<std::string> row);
  std::size_t rows() const { return rows_.size(); }
  std::string render(const Provenance& p) const;

 private:
  std::vector<std::string> columns_;
  std::vector<std::vector<std::string>> rows_;
};

// Minimal SVG line/scatter/heatmap plot in data coordinates.
class SvgPlot {
 public:
  SvgPlot(std::string title, std::string xlabel, std::string ylabel, double width = 640, double height = 420);
  void set_ranges(double x0, double x1, double y0, double y1);
  void line(const std::vector<double>& x, const std::vector<double>& y, const std::string& colour,
            const std::string& label = {});
  void points(const std::vector<double>& x, const std::vector<double>& y, const std::string& colour,
              const std::string& label = {}, const std::vector<double>& err = {});
  void cell(double x0, double x1, double y0, double y1, const std::string& colour);
  std::string render(const Provenance& p) const;

 private:
  double px(double x) const;
  double py(double y) const;

  std::string title_, xlabel_, ylabel_;
  double w_, h_;
  double x0_ = 0, x1_ = 1, y0_ = 0, y1_ = 1;
  std::vector<std::string> body_;
  std::vector<std::pair<std::string, std::string>> legend_;
};

void write_file(const std::filesystem::path& path, const std::string& content);

}  // namespace dirac::cli
