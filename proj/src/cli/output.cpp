#include "dirac/cli/output.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "dirac/errors.hpp"

#ifndef DIRAC_VERSION_STRING
#define DIRAC_VERSION_STRING "0.1.0-unknown"
#endif

namespace dirac::cli {

std::string version_string() { return DIRAC_VERSION_STRING; }

std::string Provenance::line() const {
  return "diracsim " + version + " command=" + command + " config_hash=" + config_hash +
         " seed=" + std::to_string(seed);
}

std::string fmt(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

std::string csv_quote(const std::string& f) {
  if (f.find_first_of(",\"\r\n") == std::string::npos) return f;
  std::string out = "\"";
  for (char c : f) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

void CsvTable::add(std::vector<std::string> row) {
  if (row.size() != columns_.size()) throw Error(ErrorKind::invalid_argument, "csv row width mismatch");
  rows_.push_back(std::move(row));
}

std::string CsvTable::render(const Provenance& p) const {
  std::string out = "# " + p.line() + "\n";
  auto emit = [&](const std::vector<std::string>& r) {
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (i) out += ',';
      out += csv_quote(r[i]);
    }
    out += "\n";
  };
  emit(columns_);
  for (const auto& r : rows_) emit(r);
  return out;
}

namespace {

std::string esc(const std::string& s) {
  std::string o;
  for (char c : s) {
    switch (c) {
      case '<': o += "&lt;"; break;
      case '>': o += "&gt;"; break;
      case '&': o += "&amp;"; break;
      case '"': o += "&quot;"; break;
      default: o += c;
    }
  }
  return o;
}

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", x);
  return buf;
}

constexpr double margin_l = 70, margin_r = 150, margin_t = 40, margin_b = 50;

}  // namespace

SvgPlot::SvgPlot(std::string title, std::string xlabel, std::string ylabel, double width, double height)
    : title_(std::move(title)), xlabel_(std::move(xlabel)), ylabel_(std::move(ylabel)), w_(width), h_(height) {}

void SvgPlot::set_ranges(double x0, double x1, double y0, double y1) {
  if (x1 == x0) x1 = x0 + 1;
  if (y1 == y0) y1 = y0 + 1;
  x0_ = x0, x1_ = x1, y0_ = y0, y1_ = y1;
}

double SvgPlot::px(double x) const { return margin_l + (x - x0_) / (x1_ - x0_) * (w_ - margin_l - margin_r); }
double SvgPlot::py(double y) const { return h_ - margin_b - (y - y0_) / (y1_ - y0_) * (h_ - margin_t - margin_b); }

void SvgPlot::line(const std::vector<double>& x, const std::vector<double>& y, const std::string& colour,
                   const std::string& label) {
  std::string pts;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) continue;
    pts += num(px(x[i])) + "," + num(py(y[i])) + " ";
  }
  body_.push_back("<polyline fill=\"none\" stroke=\"" + colour + "\" stroke-width=\"1.5\" points=\"" + pts + "\"/>");
  if (!label.empty()) legend_.emplace_back(label, colour);
}

void SvgPlot::points(const std::vector<double>& x, const std::vector<double>& y, const std::string& colour,
                     const std::string& label, const std::vector<double>& err) {
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) continue;
    if (i < err.size() && std::isfinite(err[i]) && err[i] > 0)
      body_.push_back("<line x1=\"" + num(px(x[i])) + "\" x2=\"" + num(px(x[i])) + "\" y1=\"" +
                      num(py(y[i] - err[i])) + "\" y2=\"" + num(py(y[i] + err[i])) + "\" stroke=\"" + colour + "\"/>");
    body_.push_back("<circle cx=\"" + num(px(x[i])) + "\" cy=\"" + num(py(y[i])) + "\" r=\"2.5\" fill=\"" + colour +
                    "\"/>");
  }
  if (!label.empty()) legend_.emplace_back(label, colour);
}

void SvgPlot::cell(double x0, double x1, double y0, double y1, const std::string& colour) {
  const double a = px(x0), b = px(x1), c = py(y1), d = py(y0);
  body_.push_back("<rect x=\"" + num(std::min(a, b)) + "\" y=\"" + num(std::min(c, d)) + "\" width=\"" +
                  num(std::abs(b - a)) + "\" height=\"" + num(std::abs(d - c)) + "\" fill=\"" + colour + "\" shape-rendering=\"crispEdges\"/>");
}

std::string SvgPlot::render(const Provenance& p) const {
  std::ostringstream os;
  os << "<!-- " << esc(p.line()) << " -->\n";
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w_ << "\" height=\"" << h_ << "\" viewBox=\"0 0 "
     << w_ << " " << h_ << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << w_ / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"13\">" << esc(title_)
     << "</text>\n";
  for (const auto& b : body_) os << b << "\n";
  const double L = margin_l, R = w_ - margin_r, T = margin_t, B = h_ - margin_b;
  os << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << R - L << "\" height=\"" << B - T
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = x0_ + (x1_ - x0_) * i / 4, yv = y0_ + (y1_ - y0_) * i / 4;
    char bx[32], by[32];
    std::snprintf(bx, sizeof bx, "%.3g", xv);
    std::snprintf(by, sizeof by, "%.3g", yv);
    os << "<text x=\"" << num(px(xv)) << "\" y=\"" << B + 15 << "\" text-anchor=\"middle\">" << bx << "</text>\n";
    os << "<text x=\"" << L - 5 << "\" y=\"" << num(py(yv) + 4) << "\" text-anchor=\"end\">" << by << "</text>\n";
  }
  os << "<text x=\"" << (L + R) / 2 << "\" y=\"" << h_ - 12 << "\" text-anchor=\"middle\">" << esc(xlabel_)
     << "</text>\n";
  os << "<text x=\"15\" y=\"" << (T + B) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 15 " << (T + B) / 2
     << ")\">" << esc(ylabel_) << "</text>\n";
  for (std::size_t i = 0; i < legend_.size(); ++i) {
    const double y = T + 10 + 16 * i;
    os << "<rect x=\"" << R + 10 << "\" y=\"" << y - 8 << "\" width=\"10\" height=\"10\" fill=\""
       << legend_[i].second << "\"/>\n";
    os << "<text x=\"" << R + 25 << "\" y=\"" << y + 1 << "\">" << esc(legend_[i].first) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace dirac::cli
