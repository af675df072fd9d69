#pragma once

// Self-contained SVG charts from trace CSVs: one point series per direction,
// fitted curves lambda + c/n where a fit exists, and the shared asymptote.

#include <cstdio>
#include <fstream>
#include <sstream>

#include "qce/estimator.hpp"

namespace qce {

struct csv_parse_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TraceTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  std::string status;  // from the trailing "# status: ..." line, if present

  std::size_t column(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
      if (columns[i] == name) return i;
    throw csv_parse_error("missing column '" + name + "'");
  }
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      cells.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  cells.push_back(cur);
  return cells;
}

inline double parse_cell(const std::string& cell, int line) {
  if (cell == "nan" || cell == "-nan") return std::numeric_limits<double>::quiet_NaN();
  try {
    std::size_t pos = 0;
    const double x = std::stod(cell, &pos);
    if (pos != cell.size()) throw std::invalid_argument(cell);
    return x;
  } catch (const std::exception&) {
    throw csv_parse_error("line " + std::to_string(line) + ": not a number: '" + cell + "'");
  }
}

}  // namespace detail

inline TraceTable read_trace_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw csv_parse_error("cannot open " + path);
  TraceTable t;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      const std::string tag = "# status:";
      if (line.rfind(tag, 0) == 0) {
        std::string s = line.substr(tag.size());
        while (!s.empty() && s.front() == ' ') s.erase(s.begin());
        t.status = s;
      }
      continue;
    }
    const auto cells = detail::split_csv_line(line);
    if (t.columns.empty()) {
      for (const std::string& c : cells)
        if (c.empty()) throw csv_parse_error("line " + std::to_string(lineno) + ": empty header cell");
      t.columns = cells;
      continue;
    }
    if (cells.size() != t.columns.size())
      throw csv_parse_error("line " + std::to_string(lineno) + ": expected " +
                            std::to_string(t.columns.size()) + " cells, got " +
                            std::to_string(cells.size()));
    std::vector<double> row;
    row.reserve(cells.size());
    for (const std::string& c : cells) row.push_back(detail::parse_cell(c, lineno));
    t.rows.push_back(std::move(row));
  }
  if (t.columns.empty()) throw csv_parse_error("empty CSV: " + path);
  return t;
}

namespace detail {

inline std::string fmt2(double x) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.2f", x);
  return buf;
}

inline std::string fmt_tick(double x) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

// largest {1,2,5}*10^k step not above `raw`
inline double nice_step(double raw) {
  if (raw <= 0.0) return 1.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double r = raw / mag;
  if (r >= 5.0) return 5.0 * mag;
  if (r >= 2.0) return 2.0 * mag;
  return mag;
}

struct Series {
  std::string name;
  std::vector<std::pair<double, double>> pts;
};

}  // namespace detail

// Renders the table's mean_growth_* series (falling back to mean_Dn_*) against
// n. When `with_fit` and growth data admits it, adds lambda + c/n curves per
// series plus the shared dashed asymptote. Skips fit curves otherwise.
inline void emit_chart(const TraceTable& table, const std::string& svg_path, bool with_fit) {
  if (table.rows.size() < 2)
    throw csv_parse_error("need at least 2 data rows to chart, got " +
                          std::to_string(table.rows.size()));
  const std::size_t ncol = table.column("n");

  std::vector<std::size_t> series_cols;
  std::string quantity = "mean_growth";
  for (std::size_t i = 0; i < table.columns.size(); ++i)
    if (table.columns[i].rfind("mean_growth", 0) == 0) series_cols.push_back(i);
  bool growth_series = !series_cols.empty();
  if (!growth_series) {
    quantity = "mean_Dn";
    for (std::size_t i = 0; i < table.columns.size(); ++i)
      if (table.columns[i].rfind("mean_Dn", 0) == 0 &&
          table.columns[i].find("loglog") == std::string::npos)
        series_cols.push_back(i);
  }
  if (series_cols.empty()) throw csv_parse_error("no mean_growth/mean_Dn columns to chart");

  const bool halted = table.status.rfind("halted", 0) == 0;
  std::vector<detail::Series> series;
  std::vector<std::vector<std::pair<int, double>>> fit_pts;
  for (std::size_t sc : series_cols) {
    detail::Series s;
    s.name = table.columns[sc];
    std::vector<std::pair<int, double>> fp;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
      const double n = table.rows[r][ncol];
      const double y = table.rows[r][sc];
      if (std::isnan(y)) continue;
      s.pts.emplace_back(n, y);
      const bool last_halted_row = halted && r + 1 == table.rows.size();
      if (n >= 2 && !last_halted_row) fp.emplace_back(static_cast<int>(n), y);
    }
    series.push_back(std::move(s));
    fit_pts.push_back(std::move(fp));
  }

  std::optional<ExponentEstimate> fit;
  if (with_fit && growth_series) {
    try {
      fit = fit_exponent(fit_pts);
    } catch (const std::exception&) {
      fit.reset();
    }
  }

  double xlo = std::numeric_limits<double>::infinity(), xhi = -xlo;
  double ylo = xlo, yhi = -xlo;
  for (const auto& s : series)
    for (auto [x, y] : s.pts) {
      xlo = std::min(xlo, x); xhi = std::max(xhi, x);
      ylo = std::min(ylo, y); yhi = std::max(yhi, y);
    }
  if (!(xhi > -std::numeric_limits<double>::infinity()))
    throw csv_parse_error("no finite data points to chart");
  if (fit) { ylo = std::min(ylo, fit->lambda); yhi = std::max(yhi, fit->lambda); }
  if (xhi == xlo) { xlo -= 0.5; xhi += 0.5; }
  if (yhi == ylo) { ylo -= 0.5; yhi += 0.5; }
  const double ypad = 0.08 * (yhi - ylo);
  ylo -= ypad; yhi += ypad;

  const double W = 720, H = 480, ml = 72, mr = 24, mt = 28, mb = 52;
  auto X = [&](double x) { return ml + (x - xlo) / (xhi - xlo) * (W - ml - mr); };
  auto Y = [&](double y) { return H - mb - (y - ylo) / (yhi - ylo) * (H - mt - mb); };

  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                  "#ff7f0e", "#8c564b"};
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
     << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
  os << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";

  const double xstep = detail::nice_step((xhi - xlo) / 6.0);
  const double ystep = detail::nice_step((yhi - ylo) / 6.0);
  os << "<g font-family=\"sans-serif\" font-size=\"12\" fill=\"#333\">\n";
  for (double x = std::ceil(xlo / xstep) * xstep; x <= xhi + 1e-9 * xstep; x += xstep) {
    os << "<line x1=\"" << detail::fmt2(X(x)) << "\" y1=\"" << detail::fmt2(Y(ylo)) << "\" x2=\""
       << detail::fmt2(X(x)) << "\" y2=\"" << detail::fmt2(Y(yhi))
       << "\" stroke=\"#ddd\" stroke-width=\"1\"/>\n";
    os << "<text x=\"" << detail::fmt2(X(x)) << "\" y=\"" << detail::fmt2(H - mb + 18)
       << "\" text-anchor=\"middle\">" << detail::fmt_tick(x) << "</text>\n";
  }
  for (double y = std::ceil(ylo / ystep) * ystep; y <= yhi + 1e-9 * ystep; y += ystep) {
    os << "<line x1=\"" << detail::fmt2(X(xlo)) << "\" y1=\"" << detail::fmt2(Y(y)) << "\" x2=\""
       << detail::fmt2(X(xhi)) << "\" y2=\"" << detail::fmt2(Y(y))
       << "\" stroke=\"#ddd\" stroke-width=\"1\"/>\n";
    os << "<text x=\"" << detail::fmt2(ml - 8) << "\" y=\"" << detail::fmt2(Y(y) + 4)
       << "\" text-anchor=\"end\">" << detail::fmt_tick(y) << "</text>\n";
  }
  os << "<text x=\"" << detail::fmt2(ml + (W - ml - mr) / 2) << "\" y=\"" << detail::fmt2(H - 12)
     << "\" text-anchor=\"middle\">n</text>\n";
  os << "<text x=\"18\" y=\"" << detail::fmt2(mt + (H - mt - mb) / 2)
     << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
     << detail::fmt2(mt + (H - mt - mb) / 2) << ")\">" << quantity << "</text>\n";
  os << "</g>\n";
  os << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << (W - ml - mr) << "\" height=\""
     << (H - mt - mb) << "\" fill=\"none\" stroke=\"#333\" stroke-width=\"1\"/>\n";

  if (fit) {
    const double ya = Y(fit->lambda);
    os << "<line x1=\"" << detail::fmt2(X(xlo)) << "\" y1=\"" << detail::fmt2(ya) << "\" x2=\""
       << detail::fmt2(X(xhi)) << "\" y2=\"" << detail::fmt2(ya)
       << "\" stroke=\"#555\" stroke-width=\"1\" stroke-dasharray=\"6,4\"/>\n";
    os << "<text x=\"" << detail::fmt2(X(xhi) - 4) << "\" y=\"" << detail::fmt2(ya - 6)
       << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\" fill=\"#555\">"
       << "lambda = " << detail::fmt_tick(fit->lambda) << "</text>\n";
  }

  for (std::size_t si = 0; si < series.size(); ++si) {
    const char* color = palette[si % 6];
    if (fit && si < fit->transients.size()) {
      os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
      const double a = std::max(xlo, 1.0);
      for (int k = 0; k <= 200; ++k) {
        const double x = a + (xhi - a) * k / 200.0;
        const double y = fit->lambda + fit->transients[si] / x;
        if (y < ylo || y > yhi) continue;
        os << detail::fmt2(X(x)) << "," << detail::fmt2(Y(y)) << " ";
      }
      os << "\"/>\n";
    }
    for (auto [x, y] : series[si].pts)
      os << "<circle cx=\"" << detail::fmt2(X(x)) << "\" cy=\"" << detail::fmt2(Y(y))
         << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    os << "<g font-family=\"sans-serif\" font-size=\"12\">"
       << "<circle cx=\"" << detail::fmt2(ml + 12) << "\" cy=\"" << detail::fmt2(mt + 14 + 16 * si)
       << "\" r=\"3\" fill=\"" << color << "\"/>"
       << "<text x=\"" << detail::fmt2(ml + 22) << "\" y=\"" << detail::fmt2(mt + 18 + 16 * si)
       << "\">" << series[si].name << "</text></g>\n";
  }
  os << "</svg>\n";

  std::ofstream out(svg_path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + svg_path);
  out << os.str();
}

inline void emit_chart_file(const std::string& csv_path, const std::string& svg_path,
                            bool with_fit) {
  emit_chart(read_trace_csv(csv_path), svg_path, with_fit);
}

}  // namespace qce
