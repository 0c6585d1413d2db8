#include "fisherlab/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <utility>
#include <vector>

#include "fisherlab/errors.hpp"

namespace fisherlab {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 420.0;
constexpr double kMargin = 60.0;
constexpr const char* kColours[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

bool has_column(const Table& t, const std::string& name) {
  const auto& c = t.columns();
  return std::find(c.begin(), c.end(), name) != c.end();
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else if (c == '&') out += "&amp;";
    else out += c;
  }
  return out;
}

}  // namespace

PlotSpec default_plot(const Table& t, char kind) {
  // Candidate (x, y, log_x) triples per experiment, tried in order.
  struct Axes {
    const char* x;
    const char* y;
    bool log_x;
  };
  std::vector<Axes> options;
  switch (kind) {
    case 'a': options = {{"n", "median_ratio", true}, {"n", "ratio", true}, {"C", "n_star", false}}; break;
    case 'b': options = {{"rho", "error_rate", false}, {"rho_sqrt_n", "error_rate", false},
                         {"seed", "slope_hat", false}}; break;
    case 'c': options = {{"sigma", "median_ratio", false}, {"sigma", "ratio", false}}; break;
    case 'd': options = {{"tau", "treatment_lambda_min", false}, {"step", "lambda_min", false}}; break;
    case 'e': options = {{"step", "gap", false}}; break;
    default: throw InvalidInput(std::string("unknown plot kind '") + kind + "'");
  }
  for (const Axes& a : options) {
    if (!has_column(t, a.x) || !has_column(t, a.y)) continue;
    PlotSpec s{a.x, a.y, {}, a.log_x, "experiment " + t.experiment() + ", " + t.name()};
    for (const char* g : {"arm", "phase"})
      if (has_column(t, g)) s.group = g;
    return s;
  }
  throw InvalidInput("table '" + t.name() + "' has no columns to plot for kind '" + kind + "'");
}

std::string render_svg(const Table& t, const PlotSpec& spec) {
  const std::vector<double> xs = t.numeric_column(spec.x);
  const std::vector<double> ys = t.numeric_column(spec.y);
  const std::size_t gi = spec.group.empty() ? 0 : t.column_index(spec.group);

  std::map<std::string, std::vector<std::pair<double, double>>> series;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    double x = xs[i];
    if (spec.log_x) x = x > 0.0 ? std::log10(x) : NAN;
    if (!std::isfinite(x) || !std::isfinite(ys[i])) continue;
    const std::string key = spec.group.empty() ? std::string() : format_cell(t.rows()[i][gi]);
    series[key].emplace_back(x, ys[i]);
  }

  double x0 = 0.0, x1 = 1.0, y0 = 0.0, y1 = 1.0;
  bool first = true;
  for (const auto& [name, pts] : series)
    for (const auto& [x, y] : pts) {
      if (first) x0 = x1 = x, y0 = y1 = y, first = false;
      x0 = std::min(x0, x), x1 = std::max(x1, x);
      y0 = std::min(y0, y), y1 = std::max(y1, y);
    }
  if (x1 - x0 < 1e-300) x0 -= 0.5, x1 += 0.5;
  if (y1 - y0 < 1e-300) y0 -= 0.5, y1 += 0.5;
  const double pw = kWidth - 2 * kMargin;
  const double ph = kHeight - 2 * kMargin;
  auto px = [&](double x) { return kMargin + (x - x0) / (x1 - x0) * pw; };
  auto py = [&](double y) { return kHeight - kMargin - (y - y0) / (y1 - y0) * ph; };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\">" << escape(spec.title)
     << "</text>\n";
  os << "<rect x=\"" << kMargin << "\" y=\"" << kMargin << "\" width=\"" << pw << "\" height=\""
     << ph << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double fx = x0 + (x1 - x0) * k / 4.0;
    const double fy = y0 + (y1 - y0) * k / 4.0;
    os << "<text x=\"" << px(fx) << "\" y=\"" << kHeight - kMargin + 16
       << "\" text-anchor=\"middle\">" << fmt(spec.log_x ? std::pow(10.0, fx) : fx) << "</text>\n";
    os << "<text x=\"" << kMargin - 6 << "\" y=\"" << py(fy) + 4 << "\" text-anchor=\"end\">"
       << fmt(fy) << "</text>\n";
  }
  os << "<text x=\"" << kWidth / 2 << "\" y=\"" << kHeight - 16 << "\" text-anchor=\"middle\">"
     << escape(spec.x) << (spec.log_x ? " (log)" : "") << "</text>\n";
  os << "<text x=\"16\" y=\"" << kHeight / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
     << kHeight / 2 << ")\">" << escape(spec.y) << "</text>\n";

  std::size_t c = 0;
  for (const auto& [name, pts] : series) {
    const char* colour = kColours[c % std::size(kColours)];
    for (const auto& [x, y] : pts)
      os << "<circle cx=\"" << px(x) << "\" cy=\"" << py(y) << "\" r=\"2.5\" fill=\"" << colour
         << "\"/>\n";
    if (!name.empty())
      os << "<text x=\"" << kWidth - kMargin - 4 << "\" y=\"" << kMargin + 14 + 14 * c
         << "\" text-anchor=\"end\" fill=\"" << colour << "\">" << escape(name) << "</text>\n";
    ++c;
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace fisherlab
