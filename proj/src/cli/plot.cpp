#include "ecgli/cli/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace ecgli::cli {

namespace {

constexpr double kPanelW = 220.0, kPanelH = 120.0, kPad = 12.0;
const char* kColors[] = {"#000000", "#d62728", "#1f77b4", "#2ca02c", "#9467bd"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

std::string render_signals_svg(const std::vector<pecg::PecgSignal>& signals) {
  if (signals.empty()) throw InvalidArgument("plot: no signals");
  const auto& first = signals.front();
  for (const auto& s : signals) {
    s.validate();
    if (s.n_leads != first.n_leads || s.n_t != first.n_t) throw InvalidArgument("plot: signals have different shapes");
  }
  const std::size_t n = first.n_leads;
  const auto cols = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n))));
  const std::size_t rows = (n + cols - 1) / cols;
  const double width = cols * kPanelW, height = rows * kPanelH;
  std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(width) + "\" height=\"" + num(height) +
                    "\" viewBox=\"0 0 " + num(width) + " " + num(height) + "\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (std::size_t l = 0; l < n; ++l) {
    const double x0 = (l % cols) * kPanelW, y0 = (l / cols) * kPanelH;
    double lo = INFINITY, hi = -INFINITY;
    for (const auto& s : signals) {
      for (double v : s.lead(l)) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    }
    if (!(hi > lo)) {
      lo -= 1.0;
      hi += 1.0;
    }
    svg += "<g id=\"lead" + std::to_string(l) + "\">\n";
    svg += "<rect x=\"" + num(x0 + kPad) + "\" y=\"" + num(y0 + kPad) + "\" width=\"" + num(kPanelW - 2 * kPad) +
           "\" height=\"" + num(kPanelH - 2 * kPad) + "\" fill=\"none\" stroke=\"#cccccc\"/>\n";
    svg += "<text x=\"" + num(x0 + kPad + 2) + "\" y=\"" + num(y0 + kPad + 10) +
           "\" font-size=\"9\" font-family=\"sans-serif\">lead " + std::to_string(l) + "</text>\n";
    for (std::size_t k = 0; k < signals.size(); ++k) {
      const auto lead = signals[k].lead(l);
      std::string pts;
      for (std::size_t j = 0; j < lead.size(); ++j) {
        const double fx = static_cast<double>(j) / static_cast<double>(lead.size() - 1);
        const double fy = (lead[j] - lo) / (hi - lo);
        if (j) pts += ' ';
        pts += num(x0 + kPad + fx * (kPanelW - 2 * kPad)) + "," + num(y0 + kPanelH - kPad - fy * (kPanelH - 2 * kPad));
      }
      svg += std::string("<polyline fill=\"none\" stroke=\"") + kColors[k % 5] + "\" stroke-width=\"1\"" +
             (k == 0 ? " stroke-dasharray=\"4,2\"" : "") + " points=\"" + pts + "\"/>\n";
    }
    svg += "</g>\n";
  }
  svg += "</svg>\n";
  return svg;
}

void plot_signals(const std::vector<std::filesystem::path>& csv_paths, const std::filesystem::path& out) {
  std::vector<pecg::PecgSignal> signals;
  for (const auto& p : csv_paths) signals.push_back(pecg::read_signal_csv(p));
  const std::string svg = render_signals_svg(signals);
  std::ofstream f(out, std::ios::binary);
  if (!f) throw IoError("cannot open " + out.string() + " for writing");
  f << svg;
  if (!f) throw IoError("write failed: " + out.string());
}

}  // namespace ecgli::cli
