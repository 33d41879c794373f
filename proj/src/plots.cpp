#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "tdarep/csv.hpp"
#include "tdarep/error.hpp"
#include "tdarep/harness.hpp"

namespace fs = std::filesystem;

namespace tdarep {

namespace {

struct BoxStats {
  double lo = 0.0, q1 = 0.0, median = 0.0, q3 = 0.0, hi = 0.0;
  std::vector<double> outliers;
};

double quantile(const std::vector<double>& sorted, double p) {
  const double h = p * static_cast<double>(sorted.size() - 1);
  const auto i = static_cast<std::size_t>(std::floor(h));
  if (i + 1 >= sorted.size()) return sorted.back();
  return sorted[i] + (h - static_cast<double>(i)) * (sorted[i + 1] - sorted[i]);
}

BoxStats box_stats(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  BoxStats b;
  b.q1 = quantile(v, 0.25);
  b.median = quantile(v, 0.5);
  b.q3 = quantile(v, 0.75);
  const double fence_lo = b.q1 - 1.5 * (b.q3 - b.q1);
  const double fence_hi = b.q3 + 1.5 * (b.q3 - b.q1);
  b.lo = b.q1;
  b.hi = b.q3;
  for (double x : v) {
    if (x < fence_lo || x > fence_hi) {
      b.outliers.push_back(x);
    } else {
      b.lo = std::min(b.lo, x);
      b.hi = std::max(b.hi, x);
    }
  }
  return b;
}

struct Group {
  std::string label;
  std::vector<double> values;
};

struct Panel {
  std::string title;
  std::vector<Group> groups;

  bool empty() const {
    return std::all_of(groups.begin(), groups.end(), [](const Group& g) { return g.values.empty(); });
  }
};

const char* kColors[] = {"#8da0cb", "#fc8d62", "#66c2a5", "#e78ac3", "#a6d854"};

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", x);
  return buf;
}

// Panels laid out row-major with `columns` per row; empty panels are skipped
// by the caller.
std::string render_svg(const std::string& title, const std::vector<Panel>& panels, std::size_t columns) {
  const double pw = 240, ph = 200, ml = 50, mt = 40, gap = 30;
  const std::size_t rows = (panels.size() + columns - 1) / columns;
  const double width = ml + static_cast<double>(columns) * (pw + gap);
  const double height = mt + static_cast<double>(rows) * (ph + gap + 20);
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
    << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<text x=\"" << width / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << title << "</text>\n";
  for (std::size_t p = 0; p < panels.size(); ++p) {
    const auto& panel = panels[p];
    const double x0 = ml + static_cast<double>(p % columns) * (pw + gap);
    const double y0 = mt + static_cast<double>(p / columns) * (ph + gap + 20) + 15;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& g : panel.groups) {
      for (double v : g.values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    }
    if (!(hi > lo)) {
      lo -= 0.5;
      hi += 0.5;
    }
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;
    auto y = [&](double v) { return y0 + ph - (v - lo) / (hi - lo) * ph; };
    s << "<text x=\"" << x0 + pw / 2 << "\" y=\"" << y0 - 5 << "\" text-anchor=\"middle\">" << panel.title
      << "</text>\n";
    s << "<rect x=\"" << x0 << "\" y=\"" << y0 << "\" width=\"" << pw << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"#444\"/>\n";
    for (int t = 0; t <= 4; ++t) {
      const double v = lo + (hi - lo) * t / 4.0;
      s << "<text x=\"" << x0 - 4 << "\" y=\"" << y(v) + 4 << "\" text-anchor=\"end\">" << num(v) << "</text>\n";
    }
    const double slot = pw / static_cast<double>(panel.groups.size());
    for (std::size_t g = 0; g < panel.groups.size(); ++g) {
      const auto& group = panel.groups[g];
      const double cx = x0 + slot * (static_cast<double>(g) + 0.5);
      s << "<text x=\"" << cx << "\" y=\"" << y0 + ph + 14 << "\" text-anchor=\"middle\">" << group.label
        << "</text>\n";
      if (group.values.empty()) continue;
      const auto b = box_stats(group.values);
      const double bw = slot * 0.5;
      const char* color = kColors[g % 5];
      s << "<line x1=\"" << cx << "\" x2=\"" << cx << "\" y1=\"" << y(b.lo) << "\" y2=\"" << y(b.hi)
        << "\" stroke=\"#222\"/>\n";
      s << "<rect x=\"" << cx - bw / 2 << "\" y=\"" << y(b.q3) << "\" width=\"" << bw << "\" height=\""
        << std::max(y(b.q1) - y(b.q3), 0.5) << "\" fill=\"" << color << "\" stroke=\"#222\"/>\n";
      s << "<line x1=\"" << cx - bw / 2 << "\" x2=\"" << cx + bw / 2 << "\" y1=\"" << y(b.median) << "\" y2=\""
        << y(b.median) << "\" stroke=\"#000\" stroke-width=\"2\"/>\n";
      for (double o : b.outliers) {
        s << "<circle cx=\"" << cx << "\" cy=\"" << y(o) << "\" r=\"2.5\" fill=\"none\" stroke=\"#222\"/>\n";
      }
    }
  }
  s << "</svg>\n";
  return s.str();
}

std::string panels_csv(const std::vector<Panel>& panels) {
  std::ostringstream s;
  s << "panel,group,value\n";
  for (const auto& p : panels) {
    for (const auto& g : p.groups) {
      for (double v : g.values) s << p.title << ',' << g.label << ',' << csv::format_double(v) << '\n';
    }
  }
  return s.str();
}

const GofReport* find_report(const ExperimentResult& r, const std::string& variant, int rank, std::size_t grid,
                             std::size_t burn) {
  for (const auto& g : r.gof) {
    if (g.tags == GofTags{variant, grid, burn, rank}) return &g;
  }
  return nullptr;
}

}  // namespace

std::vector<fs::path> emit_plots(const ExperimentResult& result, const fs::path& dir) {
  if (result.replications.empty() || result.gof.empty()) throw InvalidArgument("emit_plots: empty result");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ResourceError("cannot create " + dir.string() + ": " + ec.message());

  const auto& c = result.config;
  std::vector<fs::path> written;
  nlohmann::json omitted = nlohmann::json::array();
  auto emit = [&](const std::string& stem, const std::string& title, std::vector<Panel> panels,
                  std::size_t columns) {
    std::vector<Panel> kept;
    for (auto& p : panels) {
      if (p.empty()) {
        omitted.push_back({{"figure", stem}, {"panel", p.title}});
      } else {
        kept.push_back(std::move(p));
      }
    }
    if (kept.empty()) return;
    csv::write_atomic(dir / (stem + ".svg"), render_svg(title, kept, std::min(columns, kept.size())));
    csv::write_atomic(dir / (stem + ".csv"), panels_csv(kept));
    written.push_back(dir / (stem + ".svg"));
    written.push_back(dir / (stem + ".csv"));
  };

  for (int rank : c.homology_ranks) {
    const std::string h = "H" + std::to_string(rank);
    for (const std::string metric : {"bottleneck", "wasserstein"}) {
      std::vector<Panel> panels;
      for (auto grid : c.grid_sizes) {
        for (auto burn : c.burn_ins) {
          Panel p;
          p.title = "Grid " + std::to_string(grid) + " Step " + std::to_string(burn);
          for (auto v : c.variants) {
            Group g{to_string(v), {}};
            if (const auto* r = find_report(result, to_string(v), rank, grid, burn)) {
              for (const auto& row : r->rows) g.values.push_back(metric == "bottleneck" ? row.bottleneck : row.wasserstein);
            }
            p.groups.push_back(std::move(g));
          }
          panels.push_back(std::move(p));
        }
      }
      emit("criterion1_" + metric + "_h" + std::to_string(rank), h + " " + metric + " distance, real vs simulated",
           std::move(panels), c.burn_ins.size());
    }

    for (auto grid : c.grid_sizes) {
      for (auto burn : c.burn_ins) {
        std::vector<Panel> panels;
        for (std::size_t k = 0; k < c.gof.orders.size(); ++k) {
          Panel p;
          p.title = "NN" + std::to_string(c.gof.orders[k]) + " mean distance";
          Group real{"real", {}};
          for (const auto& rep : result.replications) {
            if (!rep.ok || !rep.real_rank(rank)) continue;
            const auto& pd = *rep.real_rank(rank);
            if (pd.pairs.size() > static_cast<std::size_t>(c.gof.orders[k])) {
              real.values.push_back(nn_stats(pd, {c.gof.orders[k]}, c.gof.space)[0]);
            }
          }
          p.groups.push_back(std::move(real));
          for (auto v : c.variants) {
            Group g{to_string(v), {}};
            if (const auto* r = find_report(result, to_string(v), rank, grid, burn)) {
              for (const auto& nn : r->nn_sim) {
                if (std::isfinite(nn[k])) g.values.push_back(nn[k]);
              }
            }
            p.groups.push_back(std::move(g));
          }
          panels.push_back(std::move(p));
        }
        const auto columns = panels.size();
        emit("criterion2_h" + std::to_string(rank) + "_g" + std::to_string(grid) + "_b" + std::to_string(burn),
             h + " nearest-neighbour means, Grid " + std::to_string(grid) + " Step " + std::to_string(burn),
             std::move(panels), columns);
      }
    }
  }

  std::string long_csv = gof_csv_header();
  for (const auto& r : result.gof) long_csv += gof_to_csv_rows(r);
  csv::write_atomic(dir / "gof_long.csv", long_csv);
  written.push_back(dir / "gof_long.csv");

  nlohmann::json files = nlohmann::json::array();
  for (const auto& f : written) files.push_back(f.filename().string());
  csv::write_atomic(dir / "plots.json", nlohmann::json{{"files", files}, {"omitted_panels", omitted}}.dump(2) + "\n");
  written.push_back(dir / "plots.json");
  return written;
}

}  // namespace tdarep
