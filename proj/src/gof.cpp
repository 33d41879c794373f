#include "tdarep/gof.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <queue>
#include <sstream>

#include "tdarep/csv.hpp"
#include "tdarep/error.hpp"

namespace tdarep {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double linf(const PersistencePair& a, const PersistencePair& b) {
  return std::max(std::abs(a.birth - b.birth), std::abs(a.death - b.death));
}

double to_diagonal(const PersistencePair& a) { return std::abs(a.death - a.birth) / 2.0; }

void check_conventions(const PersistenceDiagram& a, const PersistenceDiagram& b) {
  if (a.convention.direction != b.convention.direction) {
    throw InvalidArgument("diagrams use different filtration directions");
  }
}

// Square cost matrix over A ∪ diag(B) versus B ∪ diag(A).
std::vector<double> augmented_costs(const PersistenceDiagram& a, const PersistenceDiagram& b, std::size_t& n) {
  const std::size_t na = a.pairs.size();
  const std::size_t nb = b.pairs.size();
  n = na + nb;
  std::vector<double> c(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double v = 0.0;
      if (i < na && j < nb) {
        v = linf(a.pairs[i], b.pairs[j]);
      } else if (i < na) {
        v = to_diagonal(a.pairs[i]);
      } else if (j < nb) {
        v = to_diagonal(b.pairs[j]);
      }
      c[i * n + j] = v;
    }
  }
  return c;
}

// Hopcroft-Karp on the dense graph {cost <= threshold}.
bool perfect_matching(const std::vector<double>& cost, std::size_t n, double threshold) {
  constexpr std::size_t kNone = static_cast<std::size_t>(-1);
  std::vector<std::size_t> match_l(n, kNone), match_r(n, kNone), dist(n);
  auto bfs = [&] {
    std::queue<std::size_t> q;
    bool found = false;
    for (std::size_t u = 0; u < n; ++u) {
      if (match_l[u] == kNone) {
        dist[u] = 0;
        q.push(u);
      } else {
        dist[u] = kNone;
      }
    }
    while (!q.empty()) {
      const auto u = q.front();
      q.pop();
      for (std::size_t v = 0; v < n; ++v) {
        if (cost[u * n + v] > threshold) continue;
        const auto w = match_r[v];
        if (w == kNone) {
          found = true;
        } else if (dist[w] == kNone) {
          dist[w] = dist[u] + 1;
          q.push(w);
        }
      }
    }
    return found;
  };
  std::function<bool(std::size_t)> dfs = [&](std::size_t u) {
    for (std::size_t v = 0; v < n; ++v) {
      if (cost[u * n + v] > threshold) continue;
      const auto w = match_r[v];
      if (w == kNone || (dist[w] == dist[u] + 1 && dfs(w))) {
        match_l[u] = v;
        match_r[v] = u;
        return true;
      }
    }
    dist[u] = kNone;
    return false;
  };
  std::size_t matched = 0;
  while (bfs()) {
    for (std::size_t u = 0; u < n; ++u) {
      if (match_l[u] == kNone && dfs(u)) ++matched;
    }
  }
  return matched == n;
}

// Hungarian algorithm (shortest augmenting paths with potentials) on a
// square matrix; returns the minimum total cost.
double min_assignment(const std::vector<double>& cost, std::size_t n) {
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), kInf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = kInf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  // Sum the chosen entries directly rather than trusting the potentials.
  double total = 0.0;
  for (std::size_t j = 1; j <= n; ++j) total += cost[(p[j] - 1) * n + (j - 1)];
  return total;
}

std::vector<std::pair<double, double>> coordinates(const PersistenceDiagram& pd, NnSpace space) {
  std::vector<std::pair<double, double>> out;
  if (space == NnSpace::diagram) {
    for (const auto& q : pd.pairs) out.emplace_back(q.birth, q.death);
  } else {
    for (const auto& x : to_ppd(pd).points) out.emplace_back(x.x1, x.x2);
  }
  return out;
}

}  // namespace

double bottleneck(const PersistenceDiagram& a, const PersistenceDiagram& b) {
  check_conventions(a, b);
  std::size_t n = 0;
  const auto cost = augmented_costs(a, b, n);
  if (n == 0) return 0.0;
  std::vector<double> candidates(cost);
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
  std::size_t lo = 0;
  std::size_t hi = candidates.size() - 1;
  while (lo < hi) {
    const std::size_t mid = lo + (hi - lo) / 2;
    if (perfect_matching(cost, n, candidates[mid])) {
      hi = mid;
    } else {
      lo = mid + 1;
    }
  }
  return candidates[lo];
}

double wasserstein(const PersistenceDiagram& a, const PersistenceDiagram& b, double p) {
  check_conventions(a, b);
  if (!(p >= 1.0) || !std::isfinite(p)) throw InvalidArgument("wasserstein order must be finite and >= 1");
  std::size_t n = 0;
  auto cost = augmented_costs(a, b, n);
  if (n == 0) return 0.0;
  if (p != 1.0) {
    for (auto& c : cost) c = std::pow(c, p);
  }
  const double total = min_assignment(cost, n);
  return p == 1.0 ? total : std::pow(total, 1.0 / p);
}

std::string to_string(NnSpace space) { return space == NnSpace::diagram ? "diagram" : "projected"; }

NnSpace nn_space_from_string(const std::string& name) {
  if (name == "diagram") return NnSpace::diagram;
  if (name == "projected") return NnSpace::projected;
  throw InvalidArgument("unknown nn space '" + name + "'");
}

std::vector<double> nn_stats(const PersistenceDiagram& pd, const std::vector<int>& orders, NnSpace space) {
  if (orders.empty()) throw InvalidArgument("nn_stats needs at least one order");
  const int max_order = *std::max_element(orders.begin(), orders.end());
  if (*std::min_element(orders.begin(), orders.end()) < 1) throw InvalidArgument("nn orders must be >= 1");
  const auto pts = coordinates(pd, space);
  if (pts.size() <= static_cast<std::size_t>(max_order)) {
    throw InvalidArgument("nn_stats needs more than " + std::to_string(max_order) + " points, got " +
                          std::to_string(pts.size()));
  }
  std::vector<double> sums(orders.size(), 0.0);
  std::vector<double> d;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    d.clear();
    for (std::size_t j = 0; j < pts.size(); ++j) {
      if (j != i) d.push_back(std::hypot(pts[i].first - pts[j].first, pts[i].second - pts[j].second));
    }
    std::sort(d.begin(), d.end());
    for (std::size_t k = 0; k < orders.size(); ++k) sums[k] += d[static_cast<std::size_t>(orders[k] - 1)];
  }
  for (auto& s : sums) s /= static_cast<double>(pts.size());
  return sums;
}

GofReport gof_report(const std::vector<PersistenceDiagram>& real, const std::vector<PersistenceDiagram>& sim,
                     const GofTags& tags, const GofOptions& options) {
  if (real.size() != sim.size()) {
    throw InvalidArgument("gof_report: " + std::to_string(real.size()) + " real diagrams but " +
                          std::to_string(sim.size()) + " simulated");
  }
  GofReport report;
  report.tags = tags;
  report.options = options;
  auto nn = [&](const PersistenceDiagram& pd) {
    const int max_order = *std::max_element(options.orders.begin(), options.orders.end());
    if (pd.pairs.size() <= static_cast<std::size_t>(max_order)) {
      return std::vector<double>(options.orders.size(), std::numeric_limits<double>::quiet_NaN());
    }
    return nn_stats(pd, options.orders, options.space);
  };
  for (std::size_t i = 0; i < real.size(); ++i) {
    report.rows.push_back({i, bottleneck(real[i], sim[i]), wasserstein(real[i], sim[i], options.p)});
    report.nn_real.push_back(nn(real[i]));
    report.nn_sim.push_back(nn(sim[i]));
  }
  return report;
}

std::string gof_csv_header() { return "replicate,metric,value,variant,grid_size,burn_in,rank\n"; }

std::string gof_to_csv_rows(const GofReport& report) {
  std::ostringstream out;
  const auto& t = report.tags;
  const std::string tail = "," + t.variant + "," + std::to_string(t.grid_size) + "," +
                           std::to_string(t.burn_in) + "," + std::to_string(t.rank) + "\n";
  for (std::size_t i = 0; i < report.rows.size(); ++i) {
    const auto& r = report.rows[i];
    out << r.replicate << ",bottleneck," << csv::format_double(r.bottleneck) << tail;
    out << r.replicate << ",wasserstein," << csv::format_double(r.wasserstein) << tail;
    for (std::size_t k = 0; k < report.options.orders.size(); ++k) {
      const auto order = std::to_string(report.options.orders[k]);
      out << r.replicate << ",nn" << order << "_real," << csv::format_double(report.nn_real[i][k]) << tail;
      out << r.replicate << ",nn" << order << "_sim," << csv::format_double(report.nn_sim[i][k]) << tail;
    }
  }
  return out.str();
}

void to_json(nlohmann::json& j, const GofReport& r) {
  auto rows = nlohmann::json::array();
  auto nn_json = [](const std::vector<double>& v) {
    auto arr = nlohmann::json::array();
    for (double x : v) arr.push_back(std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr));
    return arr;
  };
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    rows.push_back({{"replicate", r.rows[i].replicate},
                    {"bottleneck", r.rows[i].bottleneck},
                    {"wasserstein", r.rows[i].wasserstein},
                    {"nn_real", nn_json(r.nn_real[i])},
                    {"nn_sim", nn_json(r.nn_sim[i])}});
  }
  j = {{"variant", r.tags.variant},
       {"grid_size", r.tags.grid_size},
       {"burn_in", r.tags.burn_in},
       {"rank", r.tags.rank},
       {"p", r.options.p},
       {"orders", r.options.orders},
       {"nn_space", to_string(r.options.space)},
       {"rows", rows}};
}

}  // namespace tdarep
