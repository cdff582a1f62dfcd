#include "mediaflow/crosscountry.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "mediaflow/csv.hpp"

namespace mediaflow {

using nlohmann::json;

namespace {

bool is_zero(const Point& p) {
  return std::all_of(p.begin(), p.end(), [](double v) { return v == 0.0; });
}

}  // namespace

GroupAssignments build_groups(std::span<const std::string> users,
                              std::span<const Point> local_vectors,
                              std::span<const Point> foreign_vectors, int k_sg, int k_tg,
                              std::uint64_t seed) {
  if (users.size() != local_vectors.size() || users.size() != foreign_vectors.size()) {
    throw ClusteringError("build_groups: users and vectors must align");
  }
  GroupAssignments out;
  std::vector<Point> local, foreign;
  for (std::size_t i = 0; i < users.size(); ++i) {
    if (is_zero(local_vectors[i])) {
      ++out.excluded_zero_local;
      continue;
    }
    if (is_zero(foreign_vectors[i])) {
      ++out.excluded_zero_foreign;
      continue;
    }
    out.users.push_back(users[i]);
    local.push_back(local_vectors[i]);
    foreign.push_back(foreign_vectors[i]);
  }
  if (out.users.empty()) throw ClusteringError("build_groups: no users left");
  out.source = kmeans(local, k_sg, seed);
  out.target = kmeans(foreign, k_tg, seed + 1);
  return out;
}

GroupTransitionReport transition_report(const GroupAssignments& groups) {
  const auto k_sg = static_cast<std::size_t>(groups.source.k);
  const auto k_tg = static_cast<std::size_t>(groups.target.k);
  const std::size_t n = groups.users.size();

  GroupTransitionReport report;
  report.sg_centroids = groups.source.centroids;
  report.tg_centroids = groups.target.centroids;
  report.sg_sizes.assign(k_sg, 0);
  report.tg_sizes.assign(k_tg, 0);
  report.counts.assign(k_sg, std::vector<std::size_t>(k_tg, 0));

  for (std::size_t u = 0; u < n; ++u) {
    const auto i = static_cast<std::size_t>(groups.source.assignments[u]);
    const auto j = static_cast<std::size_t>(groups.target.assignments[u]);
    ++report.sg_sizes[i];
    ++report.tg_sizes[j];
    ++report.counts[i][j];
  }

  report.p_source.resize(k_sg);
  for (std::size_t i = 0; i < k_sg; ++i) {
    report.p_source[i] = static_cast<double>(report.sg_sizes[i]) / static_cast<double>(n);
  }
  report.p_target_baseline.resize(k_tg);
  for (std::size_t j = 0; j < k_tg; ++j) {
    report.p_target_baseline[j] =
        static_cast<double>(report.tg_sizes[j]) / static_cast<double>(n);
  }

  report.transition.assign(k_sg, std::vector<std::optional<double>>(k_tg));
  report.risk_ratio.assign(k_sg, std::vector<std::optional<double>>(k_tg));
  for (std::size_t i = 0; i < k_sg; ++i) {
    if (report.sg_sizes[i] == 0) continue;  // empty SG: row stays missing
    for (std::size_t j = 0; j < k_tg; ++j) {
      const double p_ij = static_cast<double>(report.counts[i][j]) /
                          static_cast<double>(report.sg_sizes[i]);
      report.transition[i][j] = p_ij;
      if (report.p_target_baseline[j] > 0) {
        report.risk_ratio[i][j] = p_ij / report.p_target_baseline[j];
      }
    }
  }
  return report;
}

std::optional<int> predominant_group(std::span<const double> consumption, double threshold) {
  int best = -1;
  double best_share = -1;
  for (std::size_t i = 0; i < consumption.size(); ++i) {
    if (consumption[i] > best_share) {
      best_share = consumption[i];
      best = static_cast<int>(i);
    }
  }
  if (best >= 0 && best_share >= threshold) return best;
  return std::nullopt;  // Mixed
}

AblatedVectors ablate_outlet(const InteractionMatrix& user_to_outlet,
                             const std::string& outlet_id, const MediaRegistry& registry,
                             IdeologyFold fold) {
  bool outlet_seen = false;
  for (const auto& [row, cols] : user_to_outlet.rows()) {
    if (cols.count(outlet_id)) {
      outlet_seen = true;
      break;
    }
  }
  if (!outlet_seen) {
    throw MatrixError("ablate_outlet: outlet not present in matrix: " + outlet_id);
  }

  const int dims = fold == IdeologyFold::seven_way ? kIdeologyCount : kIdeologyGroupCount;
  AblatedVectors out;
  for (const auto& [user, cols] : user_to_outlet.rows()) {
    std::vector<Mass> sums(static_cast<std::size_t>(dims), Mass(0));
    Mass total = 0;
    for (const auto& [col, value] : cols) {
      if (col == outlet_id) continue;
      const MediaOutlet* outlet = registry.outlet_by_id(col);
      if (!outlet) throw MatrixError("unknown outlet in matrix: " + col);
      const int bin = fold == IdeologyFold::seven_way
                          ? static_cast<int>(outlet->ideology)
                          : static_cast<int>(ideology_group(outlet->ideology));
      sums[static_cast<std::size_t>(bin)] += value;
      total += value;
    }
    if (total == 0) {
      ++out.dropped;
      continue;
    }
    Point vec(static_cast<std::size_t>(dims));
    for (std::size_t d = 0; d < vec.size(); ++d) {
      vec[d] = mass_to_double(sums[d] / total);
    }
    out.users.push_back(user);
    out.vectors.push_back(std::move(vec));
  }
  return out;
}

namespace {

json optional_matrix_to_json(const std::vector<std::vector<std::optional<double>>>& m) {
  json rows = json::array();
  for (const auto& row : m) {
    json cells = json::array();
    for (const auto& value : row) {
      if (value) {
        cells.push_back(*value);
      } else {
        cells.push_back(nullptr);
      }
    }
    rows.push_back(std::move(cells));
  }
  return rows;
}

}  // namespace

std::string transition_report_json(const GroupTransitionReport& report) {
  json obj{{"sg_sizes", report.sg_sizes},
           {"tg_sizes", report.tg_sizes},
           {"sg_centroids", report.sg_centroids},
           {"tg_centroids", report.tg_centroids},
           {"p_source", report.p_source},
           {"p_target_baseline", report.p_target_baseline},
           {"transition", optional_matrix_to_json(report.transition)},
           {"risk_ratio", optional_matrix_to_json(report.risk_ratio)},
           {"counts", report.counts}};
  return obj.dump(2);
}

std::string risk_ratio_csv(const GroupTransitionReport& report) {
  std::string out = "sg,tg,risk_ratio,color\n";
  for (std::size_t i = 0; i < report.risk_ratio.size(); ++i) {
    for (std::size_t j = 0; j < report.risk_ratio[i].size(); ++j) {
      const auto& value = report.risk_ratio[i][j];
      out += "SG-" + std::to_string(i + 1) + ",TG-" + std::to_string(j + 1) + ",";
      if (value) {
        out += format_double(*value);
        out += *value > 1.0 ? ",red" : ",blue";
      } else {
        out += ",";
      }
      out.push_back('\n');
    }
  }
  return out;
}

}  // namespace mediaflow
