#include "mediaflow/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>

namespace mediaflow {

namespace {

double squared_distance(const Point& a, const Point& b) {
  double sum = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
  }
  return sum;
}

double distance(const Point& a, const Point& b) { return std::sqrt(squared_distance(a, b)); }

void check_points(std::span<const Point> points) {
  if (points.empty()) throw ClusteringError("no points to cluster");
  const std::size_t dims = points.front().size();
  for (const auto& p : points) {
    if (p.size() != dims) throw ClusteringError("points have mixed dimensionality");
  }
}

std::size_t distinct_point_count(std::span<const Point> points) {
  std::set<Point> distinct(points.begin(), points.end());
  return distinct.size();
}

}  // namespace

std::vector<std::vector<std::size_t>> Clustering::members() const {
  std::vector<std::vector<std::size_t>> out(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    out[static_cast<std::size_t>(assignments[i])].push_back(i);
  }
  return out;
}

Clustering kmeans(std::span<const Point> points, int k, std::uint64_t seed,
                  int max_iterations) {
  check_points(points);
  if (k < 1) throw ClusteringError("k must be >= 1");
  if (static_cast<std::size_t>(k) > distinct_point_count(points)) {
    throw ClusteringError("k exceeds the number of distinct points");
  }

  const std::size_t n = points.size();
  std::mt19937_64 rng(seed);

  // KMeans++ seeding.
  std::vector<Point> centroids;
  centroids.reserve(static_cast<std::size_t>(k));
  {
    std::uniform_int_distribution<std::size_t> uniform(0, n - 1);
    centroids.push_back(points[uniform(rng)]);
    std::vector<double> best_sq(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      best_sq[i] = squared_distance(points[i], centroids.front());
    }
    while (centroids.size() < static_cast<std::size_t>(k)) {
      double total = 0;
      for (double d : best_sq) total += d;
      std::size_t chosen = 0;
      if (total <= 0) {
        // all remaining mass is on already-chosen centroids; take any point
        // not yet among them (the distinct-count precondition guarantees one)
        for (std::size_t i = 0; i < n; ++i) {
          if (std::find(centroids.begin(), centroids.end(), points[i]) == centroids.end()) {
            chosen = i;
            break;
          }
        }
      } else {
        std::uniform_real_distribution<double> pick(0.0, total);
        double target = pick(rng);
        double acc = 0;
        for (std::size_t i = 0; i < n; ++i) {
          acc += best_sq[i];
          if (acc >= target) {
            chosen = i;
            break;
          }
          chosen = i;
        }
      }
      centroids.push_back(points[chosen]);
      for (std::size_t i = 0; i < n; ++i) {
        best_sq[i] = std::min(best_sq[i], squared_distance(points[i], centroids.back()));
      }
    }
  }

  Clustering result;
  result.k = k;
  result.seed = seed;
  result.assignments.assign(n, -1);
  result.centroids = std::move(centroids);

  const std::size_t dims = points.front().size();
  std::vector<int> previous(n, -1);
  for (int iter = 0; iter < max_iterations; ++iter) {
    // assignment step
    double current_distortion = 0;
    for (std::size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      int best_cluster = 0;
      for (int c = 0; c < k; ++c) {
        double d = squared_distance(points[i], result.centroids[static_cast<std::size_t>(c)]);
        if (d < best) {
          best = d;
          best_cluster = c;
        }
      }
      result.assignments[i] = best_cluster;
      current_distortion += best;
    }
    result.distortion_per_iteration.push_back(current_distortion);
    result.iterations_run = iter + 1;
    if (result.assignments == previous) break;
    previous = result.assignments;

    // update step
    std::vector<Point> sums(static_cast<std::size_t>(k), Point(dims, 0.0));
    std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
    for (std::size_t i = 0; i < n; ++i) {
      auto c = static_cast<std::size_t>(result.assignments[i]);
      ++counts[c];
      for (std::size_t d = 0; d < dims; ++d) sums[c][d] += points[i][d];
    }
    for (int c = 0; c < k; ++c) {
      auto uc = static_cast<std::size_t>(c);
      if (counts[uc] == 0) {
        // re-seed an emptied cluster at the point farthest from its centroid
        std::size_t farthest = 0;
        double farthest_d = -1;
        for (std::size_t i = 0; i < n; ++i) {
          double d = squared_distance(
              points[i], result.centroids[static_cast<std::size_t>(result.assignments[i])]);
          if (d > farthest_d) {
            farthest_d = d;
            farthest = i;
          }
        }
        result.centroids[uc] = points[farthest];
        continue;
      }
      for (std::size_t d = 0; d < dims; ++d) {
        result.centroids[uc][d] = sums[uc][d] / static_cast<double>(counts[uc]);
      }
    }
  }
  return result;
}

double distortion(std::span<const Point> points, const Clustering& clustering) {
  double sum = 0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    sum += squared_distance(
        points[i], clustering.centroids[static_cast<std::size_t>(clustering.assignments[i])]);
  }
  return sum;
}

double silhouette_mean(std::span<const Point> points, const Clustering& clustering,
                       SilhouetteOrientation orientation) {
  if (clustering.k < 2) throw ClusteringError("silhouette requires k >= 2");
  const auto members = clustering.members();
  const std::size_t n = points.size();

  double total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto own = static_cast<std::size_t>(clustering.assignments[i]);
    if (members[own].size() <= 1) {
      continue;  // singleton scores 0 by convention
    }
    // x: mean distance to other members of the own cluster
    double intra = 0;
    for (std::size_t j : members[own]) {
      if (j != i) intra += distance(points[i], points[j]);
    }
    intra /= static_cast<double>(members[own].size() - 1);

    // y: mean distance to the next nearest cluster
    double nearest = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < members.size(); ++c) {
      if (c == own || members[c].empty()) continue;
      double mean = 0;
      for (std::size_t j : members[c]) mean += distance(points[i], points[j]);
      mean /= static_cast<double>(members[c].size());
      nearest = std::min(nearest, mean);
    }
    if (!std::isfinite(nearest)) continue;

    const double denom = std::max(intra, nearest);
    if (denom == 0) continue;  // coincident geometry scores 0
    const double s = orientation == SilhouetteOrientation::as_printed
                         ? (intra - nearest) / denom
                         : (nearest - intra) / denom;
    total += s;
  }
  return total / static_cast<double>(n);
}

double davies_bouldin(std::span<const Point> points, const Clustering& clustering) {
  if (clustering.k < 2) throw ClusteringError("Davies-Bouldin requires k >= 2");
  const auto members = clustering.members();
  for (std::size_t c = 0; c < members.size(); ++c) {
    if (members[c].empty()) {
      throw ClusteringError("Davies-Bouldin: cluster " + std::to_string(c) + " is empty");
    }
  }

  const auto k = static_cast<std::size_t>(clustering.k);
  std::vector<double> diameters(k, 0.0);
  for (std::size_t c = 0; c < k; ++c) {
    double sum = 0;
    for (std::size_t i : members[c]) sum += distance(points[i], clustering.centroids[c]);
    diameters[c] = sum / static_cast<double>(members[c].size());
  }

  double db = 0;
  for (std::size_t i = 0; i < k; ++i) {
    double worst = 0;
    for (std::size_t j = 0; j < k; ++j) {
      if (j == i) continue;
      const double d = distance(clustering.centroids[i], clustering.centroids[j]);
      if (d == 0) {
        throw ClusteringError("Davies-Bouldin: coincident centroids " + std::to_string(i) +
                              " and " + std::to_string(j));
      }
      worst = std::max(worst, (diameters[i] + diameters[j]) / d);
    }
    db += worst;
  }
  return db / static_cast<double>(k);
}

double adjusted_rand(std::span<const int> labels_a, std::span<const int> labels_b) {
  if (labels_a.size() != labels_b.size() || labels_a.empty()) {
    throw ClusteringError("adjusted_rand needs two equal-length labelings");
  }
  std::map<std::pair<int, int>, std::uint64_t> contingency;
  std::map<int, std::uint64_t> a_sizes;
  std::map<int, std::uint64_t> b_sizes;
  for (std::size_t i = 0; i < labels_a.size(); ++i) {
    ++contingency[{labels_a[i], labels_b[i]}];
    ++a_sizes[labels_a[i]];
    ++b_sizes[labels_b[i]];
  }
  auto choose2 = [](std::uint64_t m) {
    if (m < 2) return 0.0;
    return static_cast<double>(m) * static_cast<double>(m - 1) / 2.0;
  };
  double index = 0;
  for (const auto& [key, count] : contingency) index += choose2(count);
  double sum_a = 0, sum_b = 0;
  for (const auto& [key, count] : a_sizes) sum_a += choose2(count);
  for (const auto& [key, count] : b_sizes) sum_b += choose2(count);
  const double total = choose2(labels_a.size());
  const double expected = sum_a * sum_b / total;
  const double max_index = (sum_a + sum_b) / 2.0;
  if (max_index == expected) return 1.0;
  return (index - expected) / (max_index - expected);
}

namespace {

std::map<std::string, double> nationality_distribution(
    const std::vector<std::size_t>& member_indices,
    std::span<const std::string> nationalities) {
  std::map<std::string, double> dist;
  if (member_indices.empty()) return dist;
  for (std::size_t i : member_indices) dist[nationalities[i]] += 1.0;
  for (auto& [country, value] : dist) value /= static_cast<double>(member_indices.size());
  return dist;
}

double total_variation(const std::map<std::string, double>& a,
                       const std::map<std::string, double>& b) {
  double sum = 0;
  for (const auto& [key, value] : a) {
    auto it = b.find(key);
    sum += std::abs(value - (it == b.end() ? 0.0 : it->second));
  }
  for (const auto& [key, value] : b) {
    if (!a.count(key)) sum += value;
  }
  return sum / 2.0;
}

}  // namespace

StabilityReport stability(std::span<const Point> points, int k,
                          std::span<const std::uint64_t> seeds,
                          std::span<const std::string> nationalities) {
  if (seeds.size() < 2) throw ClusteringError("stability needs at least 2 seeds");
  if (nationalities.size() != points.size()) {
    throw ClusteringError("stability: one nationality per point required");
  }

  StabilityReport report;
  report.runs.reserve(seeds.size());
  for (std::uint64_t seed : seeds) report.runs.push_back(kmeans(points, k, seed));

  const auto reference_members = report.runs.front().members();
  std::vector<std::map<std::string, double>> reference_dists;
  reference_dists.reserve(reference_members.size());
  for (const auto& m : reference_members) {
    reference_dists.push_back(nationality_distribution(m, nationalities));
  }

  std::vector<StabilityGroup> groups(reference_members.size());
  for (std::size_t c = 0; c < reference_members.size(); ++c) {
    groups[c].reference_cluster = static_cast<int>(c);
    groups[c].reference_size = reference_members[c].size();
    groups[c].nationality = reference_dists[c];
    groups[c].matched_runs = 1;  // the reference run matches itself
  }

  for (std::size_t run = 1; run < report.runs.size(); ++run) {
    const auto members = report.runs[run].members();
    std::vector<std::map<std::string, double>> dists;
    dists.reserve(members.size());
    for (const auto& m : members) dists.push_back(nationality_distribution(m, nationalities));

    // Greedy best match: repeatedly pair the globally closest (ref, run)
    // clusters by total-variation distance.
    std::set<std::size_t> free_ref, free_run;
    for (std::size_t i = 0; i < reference_dists.size(); ++i) free_ref.insert(i);
    for (std::size_t i = 0; i < dists.size(); ++i) free_run.insert(i);
    while (!free_ref.empty() && !free_run.empty()) {
      double best = std::numeric_limits<double>::infinity();
      std::size_t best_ref = *free_ref.begin(), best_run = *free_run.begin();
      for (std::size_t r : free_ref) {
        for (std::size_t s : free_run) {
          double tv = total_variation(reference_dists[r], dists[s]);
          if (tv < best) {
            best = tv;
            best_ref = r;
            best_run = s;
          }
        }
      }
      free_ref.erase(best_ref);
      free_run.erase(best_run);
      const double ref_size = static_cast<double>(reference_members[best_ref].size());
      const double run_size = static_cast<double>(members[best_run].size());
      if (ref_size > 0 && std::abs(run_size - ref_size) <= 0.2 * ref_size) {
        ++groups[best_ref].matched_runs;
      }
    }
  }

  const double half = static_cast<double>(report.runs.size()) / 2.0;
  for (auto& group : groups) {
    group.robust = static_cast<double>(group.matched_runs) >= half;
  }
  report.groups = std::move(groups);
  return report;
}

std::vector<ClusterProfile> profile(const Clustering& clustering,
                                    std::span<const Point> points,
                                    std::span<const std::string> user_ids,
                                    std::span<const std::string> nationalities,
                                    const InteractionMatrix& user_to_outlet,
                                    const MediaRegistry& registry, std::size_t top_n) {
  if (points.empty()) throw ClusteringError("profile: no points");
  if (user_ids.size() != points.size() || nationalities.size() != points.size()) {
    throw ClusteringError("profile: user_ids/nationalities must align with points");
  }
  const auto members = clustering.members();
  std::vector<ClusterProfile> profiles;
  profiles.reserve(members.size());

  for (const auto& member_indices : members) {
    ClusterProfile p;
    p.size = member_indices.size();
    if (member_indices.empty()) {
      profiles.push_back(std::move(p));
      continue;
    }

    // mean consumption vector
    const std::size_t dims = points.front().size();
    p.mean_consumption.assign(dims, 0.0);
    for (std::size_t i : member_indices) {
      for (std::size_t d = 0; d < dims; ++d) p.mean_consumption[d] += points[i][d];
    }
    for (double& v : p.mean_consumption) v /= static_cast<double>(member_indices.size());

    p.nationality = nationality_distribution(member_indices, nationalities);

    // interaction-mass-weighted media attributes and top outlets
    Mass total = 0;
    std::map<std::string, Mass> factuality_mass;
    std::map<std::string, Mass> credibility_mass;
    std::map<std::string, std::map<std::string, Mass>> outlet_mass_by_group;
    for (std::size_t i : member_indices) {
      auto row = user_to_outlet.rows().find(user_ids[i]);
      if (row == user_to_outlet.rows().end()) continue;
      for (const auto& [outlet_id, mass] : row->second) {
        const MediaOutlet* outlet = registry.outlet_by_id(outlet_id);
        if (!outlet) continue;
        total += mass;
        std::optional<Factuality> fact = outlet->factuality;
        if (!fact && outlet->factuality_score) {
          fact = factuality_category(*outlet->factuality_score);
        }
        factuality_mass[fact ? std::string(to_string(*fact)) : "unknown"] += mass;
        Credibility cred =
            outlet->credibility ? *outlet->credibility : classify_credibility(*outlet);
        credibility_mass[std::string(to_string(cred))] += mass;
        outlet_mass_by_group[std::string(to_string(ideology_group(outlet->ideology)))]
                            [outlet_id] += mass;
      }
    }
    if (total > 0) {
      for (const auto& [key, mass] : factuality_mass) {
        p.factuality[key] = mass_to_double(mass / total);
      }
      for (const auto& [key, mass] : credibility_mass) {
        p.credibility[key] = mass_to_double(mass / total);
      }
      for (const auto& [group, outlets] : outlet_mass_by_group) {
        Mass group_total = 0;
        for (const auto& [outlet_id, mass] : outlets) group_total += mass;
        std::vector<std::pair<std::string, Mass>> ranked(outlets.begin(), outlets.end());
        std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
          if (a.second != b.second) return a.second > b.second;
          return a.first < b.first;
        });
        std::vector<OutletShare> top;
        for (std::size_t i = 0; i < std::min(top_n, ranked.size()); ++i) {
          top.push_back(
              {ranked[i].first, mass_to_double(ranked[i].second / group_total)});
        }
        p.top_outlets.emplace(group, std::move(top));
      }
    }
    profiles.push_back(std::move(p));
  }
  return profiles;
}

}  // namespace mediaflow
