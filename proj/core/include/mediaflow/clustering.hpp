#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mediaflow/interactions.hpp"
#include "mediaflow/media_registry.hpp"

namespace mediaflow {

class ClusteringError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Point = std::vector<double>;

struct Clustering {
  int k = 0;
  std::vector<Point> centroids;
  std::vector<int> assignments;  // point index -> cluster index
  std::uint64_t seed = 0;
  int iterations_run = 0;
  // Distortion after each assignment step; non-increasing across a run.
  std::vector<double> distortion_per_iteration;

  std::vector<std::vector<std::size_t>> members() const;
};

// KMeans++ seeding (first centroid uniform, the rest D^2-weighted), then
// Lloyd iterations until assignments stabilize or max_iterations. An emptied
// cluster is re-seeded at the point farthest from its current centroid.
Clustering kmeans(std::span<const Point> points, int k, std::uint64_t seed,
                  int max_iterations = 300);

// Sum of squared distances from each point to its assigned centroid.
double distortion(std::span<const Point> points, const Clustering& clustering);

enum class SilhouetteOrientation {
  as_printed,    // s = (x - y) / max(x, y), x intra, y next-nearest
  conventional,  // s = (y - x) / max(x, y)
};

// Mean silhouette over points; singletons score 0. Requires k >= 2.
double silhouette_mean(std::span<const Point> points, const Clustering& clustering,
                       SilhouetteOrientation orientation = SilhouetteOrientation::as_printed);

// DB = (1/K) sum_i max_{j != i} (s_i + s_j) / d_ij with s the mean distance
// to the centroid and d the centroid distance. Coincident centroids throw.
double davies_bouldin(std::span<const Point> points, const Clustering& clustering);

// Adjusted Rand index between two labelings of the same points.
double adjusted_rand(std::span<const int> labels_a, std::span<const int> labels_b);

struct StabilityGroup {
  int reference_cluster = 0;
  std::size_t reference_size = 0;
  std::map<std::string, double> nationality;  // reference distribution
  int matched_runs = 0;                       // runs with a size-compatible match
  bool robust = false;
};

struct StabilityReport {
  std::vector<Clustering> runs;
  std::vector<StabilityGroup> groups;
};

// Reruns kmeans per seed and greedily matches clusters onto the first run by
// total-variation distance between nationality distributions. A group is
// robust when a match with size within +-20% shows up in at least half of
// the runs.
StabilityReport stability(std::span<const Point> points, int k,
                          std::span<const std::uint64_t> seeds,
                          std::span<const std::string> nationalities);

struct OutletShare {
  std::string outlet_id;
  double share = 0;  // of the cluster's interaction mass within the group
};

struct ClusterProfile {
  std::size_t size = 0;
  std::vector<double> mean_consumption;            // centroid of member vectors
  std::map<std::string, double> nationality;       // sums to 1
  std::map<std::string, double> factuality;        // interaction-mass weighted
  std::map<std::string, double> credibility;
  std::map<std::string, std::vector<OutletShare>> top_outlets;  // per ideology group, top 5
};

// Profiles each cluster of a clustering over user consumption vectors.
// user_ids[i] names the user behind points[i]; nationalities[i] its country.
std::vector<ClusterProfile> profile(const Clustering& clustering,
                                    std::span<const Point> points,
                                    std::span<const std::string> user_ids,
                                    std::span<const std::string> nationalities,
                                    const InteractionMatrix& user_to_outlet,
                                    const MediaRegistry& registry, std::size_t top_n = 5);

}  // namespace mediaflow
