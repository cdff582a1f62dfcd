#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mediaflow/clustering.hpp"

namespace mediaflow {

// Source groups (local-media consumption) and target groups (foreign-media
// consumption) over one user population.
struct GroupAssignments {
  std::vector<std::string> users;  // users present in both clusterings
  Clustering source;               // SG: local-media vectors
  Clustering target;               // TG: foreign-media vectors
  std::uint64_t excluded_zero_local = 0;
  std::uint64_t excluded_zero_foreign = 0;
};

// Clusters the same users twice: once on local-media consumption vectors and
// once on foreign-media vectors. Users with a zero vector on either side are
// excluded and counted.
GroupAssignments build_groups(std::span<const std::string> users,
                              std::span<const Point> local_vectors,
                              std::span<const Point> foreign_vectors, int k_sg, int k_tg,
                              std::uint64_t seed);

struct GroupTransitionReport {
  std::vector<std::size_t> sg_sizes;
  std::vector<std::size_t> tg_sizes;
  std::vector<Point> sg_centroids;
  std::vector<Point> tg_centroids;
  std::vector<double> p_source;           // P_i = |SG_i| / N
  std::vector<double> p_target_baseline;  // P_j^r = |TG_j| / N
  // P_{i,j} = |SG_i intersect TG_j| / |SG_i|; a row is absent (nullopt) when
  // SG_i is empty rather than zero-filled.
  std::vector<std::vector<std::optional<double>>> transition;
  // r_{i,j} = P_{i,j} / P_j^r
  std::vector<std::vector<std::optional<double>>> risk_ratio;
  std::vector<std::vector<std::size_t>> counts;  // |SG_i intersect TG_j|
};

GroupTransitionReport transition_report(const GroupAssignments& groups);

// Leaning index whose share reaches the threshold, or nullopt for Mixed.
std::optional<int> predominant_group(std::span<const double> consumption, double threshold);

struct AblatedVectors {
  std::vector<std::string> users;
  std::vector<Point> vectors;
  std::uint64_t dropped = 0;  // users left with zero mass
};

// Recomputes consumption vectors with one outlet's column removed and rows
// renormalized. Unknown outlets throw.
AblatedVectors ablate_outlet(const InteractionMatrix& user_to_outlet,
                             const std::string& outlet_id, const MediaRegistry& registry,
                             IdeologyFold fold);

std::string transition_report_json(const GroupTransitionReport& report);

// Triplet CSV of the risk-ratio matrix for heatmap plotting; the red/blue
// color split sits at r = 1.
std::string risk_ratio_csv(const GroupTransitionReport& report);

}  // namespace mediaflow
