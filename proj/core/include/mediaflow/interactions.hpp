#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <boost/rational.hpp>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mediaflow/ingest.hpp"
#include "mediaflow/media_registry.hpp"

namespace mediaflow {

class MatrixError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Per-tweet weights are small exact fractions (occurrences / total).
using Weight = boost::rational<std::int64_t>;

// Matrix cells accumulate exactly; conversion to double happens only at
// serialization and analysis boundaries. Exactness makes parallel merges
// order-independent and keeps the per-tweet sum-to-1 invariant intact.
using Mass = boost::multiprecision::cpp_rational;

double mass_to_double(const Mass& value);
Mass mass_from_double(double value);

enum class Scheme {
  occurrence = 1,  // weight 1 per media-handle occurrence
  country = 2,     // weight 1 per distinct outlet, equal within a country
  weighted = 3,    // total weight 1 per tweet, split by occurrence share
};

std::string_view to_string(Scheme);
Scheme scheme_from_int(int value);

struct InteractionEvent {
  std::string user_id;
  std::string outlet_id;
  std::string tweet_id;
  Weight weight;  // > 0
  Scheme scheme = Scheme::weighted;
};

// Gathers registered-media occurrences across retweet, quote, reply, mention
// and URL-share targets (URLs match by registrable domain), then applies the
// quantification scheme. Hashtags never participate. Tweets touching no
// registered media yield an empty list.
std::vector<InteractionEvent> extract_interactions(const TweetRecord& record,
                                                   const MediaRegistry& registry,
                                                   Scheme scheme);

enum class KeyKind { user, state, country, outlet, ideology };

std::string_view to_string(KeyKind);
KeyKind key_kind_from_string(std::string_view);

struct MatrixProvenance {
  Scheme scheme = Scheme::weighted;
  std::vector<std::string> cutoffs;  // applied cutoffs, in order
};

// Sparse nonnegative matrix with typed, homogeneous row/column keys. Zero
// cells are never stored.
class InteractionMatrix {
 public:
  InteractionMatrix(KeyKind row_kind, KeyKind col_kind, MatrixProvenance provenance = {});

  KeyKind row_kind() const { return row_kind_; }
  KeyKind col_kind() const { return col_kind_; }
  const MatrixProvenance& provenance() const { return provenance_; }
  MatrixProvenance& provenance() { return provenance_; }

  void add(const std::string& row, const std::string& col, const Mass& value);

  // Cell-wise addition; key kinds must match.
  void merge(const InteractionMatrix& other);

  const Mass* cell(const std::string& row, const std::string& col) const;
  std::size_t cell_count() const;
  std::size_t row_count() const { return rows_.size(); }

  Mass row_sum(const std::string& row) const;
  std::map<std::string, Mass> row_sums() const;
  std::map<std::string, Mass> col_sums() const;
  Mass total_mass() const;

  std::vector<std::string> row_keys() const;  // sorted
  std::vector<std::string> col_keys() const;  // sorted

  const std::map<std::string, std::map<std::string, Mass>>& rows() const { return rows_; }

  // Re-keys rows/columns via the maps (nullopt drops the key and counts it).
  InteractionMatrix regroup(
      KeyKind new_row_kind, KeyKind new_col_kind,
      const std::function<std::optional<std::string>(const std::string&)>& row_map,
      const std::function<std::optional<std::string>(const std::string&)>& col_map,
      std::uint64_t* dropped_rows = nullptr, std::uint64_t* dropped_cols = nullptr) const;

  bool operator==(const InteractionMatrix&) const = default;

 private:
  KeyKind row_kind_;
  KeyKind col_kind_;
  MatrixProvenance provenance_;
  std::map<std::string, std::map<std::string, Mass>> rows_;
};

inline bool operator==(const MatrixProvenance& a, const MatrixProvenance& b) {
  return a.scheme == b.scheme && a.cutoffs == b.cutoffs;
}

struct BuildStats {
  std::uint64_t events_in = 0;
  std::uint64_t dropped_unresolvable = 0;
};

// row_key maps a user id to a row key (nullopt drops the event); col_key maps
// an outlet id to a column key.
InteractionMatrix build_matrix(
    std::span<const InteractionEvent> events, KeyKind row_kind, KeyKind col_kind,
    const std::function<std::optional<std::string>(const std::string&)>& row_key,
    const std::function<std::optional<std::string>(const std::string&)>& col_key,
    MatrixProvenance provenance = {}, BuildStats* stats = nullptr);

// Removes the ceil(p * N) user rows with the largest row sums; ties broken by
// row key descending.
InteractionMatrix percentile_cutoff(const InteractionMatrix& m, double p);

// Keeps user rows with row sum >= min_total.
InteractionMatrix threshold_cutoff(const InteractionMatrix& m, const Mass& min_total);

enum class IdeologyFold { seven_way, three_way };

// Per-ideology interaction shares for one user row of a user->outlet matrix;
// the result sums to 1. Throws on a zero/missing row.
std::vector<double> consumption_vector(const InteractionMatrix& user_to_outlet,
                                       const std::string& user, const MediaRegistry& registry,
                                       IdeologyFold fold);

struct InfoFlowEntry {
  std::string gpe;
  double consumed = 0;  // row sum, diagonal removed
  double supplied = 0;  // column sum, diagonal removed
  std::optional<double> ratio;  // log10(consumed) - log10(supplied); absent when undefined
};

// Square GPE-to-GPE matrix only; self-interactions are removed first.
std::vector<InfoFlowEntry> info_flow(const InteractionMatrix& gpe_matrix);

// Triplet CSV (row_key,col_key,value), sorted by (row, col); values are
// shortest-round-trip doubles. The sidecar carries types and provenance.
std::string matrix_to_csv(const InteractionMatrix& m);
std::string matrix_sidecar_json(const InteractionMatrix& m);
std::string matrix_to_log10_csv(const InteractionMatrix& m);

void save_matrix(const InteractionMatrix& m, const std::filesystem::path& csv_path,
                 const std::filesystem::path& sidecar_path);
InteractionMatrix load_matrix(const std::filesystem::path& csv_path,
                              const std::filesystem::path& sidecar_path);

// Shortest decimal string that round-trips to the same double.
std::string format_double(double value);

}  // namespace mediaflow
