#pragma once

// Dataset schema for commuter mode-choice records: eight transport
// alternatives, per-alternative travel time/cost, individual attributes.
// CSV ingestion, min-max scaling, stratified splitting and k-fold indexing.

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "modechoice/common.hpp"

namespace modechoice {

inline constexpr int kNumModes = 8;

// Short tags used in column names and report keys, indexed by code-1.
inline constexpr std::array<const char*, kNumModes> kModeTags = {
    "metro", "bus", "sr", "auto", "tw", "car", "cycle", "walk"};

inline constexpr std::array<const char*, kNumModes> kModeNames = {
    "Metro", "Bus",  "SharedRide", "Auto",
    "TwoWheeler", "Car", "Cycle",  "Walk"};

// Transport alternative, externally coded 1..8.
class ModeLabel {
 public:
  ModeLabel() : code_(1) {}
  explicit ModeLabel(int code) : code_(code) {
    require(code >= 1 && code <= kNumModes, Errc::BadLabel,
            "mode code " + std::to_string(code) + " outside 1.." +
                std::to_string(kNumModes));
  }
  static ModeLabel from_index(int idx) { return ModeLabel(idx + 1); }

  int code() const { return code_; }
  int index() const { return code_ - 1; }
  const char* tag() const { return kModeTags[index()]; }
  const char* name() const { return kModeNames[index()]; }

  friend bool operator==(ModeLabel a, ModeLabel b) {
    return a.code_ == b.code_;
  }
  friend bool operator!=(ModeLabel a, ModeLabel b) {
    return a.code_ != b.code_;
  }

 private:
  int code_;
};

// One commuter trip: individual attributes plus level-of-service (travel
// time in minutes, travel cost in rupees) for every alternative.
struct ChoiceObservation {
  std::int64_t id = 0;
  double age = 0;             // years
  double gender = 0;          // 0 = male, 1 = female
  double hh_income = 0;       // rupees / month
  double n_two_wheelers = 0;  // household two-wheeler count
  double metro_avail = 0;     // 0/1, metro present at trip origin
  double pop_density = 0;     // persons / km^2
  double emp_density = 0;     // jobs / km^2
  std::array<double, kNumModes> travel_time{};  // minutes, > 0
  std::array<double, kNumModes> travel_cost{};  // rupees, >= 0
  ModeLabel chosen;

  // Optional survey context columns; produced by the synthetic generator,
  // consumed by segment analyses.
  std::optional<int> trip_purpose;  // 0 work, 1 education, 2 leisure
  std::optional<int> occupation;    // 0 salaried, 1 wage, 2 self-employed
};

inline void validate_observation(const ChoiceObservation& o,
                                 std::size_t row_hint = 0) {
  auto where = [&] {
    return row_hint > 0 ? " (row " + std::to_string(row_hint) + ")" : "";
  };
  for (int i = 0; i < kNumModes; ++i) {
    if (!(o.travel_time[i] > 0))
      fail(Errc::NegativeTime, std::string("travel_time[") + kModeTags[i] +
                                   "] must be > 0" + where());
    if (!(o.travel_cost[i] >= 0))
      fail(Errc::NegativeTime, std::string("travel_cost[") + kModeTags[i] +
                                   "] must be >= 0" + where());
  }
  require(o.age >= 0 && o.hh_income >= 0 && o.pop_density >= 0 &&
              o.emp_density >= 0,
          Errc::NonNumericField,
          "age/income/densities must be non-negative" + where());
}

struct Dataset {
  std::vector<ChoiceObservation> observations;
  std::string schema_version = "1.0";

  std::size_t n() const { return observations.size(); }
  bool empty() const { return observations.empty(); }
  const ChoiceObservation& operator[](std::size_t i) const {
    return observations[i];
  }

  std::array<std::int64_t, kNumModes> class_counts() const {
    std::array<std::int64_t, kNumModes> c{};
    for (const auto& o : observations) ++c[o.chosen.index()];
    return c;
  }
};

// ---------------------------------------------------------------------------
// Feature schema
//
// The model-facing feature vector is every numeric column except id and the
// label: 7 individual attributes followed by 8 travel times and 8 travel
// costs, in CSV column order.

inline constexpr int kNumFeatures = 23;
inline constexpr int kTravelTimeFeature0 = 7;   // tt_metro
inline constexpr int kTravelCostFeature0 = 15;  // tc_metro

inline const std::vector<std::string>& feature_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n = {"age",         "gender",
                                  "hh_income",   "n_two_wheelers",
                                  "metro_avail", "pop_density",
                                  "emp_density"};
    for (const char* tag : kModeTags) n.push_back(std::string("tt_") + tag);
    for (const char* tag : kModeTags) n.push_back(std::string("tc_") + tag);
    return n;
  }();
  return names;
}

// -1 when the name is not a feature column.
inline int feature_index(std::string_view name) {
  const auto& names = feature_names();
  for (int i = 0; i < kNumFeatures; ++i)
    if (names[i] == name) return i;
  return -1;
}

inline double get_feature(const ChoiceObservation& o, int f) {
  switch (f) {
    case 0: return o.age;
    case 1: return o.gender;
    case 2: return o.hh_income;
    case 3: return o.n_two_wheelers;
    case 4: return o.metro_avail;
    case 5: return o.pop_density;
    case 6: return o.emp_density;
    default:
      if (f < kTravelCostFeature0)
        return o.travel_time[f - kTravelTimeFeature0];
      return o.travel_cost[f - kTravelCostFeature0];
  }
}

inline void set_feature(ChoiceObservation& o, int f, double v) {
  switch (f) {
    case 0: o.age = v; return;
    case 1: o.gender = v; return;
    case 2: o.hh_income = v; return;
    case 3: o.n_two_wheelers = v; return;
    case 4: o.metro_avail = v; return;
    case 5: o.pop_density = v; return;
    case 6: o.emp_density = v; return;
    default:
      if (f < kTravelCostFeature0)
        o.travel_time[f - kTravelTimeFeature0] = v;
      else
        o.travel_cost[f - kTravelCostFeature0] = v;
  }
}

inline NumMatrix to_feature_matrix(const Dataset& d) {
  NumMatrix m(d.n(), kNumFeatures);
  for (std::size_t r = 0; r < d.n(); ++r)
    for (int f = 0; f < kNumFeatures; ++f) m(r, f) = get_feature(d[r], f);
  return m;
}

inline std::vector<int> label_vector(const Dataset& d) {
  std::vector<int> y;
  y.reserve(d.n());
  for (const auto& o : d.observations) y.push_back(o.chosen.code());
  return y;
}

// ---------------------------------------------------------------------------
// CSV ingestion / emission
//
// Column contract (UTF-8, header required, '.' decimal separator):
//   id,age,gender,hh_income,n_two_wheelers,metro_avail,pop_density,
//   emp_density,tt_metro..tt_walk,tc_metro..tc_walk,chosen
// The optional extension columns trip_purpose,occupation may follow chosen.

inline std::vector<std::string> csv_columns(bool with_segments) {
  std::vector<std::string> cols = {"id"};
  for (const auto& f : feature_names()) cols.push_back(f);
  cols.push_back("chosen");
  if (with_segments) {
    cols.push_back("trip_purpose");
    cols.push_back("occupation");
  }
  return cols;
}

inline Dataset load_csv(const std::filesystem::path& path, bool strict = true) {
  std::string content = read_file(path);
  std::istringstream in(content);
  std::string line;
  if (!std::getline(in, line))
    fail(Errc::SchemaMismatch, "empty file " + path.string());
  if (!line.empty() && line.back() == '\r') line.pop_back();

  auto header = split_csv_line(line);
  std::map<std::string, int, std::less<>> pos;
  for (std::size_t i = 0; i < header.size(); ++i) {
    auto [it, inserted] = pos.emplace(std::string(header[i]), int(i));
    (void)it;
    require(inserted, Errc::SchemaMismatch,
            "duplicate column '" + std::string(header[i]) + "'");
  }

  const auto base = csv_columns(false);
  for (const auto& col : base)
    if (!pos.count(col)) fail(Errc::MissingColumn, col);
  const bool has_purpose = pos.count("trip_purpose") > 0;
  const bool has_occupation = pos.count("occupation") > 0;

  if (strict) {
    // Exact contract: canonical order, no foreign columns.
    auto expected = csv_columns(has_purpose || has_occupation);
    bool ok = header.size() == expected.size();
    for (std::size_t i = 0; ok && i < expected.size(); ++i)
      ok = header[i] == expected[i];
    require(ok, Errc::SchemaMismatch,
            "header does not match the column contract in " + path.string());
  }

  std::vector<int> col_of(base.size());
  for (std::size_t i = 0; i < base.size(); ++i) col_of[i] = pos[base[i]];

  Dataset d;
  std::set<std::int64_t> seen_ids;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split_csv_line(line);
    require(cells.size() == header.size(), Errc::SchemaMismatch,
            "row " + std::to_string(row) + " has " +
                std::to_string(cells.size()) + " cells, expected " +
                std::to_string(header.size()));

    auto num = [&](int ci, const std::string& col) -> double {
      try {
        return parse_double(cells[ci]);
      } catch (const Error&) {
        fail(Errc::NonNumericField,
             "row " + std::to_string(row) + ", column " + col);
      }
    };

    ChoiceObservation o;
    o.id = static_cast<std::int64_t>(num(col_of[0], "id"));
    for (int f = 0; f < kNumFeatures; ++f)
      set_feature(o, f, num(col_of[1 + f], feature_names()[f]));
    const double chosen_raw = num(col_of[1 + kNumFeatures], "chosen");
    const int code = static_cast<int>(chosen_raw);
    if (code != chosen_raw || code < 1 || code > kNumModes)
      fail(Errc::BadLabel, "row " + std::to_string(row) + ": chosen=" +
                               std::string(cells[col_of[1 + kNumFeatures]]));
    o.chosen = ModeLabel(code);
    if (has_purpose)
      o.trip_purpose = static_cast<int>(num(pos["trip_purpose"], "trip_purpose"));
    if (has_occupation)
      o.occupation = static_cast<int>(num(pos["occupation"], "occupation"));

    validate_observation(o, row);
    require(seen_ids.insert(o.id).second, Errc::SchemaMismatch,
            "duplicate id " + std::to_string(o.id) + " at row " +
                std::to_string(row));
    d.observations.push_back(std::move(o));
  }
  return d;
}

inline std::string to_csv(const Dataset& d) {
  const bool with_segments =
      !d.observations.empty() &&
      std::all_of(d.observations.begin(), d.observations.end(),
                  [](const ChoiceObservation& o) {
                    return o.trip_purpose.has_value() &&
                           o.occupation.has_value();
                  });
  std::string out;
  const auto cols = csv_columns(with_segments);
  for (std::size_t i = 0; i < cols.size(); ++i) {
    if (i) out += ',';
    out += cols[i];
  }
  out += '\n';
  for (const auto& o : d.observations) {
    out += std::to_string(o.id);
    for (int f = 0; f < kNumFeatures; ++f) {
      out += ',';
      out += format_double(get_feature(o, f));
    }
    out += ',';
    out += std::to_string(o.chosen.code());
    if (with_segments) {
      out += ',';
      out += std::to_string(*o.trip_purpose);
      out += ',';
      out += std::to_string(*o.occupation);
    }
    out += '\n';
  }
  return out;
}

inline void write_csv(const Dataset& d, const std::filesystem::path& path) {
  atomic_write_file(path, to_csv(d));
}

// ---------------------------------------------------------------------------
// Min-max scaling
//
// Bounds come from the training partition only. Categorical 0/1 columns
// (gender, metro_avail) pass through unchanged. A degenerate column
// (max == min) maps to 0. Values outside the training bounds are not
// clipped, so test rows may scale outside [0,1].

struct ScalerParams {
  std::vector<double> min;   // per feature
  std::vector<double> max;   // per feature
  std::vector<bool> pass_through;

  bool degenerate(int f) const { return max[f] == min[f]; }
  std::size_t size() const { return min.size(); }
};

inline bool is_categorical_feature(int f) {
  return f == 1 /*gender*/ || f == 4 /*metro_avail*/;
}

inline ScalerParams fit_minmax(const Dataset& train) {
  require(!train.empty(), Errc::EmptyDataset, "fit_minmax on empty dataset");
  ScalerParams s;
  s.min.assign(kNumFeatures, std::numeric_limits<double>::infinity());
  s.max.assign(kNumFeatures, -std::numeric_limits<double>::infinity());
  s.pass_through.assign(kNumFeatures, false);
  for (const auto& o : train.observations) {
    for (int f = 0; f < kNumFeatures; ++f) {
      const double x = get_feature(o, f);
      s.min[f] = std::min(s.min[f], x);
      s.max[f] = std::max(s.max[f], x);
    }
  }
  for (int f = 0; f < kNumFeatures; ++f)
    s.pass_through[f] = is_categorical_feature(f);
  return s;
}

inline double scale_value(const ScalerParams& s, int f, double x) {
  if (s.pass_through[f]) return x;
  if (s.degenerate(f)) return 0.0;
  return (x - s.min[f]) / (s.max[f] - s.min[f]);
}

inline void apply_minmax_row(const ScalerParams& s, std::span<double> row) {
  require(s.size() == row.size(), Errc::SchemaMismatch,
          "scaler covers " + std::to_string(s.size()) + " features, row has " +
              std::to_string(row.size()));
  for (std::size_t f = 0; f < row.size(); ++f)
    row[f] = scale_value(s, static_cast<int>(f), row[f]);
}

inline NumMatrix apply_minmax(const ScalerParams& s, const NumMatrix& X) {
  require(s.size() == X.cols, Errc::SchemaMismatch,
          "scaler/feature-count mismatch");
  NumMatrix out = X;
  for (std::size_t r = 0; r < out.rows; ++r) apply_minmax_row(s, out.row(r));
  return out;
}

inline Dataset apply_minmax(const ScalerParams& s, const Dataset& d) {
  require(s.size() == static_cast<std::size_t>(kNumFeatures),
          Errc::SchemaMismatch, "scaler does not cover the feature set");
  Dataset out = d;
  for (auto& o : out.observations)
    for (int f = 0; f < kNumFeatures; ++f)
      set_feature(o, f, scale_value(s, f, get_feature(o, f)));
  return out;
}

// ---------------------------------------------------------------------------
// Splitting

// Seeded stratified split: per-class counts in train equal
// round(class_count * train_fraction). Output partitions preserve the input
// row order within each part.
inline std::pair<Dataset, Dataset> stratified_split(const Dataset& d,
                                                    double train_fraction,
                                                    std::uint64_t seed) {
  require(!d.empty(), Errc::EmptyDataset, "stratified_split on empty dataset");
  require(train_fraction > 0 && train_fraction < 1, Errc::DimensionMismatch,
          "train_fraction must lie in (0,1)");

  std::array<std::vector<std::size_t>, kNumModes> by_class;
  for (std::size_t i = 0; i < d.n(); ++i)
    by_class[d[i].chosen.index()].push_back(i);

  std::vector<char> in_train(d.n(), 0);
  for (int c = 0; c < kNumModes; ++c) {
    auto& idx = by_class[c];
    if (idx.empty()) continue;
    auto rng = make_rng(seed, "stratified-split", static_cast<std::uint64_t>(c));
    std::shuffle(idx.begin(), idx.end(), rng);
    const auto take = static_cast<std::size_t>(
        std::llround(train_fraction * static_cast<double>(idx.size())));
    for (std::size_t i = 0; i < take && i < idx.size(); ++i)
      in_train[idx[i]] = 1;
  }

  Dataset train, test;
  train.schema_version = test.schema_version = d.schema_version;
  for (std::size_t i = 0; i < d.n(); ++i)
    (in_train[i] ? train : test).observations.push_back(d[i]);
  return {std::move(train), std::move(test)};
}

struct FoldIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
};

// Seeded k-fold partition of 0..n-1; fold sizes differ by at most one.
inline std::vector<FoldIndices> kfold_indices(std::size_t n, std::size_t k,
                                              std::uint64_t seed) {
  require(k >= 2, Errc::KTooLarge, "k must be at least 2");
  require(k <= n, Errc::KTooLarge,
          "k=" + std::to_string(k) + " exceeds n=" + std::to_string(n));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  auto rng = make_rng(seed, "kfold");
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<FoldIndices> folds(k);
  const std::size_t base = n / k, extra = n % k;
  std::size_t at = 0;
  for (std::size_t f = 0; f < k; ++f) {
    const std::size_t len = base + (f < extra ? 1 : 0);
    folds[f].validation.assign(order.begin() + at, order.begin() + at + len);
    std::sort(folds[f].validation.begin(), folds[f].validation.end());
    at += len;
  }
  for (std::size_t f = 0; f < k; ++f) {
    auto& tr = folds[f].train;
    tr.reserve(n - folds[f].validation.size());
    for (std::size_t g = 0; g < k; ++g) {
      if (g == f) continue;
      tr.insert(tr.end(), folds[g].validation.begin(),
                folds[g].validation.end());
    }
    std::sort(tr.begin(), tr.end());
  }
  return folds;
}

}  // namespace modechoice
