#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <set>

#include "modechoice/data.hpp"

using namespace modechoice;

namespace {

ChoiceObservation make_obs(std::int64_t id, int chosen) {
  ChoiceObservation o;
  o.id = id;
  o.age = 30;
  o.gender = id % 2;
  o.hh_income = 8000;
  o.n_two_wheelers = 1;
  o.metro_avail = 1;
  o.pop_density = 19000;
  o.emp_density = 8000;
  for (int i = 0; i < kNumModes; ++i) {
    o.travel_time[i] = 10.0 + i + 0.25 * static_cast<double>(id % 7);
    o.travel_cost[i] = 5.0 + 2.0 * i;
  }
  o.chosen = ModeLabel(chosen);
  return o;
}

Dataset make_dataset(std::size_t n, int n_classes = kNumModes) {
  Dataset d;
  for (std::size_t i = 0; i < n; ++i)
    d.observations.push_back(
        make_obs(static_cast<std::int64_t>(i + 1),
                 1 + static_cast<int>(i) % n_classes));
  return d;
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / name;
}

}  // namespace

TEST_CASE("mode labels are bijective with the eight modes") {
  std::set<std::string> tags;
  for (int c = 1; c <= 8; ++c) tags.insert(ModeLabel(c).tag());
  CHECK(tags.size() == 8);
  CHECK(ModeLabel(1).tag() == std::string("metro"));
  CHECK(ModeLabel(8).tag() == std::string("walk"));
  CHECK_THROWS_AS(ModeLabel(0), Error);
  CHECK_THROWS_AS(ModeLabel(9), Error);
}

TEST_CASE("csv round-trip reproduces the dataset bit-exactly") {
  Dataset d = make_dataset(3);
  d.observations[1].travel_cost[3] = 12.3456789012345678;
  d.observations[2].hh_income = 1e-7;
  const auto path = temp_path("modechoice_roundtrip.csv");
  write_csv(d, path);
  Dataset back = load_csv(path, /*strict=*/true);

  REQUIRE(back.n() == d.n());
  for (std::size_t i = 0; i < d.n(); ++i) {
    CHECK(back[i].id == d[i].id);
    CHECK(back[i].chosen.code() == d[i].chosen.code());
    for (int f = 0; f < kNumFeatures; ++f)
      CHECK(get_feature(back[i], f) == get_feature(d[i], f));
  }
  std::filesystem::remove(path);
}

TEST_CASE("load_csv reports bad labels with the offending row") {
  Dataset d = make_dataset(2);
  std::string csv = to_csv(d);
  // Corrupt the chosen label of data row 2 (file row 3).
  auto pos = csv.rfind(",2\n");
  csv.replace(pos, 3, ",9\n");
  const auto path = temp_path("modechoice_badlabel.csv");
  atomic_write_file(path, csv);
  try {
    load_csv(path);
    FAIL("expected BadLabel");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::BadLabel);
    CHECK(std::string(e.what()).find("row 3") != std::string::npos);
  }
  std::filesystem::remove(path);
}

TEST_CASE("load_csv flags a missing column by name") {
  Dataset d = make_dataset(2);
  std::string csv = to_csv(d);
  auto pos = csv.find("tc_metro,");
  csv.replace(pos, 9, "");  // drop header cell, rows now mismatch
  const auto path = temp_path("modechoice_missingcol.csv");
  atomic_write_file(path, csv);
  try {
    load_csv(path);
    FAIL("expected MissingColumn");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::MissingColumn);
    CHECK(std::string(e.what()).find("tc_metro") != std::string::npos);
  }
  std::filesystem::remove(path);
}

TEST_CASE("load_csv identifies non-numeric cells by row and column") {
  Dataset d = make_dataset(2);
  std::string csv = to_csv(d);
  auto pos = csv.find("19000");
  csv.replace(pos, 5, "abcde");
  const auto path = temp_path("modechoice_nonnum.csv");
  atomic_write_file(path, csv);
  try {
    load_csv(path);
    FAIL("expected NonNumericField");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::NonNumericField);
    CHECK(std::string(e.what()).find("pop_density") != std::string::npos);
    CHECK(std::string(e.what()).find("row 2") != std::string::npos);
  }
  std::filesystem::remove(path);
}

TEST_CASE("min-max scaler") {
  Dataset train = make_dataset(3, 1);
  train.observations[0].age = 2;
  train.observations[1].age = 4;
  train.observations[2].age = 6;
  for (auto& o : train.observations) o.hh_income = 5;  // degenerate column

  ScalerParams s = fit_minmax(train);
  CHECK(s.min[0] == 2);
  CHECK(s.max[0] == 6);
  CHECK(s.degenerate(2));

  SECTION("train values map into [0,1] exactly") {
    Dataset scaled = apply_minmax(s, train);
    CHECK(scaled[0].age == 0.0);
    CHECK(scaled[1].age == 0.5);
    CHECK(scaled[2].age == 1.0);
    for (const auto& o : scaled.observations)
      for (int f = 0; f < kNumFeatures; ++f) {
        CHECK(get_feature(o, f) >= 0.0);
        CHECK(get_feature(o, f) <= 1.0);
      }
  }

  SECTION("test values beyond the train bounds are not clipped") {
    Dataset test = make_dataset(1, 1);
    test.observations[0].age = 8;
    Dataset scaled = apply_minmax(s, test);
    CHECK(scaled[0].age == Catch::Approx(1.5));
  }

  SECTION("degenerate features map to 0") {
    Dataset scaled = apply_minmax(s, train);
    CHECK(scaled[0].hh_income == 0.0);
  }

  SECTION("categorical columns pass through unchanged") {
    Dataset scaled = apply_minmax(s, train);
    for (std::size_t i = 0; i < train.n(); ++i) {
      CHECK(scaled[i].gender == train[i].gender);
      CHECK(scaled[i].metro_avail == train[i].metro_avail);
    }
  }

  SECTION("empty dataset rejected") {
    CHECK_THROWS_AS(fit_minmax(Dataset{}), Error);
  }
}

TEST_CASE("stratified split respects per-class rounding") {
  SECTION("50/50 two classes at 0.7") {
    Dataset d = make_dataset(100, 2);
    auto [train, test] = stratified_split(d, 0.7, 11);
    CHECK(train.n() == 70);
    CHECK(test.n() == 30);
    auto tc = train.class_counts();
    CHECK(tc[0] == 35);
    CHECK(tc[1] == 35);
  }
  SECTION("single class of 10") {
    Dataset d = make_dataset(10, 1);
    auto [train, test] = stratified_split(d, 0.7, 11);
    CHECK(train.n() == 7);
    CHECK(test.n() == 3);
  }
  SECTION("singleton class lands in train (round(0.7) == 1)") {
    Dataset d = make_dataset(9, 1);
    d.observations.push_back(make_obs(100, 2));
    auto [train, test] = stratified_split(d, 0.7, 11);
    CHECK(train.class_counts()[1] == 1);
    CHECK(test.class_counts()[1] == 0);
  }
}

TEST_CASE("stratified split is a partition and deterministic") {
  Dataset d = make_dataset(257, 5);
  auto [a_train, a_test] = stratified_split(d, 0.7, 42);
  auto [b_train, b_test] = stratified_split(d, 0.7, 42);

  CHECK(a_train.n() + a_test.n() == d.n());
  std::set<std::int64_t> ids;
  for (const auto& o : a_train.observations) ids.insert(o.id);
  for (const auto& o : a_test.observations) ids.insert(o.id);
  CHECK(ids.size() == d.n());  // nothing lost, nothing duplicated

  CHECK(to_csv(a_train) == to_csv(b_train));
  CHECK(to_csv(a_test) == to_csv(b_test));

  auto [c_train, c_test] = stratified_split(d, 0.7, 43);
  CHECK(to_csv(a_train) != to_csv(c_train));  // seed matters
}

TEST_CASE("kfold indices partition the range") {
  SECTION("n=10 k=5") {
    auto folds = kfold_indices(10, 5, 3);
    REQUIRE(folds.size() == 5);
    std::set<std::size_t> all;
    for (const auto& f : folds) {
      CHECK(f.validation.size() == 2);
      CHECK(f.train.size() == 8);
      for (auto i : f.validation) {
        CHECK(all.insert(i).second);  // pairwise disjoint
      }
    }
    CHECK(all.size() == 10);
  }
  SECTION("n=7 k=3 gives fold sizes {3,2,2}") {
    auto folds = kfold_indices(7, 3, 3);
    std::multiset<std::size_t> sizes;
    for (const auto& f : folds) sizes.insert(f.validation.size());
    CHECK(sizes == std::multiset<std::size_t>{2, 2, 3});
  }
  SECTION("deterministic given seed") {
    auto a = kfold_indices(23, 4, 9);
    auto b = kfold_indices(23, 4, 9);
    for (std::size_t f = 0; f < a.size(); ++f) {
      CHECK(a[f].validation == b[f].validation);
      CHECK(a[f].train == b[f].train);
    }
  }
  SECTION("k greater than n rejected") {
    CHECK_THROWS_AS(kfold_indices(3, 5, 1), Error);
  }
}

TEST_CASE("feature schema addresses every column") {
  CHECK(feature_names().size() == kNumFeatures);
  CHECK(feature_index("age") == 0);
  CHECK(feature_index("tt_metro") == kTravelTimeFeature0);
  CHECK(feature_index("tc_walk") == kNumFeatures - 1);
  CHECK(feature_index("nope") == -1);

  ChoiceObservation o = make_obs(1, 1);
  for (int f = 0; f < kNumFeatures; ++f) {
    set_feature(o, f, 123.5 + f);
    CHECK(get_feature(o, f) == 123.5 + f);
  }
}

TEST_CASE("observation invariants are enforced") {
  ChoiceObservation o = make_obs(1, 1);
  o.travel_time[2] = 0.0;
  CHECK_THROWS_AS(validate_observation(o), Error);
  o = make_obs(1, 1);
  o.travel_cost[5] = -1.0;
  CHECK_THROWS_AS(validate_observation(o), Error);
}
