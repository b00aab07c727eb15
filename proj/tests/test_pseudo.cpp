#include <cmath>

#include <doctest.h>

#include "rmss/cluster.hpp"
#include "rmss/dpr.hpp"
#include "rmss/pseudo.hpp"
#include "rmss/rng.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace rmss;

namespace {

ClusterLabels labels_of(std::vector<int> v, bool refined = false) {
  ClusterLabels l;
  l.labels = std::move(v);
  l.refined = refined;
  return l;
}

MotionMask mask_of(std::vector<int> v) {
  MotionMask m;
  for (int x : v) m.flags.push_back(x ? Motion::Moving : Motion::Static);
  return m;
}

RadarScan scan_at(std::vector<std::array<double, 3>> pts) {
  RadarScan scan;
  for (const auto& p : pts) {
    RadarPoint rp;
    rp.x = p[0];
    rp.y = p[1];
    rp.z = p[2];
    scan.points.push_back(rp);
  }
  return scan;
}

}  // namespace

TEST_SUITE("pseudo") {

TEST_CASE("teacher points inherit the nearest student centroid label") {
  const RadarScan student = scan_at({{0, 0, 0}, {0, 1, 0}, {10, 0, 0}, {10, 1, 0}});
  const ClusterLabels student_labels = labels_of({0, 0, 1, 1});
  const RadarScan teacher = scan_at({{4, 0.5, 0}, {9, 0, 0}});
  const ClusterLabels got =
      pseudo::derive_teacher_labels(student, student_labels, teacher);
  CHECK(got.labels == std::vector<int>{0, 1});  // 4 < 6 picks centroid 0
  CHECK_FALSE(got.refined);
}

TEST_CASE("identical teacher scan reproduces the student labels") {
  const RadarScan student =
      scan_at({{0, 0, 0}, {0.2, 0, 0}, {20, 0, 0}, {20.3, 0, 0}, {40, 5, 0}});
  const ClusterLabels student_labels = labels_of({0, 0, 1, 1, -1});
  const ClusterLabels got =
      pseudo::derive_teacher_labels(student, student_labels, student);
  CHECK(got.labels[0] == 0);
  CHECK(got.labels[1] == 0);
  CHECK(got.labels[2] == 1);
  CHECK(got.labels[3] == 1);
  CHECK(got.labels[4] >= 0);  // noise points receive some label too
}

TEST_CASE("single student cluster labels every teacher point") {
  const RadarScan student = scan_at({{1, 0, 0}, {2, 0, 0}});
  const RadarScan teacher = scan_at({{5, 5, 0}, {50, -3, 1}});
  const ClusterLabels got =
      pseudo::derive_teacher_labels(student, labels_of({3, 3}), teacher);
  CHECK(got.labels == std::vector<int>{3, 3});
}

TEST_CASE("all-noise student labels cannot transfer") {
  const RadarScan student = scan_at({{1, 0, 0}, {2, 0, 0}});
  CHECK_THROWS_AS(
      pseudo::derive_teacher_labels(student, labels_of({-1, -1}), student),
      NoClusters);
}

TEST_CASE("refinement splits a mixed cluster with a shared offset") {
  const ClusterLabels ls = labels_of({0, 0, 0});
  const MotionMask ms = mask_of({1, 0, 0});
  const ClusterLabels lt = labels_of({0, 0});
  const MotionMask mt = mask_of({1, 0});
  const auto [rs, rt] = pseudo::refine_clusters(ls, ms, lt, mt);
  // max label over both sides is 0, so the shared offset is 1
  CHECK(rs.labels == std::vector<int>{0, 1, 1});
  CHECK(rt.labels == std::vector<int>{0, 1});
  CHECK(rs.refined);
  CHECK(rt.refined);
}

TEST_CASE("pure clusters keep their labels through refinement") {
  const ClusterLabels ls = labels_of({0, 0, 1, 1, -1});
  const MotionMask ms = mask_of({1, 1, 0, 0, 0});
  const auto [rs, rt] = pseudo::refine_clusters(ls, ms, ls, ms);
  CHECK(rs.labels == std::vector<int>{0, 0, 1, 1, -1});
  CHECK(rt.labels == rs.labels);
}

TEST_CASE("a cluster pure on one side may split on the other") {
  // label 0 pure static on the student, mixed on the teacher
  const ClusterLabels ls = labels_of({0, 0});
  const MotionMask ms = mask_of({0, 0});
  const ClusterLabels lt = labels_of({0, 0, 0});
  const MotionMask mt = mask_of({1, 0, 0});
  const auto [rs, rt] = pseudo::refine_clusters(ls, ms, lt, mt);
  CHECK(rs.labels == std::vector<int>{0, 0});
  CHECK(rt.labels == std::vector<int>{0, 1, 1});
  // matched pair (0, 0) is static-vs-moving: a negative match
  const auto map_s = pseudo::classify_clusters(rs, ms);
  const auto map_t = pseudo::classify_clusters(rt, mt);
  const auto matches = pseudo::match_clusters(map_s, map_t);
  REQUIRE(matches.size() == 1);
  CHECK(matches[0].label_s == 0);
  CHECK_FALSE(matches[0].positive);
}

TEST_CASE("refinement purity holds on random fixtures") {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const std::size_t n = 10 + seed % 30;
    const ClusterLabels ls = testing::random_labels(derive_seed(seed, 1), n, 4, 0.2);
    const ClusterLabels lt = testing::random_labels(derive_seed(seed, 2), n, 4, 0.0);
    const MotionMask mks = testing::random_mask(derive_seed(seed, 3), n);
    const MotionMask mkt = testing::random_mask(derive_seed(seed, 4), n);
    const auto [rs, rt] = pseudo::refine_clusters(ls, mks, lt, mkt);
    CHECK_NOTHROW(pseudo::classify_clusters(rs, mks));
    CHECK_NOTHROW(pseudo::classify_clusters(rt, mkt));
  }
}

TEST_CASE("classify rejects impure labels") {
  const ClusterLabels bad = labels_of({0, 0}, true);
  const MotionMask mask = mask_of({1, 0});
  CHECK_THROWS_AS(pseudo::classify_clusters(bad, mask), DataError);
  const ClusterLabels pure = labels_of({0, 0, 1}, true);
  const auto map = pseudo::classify_clusters(pure, mask_of({1, 1, 0}));
  REQUIRE(map.size() == 2);
  CHECK(map[0].label == 0);
  CHECK(map[0].cls == Motion::Moving);
  CHECK(map[0].member_count == 2);
  CHECK(map[1].cls == Motion::Static);
}

TEST_CASE("representation centroids are member means") {
  RepresentationMatrix reps(3);
  for (std::size_t k = 0; k < RepresentationMatrix::kDim; ++k) {
    reps.row(0)[k] = 1.0;  // cluster 0
    reps.row(1)[k] = 0.0;  // cluster 1
    reps.row(2)[k] = k == 0 ? 2.0 : 0.0;  // cluster 1
  }
  const auto cents =
      pseudo::representation_centroids(reps, labels_of({0, 1, 1}, true));
  REQUIRE(cents.representation.size() == 2);
  CHECK(cents.representation[0].mean[0] == 1.0);
  CHECK(cents.representation[1].mean[0] == 1.0);  // (0 + 2) / 2
  CHECK(cents.representation[1].mean[1] == 0.0);
}

TEST_CASE("representation centroids match direct summation on random input") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const std::size_t n = 20;
    const RepresentationMatrix reps = testing::random_reps(seed, n);
    const ClusterLabels labels = testing::random_labels(seed, n, 3, 0.15);
    const auto cents = pseudo::representation_centroids(reps, labels);
    for (const auto& c : cents.representation) {
      std::array<double, RepresentationMatrix::kDim> sum{};
      int count = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (labels.labels[i] != c.label) continue;
        ++count;
        for (std::size_t k = 0; k < sum.size(); ++k) sum[k] += reps.row(i)[k];
      }
      for (std::size_t k = 0; k < sum.size(); ++k) {
        CHECK(c.mean[k] == doctest::Approx(sum[k] / count).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("match pairs labels present on both sides") {
  pseudo::ClusterClassMap a{{0, Motion::Moving, 3}, {1, Motion::Static, 2}};
  pseudo::ClusterClassMap b{{0, Motion::Moving, 4}, {1, Motion::Static, 5}};
  auto matches = pseudo::match_clusters(a, b);
  REQUIRE(matches.size() == 2);
  CHECK(matches[0].positive);
  CHECK(matches[1].positive);

  b[1].cls = Motion::Moving;  // label 1 disagrees now
  matches = pseudo::match_clusters(a, b);
  CHECK_FALSE(matches[1].positive);

  const pseudo::ClusterClassMap c{{7, Motion::Moving, 1}};
  CHECK_THROWS_AS(pseudo::match_clusters(a, c), NoMatches);
}

TEST_CASE("coincident centroids floor the loss at 1e-6 with zero gradient") {
  RepresentationMatrix reps(2);
  for (std::size_t k = 0; k < RepresentationMatrix::kDim; ++k) {
    reps.row(0)[k] = 0.5;
    reps.row(1)[k] = 0.5;
  }
  const ClusterLabels ls = labels_of({0, 0}, true);
  const auto res = pseudo::macl_loss(reps, reps, ls, ls, {{0, 0, true}});
  CHECK(res.loss == doctest::Approx(1e-6));
  for (double g : res.grad_reps_s) CHECK(g == 0.0);
}

TEST_CASE("negative match at distance two scores one half") {
  RepresentationMatrix rs(1), rt(1);
  rs.row(0)[0] = 2.0;  // distance 2 along the first axis
  const ClusterLabels l = labels_of({0}, true);
  const auto res = pseudo::macl_loss(rs, rt, l, l, {{0, 0, false}});
  CHECK(res.loss == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("loss value matches the brute-force recomputation") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const testing::MaclFixture fx = testing::random_macl_fixture(seed);
    const auto res = pseudo::macl_loss(fx.reps_s, fx.reps_t, fx.labels_s,
                                       fx.labels_t, fx.matches);
    const double want = testing::naive_macl_value(fx.reps_s, fx.reps_t, fx.labels_s,
                                                  fx.labels_t, fx.matches);
    CHECK(res.loss == doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("analytic gradient matches central finite differences") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const testing::MaclFixture fx = testing::random_macl_fixture(seed);
    const auto res = pseudo::macl_loss(fx.reps_s, fx.reps_t, fx.labels_s,
                                       fx.labels_t, fx.matches);
    auto value = [&](const std::vector<double>& flat) {
      RepresentationMatrix r(fx.reps_s.rows());
      r.data() = flat;
      return pseudo::macl_loss(r, fx.reps_t, fx.labels_s, fx.labels_t, fx.matches)
          .loss;
    };
    std::vector<std::size_t> coords;
    Rng rng(seed);
    for (int c = 0; c < 60; ++c) coords.push_back(rng.below(fx.reps_s.data().size()));
    const auto check = testing::check_gradient(value, fx.reps_s.data(),
                                               res.grad_reps_s, coords);
    CHECK(check.max_rel_err < 1e-4);
  }
}

TEST_CASE("single positive match loss increases with centroid distance") {
  const ClusterLabels l = labels_of({0}, true);
  double prev = -1.0;
  for (double d : {0.5, 1.0, 2.0, 4.0}) {
    RepresentationMatrix rs(1), rt(1);
    rs.row(0)[0] = d;
    const double loss = pseudo::macl_loss(rs, rt, l, l, {{0, 0, true}}).loss;
    CHECK(loss > prev);
    prev = loss;
  }
}

TEST_CASE("translating both representation sets changes nothing") {
  const testing::MaclFixture fx = testing::random_macl_fixture(11);
  const auto base = pseudo::macl_loss(fx.reps_s, fx.reps_t, fx.labels_s,
                                      fx.labels_t, fx.matches);
  RepresentationMatrix rs = fx.reps_s, rt = fx.reps_t;
  for (double& v : rs.data()) v += 3.25;
  for (double& v : rt.data()) v += 3.25;
  const auto moved =
      pseudo::macl_loss(rs, rt, fx.labels_s, fx.labels_t, fx.matches);
  CHECK(moved.loss == doctest::Approx(base.loss).epsilon(1e-9));
  for (std::size_t i = 0; i < base.grad_reps_s.size(); ++i) {
    CHECK(moved.grad_reps_s[i] == doctest::Approx(base.grad_reps_s[i]).epsilon(1e-6));
  }
}

TEST_CASE("non-finite representations are rejected") {
  const testing::MaclFixture fx = testing::random_macl_fixture(13);
  RepresentationMatrix bad = fx.reps_s;
  bad.row(0)[0] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(
      pseudo::macl_loss(bad, fx.reps_t, fx.labels_s, fx.labels_t, fx.matches),
      DataError);
}

TEST_CASE("pipeline intersection is non-empty whenever the student clusters") {
  // full pipeline on random blob scans: cluster -> derive -> refine -> match
  int with_clusters = 0;
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    const RadarScan student = testing::random_blob_scan(derive_seed(seed, 1));
    const RadarScan teacher = testing::random_blob_scan(derive_seed(seed, 2));
    cluster::ClusterParams cp;
    const ClusterLabels ls =
        cluster::hdbscan_eps(cluster::cluster_features(student, cp), cp);
    const bool has_cluster =
        std::any_of(ls.labels.begin(), ls.labels.end(), [](int l) { return l >= 0; });
    if (!has_cluster) continue;
    ++with_clusters;
    const ClusterLabels lt = pseudo::derive_teacher_labels(student, ls, teacher);
    dpr::RansacParams rp;
    rp.seed = seed;
    MotionMask mks, mkt;
    try {
      mks = dpr::segment_dpr(student, rp);
      mkt = dpr::segment_dpr(teacher, rp);
    } catch (const PipelineError&) {
      mks.flags.assign(student.size(), Motion::Static);
      mkt.flags.assign(teacher.size(), Motion::Static);
    }
    const auto [rs, rt] = pseudo::refine_clusters(ls, mks, lt, mkt);
    const auto map_s = pseudo::classify_clusters(rs, mks);
    const auto map_t = pseudo::classify_clusters(rt, mkt);
    CHECK_NOTHROW(pseudo::match_clusters(map_s, map_t));
  }
  CHECK(with_clusters > 30);
}

}  // TEST_SUITE
