#include <doctest.h>

#include <cmath>

#include "relalign/losses.hpp"
#include "relalign/math.hpp"
#include "relalign/rng.hpp"
#include "relalign/taxonomy.hpp"
#include "test_util.hpp"

using namespace relalign;
using namespace relalign::losses;

namespace {

constexpr double kTau = 0.1;

Mat rows(std::initializer_list<std::initializer_list<double>> values) {
  Mat m(values.size(), values.begin()->size());
  Index i = 0;
  for (const auto& row : values) {
    Index j = 0;
    for (double v : row) m(i, j++) = v;
    ++i;
  }
  return m;
}

/// Central finite differences against the analytic gradient; the relative
/// error must stay under 1e-4 on every coordinate.
template <class Eval>
void check_gradient(Mat& subject, const Mat& analytic, Eval eval, double h = 1e-6) {
  REQUIRE(subject.rows() == analytic.rows());
  REQUIRE(subject.cols() == analytic.cols());
  for (Index i = 0; i < subject.rows(); ++i) {
    for (Index j = 0; j < subject.cols(); ++j) {
      const double orig = subject(i, j);
      subject(i, j) = orig + h;
      const double up = eval();
      subject(i, j) = orig - h;
      const double down = eval();
      subject(i, j) = orig;
      const double numeric = (up - down) / (2 * h);
      const double denom = std::max({std::abs(numeric), std::abs(analytic(i, j)), 1e-4});
      CHECK(std::abs(numeric - analytic(i, j)) / denom < 1e-4);
    }
  }
}

struct RandomBatch {
  Mat inputs;
  Mat table;
  std::vector<int> labels;
};

RandomBatch random_batch(Rng& rng, int max_n = 4, int max_k = 4, int max_d = 8) {
  RandomBatch b;
  const int n = 1 + static_cast<int>(rng.below(max_n));
  const int k = 2 + static_cast<int>(rng.below(max_k - 1));
  const int d = 2 + static_cast<int>(rng.below(max_d - 1));
  b.inputs = Mat::NullaryExpr(n, d, [&](Index, Index) { return rng.normal(); });
  b.table = Mat::NullaryExpr(k, d, [&](Index, Index) { return rng.normal(); });
  b.labels.resize(n);
  for (int i = 0; i < n; ++i) b.labels[i] = static_cast<int>(rng.below(k));
  return b;
}

}  // namespace

TEST_CASE("icl closed forms") {
  SUBCASE("aligned input, orthogonal distractor") {
    const Mat x = rows({{1, 0}});
    const Mat t = rows({{1, 0}, {0, 1}});
    const std::vector<int> labels = {0};
    const auto r = icl_loss({x, labels, t, kTau});
    CHECK(r.value == doctest::Approx(4.5398899216864647e-5).epsilon(1e-9));
  }
  SUBCASE("both cosines equal gives log 2") {
    const Mat x = rows({{1, 1}});
    const Mat t = rows({{1, 0}, {0, 1}});
    const std::vector<int> labels = {0};
    const auto r = icl_loss({x, labels, t, kTau});
    CHECK(r.value == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  }
  SUBCASE("duplicated instance leaves the mean unchanged") {
    const Mat x1 = rows({{0.3, -0.7}});
    const Mat x2 = rows({{0.3, -0.7}, {0.3, -0.7}});
    const Mat t = rows({{1, 0.2}, {-0.5, 1}});
    const auto single = icl_loss({x1, {0}, t, kTau});
    const auto doubled = icl_loss({x2, {0, 0}, t, kTau});
    CHECK(doubled.value == doctest::Approx(single.value).epsilon(1e-12));
  }
}

TEST_CASE("icl properties") {
  Rng rng(99);
  SUBCASE("invariant under positive rescaling of one input") {
    for (int trial = 0; trial < 10; ++trial) {
      auto b = random_batch(rng);
      const double base = icl_loss({b.inputs, b.labels, b.table, kTau}).value;
      b.inputs.row(0) *= 7.25;
      const double scaled = icl_loss({b.inputs, b.labels, b.table, kTau}).value;
      CHECK(std::abs(base - scaled) < 1e-9);
    }
  }
  SUBCASE("non-negative, approaching the k-class floor") {
    for (int trial = 0; trial < 20; ++trial) {
      const auto b = random_batch(rng);
      CHECK(icl_loss({b.inputs, b.labels, b.table, kTau}).value >= 0.0);
    }
    // Positive cosine 1, all negatives -1: floor log(1 + (k-1) e^{-2/tau}).
    const int k = 4, d = 3;
    Mat t(k, d);
    t.row(0) = Eigen::RowVector3d(1, 0, 0);
    for (int l = 1; l < k; ++l) t.row(l) = Eigen::RowVector3d(-1, 0, 0);
    const Mat x = rows({{1, 0, 0}});
    const auto r = icl_loss({x, {0}, t, kTau});
    CHECK(r.value == doctest::Approx(std::log(1 + 3 * std::exp(-20.0))).epsilon(1e-9));
  }
  SUBCASE("zero-norm vector is an error") {
    const Mat x = rows({{0, 0}});
    const Mat t = rows({{1, 0}, {0, 1}});
    CHECK_THROWS_AS(icl_loss({x, {0}, t, kTau}), ValidationError);
  }
}

TEST_CASE("lcl closed forms") {
  SUBCASE("symmetric one-positive one-negative pair scores -10") {
    // Per class: its positive has cosine 1 with the anchor, the sole
    // negative has cosine 0.
    const Mat x = rows({{1, 0}, {0, 1}});
    const Mat t = rows({{1, 0}, {0, 1}});
    const std::vector<int> labels = {0, 1};
    const auto r = lcl_loss({x, labels, t, kTau});
    CHECK(r.value == doctest::Approx(-10.0).epsilon(1e-9));
    CHECK_FALSE(r.single_class);
  }
  SUBCASE("all cosines zero scores 0") {
    const Mat x = rows({{1, 0, 0}, {0, 1, 0}});
    const Mat t = rows({{0, 0, 1}, {0, 0, -1}});
    const auto r = lcl_loss({x, {0, 1}, t, kTau});
    CHECK(r.value == doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("single-class batch returns 0 with a warning") {
    const Mat x = rows({{1, 0}, {0.5, 0.5}});
    const Mat t = rows({{1, 0}, {0, 1}});
    const auto r = lcl_loss({x, {1, 1}, t, kTau});
    CHECK(r.value == 0.0);
    CHECK(r.single_class);
    CHECK(r.d_inputs.cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("lec closed forms") {
  SUBCASE("two orthogonal rows") {
    const auto r = lec_loss(rows({{1, 0}, {0, 1}}), kTau);
    CHECK(r.value == doctest::Approx(4.5398899216864647e-5).epsilon(1e-9));
  }
  SUBCASE("two identical rows give log 2") {
    const auto r = lec_loss(rows({{0.4, 0.6}, {0.4, 0.6}}), kTau);
    CHECK(r.value == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  }
  SUBCASE("three mutually orthogonal rows") {
    const auto r = lec_loss(rows({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}), kTau);
    CHECK(r.value == doctest::Approx(9.0795737467244446e-5).epsilon(1e-9));
  }
  SUBCASE("permuting rows leaves the value unchanged") {
    Rng rng(3);
    Mat t = Mat::NullaryExpr(4, 5, [&](Index, Index) { return rng.normal(); });
    const double base = lec_loss(t, kTau).value;
    Mat perm(4, 5);
    perm.row(0) = t.row(2);
    perm.row(1) = t.row(0);
    perm.row(2) = t.row(3);
    perm.row(3) = t.row(1);
    CHECK(lec_loss(perm, kTau).value == doctest::Approx(base).epsilon(1e-12));
  }
  SUBCASE("single row is an error") {
    CHECK_THROWS_AS(lec_loss(rows({{1, 0}}), kTau), ValidationError);
  }
}

TEST_CASE("ice closed forms") {
  SUBCASE("uniform logits over 4 classes") {
    const Mat logits = Mat::Zero(1, 4);
    CHECK(ice_loss(logits, {2}).value == doctest::Approx(std::log(4.0)).epsilon(1e-12));
  }
  SUBCASE("a certain-correct and a uniform instance") {
    Mat logits = Mat::Zero(2, 2);
    logits(0, 0) = 1000.0;  // effectively certain
    const auto r = ice_loss(logits, {0, 1});
    CHECK(r.value == doctest::Approx(std::log(2.0) / 2).epsilon(1e-12));
  }
  SUBCASE("loss vanishes as the margin grows") {
    double prev = 1e9;
    for (double margin : {1.0, 4.0, 16.0, 64.0}) {
      Mat logits = Mat::Zero(1, 3);
      logits(0, 1) = margin;
      const double v = ice_loss(logits, {1}).value;
      CHECK(v < prev);
      prev = v;
    }
    CHECK(prev < 1e-20);
  }
  SUBCASE("label out of range is an error") {
    CHECK_THROWS_AS(ice_loss(Mat::Zero(1, 3), {3}), ValidationError);
  }
}

TEST_CASE("total loss additivity and toggles") {
  Rng rng(17);
  const auto b = random_batch(rng);
  Mat logits = Mat::NullaryExpr(b.inputs.rows(), b.table.rows(),
                                [&](Index, Index) { return rng.normal(); });
  const BatchTensors batch{b.inputs, b.labels, b.table, kTau};

  const auto all = total_loss(batch, logits, LossToggles{true, true, true, true});
  CHECK(all.total == all.icl + all.lcl + all.lec + all.ice);
  CHECK(all.icl == icl_loss(batch).value);
  CHECK(all.lcl == lcl_loss(batch).value);
  CHECK(all.lec == lec_loss(b.table, kTau).value);
  CHECK(all.ice == ice_loss(logits, b.labels).value);

  const auto ice_only = total_loss(batch, logits, LossToggles{false, false, false, true});
  CHECK(ice_only.total == doctest::Approx(ice_loss(logits, b.labels).value));
  CHECK(ice_only.icl == 0.0);

  const auto no_lcl = total_loss(batch, logits, LossToggles{true, false, true, true});
  CHECK(all.total - no_lcl.total == doctest::Approx(all.lcl).epsilon(1e-12));

  CHECK_THROWS_AS(total_loss(batch, logits, LossToggles{false, false, false, false}),
                  ValidationError);
}

TEST_CASE("hierarchical loss composition") {
  RelationTaxonomy tax;
  tax.framework_name = "other";
  for (int i = 0; i < 4; ++i) {
    LabelRecord rec;
    rec.name = "leaf-" + std::to_string(i);
    rec.hierarchy_path = std::vector<std::string>{"top-" + std::to_string(i / 2), rec.name};
    tax.labels.push_back(rec);
  }
  Rng rng(5);
  Mat x = Mat::NullaryExpr(4, 6, [&](Index, Index) { return rng.normal(); });
  Mat t = Mat::NullaryExpr(4, 6, [&](Index, Index) { return rng.normal(); });
  const std::vector<int> labels = {0, 1, 2, 3};
  const std::vector<double> penalties = {std::sqrt(2.0), 2.0};
  const BatchTensors batch{x, labels, t, kTau};

  SUBCASE("combines the per-level contrastive pairs with the stated penalties") {
    const auto r = hier_loss(batch, tax, penalties);
    // Reconstruct by hand: level-1 table is the per-parent mean.
    Mat t1(2, 6);
    t1.row(0) = (t.row(0) + t.row(1)) / 2;
    t1.row(1) = (t.row(2) + t.row(3)) / 2;
    const std::vector<int> labels1 = {0, 0, 1, 1};
    const double l1 =
        icl_loss({x, labels1, t1, kTau}).value + lcl_loss({x, labels1, t1, kTau}).value;
    const double l2 = icl_loss(batch).value + lcl_loss(batch).value;
    CHECK(r.value == doctest::Approx(penalties[0] * l1 + penalties[1] * l2).epsilon(1e-12));
  }

  SUBCASE("penalties scale linearly") {
    const auto base = hier_loss_grouped(batch, {0, 0, 1, 1}, 2, {1.0, 0.0});
    const auto scaled = hier_loss_grouped(batch, {0, 0, 1, 1}, 2, {std::sqrt(2.0), 0.0});
    CHECK(scaled.value == doctest::Approx(std::sqrt(2.0) * base.value).epsilon(1e-12));
    const auto both = hier_loss_grouped(batch, {0, 0, 1, 1}, 2, {std::sqrt(2.0), 2.0});
    const auto l2_only = hier_loss_grouped(batch, {0, 0, 1, 1}, 2, {0.0, 1.0});
    CHECK(both.value ==
          doctest::Approx(std::sqrt(2.0) * base.value + 2.0 * l2_only.value).epsilon(1e-12));
  }

  SUBCASE("single-level hierarchy is rejected") {
    RelationTaxonomy flat = tax;
    for (auto& l : flat.labels) l.hierarchy_path = std::vector<std::string>{l.name};
    CHECK_THROWS_AS(hier_loss(batch, flat, penalties), ValidationError);
  }

  SUBCASE("missing hierarchy is rejected") {
    RelationTaxonomy bare = testutil::tiny_taxonomy(4, "leaf-");
    CHECK_THROWS_AS(hier_loss(batch, bare, penalties), ValidationError);
  }
}

TEST_CASE("gradient suite: analytic matches central differences") {
  Rng rng(2024);
  int lcl_checked = 0;
  for (int trial = 0; trial < 24; ++trial) {
    auto b = random_batch(rng);
    Mat logits = Mat::NullaryExpr(b.inputs.rows(), b.table.rows(),
                                  [&](Index, Index) { return rng.normal(); });

    {
      const auto r = icl_loss({b.inputs, b.labels, b.table, kTau});
      check_gradient(b.inputs, r.d_inputs,
                     [&] { return icl_loss({b.inputs, b.labels, b.table, kTau}).value; });
      check_gradient(b.table, r.d_table,
                     [&] { return icl_loss({b.inputs, b.labels, b.table, kTau}).value; });
    }
    {
      const auto r = lcl_loss({b.inputs, b.labels, b.table, kTau});
      if (!r.single_class) {
        ++lcl_checked;
        check_gradient(b.inputs, r.d_inputs,
                       [&] { return lcl_loss({b.inputs, b.labels, b.table, kTau}).value; });
        check_gradient(b.table, r.d_table,
                       [&] { return lcl_loss({b.inputs, b.labels, b.table, kTau}).value; });
      }
      const auto rp = lcl_loss({b.inputs, b.labels, b.table, kTau}, true);
      if (!rp.single_class) {
        check_gradient(b.inputs, rp.d_inputs,
                       [&] { return lcl_loss({b.inputs, b.labels, b.table, kTau}, true).value; });
      }
    }
    {
      const auto r = lec_loss(b.table, kTau);
      check_gradient(b.table, r.d_table, [&] { return lec_loss(b.table, kTau).value; });
    }
    {
      const auto r = ice_loss(logits, b.labels);
      check_gradient(logits, r.d_logits, [&] { return ice_loss(logits, b.labels).value; });
    }
  }
  CHECK(lcl_checked >= 10);

  // Hierarchical composition gradients.
  for (int trial = 0; trial < 4; ++trial) {
    Mat x = Mat::NullaryExpr(3, 5, [&](Index, Index) { return rng.normal(); });
    Mat t = Mat::NullaryExpr(4, 5, [&](Index, Index) { return rng.normal(); });
    const std::vector<int> labels = {0, 2, 3};
    const std::vector<int> parents = {0, 0, 1, 1};
    const std::vector<double> pen = {std::sqrt(2.0), 2.0};
    const auto r = hier_loss_grouped({x, labels, t, kTau}, parents, 2, pen);
    check_gradient(x, r.d_inputs,
                   [&] { return hier_loss_grouped({x, labels, t, kTau}, parents, 2, pen).value; });
    check_gradient(t, r.d_table,
                   [&] { return hier_loss_grouped({x, labels, t, kTau}, parents, 2, pen).value; });
  }
}
