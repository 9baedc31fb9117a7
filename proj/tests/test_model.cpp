#include <doctest.h>

#include <fstream>
#include <random>
#include <sstream>

#include "test_support.hpp"

using namespace smp;
using namespace smp::testing;

namespace {

nlohmann::json example_document() {
  std::ifstream in(std::string(SMP_DATA_DIR) + "/example_5_6.json");
  REQUIRE(in.good());
  nlohmann::json doc;
  in >> doc;
  return doc;
}

}  // namespace

TEST_CASE("loading the shipped example document") {
  const auto doc = example_document();
  const auto loaded = load_model_document<Rational>(doc);
  CHECK(loaded.model.m() == 3);
  CHECK(loaded.model.max_order() == 2);
  CHECK(loaded.model.reward_kind() == RewardKind::Nonnegative);
  CHECK(loaded.model == example_model<Rational>());
  REQUIRE(loaded.distributions.has_value());
  CHECK(verify_consistency(*loaded.distributions, loaded.model).consistent());

  const auto as_double = load_model_document<double>(doc);
  CHECK(as_double.model.probability(1, 2) == doctest::Approx(0.25));
}

TEST_CASE("two-state alternating document is valid") {
  const nlohmann::json doc = {
      {"m", 1},
      {"d", 1},
      {"p", {{0, 1}, {1, 0}}},
      {"e", {{{0, 1}, {1, 0}}}},
  };
  const auto loaded = load_model_document<Rational>(doc);
  CHECK(loaded.model == alternating_model<Rational>());
}

TEST_CASE("load failures carry the right codes") {
  nlohmann::json doc = example_document();

  SUBCASE("row sum violation") {
    doc["p"][1] = {"1/4", "1/4", "1/4", "0.15"};
    CHECK_THROWS_WITH_AS(load_model_document<Rational>(doc),
                         doctest::Contains("row 1"), SmpError);
    try {
      load_model_document<Rational>(doc);
    } catch (const SmpError& err) {
      CHECK(err.code() == ErrorCode::RowSumViolation);
    }
  }
  SUBCASE("negative probability") {
    doc["p"][1] = {"1/2", "1/4", "1/2", "-1/4"};
    try {
      load_model_document<Rational>(doc);
      FAIL("expected a NegativeMoment error");
    } catch (const SmpError& err) {
      CHECK(err.code() == ErrorCode::NegativeMoment);
    }
  }
  SUBCASE("negative moment in nonnegative mode") {
    doc["e"][0][2][1] = "-1";
    try {
      load_model_document<Rational>(doc);
      FAIL("expected a NegativeMoment error");
    } catch (const SmpError& err) {
      CHECK(err.code() == ErrorCode::NegativeMoment);
    }
  }
  SUBCASE("order-zero mismatch via explicit e0") {
    doc["e0"] = doc["p"];
    CHECK_NOTHROW(load_model_document<Rational>(doc));
    doc["e0"][0] = {"0", "0", "1", "0"};
    try {
      load_model_document<Rational>(doc);
      FAIL("expected an OrderZeroMismatch error");
    } catch (const SmpError& err) {
      CHECK(err.code() == ErrorCode::OrderZeroMismatch);
    }
  }
  SUBCASE("missing fields") {
    doc.erase("e");
    try {
      load_model_document<Rational>(doc);
      FAIL("expected a MalformedDocument error");
    } catch (const SmpError& err) {
      CHECK(err.code() == ErrorCode::MalformedDocument);
    }
  }
  SUBCASE("wrong moment count") {
    doc["e"].erase(1);
    try {
      load_model_document<Rational>(doc);
      FAIL("expected a MalformedDocument error");
    } catch (const SmpError& err) {
      CHECK(err.code() == ErrorCode::MalformedDocument);
    }
  }
}

TEST_CASE("negative sojourn moments are accepted in real-reward mode") {
  nlohmann::json doc = example_document();
  doc["reward_kind"] = "real";
  doc["e"][0][2][1] = "-1";
  doc.erase("distributions");
  CHECK_NOTHROW(load_model_document<Rational>(doc));
}

TEST_CASE("sojourn moment accessor") {
  const auto model = example_model<Rational>();
  CHECK(sojourn_moment(model, 2, 1, 0) == Rational(8));
  CHECK(sojourn_moment(model, 1, 3, 2) == Rational(1));
  // Order zero is the transition probability.
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      CHECK(sojourn_moment(model, 0, i, j) == model.probability(i, j));
  try {
    sojourn_moment(model, 3, 0, 0);
    FAIL("expected an OrderOutOfRange error");
  } catch (const SmpError& err) {
    CHECK(err.code() == ErrorCode::OrderOutOfRange);
  }
}

TEST_CASE("reachability") {
  const auto model = example_model<Rational>();
  CHECK(check_reachability(model, 0));
  CHECK(check_reachability(model, TargetSet({0, 1, 2, 3}, 4)));

  SUBCASE("absorbing non-target state blocks reachability") {
    DenseMatrix<Rational> p(2, 2), e1(2, 2);
    p << Rational(0), Rational(1), Rational(0), Rational(1);
    e1 = p;
    const SmpModel<Rational> trap({p, e1});
    CHECK(!check_reachability(trap, 0));
    CHECK(check_reachability(trap, 1));
  }
  SUBCASE("empty target") {
    try {
      TargetSet({}, 4);
      FAIL("expected an EmptyTarget error");
    } catch (const SmpError& err) {
      CHECK(err.code() == ErrorCode::EmptyTarget);
    }
  }
  SUBCASE("enlarging the target never flips true to false") {
    std::mt19937 rng(7);
    for (int trial = 0; trial < 30; ++trial) {
      const auto gen = random_model(rng, 4, 2);
      std::uniform_int_distribution<int> pick(0, 4);
      std::vector<StateId> targets{pick(rng)};
      bool reached = check_reachability(gen.model, TargetSet(targets, 5));
      for (int grow = 0; grow < 3; ++grow) {
        targets.push_back(pick(rng));
        const bool larger = check_reachability(gen.model, TargetSet(targets, 5));
        if (reached) CHECK(larger);
        reached = larger;
      }
    }
  }
}

TEST_CASE("serialization round-trip is the identity") {
  SUBCASE("rational") {
    const auto doc = example_document();
    const auto first = load_model_document<Rational>(doc);
    const auto text = model_to_json(
        first.model, first.distributions ? &*first.distributions : nullptr);
    const auto second = load_model_document<Rational>(text);
    CHECK(first.model == second.model);
    REQUIRE(second.distributions.has_value());
    CHECK(verify_consistency(*second.distributions, second.model).consistent());
  }
  SUBCASE("float, including random models") {
    std::mt19937 rng(11);
    for (int trial = 0; trial < 10; ++trial) {
      const auto gen = cast_generated<double>(random_model(rng, 5, 3));
      const auto text = model_to_json(gen.model, &gen.spec);
      const auto back = load_model_document<double>(text);
      CHECK(back.model == gen.model);
    }
  }
}

TEST_CASE("moment table basics") {
  auto table = MomentTable<Rational>::order_zero(0, {0, 1, 2});
  CHECK(table.max_order() == 0);
  CHECK(table.at(0, 2) == Rational(1));
  CHECK(!table.contains(3));
  try {
    table.at(1, 0);
    FAIL("expected an OrderOutOfRange error");
  } catch (const SmpError& err) {
    CHECK(err.code() == ErrorCode::OrderOutOfRange);
  }
}
