#include <sstream>

#include <gtest/gtest.h>

#include "shapbpt/coalition.hpp"
#include "shapbpt/errors.hpp"
#include "shapbpt/game.hpp"
#include "support.hpp"

using namespace shapbpt;

TEST(Coalition, MembersRoundTrip) {
  auto c = make_coalition(10, {7, 1, 4});
  EXPECT_EQ(members_of(c), (std::vector<Player>{1, 4, 7}));
  EXPECT_EQ(c.size(), 10u);
  EXPECT_EQ(to_string(c), "{1,4,7}");
}

TEST(Coalition, RejectsOutOfRangePlayer) {
  EXPECT_THROW(make_coalition(3, {3}), BoundsError);
}

TEST(Coalition, HashSeparatesSizesAndMembers) {
  CoalitionHash h;
  EXPECT_EQ(h(make_coalition(8, {1, 2})), h(make_coalition(8, {2, 1})));
  EXPECT_NE(h(make_coalition(8, {1, 2})), h(make_coalition(8, {1, 3})));
}

TEST(FunctionGame, BatchIsOrderAlignedAndCounted) {
  auto game = FunctionGame::scalar(4, [](const Coalition& c) { return double(c.count()); });
  std::vector<Coalition> batch{make_coalition(4, {0, 1, 2}), Coalition(4), make_coalition(4, {3})};
  auto out = game.evaluate_batch(batch);
  ASSERT_EQ(out.size(), 3u);
  EXPECT_EQ(out[0][0], 3.0);
  EXPECT_EQ(out[1][0], 0.0);
  EXPECT_EQ(out[2][0], 1.0);
  EXPECT_EQ(game.calls(), 3u);
}

TEST(FunctionGame, WrongUniverseReportsIndex) {
  auto game = FunctionGame::scalar(4, [](const Coalition&) { return 0.0; });
  std::vector<Coalition> batch{Coalition(4), Coalition(5)};
  try {
    game.evaluate_batch(batch);
    FAIL() << "expected EvaluationError";
  } catch (const EvaluationError& e) {
    EXPECT_EQ(e.index(), 1u);
  }
}

TEST(NormalizedGame, EmptyCoalitionBecomesZero) {
  std::size_t inner_calls = 0;
  FunctionGame inner(3, 2, [&](const Coalition& c) {
    ++inner_calls;
    return Worth{5.0 + double(c.count()), -1.0};
  });
  NormalizedGame game(inner);
  EXPECT_EQ(game.offset(), (Worth{5.0, -1.0}));
  auto out = game.evaluate_batch(std::vector<Coalition>{Coalition(3), make_coalition(3, {0, 2})});
  EXPECT_EQ(out[0], (Worth{0.0, 0.0}));
  EXPECT_EQ(out[1], (Worth{2.0, 0.0}));
  // One query for the offset, two for the batch.
  EXPECT_EQ(inner_calls, 3u);
}

TEST(RecordedGame, ParsesFixtureAndInfersPlayerCount) {
  auto game = RecordedGame::load(SHAPBPT_FIXTURE_DIR "/recorded_game6.txt");
  EXPECT_EQ(game.num_players(), 6u);
  EXPECT_EQ(game.num_classes(), 1u);
  EXPECT_DOUBLE_EQ(game.at(0)[0], -0.78);
  EXPECT_EQ(worth_of(game, make_coalition(6, {0})), -0.040000000000000036);
}

TEST(RecordedGame, WriteParseRoundTripIsExact) {
  support::Rng rng(7);
  auto game = support::random_game(5, rng, 2);
  std::stringstream ss;
  game.write(ss);
  auto back = RecordedGame::parse(ss);
  for (std::uint32_t m = 0; m < 32; ++m) EXPECT_EQ(back.at(m), game.at(m));
}

TEST(RecordedGame, RejectsMissingOrDuplicateMasks) {
  std::istringstream dup("0 1\n0 2\n");
  EXPECT_THROW(RecordedGame::parse(dup), FormatError);
  std::istringstream odd("0 1\n1 2\n2 3\n");
  EXPECT_THROW(RecordedGame::parse(odd), FormatError);
  std::istringstream ragged("0 1\n1 2 3\n");
  EXPECT_THROW(RecordedGame::parse(ragged), FormatError);
}

TEST(RecordedGame, RecordCopiesAnyGame) {
  auto f = FunctionGame::scalar(3, [](const Coalition& c) { return c.test(1) ? 2.5 : -1.0; });
  auto rec = RecordedGame::record(f);
  EXPECT_EQ(rec.at(0b010)[0], 2.5);
  EXPECT_EQ(rec.at(0b101)[0], -1.0);
}

TEST(RecordedGame, CapacityGuard) {
  EXPECT_THROW(RecordedGame(17, 1, {}), CapacityError);
}
