#include <cstdio>
#include <filesystem>
#include <vector>

#include "doctest.h"
#include "vroc/fusion.hpp"
#include "vroc/grad_check.hpp"
#include "vroc/rng.hpp"

using namespace vroc;

namespace {

EventVocab demo_vocab() {
  EventVocab v;
  v.agents = {"ember", "frost", "gale"};
  v.areas = {"mid", "vault"};
  return v;
}

Tape eval_tape() {
  return Tape(TapeOptions{.recording = false, .train_mode = false, .check_finite = true});
}

std::vector<double> table_row(const Tensor& t, int row) {
  std::vector<double> out(static_cast<std::size_t>(t.dim(1)));
  for (int j = 0; j < t.dim(1); ++j) out[static_cast<std::size_t>(j)] = t.at({row, j});
  return out;
}

}  // namespace

TEST_SUITE("event-fusion") {

TEST_CASE("vocab ids are 1-based and unknown names throw") {
  EventVocab v = demo_vocab();
  CHECK(v.team_id(Team::attacker) == 1);
  CHECK(v.team_id(Team::defender) == 2);
  CHECK(v.agent_id("ember") == 1);
  CHECK(v.agent_id("gale") == 3);
  CHECK(v.area_id("vault") == 2);
  CHECK(EventVocab::kind_id("skill_use") == 1);
  CHECK(EventVocab::kind_id("footstep_heard") == 2);
  CHECK(EventVocab::kind_id("spike_plant") == 3);
  CHECK_THROWS_AS(v.agent_id("nobody"), UnknownVocabError);
  CHECK_THROWS_AS(v.area_id("nowhere"), UnknownVocabError);
  CHECK_THROWS_AS(EventVocab::kind_id("teleport"), UnknownVocabError);
  CHECK_THROWS_AS(team_from_str("NEUTRAL"), UnknownVocabError);
  CHECK(team_from_str("ATK") == Team::attacker);
  CHECK(team_from_str("DEF") == Team::defender);
}

TEST_CASE("weights init zeroes the padding rows") {
  EventVocab v = demo_vocab();
  FusionWeights w = FusionWeights::init(6, 8, 3, 2, 42);
  for (const Tensor* t : {&w.team_table, &w.agent_table, &w.area_table, &w.kind_table}) {
    for (int j = 0; j < t->dim(1); ++j) CHECK(t->at({0, j}) == 0.0);
    bool any_nonzero = false;
    for (int j = 0; j < t->dim(1); ++j) any_nonzero |= t->at({1, j}) != 0.0;
    CHECK(any_nonzero);
  }
  auto params = w.params();
  for (const ParamRef& p : params) {
    const bool is_table = p.name.find("table") != std::string::npos;
    CHECK(p.skip_decay_rows == (is_table ? 1 : 0));
  }
  (void)v;
}

TEST_CASE("rasterize places event embeddings on the rounded frame") {
  EventVocab v = demo_vocab();
  FusionWeights w = FusionWeights::init(6, 8, 3, 2, 1);
  Tape tp = eval_tape();

  SUBCASE("no events give an all-zero grid of round(duration*fps) rows") {
    Tensor g = rasterize(tp, w, v, {}, 2.0, 8.0);
    REQUIRE(g.shape() == Shape{16, 6});
    for (double x : g.data()) CHECK(x == 0.0);
  }

  SUBCASE("a single event fills exactly one row with the four-table sum") {
    std::vector<EventLabel> ev{{2.0, Team::defender, "frost", "mid", "skill_use"}};
    Tensor g = rasterize(tp, w, v, ev, 3.0, 8.0);
    REQUIRE(g.dim(0) == 24);
    for (int f = 0; f < 24; ++f) {
      for (int j = 0; j < 6; ++j) {
        const double got = g.at({f, j});
        if (f == 16) {
          const double want = w.team_table.at({2, j}) + w.agent_table.at({2, j}) +
                              w.area_table.at({1, j}) + w.kind_table.at({1, j});
          CHECK(got == doctest::Approx(want).epsilon(1e-12));
        } else {
          CHECK(got == 0.0);
        }
      }
    }
  }

  SUBCASE("two events in one frame add") {
    std::vector<EventLabel> ev{{1.0, Team::attacker, "ember", "mid", "skill_use"},
                               {1.04, Team::defender, "gale", "vault", "footstep_heard"}};
    // Both round to frame 8.
    Tensor g = rasterize(tp, w, v, ev, 2.0, 8.0);
    Tensor a = rasterize(tp, w, v, std::span(ev).first(1), 2.0, 8.0);
    Tensor b = rasterize(tp, w, v, std::span(ev).subspan(1), 2.0, 8.0);
    for (int j = 0; j < 6; ++j)
      CHECK(g.at({8, j}) == doctest::Approx(a.at({8, j}) + b.at({8, j})).epsilon(1e-12));
  }

  SUBCASE("times at or past the end clamp to the last frame") {
    std::vector<EventLabel> ev{{9.7, Team::attacker, "ember", "mid", "spike_plant"}};
    Tensor g = rasterize(tp, w, v, ev, 2.0, 8.0);
    bool nonzero = false;
    for (int j = 0; j < 6; ++j) nonzero |= g.at({15, j}) != 0.0;
    CHECK(nonzero);
    for (int f = 0; f < 15; ++f)
      for (int j = 0; j < 6; ++j) CHECK(g.at({f, j}) == 0.0);
  }
}

TEST_CASE("pool_chunks averages blocks of eight frames") {
  Tape tp = eval_tape();

  SUBCASE("constant rows pool to themselves") {
    Tensor g = Tensor::full({16, 3}, 1.25);
    Tensor p = pool_chunks(tp, g);
    REQUIRE(p.shape() == Shape{2, 3});
    for (double x : p.data()) CHECK(x == 1.25);
  }

  SUBCASE("one nonzero frame contributes 1/8 of its value") {
    Tensor g = Tensor::zeros({8, 2});
    g.mutable_data()[2 * 3 + 1] = 4.0;  // frame 3, column 1
    Tensor p = pool_chunks(tp, g);
    REQUIRE(p.shape() == Shape{1, 2});
    CHECK(p.at({0, 0}) == 0.0);
    CHECK(p.at({0, 1}) == doctest::Approx(0.5).epsilon(1e-12));
  }

  SUBCASE("trailing partial chunk divides by its true length") {
    Tensor g = Tensor::zeros({11, 1});
    auto d = g.mutable_data();
    for (int f = 8; f < 11; ++f) d[static_cast<std::size_t>(f)] = 6.0;
    Tensor p = pool_chunks(tp, g);
    REQUIRE(p.shape() == Shape{2, 1});
    CHECK(p.at({0, 0}) == 0.0);
    CHECK(p.at({1, 0}) == doctest::Approx(6.0).epsilon(1e-12));
  }
}

TEST_CASE("project_and_attach gates empty chunks to exact zero") {
  EventVocab v = demo_vocab();
  FusionWeights w = FusionWeights::init(4, 5, 3, 2, 3);
  Tape tp = eval_tape();

  // Events only in the second chunk (frames 8..15).
  std::vector<EventLabel> ev{{1.25, Team::attacker, "ember", "vault", "footstep_heard"}};
  Tensor grid = rasterize(tp, w, v, ev, 2.0, 8.0);
  Tensor pooled = pool_chunks(tp, grid);
  REQUIRE(pooled.shape() == Shape{2, 4});

  const std::vector<int> frames{0, 4, 9, 15};
  Tensor fused = project_and_attach(tp, w, pooled, frames);
  REQUIRE(fused.shape() == Shape{4, 5});

  // Chunk 0 rows are forced to zero despite the projection bias.
  for (int j = 0; j < 5; ++j) {
    CHECK(fused.at({0, j}) == 0.0);
    CHECK(fused.at({1, j}) == 0.0);
  }
  // Chunk 1 rows get proj(pooled[1]) + bias, identical for both frames.
  for (int j = 0; j < 5; ++j) {
    double want = w.proj_bias.at({j});
    for (int k = 0; k < 4; ++k) want += pooled.at({1, k}) * w.proj.at({k, j});
    CHECK(fused.at({2, j}) == doctest::Approx(want).epsilon(1e-12));
    CHECK(fused.at({3, j}) == fused.at({2, j}));
  }
  CHECK(table_row(fused, 2) != table_row(fused, 0));
}

TEST_CASE("sampled frames outside the grid throw") {
  FusionWeights w = FusionWeights::init(4, 5, 3, 2, 4);
  Tape tp = eval_tape();
  Tensor pooled = Tensor::full({2, 4}, 0.1);
  const std::vector<int> bad{0, 16};
  CHECK_THROWS_AS(project_and_attach(tp, w, pooled, bad), IndexOutOfRangeError);
}

TEST_CASE("gradients flow through the whole fusion path") {
  EventVocab v = demo_vocab();
  FusionWeights w = FusionWeights::init(4, 5, 3, 2, 5);
  w.set_requires_grad(true);
  std::vector<EventLabel> ev{{0.5, Team::attacker, "ember", "mid", "skill_use"},
                             {1.3, Team::defender, "frost", "vault", "footstep_heard"},
                             {1.9, Team::defender, "gale", "mid", "skill_use"}};
  const std::vector<int> frames{1, 6, 11, 14};
  // Fixed random readout so every output entry gets a distinct weight.
  Rng rng(99);
  std::vector<double> readout(4 * 5);
  for (auto& x : readout) x = rng.normal();

  auto f = [&](Tape& tp) {
    Tensor grid = rasterize(tp, w, v, ev, 2.0, 8.0);
    Tensor fused = project_and_attach(tp, w, pool_chunks(tp, grid), frames);
    Tensor weights = Tensor::from_data({4, 5}, readout);
    return tp.sum_all(tp.mul(fused, weights));
  };
  std::vector<Tensor> params;
  for (ParamRef& p : w.params()) params.push_back(p.tensor);
  GradCheckResult r = grad_check(f, params, {});
  CHECK(r.max_rel_err < 1e-6);

  // Padding rows never receive gradient.
  Tape rec = Tape(TapeOptions{.recording = true, .train_mode = false, .check_finite = true});
  for (Tensor& p : params) p.zero_grad();
  Tensor loss = f(rec);
  rec.backward(loss);
  for (Tensor* t : {&w.team_table, &w.agent_table, &w.area_table, &w.kind_table})
    for (int j = 0; j < t->dim(1); ++j) CHECK(t->grad()[static_cast<std::size_t>(j)] == 0.0);
}

TEST_CASE("events jsonl round trips and sorts by time") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "vroc_fusion_test";
  fs::create_directories(dir);
  const std::string path = (dir / "events.jsonl").string();

  std::vector<RoundEvents> rounds(2);
  rounds[0].round_id = "r0001";
  rounds[0].events = {{3.5, Team::defender, "frost", "vault", "footstep_heard"},
                      {1.0, Team::attacker, "ember", "mid", "skill_use"}};
  rounds[1].round_id = "r0002";
  rounds[1].events = {{0.25, Team::attacker, "gale", "mid", "spike_plant"}};
  write_events_jsonl(path, rounds);

  std::vector<RoundEvents> back = read_events_jsonl(path);
  REQUIRE(back.size() == 2);
  CHECK(back[0].round_id == "r0001");
  REQUIRE(back[0].events.size() == 2);
  // Reader returns events sorted by t even if written unsorted.
  CHECK(back[0].events[0].t == 1.0);
  CHECK(back[0].events[0].agent == "ember");
  CHECK(back[0].events[1].t == 3.5);
  CHECK(back[0].events[1].team == Team::defender);
  CHECK(back[1].events[0].kind == "spike_plant");
  CHECK(back[1].events[0].area == "mid");
  fs::remove_all(dir);
}

}  // TEST_SUITE
