#include "doctest.h"
#include "json.hpp"
#include "sortedrl/buffer.hpp"
#include "sortedrl/engine.hpp"
#include "sortedrl/error.hpp"

using namespace sortedrl;

namespace {

BufferEntry fresh(int64_t prompt, int sample = 0, int64_t length = 10) {
  BufferEntry e;
  e.prompt_id = prompt;
  e.sample_index = sample;
  e.request_id = prompt * 10 + sample;
  e.intrinsic_length = length;
  return e;
}

EngineOutput output(RequestId id, PolicyVersion v, int64_t start, int64_t count, bool done) {
  EngineOutput o;
  o.id = id;
  o.completed = done;
  o.tokens_emitted = count;
  o.total_tokens = start + count;
  o.segment.version = v;
  o.segment.start_index = start;
  for (int64_t i = 0; i < count; ++i) o.segment.values.push_back(synth_logprob(id, start + i, v));
  return o;
}

}  // namespace

TEST_CASE("on-policy scavenging discards and restarts from scratch") {
  RolloutBuffer b;
  b.add_fresh(fresh(1));
  const auto r = b.scavenge(output(10, 0, 0, 4, false), RolloutMode::fully_on_policy);
  CHECK(r.discarded_tokens == 4);
  CHECK(r.kept_tokens == 0);
  const BufferEntry* e = b.find(EntryKey{1, 0});
  REQUIRE(e);
  CHECK(e->partial_tokens == 0);
  CHECK(e->segments.empty());
  CHECK(e->lifecycle == 1);
  CHECK(e->to_request().prefix_tokens == 0);
}

TEST_CASE("partial scavenging keeps segments; three sessions give three versions") {
  RolloutBuffer b;
  b.add_fresh(fresh(1, 0, 12));
  b.scavenge(output(10, 0, 0, 3, false), RolloutMode::partial);
  b.scavenge(output(10, 1, 3, 4, false), RolloutMode::partial);
  b.mark_complete(output(10, 2, 7, 5, true));
  const BufferEntry* e = b.find(RequestId{10});
  REQUIRE(e);
  CHECK(e->completed);
  CHECK(e->partial_tokens == 12);
  REQUIRE(e->segments.size() == 3);
  for (size_t i = 0; i < 3; ++i) CHECK(e->segments[i].version == static_cast<PolicyVersion>(i));
  CHECK(e->segments[1].start_index == 3);
  CHECK(e->segments[2].start_index == 7);
}

TEST_CASE("same-version resumes merge into one segment") {
  RolloutBuffer b;
  b.add_fresh(fresh(1));
  b.scavenge(output(10, 2, 0, 3, false), RolloutMode::partial);
  b.scavenge(output(10, 2, 3, 2, false), RolloutMode::partial);
  const BufferEntry* e = b.find(RequestId{10});
  REQUIRE(e->segments.size() == 1);
  CHECK(e->segments[0].values.size() == 5);
  CHECK(e->lifecycle == 2);
}

TEST_CASE("segment contract violations") {
  RolloutBuffer b;
  b.add_fresh(fresh(1));
  b.scavenge(output(10, 3, 0, 3, false), RolloutMode::partial);
  CHECK_THROWS_AS(b.scavenge(output(10, 2, 3, 1, false), RolloutMode::partial), Error);
  CHECK_THROWS_AS(b.scavenge(output(10, 4, 5, 1, false), RolloutMode::partial), Error);
}

TEST_CASE("empty segments from queued terminations still count a lifecycle") {
  RolloutBuffer b;
  b.add_fresh(fresh(1));
  const auto r = b.scavenge(output(10, 0, 0, 0, false), RolloutMode::partial);
  CHECK(r.kept_tokens == 0);
  CHECK(b.find(RequestId{10})->segments.empty());
  CHECK(b.find(RequestId{10})->lifecycle == 1);
}

TEST_CASE("completion and consumption happen exactly once") {
  RolloutBuffer b;
  b.add_fresh(fresh(1));
  CHECK_THROWS_AS(b.consume(EntryKey{1, 0}), Error);  // not complete yet
  b.mark_complete(output(10, 0, 0, 10, true));
  CHECK_THROWS_AS(b.mark_complete(output(10, 0, 10, 1, true)), Error);
  CHECK_THROWS_AS(b.scavenge(output(10, 0, 10, 1, false), RolloutMode::partial), Error);
  CHECK(b.completed_count() == 1);
  const BufferEntry e = b.consume(EntryKey{1, 0});
  CHECK(e.partial_tokens == 10);
  try {
    b.consume(EntryKey{1, 0});
    FAIL("consumed twice");
  } catch (const Error& err) {
    CHECK(err.code() == ErrorCode::invalid_state);
  }
  CHECK(b.empty());
}

TEST_CASE("duplicates and unknown ids") {
  RolloutBuffer b;
  b.add_fresh(fresh(1));
  CHECK_THROWS_AS(b.add_fresh(fresh(1)), Error);
  try {
    b.scavenge(output(99, 0, 0, 1, false), RolloutMode::partial);
    FAIL("scavenged an unknown id");
  } catch (const Error& err) {
    CHECK(err.code() == ErrorCode::unknown_request);
  }
  CHECK_THROWS_AS(b.mark_complete(output(10, 0, 0, 2, false)), Error);
}

TEST_CASE("resume candidates: oldest survivors first, then key order") {
  RolloutBuffer b;
  for (int p = 0; p < 4; ++p) b.add_fresh(fresh(p));
  b.scavenge(output(20, 0, 0, 1, false), RolloutMode::partial);
  b.scavenge(output(20, 1, 1, 1, false), RolloutMode::partial);
  b.scavenge(output(30, 0, 0, 1, false), RolloutMode::partial);
  b.mark_complete(output(0, 0, 0, 10, true));
  std::vector<int64_t> order;
  for (const BufferEntry& e : b.resume_candidates()) order.push_back(e.prompt_id);
  CHECK(order == std::vector<int64_t>{2, 3, 1});
  CHECK(b.incomplete_count() == 3);
  CHECK(b.buffered_tokens() == 3);
}

TEST_CASE("snapshot is valid JSON describing every entry") {
  RolloutBuffer b;
  b.add_fresh(fresh(1));
  b.add_fresh(fresh(2, 1));
  b.scavenge(output(10, 0, 0, 2, false), RolloutMode::partial);
  const auto j = nlohmann::json::parse(b.snapshot_json());
  REQUIRE(j.size() == 2);
  CHECK(j[0]["prompt_id"] == 1);
  CHECK(j[0]["partial_tokens"] == 2);
  CHECK(j[0]["segments"][0]["tokens"] == 2);
  CHECK(j[1]["sample_index"] == 1);
}
