/* Exercises the C interface from plain C. */
#include <math.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#include "sortedrl/sortedrl.h"

static int failures = 0;

#define EXPECT(cond)                                                  \
  do {                                                                \
    if (!(cond)) {                                                    \
      fprintf(stderr, "%s:%d: expected %s\n", __FILE__, __LINE__, #cond); \
      ++failures;                                                     \
    }                                                                 \
  } while (0)

static void test_config_and_run(void) {
  srl_config* cfg = NULL;
  EXPECT(srl_config_parse("workload.prompts = 64\nworkload.cap = 256\nworkload.median = 60\n"
                          "engine.capacity = 8\nengine.cap = 256\nscheduler.rollout_batch = 8\n"
                          "scheduler.update_batch = 8\n",
                          &cfg) == SRL_OK);
  EXPECT(srl_config_set(cfg, "scheduler.mode", "sorted_partial") == SRL_OK);
  EXPECT(srl_config_set(cfg, "engine.capacity", "many") == SRL_PARSE_ERROR);
  EXPECT(strstr(srl_last_error(), "engine.capacity") != NULL);
  EXPECT(srl_config_set(cfg, "no.such.key", "1") == SRL_PARSE_ERROR);
  EXPECT(srl_config_validate(cfg) == SRL_OK);

  char* text = NULL;
  EXPECT(srl_config_to_text(cfg, &text) == SRL_OK);
  EXPECT(text && strstr(text, "scheduler.mode = sorted_partial") != NULL);
  srl_string_free(text);

  srl_run* run = NULL;
  EXPECT(srl_run_execute(cfg, &run) == SRL_OK);
  srl_summary s;
  EXPECT(srl_run_summary(run, &s) == SRL_OK);
  EXPECT(s.updates == 8);
  EXPECT(s.delivered_trajectories == 64);
  EXPECT(s.emitted_tokens == s.buffered_tokens + s.harvested_tokens + s.discarded_tokens);
  EXPECT(s.bubble_ratio >= 0.0 && s.bubble_ratio <= 1.0);
  EXPECT(s.groups_loaded == 2);

  size_t count = 0;
  EXPECT(srl_run_delivered_lengths(run, NULL, 0, &count) == SRL_OK);
  EXPECT(count == 64);
  int64_t* lengths = malloc(count * sizeof *lengths);
  EXPECT(srl_run_delivered_lengths(run, lengths, count, &count) == SRL_OK);
  int64_t total = 0;
  for (size_t i = 0; i < count; ++i) total += lengths[i];
  EXPECT(total == s.delivered_tokens);
  free(lengths);
  srl_run_free(run);

  EXPECT(srl_config_set(cfg, "scheduler.update_batch", "7") == SRL_OK);
  EXPECT(srl_config_validate(cfg) == SRL_INVALID_ARGUMENT);
  EXPECT(srl_run_execute(cfg, &run) == SRL_INVALID_ARGUMENT);
  srl_config_free(cfg);
}

static void test_errors(void) {
  srl_config* cfg = NULL;
  EXPECT(srl_config_load("/nonexistent/x.conf", &cfg) == SRL_IO_ERROR);
  EXPECT(cfg == NULL);
  EXPECT(srl_config_parse("bogus = 1\n", &cfg) == SRL_PARSE_ERROR);
  EXPECT(strstr(srl_last_error(), ":1:") != NULL);
  EXPECT(srl_config_new(NULL) == SRL_INVALID_ARGUMENT);
  EXPECT(strcmp(srl_status_name(SRL_IO_ERROR), "io_error") == 0);
  EXPECT(srl_config_new(&cfg) == SRL_OK);
  const char* values[] = {"1"};
  EXPECT(srl_sweep(cfg, "nope", values, 1, 1) == SRL_INVALID_ARGUMENT);
  EXPECT(srl_sweep(cfg, "scheduler.group_size", values, 0, 1) == SRL_INVALID_ARGUMENT);
  srl_config_free(cfg);
  char* out = NULL;
  const char* dirs[] = {"/nonexistent/run"};
  EXPECT(srl_report(dirs, 1, &out) != SRL_OK);
  srl_config_free(NULL);
  srl_run_free(NULL);
  srl_string_free(NULL);
}

static void test_math(void) {
  const double durations[] = {1, 1, 2};
  const int64_t active[] = {4, 2, 1};
  double b = -1;
  EXPECT(srl_bubble_ratio(durations, active, 3, 4, &b) == SRL_OK);
  EXPECT(fabs(b - 0.5) < 1e-15);
  EXPECT(srl_bubble_ratio(durations, active, 3, 0, &b) == SRL_INVALID_ARGUMENT);

  const double rewards[] = {1, 0, 1, 0};
  double adv[4];
  EXPECT(srl_reinforce_pp(rewards, 4, adv) == SRL_OK);
  EXPECT(adv[0] == 1.0 && adv[1] == -1.0);
  EXPECT(srl_reinforce_pp(rewards, 1, adv) == SRL_INVALID_ARGUMENT);

  const double r[] = {1, 2, 3};
  const double v[] = {0, 0, 0, 0};
  double g[3];
  EXPECT(srl_gae(r, v, 3, 1.0, 1.0, g) == SRL_OK);
  EXPECT(g[0] == 6 && g[1] == 5 && g[2] == 3);

  const double lp[] = {-1.0, -2.0};
  const double a[] = {0.5, 1.5};
  double obj = 0;
  EXPECT(srl_ppo_objective(lp, lp, a, 2, 0.2, 0.28, &obj) == SRL_OK);
  EXPECT(obj == 1.0);
  EXPECT(srl_ppo_objective(lp, lp, a, 2, 0.0, 0.28, &obj) == SRL_INVALID_ARGUMENT);

  const double x = srl_synth_logprob(1, 2, 3);
  EXPECT(x <= -0.05 && x >= -5.0 && x == srl_synth_logprob(1, 2, 3));
}

int main(void) {
  test_config_and_run();
  test_errors();
  test_math();
  if (failures) {
    fprintf(stderr, "%d C API check(s) failed\n", failures);
    return 1;
  }
  printf("C API checks passed (library %s)\n", srl_version());
  return 0;
}
