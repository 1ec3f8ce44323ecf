#include <math.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#include "roomlay.h"

static int failures = 0;

#define EXPECT(cond)                                                   \
  do {                                                                 \
    if (!(cond)) {                                                     \
      fprintf(stderr, "%s:%d: expected %s\n", __FILE__, __LINE__, #cond); \
      ++failures;                                                      \
    }                                                                  \
  } while (0)

#define EXPECT_OK(call)                                                                 \
  do {                                                                                  \
    rl_status s_ = (call);                                                              \
    if (s_ != RL_OK) {                                                                  \
      fprintf(stderr, "%s:%d: %s -> %s: %s\n", __FILE__, __LINE__, #call, rl_status_name(s_), \
              rl_last_error());                                                         \
      ++failures;                                                                       \
    }                                                                                   \
  } while (0)

static int progress_calls = 0;

static void on_progress(const char* epoch_json, void* user) {
  (void)user;
  if (epoch_json && strstr(epoch_json, "\"epoch\"")) ++progress_calls;
}

static void test_layouts(void) {
  rl_layout* room = NULL;
  EXPECT_OK(rl_layout_from_json("{\"id\": \"box\", \"ceiling_height\": 2.5, \"camera\": {\"x\": 2, \"y\": 1.5, \"height\": 1.4},"
                                " \"corners\": [[0,0],[4,0],[4,3],[0,3]]}", &room));
  EXPECT(rl_layout_corner_count(room) == 4);
  double xy[8];
  EXPECT_OK(rl_layout_corners(room, xy, 8));
  EXPECT(xy[2] == 4.0 && xy[5] == 3.0);
  EXPECT(rl_layout_corners(room, xy, 3) == RL_ERR_INVALID_ARGUMENT);

  char* json = NULL;
  EXPECT_OK(rl_layout_to_json(room, &json));
  rl_layout* again = NULL;
  EXPECT_OK(rl_layout_from_json(json, &again));
  EXPECT(rl_layout_corner_count(again) == 4);
  rl_string_free(json);
  rl_layout_free(again);

  rl_layout* bad = NULL;
  EXPECT(rl_layout_from_json("{\"id\": \"tri\", \"ceiling_height\": 2.5, \"camera\": {\"x\": 0.2, \"y\": 0.2, \"height\": 1.4},"
                                   " \"corners\": [[0,0],[0,1],[1,0]]}", &bad) == RL_ERR_INVALID_LAYOUT);
  EXPECT(bad == NULL);
  EXPECT(strlen(rl_last_error()) > 0);
  EXPECT(rl_layout_from_json("{", &bad) == RL_ERR_PARSE);
  EXPECT(rl_layout_from_json(NULL, &bad) == RL_ERR_INVALID_ARGUMENT);

  rl_layout* gen = NULL;
  EXPECT_OK(rl_layout_generate(7, 8, 2.0, 8.0, &gen));
  EXPECT(rl_layout_corner_count(gen) == 8);
  rl_layout* variant = NULL;
  char* record = NULL;
  EXPECT_OK(rl_layout_augment(gen, 3, &variant, &record));
  EXPECT(record != NULL && strstr(record, "wall_index") != NULL);
  rl_string_free(record);
  EXPECT(rl_layout_generate(7, 5, 2.0, 8.0, &bad) == RL_ERR_INVALID_ARGUMENT);

  rl_grid* a = NULL;
  rl_grid* b = NULL;
  EXPECT_OK(rl_grid_rasterize(room, 32, &a));
  EXPECT_OK(rl_grid_rasterize(room, 32, &b));
  EXPECT(rl_grid_resolution(a) == 32);
  double iou = 0.0;
  EXPECT_OK(rl_grid_iou(a, b, &iou));
  EXPECT(iou == 1.0);
  uint8_t* cells = malloc(32 * 32);
  EXPECT_OK(rl_grid_values(a, cells, 32 * 32));
  size_t occupied = 0;
  for (int i = 0; i < 32 * 32; ++i) occupied += cells[i];
  EXPECT(occupied > 0 && occupied < 32 * 32);
  free(cells);
  rl_grid* tiny = NULL;
  EXPECT(rl_grid_rasterize(room, 4, &tiny) == RL_ERR_INVALID_ARGUMENT);
  EXPECT(tiny == NULL);

  rl_boundary_map* map = NULL;
  EXPECT_OK(rl_boundary_render(room, 64, 32, 1.5, &map));
  EXPECT(rl_boundary_width(map) == 64 && rl_boundary_height(map) == 32);
  double* values = malloc(sizeof(double) * 3 * 64 * 32);
  EXPECT_OK(rl_boundary_values(map, values, 3 * 64 * 32));
  for (int i = 0; i < 3 * 64 * 32; ++i) EXPECT(values[i] >= 0.0 && values[i] <= 1.0);
  free(values);
  rl_boundary_map* odd = NULL;
  EXPECT(rl_boundary_render(room, 63, 32, 1.5, &odd) == RL_ERR_INVALID_ARGUMENT);

  rl_boundary_free(map);
  rl_grid_free(a);
  rl_grid_free(b);
  rl_layout_free(variant);
  rl_layout_free(gen);
  rl_layout_free(room);
  rl_layout_free(NULL);
  rl_grid_free(NULL);
}

static void test_pipeline(const char* dir) {
  char ds_dir[512];
  char ck_path[600];
  snprintf(ds_dir, sizeof ds_dir, "%s/ds", dir);
  snprintf(ck_path, sizeof ck_path, "%s/ie.ckpt", dir);

  EXPECT_OK(rl_dataset_build(ds_dir, "{\"anchors\": 6, \"augment_factor\": 1, \"seed\": 2}"));
  EXPECT(rl_dataset_build(ds_dir, "{\"anchor\": 6}") == RL_ERR_CONFIG);
  rl_dataset* ds = NULL;
  EXPECT_OK(rl_dataset_open(ds_dir, &ds));
  EXPECT(rl_dataset_size(ds) == 12);

  const char* config =
      "{\"resolution\": 16, \"code_dim\": 8, \"num_planes\": 8, \"num_primitives\": 2,"
      " \"encoder_channels\": [4, 8], \"generator_widths\": [16], \"coord_samples\": 32,"
      " \"batch_size\": 4, \"epochs\": 1, \"regressor_channels\": [4, 8], \"image_width\": 32,"
      " \"image_height\": 16, \"train_split\": \"all\", \"eval_split\": \"all\"}";
  rl_train_options opts;
  memset(&opts, 0, sizeof opts);
  opts.config_json = config;
  opts.progress = on_progress;

  rl_checkpoint* ie = NULL;
  char* log = NULL;
  EXPECT_OK(rl_train_ie(ds, &opts, &ie, &log));
  EXPECT(progress_calls == 1);
  rl_string_free(log);
  EXPECT_OK(rl_checkpoint_save(ie, ck_path, 0));
  rl_checkpoint* loaded = NULL;
  EXPECT_OK(rl_checkpoint_load(ck_path, &loaded));
  char* cfg = NULL;
  EXPECT_OK(rl_checkpoint_config(loaded, &cfg));
  EXPECT(strstr(cfg, "\"ie\"") != NULL);
  rl_string_free(cfg);

  char* r1 = NULL;
  char* r2 = NULL;
  EXPECT_OK(rl_eval_ie(ie, ds, NULL, &r1));
  EXPECT_OK(rl_eval_ie(loaded, ds, NULL, &r2));
  EXPECT(r1 && r2 && strcmp(r1, r2) == 0);
  rl_string_free(r1);
  rl_string_free(r2);

  rl_checkpoint* sr = NULL;
  EXPECT(rl_train_sr(ds, ie, &opts, &sr, NULL) == RL_ERR_IO);
  size_t written = 0;
  EXPECT_OK(rl_dataset_render_boundaries(ds, config, &written));
  EXPECT(written == 12);
  EXPECT_OK(rl_train_sr(ds, ie, &opts, &sr, NULL));
  char* le = NULL;
  EXPECT_OK(rl_eval_le(sr, ie, ds, "all", &le));
  EXPECT(le && strstr(le, "mean_iou_le") != NULL);
  rl_string_free(le);
  EXPECT(rl_eval_ie(sr, ds, NULL, &le) == RL_ERR_CHECKPOINT);

  char png[600];
  char layout_path[600];
  snprintf(png, sizeof png, "%s/room.png", dir);
  snprintf(layout_path, sizeof layout_path, "%s/layouts/room00000.json", ds_dir);
  EXPECT_OK(rl_render_png(layout_path, ie, config, png));
  FILE* f = fopen(png, "rb");
  unsigned char sig[8] = {0};
  EXPECT(f != NULL);
  if (f) {
    EXPECT(fread(sig, 1, 8, f) == 8);
    fclose(f);
  }
  EXPECT(sig[1] == 'P' && sig[2] == 'N' && sig[3] == 'G');

  rl_checkpoint* missing = NULL;
  EXPECT(rl_checkpoint_load("/nonexistent/ckpt", &missing) == RL_ERR_IO);

  rl_checkpoint_free(sr);
  rl_checkpoint_free(loaded);
  rl_checkpoint_free(ie);
  rl_dataset_free(ds);
}

static void test_grad_check(void) {
  char* report = NULL;
  int passed = 0;
  EXPECT_OK(rl_grad_check(NULL, 1, 5, &report, &passed));
  EXPECT(passed == 1);
  EXPECT(report && strstr(report, "max_rel_error") != NULL);
  rl_string_free(report);
  EXPECT(rl_grad_check("{\"bogus\": 1}", 0, 0, &report, &passed) == RL_ERR_CONFIG);
}

int main(int argc, char** argv) {
  if (argc < 2) {
    fprintf(stderr, "usage: %s <scratch-dir>\n", argv[0]);
    return 2;
  }
  EXPECT(strcmp(rl_status_name(RL_OK), "ok") == 0);
  test_layouts();
  test_pipeline(argv[1]);
  test_grad_check();
  if (failures) {
    fprintf(stderr, "%d failure(s)\n", failures);
    return 1;
  }
  printf("capi: all checks passed\n");
  return 0;
}
