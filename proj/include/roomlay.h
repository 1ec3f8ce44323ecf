#ifndef ROOMLAY_H
#define ROOMLAY_H

#include <stddef.h>
#include <stdint.h>

#if defined(ROOMLAY_BUILDING_LIBRARY)
#define RL_API __attribute__((visibility("default")))
#else
#define RL_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum rl_status {
  RL_OK = 0,
  RL_ERR_INVALID_ARGUMENT = 1,
  RL_ERR_INVALID_LAYOUT = 2,
  RL_ERR_PARSE = 3,
  RL_ERR_IO = 4,
  RL_ERR_SHAPE_MISMATCH = 5,
  RL_ERR_NON_FINITE = 6,
  RL_ERR_UNDEFINED_IOU = 7,
  RL_ERR_GENERATION = 8,
  RL_ERR_AUGMENTATION = 9,
  RL_ERR_CHECKPOINT = 10,
  RL_ERR_CONFIG = 11,
  RL_ERR_INTERNAL = 12
} rl_status;

typedef struct rl_layout rl_layout;
typedef struct rl_grid rl_grid;
typedef struct rl_boundary_map rl_boundary_map;
typedef struct rl_dataset rl_dataset;
typedef struct rl_checkpoint rl_checkpoint;

/* Message of the last failed call on this thread ("" if none). */
RL_API const char* rl_last_error(void);
RL_API const char* rl_status_name(rl_status status);
/* Frees strings returned through char** out-parameters. */
RL_API void rl_string_free(char* s);

/* Layouts. Read and parse functions reject invalid layouts. */
RL_API rl_status rl_layout_read(const char* path, rl_layout** out);
RL_API rl_status rl_layout_write(const rl_layout* layout, const char* path);
RL_API rl_status rl_layout_from_json(const char* json, rl_layout** out);
RL_API rl_status rl_layout_to_json(const rl_layout* layout, char** out);
RL_API rl_status rl_layout_generate(uint64_t seed, int walls, double size_min, double size_max,
                                    rl_layout** out);
/* record_json receives {"anchor_id","wall_index","offset","l_min"}; may be NULL. */
RL_API rl_status rl_layout_augment(const rl_layout* anchor, uint64_t seed, rl_layout** out,
                                   char** record_json);
RL_API size_t rl_layout_corner_count(const rl_layout* layout);
/* Copies 2 * corner_count doubles (x0, y0, x1, y1, ...). */
RL_API rl_status rl_layout_corners(const rl_layout* layout, double* xy, size_t capacity);
RL_API void rl_layout_free(rl_layout* layout);

/* Occupancy grids */
RL_API rl_status rl_grid_rasterize(const rl_layout* layout, int resolution, rl_grid** out);
RL_API rl_status rl_grid_read(const char* path, rl_grid** out);
RL_API rl_status rl_grid_write(const rl_grid* grid, const char* path);
RL_API int rl_grid_resolution(const rl_grid* grid);
/* Copies resolution^2 bytes (0 or 1), row-major, row 0 = +y. */
RL_API rl_status rl_grid_values(const rl_grid* grid, uint8_t* values, size_t capacity);
RL_API rl_status rl_grid_iou(const rl_grid* a, const rl_grid* b, double* iou);
RL_API void rl_grid_free(rl_grid* grid);

/* Boundary maps */
RL_API rl_status rl_boundary_render(const rl_layout* layout, int width, int height, double sigma_px,
                                    rl_boundary_map** out);
RL_API rl_status rl_boundary_read(const char* path, rl_boundary_map** out);
RL_API rl_status rl_boundary_write(const rl_boundary_map* map, const char* path);
RL_API int rl_boundary_width(const rl_boundary_map* map);
RL_API int rl_boundary_height(const rl_boundary_map* map);
/* Copies 3 * height * width values, channel-major. */
RL_API rl_status rl_boundary_values(const rl_boundary_map* map, double* values, size_t capacity);
RL_API void rl_boundary_free(rl_boundary_map* map);

/* Datasets */
RL_API rl_status rl_dataset_build(const char* dir, const char* options_json);
RL_API rl_status rl_dataset_open(const char* dir, rl_dataset** out);
RL_API size_t rl_dataset_size(const rl_dataset* dataset);
RL_API rl_status rl_dataset_render_boundaries(const rl_dataset* dataset, const char* config_json,
                                              size_t* written);
RL_API void rl_dataset_free(rl_dataset* dataset);

/* Training and evaluation. config_json may be NULL for defaults; seed
 * overrides the config seed when has_seed is nonzero. */
typedef void (*rl_progress_fn)(const char* epoch_json, void* user);

typedef struct rl_train_options {
  const char* config_json;
  int has_seed;
  uint64_t seed;
  const rl_checkpoint* init;
  int cache_codes;
  rl_progress_fn progress;
  void* user;
} rl_train_options;

RL_API rl_status rl_train_ie(const rl_dataset* dataset, const rl_train_options* options,
                             rl_checkpoint** out, char** log_json);
RL_API rl_status rl_train_sr(const rl_dataset* dataset, const rl_checkpoint* ie,
                             const rl_train_options* options, rl_checkpoint** out, char** log_json);
/* split may be NULL to use the split stored in the checkpoint. */
RL_API rl_status rl_eval_ie(const rl_checkpoint* ie, const rl_dataset* dataset, const char* split,
                            char** report_json);
RL_API rl_status rl_eval_le(const rl_checkpoint* sr, const rl_checkpoint* ie, const rl_dataset* dataset,
                            const char* split, char** report_json);

/* Checkpoints */
RL_API rl_status rl_checkpoint_load(const char* path, rl_checkpoint** out);
/* f32 nonzero stores 32-bit payloads. */
RL_API rl_status rl_checkpoint_save(const rl_checkpoint* checkpoint, const char* path, int f32);
RL_API rl_status rl_checkpoint_config(const rl_checkpoint* checkpoint, char** json);
RL_API void rl_checkpoint_free(rl_checkpoint* checkpoint);

/* Writes a PNG of a layout JSON, grid PGM or boundary-map PGM. With an
 * implicit-encoder checkpoint, grids and layouts are shown next to their
 * reconstruction. */
RL_API rl_status rl_render_png(const char* input_path, const rl_checkpoint* ie, const char* config_json,
                               const char* png_path);

/* Finite-difference check of the full implicit pipeline; config_json keys as
 * for training (model fields, coord_samples, batch_size, seed). */
RL_API rl_status rl_grad_check(const char* config_json, int has_seed, uint64_t seed, char** report_json,
                               int* passed);

#ifdef __cplusplus
}
#endif

#endif /* ROOMLAY_H */
