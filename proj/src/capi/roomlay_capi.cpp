#include "roomlay.h"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <new>
#include <string>

#include <json.hpp>

#include "roomlay/checkpoint.hpp"
#include "roomlay/dataset.hpp"
#include "roomlay/error.hpp"
#include "roomlay/harness.hpp"
#include "roomlay/layout_io.hpp"
#include "roomlay/png_writer.hpp"
#include "roomlay/roomgen.hpp"

struct rl_layout {
  roomlay::RoomLayout value;
};
struct rl_grid {
  roomlay::OccupancyGrid value;
};
struct rl_boundary_map {
  roomlay::BoundaryMap value;
};
struct rl_dataset {
  roomlay::Dataset value;
};
struct rl_checkpoint {
  roomlay::Checkpoint value;
};

namespace {

thread_local std::string g_last_error;

template <typename F>
rl_status guard(F&& body) {
  try {
    body();
    g_last_error.clear();
    return RL_OK;
  } catch (const roomlay::Error& e) {
    g_last_error = e.what();
    return static_cast<rl_status>(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return RL_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return RL_ERR_INTERNAL;
  }
}

void require(const void* p, const char* what) {
  if (!p) roomlay::fail(roomlay::ErrorCode::kInvalidArgument, std::string(what) + " must not be NULL");
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

roomlay::TrainConfig train_config(const rl_train_options* options) {
  roomlay::TrainConfig c;
  if (options && options->config_json) c = roomlay::config_from_json(options->config_json);
  if (options && options->has_seed) c.seed = options->seed;
  if (options && options->cache_codes) c.cache_codes = true;
  return c;
}

roomlay::ProgressFn progress_fn(const rl_train_options* options, bool ie) {
  if (!options || !options->progress) return {};
  rl_progress_fn fn = options->progress;
  void* user = options->user;
  return [fn, user, ie](const roomlay::EpochStats& e) {
    nlohmann::json j = {{"epoch", e.epoch}, {"steps", e.steps}, {"objective", e.objective}};
    if (ie) {
      j["occupancy"] = e.occupancy;
      j["grouping"] = e.grouping;
      j["combining"] = e.combining;
    }
    fn(j.dump().c_str(), user);
  };
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::lround(std::min(1.0, std::max(0.0, v)) * 255.0));
}

// Grid pixels scaled to 0/255, optionally followed (to the right) by the
// thresholded reconstruction and a difference panel.
void grid_png(const roomlay::OccupancyGrid& grid, const roomlay::Checkpoint* ie, const std::string& path) {
  const int r = grid.resolution();
  std::vector<const roomlay::OccupancyGrid*> panels = {&grid};
  roomlay::OccupancyGrid recon;
  if (ie) {
    roomlay::ImplicitModel model = roomlay::load_implicit_model(*ie);
    if (model.config().resolution != r) {
      roomlay::fail(roomlay::ErrorCode::kShapeMismatch, "grid resolution " + std::to_string(r) +
                                                             " does not match checkpoint resolution " +
                                                             std::to_string(model.config().resolution));
    }
    recon = model.reconstruct(model.generate_planes(model.encode(grid)));
    panels.push_back(&recon);
  }
  const int width = r * static_cast<int>(panels.size());
  std::vector<std::uint8_t> rgb(static_cast<std::size_t>(width) * r * 3);
  for (std::size_t p = 0; p < panels.size(); ++p) {
    for (int i = 0; i < r; ++i) {
      for (int j = 0; j < r; ++j) {
        const bool on = panels[p]->at(i, j) != 0;
        const bool truth = grid.at(i, j) != 0;
        std::uint8_t* px = &rgb[(static_cast<std::size_t>(i) * width + p * r + j) * 3];
        px[0] = px[1] = px[2] = on ? 255 : 0;
        if (p > 0 && on != truth) {
          px[0] = on ? 255 : 200;
          px[1] = on ? 80 : 0;
          px[2] = on ? 80 : 0;
        }
      }
    }
  }
  roomlay::write_png(path, width, r, 3, rgb);
}

void boundary_png(const roomlay::BoundaryMap& m, const std::string& path) {
  const int w = m.width(), h = m.height();
  std::vector<std::uint8_t> rgb(static_cast<std::size_t>(w) * h * 3);
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < w; ++j) {
      for (int c = 0; c < 3; ++c) rgb[(static_cast<std::size_t>(i) * w + j) * 3 + c] = to_byte(m.at(c, i, j));
    }
  }
  roomlay::write_png(path, w, h, 3, rgb);
}

}  // namespace

extern "C" {

const char* rl_last_error(void) { return g_last_error.c_str(); }

const char* rl_status_name(rl_status status) {
  if (status == RL_OK) return "ok";
  if (status < RL_ERR_INVALID_ARGUMENT || status > RL_ERR_INTERNAL) return "unknown";
  return roomlay::error_code_name(static_cast<roomlay::ErrorCode>(status));
}

void rl_string_free(char* s) { std::free(s); }

rl_status rl_layout_read(const char* path, rl_layout** out) {
  return guard([&] {
    require(path, "path");
    require(out, "out");
    roomlay::RoomLayout layout = roomlay::read_layout(path);
    roomlay::validate_layout(layout);
    *out = new rl_layout{std::move(layout)};
  });
}

rl_status rl_layout_write(const rl_layout* layout, const char* path) {
  return guard([&] {
    require(layout, "layout");
    require(path, "path");
    roomlay::write_layout(path, layout->value);
  });
}

rl_status rl_layout_from_json(const char* json, rl_layout** out) {
  return guard([&] {
    require(json, "json");
    require(out, "out");
    roomlay::RoomLayout layout = roomlay::layout_from_json(json);
    roomlay::validate_layout(layout);
    *out = new rl_layout{std::move(layout)};
  });
}

rl_status rl_layout_to_json(const rl_layout* layout, char** out) {
  return guard([&] {
    require(layout, "layout");
    require(out, "out");
    *out = dup_string(roomlay::layout_to_json(layout->value));
  });
}

rl_status rl_layout_generate(uint64_t seed, int walls, double size_min, double size_max, rl_layout** out) {
  return guard([&] {
    require(out, "out");
    *out = new rl_layout{roomlay::generate_anchor(seed, walls, {size_min, size_max})};
  });
}

rl_status rl_layout_augment(const rl_layout* anchor, uint64_t seed, rl_layout** out, char** record_json) {
  return guard([&] {
    require(anchor, "anchor");
    require(out, "out");
    roomlay::validate_layout(anchor->value);
    roomlay::AugmentedRoom room = roomlay::augment(anchor->value, seed);
    if (record_json) {
      const nlohmann::json j = {{"anchor_id", room.record.anchor_id},
                                {"wall_index", room.record.wall_index},
                                {"offset", room.record.offset},
                                {"l_min", room.record.l_min}};
      *record_json = dup_string(j.dump());
    }
    *out = new rl_layout{std::move(room.layout)};
  });
}

size_t rl_layout_corner_count(const rl_layout* layout) { return layout ? layout->value.corners.size() : 0; }

rl_status rl_layout_corners(const rl_layout* layout, double* xy, size_t capacity) {
  return guard([&] {
    require(layout, "layout");
    require(xy, "xy");
    const auto& c = layout->value.corners;
    if (capacity < 2 * c.size()) roomlay::fail(roomlay::ErrorCode::kInvalidArgument, "corner buffer too small");
    for (std::size_t i = 0; i < c.size(); ++i) {
      xy[2 * i] = c[i].x;
      xy[2 * i + 1] = c[i].y;
    }
  });
}

void rl_layout_free(rl_layout* layout) { delete layout; }

rl_status rl_grid_rasterize(const rl_layout* layout, int resolution, rl_grid** out) {
  return guard([&] {
    require(layout, "layout");
    require(out, "out");
    *out = new rl_grid{roomlay::rasterize(layout->value, resolution)};
  });
}

rl_status rl_grid_read(const char* path, rl_grid** out) {
  return guard([&] {
    require(path, "path");
    require(out, "out");
    *out = new rl_grid{roomlay::read_grid(path)};
  });
}

rl_status rl_grid_write(const rl_grid* grid, const char* path) {
  return guard([&] {
    require(grid, "grid");
    require(path, "path");
    roomlay::write_grid(path, grid->value);
  });
}

int rl_grid_resolution(const rl_grid* grid) { return grid ? grid->value.resolution() : 0; }

rl_status rl_grid_values(const rl_grid* grid, uint8_t* values, size_t capacity) {
  return guard([&] {
    require(grid, "grid");
    require(values, "values");
    const auto v = grid->value.values();
    if (capacity < v.size()) roomlay::fail(roomlay::ErrorCode::kInvalidArgument, "value buffer too small");
    std::copy(v.begin(), v.end(), values);
  });
}

rl_status rl_grid_iou(const rl_grid* a, const rl_grid* b, double* iou) {
  return guard([&] {
    require(a, "a");
    require(b, "b");
    require(iou, "iou");
    *iou = roomlay::compute_iou(a->value, b->value).iou;
  });
}

void rl_grid_free(rl_grid* grid) { delete grid; }

rl_status rl_boundary_render(const rl_layout* layout, int width, int height, double sigma_px,
                             rl_boundary_map** out) {
  return guard([&] {
    require(layout, "layout");
    require(out, "out");
    roomlay::validate_layout(layout->value);
    *out = new rl_boundary_map{roomlay::render_boundaries(layout->value, width, height, sigma_px)};
  });
}

rl_status rl_boundary_read(const char* path, rl_boundary_map** out) {
  return guard([&] {
    require(path, "path");
    require(out, "out");
    *out = new rl_boundary_map{roomlay::read_boundary_map(path)};
  });
}

rl_status rl_boundary_write(const rl_boundary_map* map, const char* path) {
  return guard([&] {
    require(map, "map");
    require(path, "path");
    roomlay::write_boundary_map(path, map->value);
  });
}

int rl_boundary_width(const rl_boundary_map* map) { return map ? map->value.width() : 0; }
int rl_boundary_height(const rl_boundary_map* map) { return map ? map->value.height() : 0; }

rl_status rl_boundary_values(const rl_boundary_map* map, double* values, size_t capacity) {
  return guard([&] {
    require(map, "map");
    require(values, "values");
    const auto& v = map->value.data();
    if (capacity < v.size()) roomlay::fail(roomlay::ErrorCode::kInvalidArgument, "value buffer too small");
    std::copy(v.begin(), v.end(), values);
  });
}

void rl_boundary_free(rl_boundary_map* map) { delete map; }

rl_status rl_dataset_build(const char* dir, const char* options_json) {
  return guard([&] {
    require(dir, "dir");
    const roomlay::DatasetOptions options =
        options_json ? roomlay::dataset_options_from_json(options_json) : roomlay::DatasetOptions{};
    roomlay::build_dataset(options, dir);
  });
}

rl_status rl_dataset_open(const char* dir, rl_dataset** out) {
  return guard([&] {
    require(dir, "dir");
    require(out, "out");
    *out = new rl_dataset{roomlay::load_dataset(dir)};
  });
}

size_t rl_dataset_size(const rl_dataset* dataset) { return dataset ? dataset->value.size() : 0; }

rl_status rl_dataset_render_boundaries(const rl_dataset* dataset, const char* config_json, size_t* written) {
  return guard([&] {
    require(dataset, "dataset");
    const roomlay::TrainConfig c = config_json ? roomlay::config_from_json(config_json) : roomlay::TrainConfig{};
    const std::size_t n = roomlay::render_dataset_boundaries(dataset->value, c.image_width, c.image_height, c.sigma_px);
    if (written) *written = n;
  });
}

void rl_dataset_free(rl_dataset* dataset) { delete dataset; }

rl_status rl_train_ie(const rl_dataset* dataset, const rl_train_options* options, rl_checkpoint** out,
                      char** log_json) {
  return guard([&] {
    require(dataset, "dataset");
    require(out, "out");
    const roomlay::TrainConfig c = train_config(options);
    const roomlay::Checkpoint* init = options && options->init ? &options->init->value : nullptr;
    roomlay::TrainOutcome r = roomlay::train_ie(dataset->value, c, init, progress_fn(options, true));
    if (log_json) *log_json = dup_string(r.log_json());
    *out = new rl_checkpoint{std::move(r.checkpoint)};
  });
}

rl_status rl_train_sr(const rl_dataset* dataset, const rl_checkpoint* ie, const rl_train_options* options,
                      rl_checkpoint** out, char** log_json) {
  return guard([&] {
    require(dataset, "dataset");
    require(ie, "ie");
    require(out, "out");
    const roomlay::TrainConfig c = train_config(options);
    const roomlay::Checkpoint* init = options && options->init ? &options->init->value : nullptr;
    roomlay::TrainOutcome r = roomlay::train_sr(dataset->value, ie->value, c, init, progress_fn(options, false));
    if (log_json) *log_json = dup_string(r.log_json());
    *out = new rl_checkpoint{std::move(r.checkpoint)};
  });
}

rl_status rl_eval_ie(const rl_checkpoint* ie, const rl_dataset* dataset, const char* split, char** report_json) {
  return guard([&] {
    require(ie, "ie");
    require(dataset, "dataset");
    require(report_json, "report_json");
    const roomlay::EvalReport r = roomlay::eval_ie(ie->value, dataset->value, split ? split : "");
    *report_json = dup_string(roomlay::report_to_json(r));
  });
}

rl_status rl_eval_le(const rl_checkpoint* sr, const rl_checkpoint* ie, const rl_dataset* dataset,
                     const char* split, char** report_json) {
  return guard([&] {
    require(sr, "sr");
    require(ie, "ie");
    require(dataset, "dataset");
    require(report_json, "report_json");
    const roomlay::EvalReport r = roomlay::eval_le(sr->value, ie->value, dataset->value, split ? split : "");
    *report_json = dup_string(roomlay::report_to_json(r));
  });
}

rl_status rl_checkpoint_load(const char* path, rl_checkpoint** out) {
  return guard([&] {
    require(path, "path");
    require(out, "out");
    *out = new rl_checkpoint{roomlay::load_checkpoint(path)};
  });
}

rl_status rl_checkpoint_save(const rl_checkpoint* checkpoint, const char* path, int f32) {
  return guard([&] {
    require(checkpoint, "checkpoint");
    require(path, "path");
    roomlay::save_checkpoint(path, checkpoint->value, f32 ? roomlay::StorageType::kF32 : roomlay::StorageType::kF64);
  });
}

rl_status rl_checkpoint_config(const rl_checkpoint* checkpoint, char** json) {
  return guard([&] {
    require(checkpoint, "checkpoint");
    require(json, "json");
    *json = dup_string(checkpoint->value.config_json);
  });
}

void rl_checkpoint_free(rl_checkpoint* checkpoint) { delete checkpoint; }

rl_status rl_render_png(const char* input_path, const rl_checkpoint* ie, const char* config_json,
                        const char* png_path) {
  return guard([&] {
    require(input_path, "input_path");
    require(png_path, "png_path");
    const std::string in = input_path;
    const roomlay::Checkpoint* ck = ie ? &ie->value : nullptr;
    if (ends_with(in, ".sbm.pgm")) {
      boundary_png(roomlay::read_boundary_map(in), png_path);
    } else if (ends_with(in, ".pgm")) {
      grid_png(roomlay::read_grid(in), ck, png_path);
    } else {
      roomlay::TrainConfig c = config_json ? roomlay::config_from_json(config_json) : roomlay::TrainConfig{};
      if (ck) c = roomlay::checkpoint_info(*ck).config;
      const roomlay::RoomLayout layout = roomlay::read_layout(in);
      roomlay::validate_layout(layout);
      grid_png(roomlay::rasterize(layout, c.model.resolution), ck, png_path);
    }
  });
}

rl_status rl_grad_check(const char* config_json, int has_seed, uint64_t seed, char** report_json, int* passed) {
  return guard([&] {
    roomlay::PipelineGradCheck setup =
        config_json ? roomlay::grad_check_setup_from_json(config_json) : roomlay::small_grad_check_setup();
    if (has_seed) setup.seed = seed;
    const roomlay::nn::GradCheckReport r = roomlay::check_pipeline_gradients(setup);
    if (report_json) *report_json = dup_string(roomlay::grad_check_to_json(r));
    if (passed) *passed = r.passed ? 1 : 0;
  });
}

}  // extern "C"
