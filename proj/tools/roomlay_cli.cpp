// roomlay command-line front end. Talks to the library only through roomlay.h.
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#ifdef __GLIBC__
#include <malloc.h>
#endif
#include <json.hpp>

#include "roomlay.h"

namespace {

struct Failure {
  rl_status status;
  std::string message;
};

void check(rl_status s) {
  if (s != RL_OK) throw Failure{s, rl_last_error()};
}

[[noreturn]] void usage_error(const std::string& message) { throw Failure{RL_ERR_INVALID_ARGUMENT, message}; }

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Failure{RL_ERR_IO, "cannot read " + path};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << text)) throw Failure{RL_ERR_IO, "cannot write " + path};
}

std::string take(char* s) {
  std::string out = s ? s : "";
  rl_string_free(s);
  return out;
}

template <typename T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};
using Layout = std::unique_ptr<rl_layout, Deleter<rl_layout, rl_layout_free>>;
using Grid = std::unique_ptr<rl_grid, Deleter<rl_grid, rl_grid_free>>;
using Boundary = std::unique_ptr<rl_boundary_map, Deleter<rl_boundary_map, rl_boundary_free>>;
using DatasetPtr = std::unique_ptr<rl_dataset, Deleter<rl_dataset, rl_dataset_free>>;
using CheckpointPtr = std::unique_ptr<rl_checkpoint, Deleter<rl_checkpoint, rl_checkpoint_free>>;

struct Common {
  std::string config;
  std::string data;
  std::string out;
  std::optional<std::uint64_t> seed;

  std::optional<std::string> config_text() const {
    if (config.empty()) return std::nullopt;
    return read_text(config);
  }
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "JSON configuration file");
  cmd->add_option("--data", c.data, "input dataset directory or file");
  cmd->add_option("--out", c.out, "output path");
  cmd->add_option("--seed", c.seed, "random seed (overrides the config)");
}

void need(const std::string& value, const char* flag) {
  if (value.empty()) usage_error(std::string(flag) + " is required");
}

CheckpointPtr load_checkpoint(const std::string& path) {
  rl_checkpoint* ck = nullptr;
  check(rl_checkpoint_load(path.c_str(), &ck));
  return CheckpointPtr(ck);
}

DatasetPtr open_dataset(const std::string& dir) {
  rl_dataset* ds = nullptr;
  check(rl_dataset_open(dir.c_str(), &ds));
  return DatasetPtr(ds);
}

template <typename T>
T config_value(const Common& c, const char* key, T fallback) {
  const auto text = c.config_text();
  if (!text) return fallback;
  try {
    return nlohmann::json::parse(*text).value(key, fallback);
  } catch (const nlohmann::json::exception& e) {
    throw Failure{RL_ERR_CONFIG, c.config + ": " + e.what()};
  }
}

void print_epoch(const char* epoch_json, void*) { std::cerr << epoch_json << "\n"; }

// Merges the dataset seed into the generation options.
std::string gen_options(const Common& c) {
  std::string text = c.config_text().value_or("{}");
  if (!c.seed) return text;
  const auto brace = text.rfind('}');
  if (brace == std::string::npos) return text;
  const bool empty = text.find_first_not_of(" \t\r\n", text.find('{') + 1) == brace;
  return text.substr(0, brace) + (empty ? "" : ",") + "\"seed\":" + std::to_string(*c.seed) + "}";
}

}  // namespace

int main(int argc, char** argv) {
#ifdef __GLIBC__
  // Keep large tensor buffers on the heap between training steps.
  mallopt(M_MMAP_THRESHOLD, 1 << 30);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
#endif
  CLI::App app{"roomlay: parametric room-layout encoding"};
  app.require_subcommand(1);

  Common gen, aug, ras, pano, tie, eie, tsr, ele, png, gc;
  int resolution = 0;
  std::string init_from, ie_path, checkpoint_path, split, log_path;
  bool cache_codes = false, f32 = false;

  auto* c_gen = app.add_subcommand("gen", "generate a dataset of anchor rooms and augmented variants");
  add_common(c_gen, gen);
  auto* c_aug = app.add_subcommand("augment", "apply one conditional wall translation to a layout");
  add_common(c_aug, aug);
  auto* c_ras = app.add_subcommand("rasterize", "rasterize a layout JSON into a grid PGM");
  add_common(c_ras, ras);
  c_ras->add_option("--resolution", resolution, "grid resolution (default from config, else 64)");
  auto* c_pano = app.add_subcommand("panorama", "render boundary maps for a layout or a whole dataset");
  add_common(c_pano, pano);
  auto* c_tie = app.add_subcommand("train-ie", "train the implicit encoder");
  add_common(c_tie, tie);
  c_tie->add_option("--init-from", init_from, "initialize from an implicit-encoder checkpoint");
  c_tie->add_option("--log", log_path, "training log path (default <out>.log.json)");
  c_tie->add_flag("--f32", f32, "store 32-bit parameters");
  auto* c_eie = app.add_subcommand("eval-ie", "evaluate IoU-IE of an implicit-encoder checkpoint");
  add_common(c_eie, eie);
  c_eie->add_option("--checkpoint", checkpoint_path, "implicit-encoder checkpoint")->required();
  c_eie->add_option("--split", split, "train, val, test, train+val or all");
  auto* c_tsr = app.add_subcommand("train-sr", "train the shape-code regressor");
  add_common(c_tsr, tsr);
  c_tsr->add_option("--checkpoint", checkpoint_path, "frozen implicit-encoder checkpoint")->required();
  c_tsr->add_option("--init-from", init_from, "initialize from a regressor checkpoint");
  c_tsr->add_option("--log", log_path, "training log path (default <out>.log.json)");
  c_tsr->add_flag("--cache-codes", cache_codes, "precompute target codes once");
  c_tsr->add_flag("--f32", f32, "store 32-bit parameters");
  auto* c_ele = app.add_subcommand("eval-le", "evaluate IoU-LE of a regressor checkpoint");
  add_common(c_ele, ele);
  c_ele->add_option("--checkpoint", checkpoint_path, "regressor checkpoint")->required();
  c_ele->add_option("--ie", ie_path, "implicit-encoder checkpoint")->required();
  c_ele->add_option("--split", split, "train, val, test, train+val or all");
  auto* c_png = app.add_subcommand("render-png", "write a PNG of a layout, grid or boundary map");
  add_common(c_png, png);
  c_png->add_option("--checkpoint", checkpoint_path, "show the reconstruction of this implicit encoder");
  auto* c_gc = app.add_subcommand("grad-check", "finite-difference check of the full pipeline gradients");
  add_common(c_gc, gc);

  CLI11_PARSE(app, argc, argv);

  try {
    if (c_gen->parsed()) {
      need(gen.out, "--out");
      check(rl_dataset_build(gen.out.c_str(), gen_options(gen).c_str()));
      DatasetPtr ds = open_dataset(gen.out);
      std::cout << "wrote " << rl_dataset_size(ds.get()) << " layouts to " << gen.out << "\n";
    } else if (c_aug->parsed()) {
      need(aug.data, "--data");
      need(aug.out, "--out");
      rl_layout* anchor = nullptr;
      check(rl_layout_read(aug.data.c_str(), &anchor));
      Layout a(anchor);
      rl_layout* result = nullptr;
      char* record = nullptr;
      check(rl_layout_augment(a.get(), aug.seed.value_or(0), &result, &record));
      Layout r(result);
      const std::string rec = take(record);
      check(rl_layout_write(r.get(), aug.out.c_str()));
      std::cout << rec << "\n";
    } else if (c_ras->parsed()) {
      need(ras.data, "--data");
      need(ras.out, "--out");
      int res = resolution;
      if (res == 0) res = config_value(ras, "resolution", 64);
      rl_layout* layout = nullptr;
      check(rl_layout_read(ras.data.c_str(), &layout));
      Layout l(layout);
      rl_grid* grid = nullptr;
      check(rl_grid_rasterize(l.get(), res, &grid));
      Grid g(grid);
      check(rl_grid_write(g.get(), ras.out.c_str()));
    } else if (c_pano->parsed()) {
      need(pano.data, "--data");
      const auto text = pano.config_text();
      const char* cfg = text ? text->c_str() : nullptr;
      if (std::filesystem::is_directory(pano.data)) {
        DatasetPtr ds = open_dataset(pano.data);
        std::size_t n = 0;
        check(rl_dataset_render_boundaries(ds.get(), cfg, &n));
        std::cout << "rendered " << n << " boundary maps into " << pano.data << "/sbm\n";
      } else {
        need(pano.out, "--out");
        rl_layout* layout = nullptr;
        check(rl_layout_read(pano.data.c_str(), &layout));
        Layout l(layout);
        const int height = config_value(pano, "image_height", 64);
        const double sigma = config_value(pano, "sigma_px", 1.5);
        rl_boundary_map* map = nullptr;
        check(rl_boundary_render(l.get(), 2 * height, height, sigma, &map));
        Boundary m(map);
        check(rl_boundary_write(m.get(), pano.out.c_str()));
      }
    } else if (c_tie->parsed() || c_tsr->parsed()) {
      const bool ie = c_tie->parsed();
      Common& c = ie ? tie : tsr;
      need(c.data, "--data");
      need(c.out, "--out");
      DatasetPtr ds = open_dataset(c.data);
      const auto text = c.config_text();
      CheckpointPtr init;
      if (!init_from.empty()) init = load_checkpoint(init_from);
      rl_train_options options{};
      options.config_json = text ? text->c_str() : nullptr;
      options.has_seed = c.seed.has_value();
      options.seed = c.seed.value_or(0);
      options.init = init.get();
      options.cache_codes = cache_codes;
      options.progress = print_epoch;
      rl_checkpoint* result = nullptr;
      char* log = nullptr;
      if (ie) {
        check(rl_train_ie(ds.get(), &options, &result, &log));
      } else {
        CheckpointPtr teacher = load_checkpoint(checkpoint_path);
        check(rl_train_sr(ds.get(), teacher.get(), &options, &result, &log));
      }
      CheckpointPtr out(result);
      const std::string log_text = take(log);
      check(rl_checkpoint_save(out.get(), c.out.c_str(), f32 ? 1 : 0));
      write_text(log_path.empty() ? c.out + ".log.json" : log_path, log_text);
    } else if (c_eie->parsed() || c_ele->parsed()) {
      const bool ie = c_eie->parsed();
      Common& c = ie ? eie : ele;
      need(c.data, "--data");
      DatasetPtr ds = open_dataset(c.data);
      CheckpointPtr ck = load_checkpoint(checkpoint_path);
      char* report = nullptr;
      const char* s = split.empty() ? nullptr : split.c_str();
      if (ie) {
        check(rl_eval_ie(ck.get(), ds.get(), s, &report));
      } else {
        CheckpointPtr teacher = load_checkpoint(ie_path);
        check(rl_eval_le(ck.get(), teacher.get(), ds.get(), s, &report));
      }
      const std::string text = take(report);
      if (c.out.empty()) {
        std::cout << text;
      } else {
        write_text(c.out, text);
      }
    } else if (c_png->parsed()) {
      need(png.data, "--data");
      need(png.out, "--out");
      CheckpointPtr ck;
      if (!checkpoint_path.empty()) ck = load_checkpoint(checkpoint_path);
      const auto text = png.config_text();
      check(rl_render_png(png.data.c_str(), ck.get(), text ? text->c_str() : nullptr, png.out.c_str()));
    } else if (c_gc->parsed()) {
      const auto text = gc.config_text();
      char* report = nullptr;
      int passed = 0;
      check(rl_grad_check(text ? text->c_str() : nullptr, gc.seed.has_value(), gc.seed.value_or(0), &report,
                          &passed));
      const std::string out = take(report);
      if (gc.out.empty()) {
        std::cout << out;
      } else {
        write_text(gc.out, out);
      }
      if (!passed) {
        std::cerr << "roomlay: gradient check failed\n";
        return 2;
      }
    }
  } catch (const Failure& f) {
    std::cerr << "roomlay: " << rl_status_name(f.status) << ": " << f.message << "\n";
    return 1;
  }
  return 0;
}
