// Copyright 2026 The DualGlance Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <cstring>
#include <exception>
#include <iostream>
#include <memory>
#include <new>
#include <string>

#include "cli/commands.hpp"
#include "common/errors.hpp"
#include "dualglance/dualglance.h"
#include "train/pipeline.hpp"

struct dg_config {
  dg::RunConfig run;
};

struct dg_model {
  std::unique_ptr<dg::DualGlanceModel> model;
};

namespace {

thread_local std::string g_last_error;

dg_status fail(dg_status s, std::string message) {
  g_last_error = std::move(message);
  return s;
}

template <typename F>
dg_status guarded(F&& f) {
  try {
    g_last_error.clear();
    f();
    return DG_OK;
  } catch (const dg::UsageError& e) {
    return fail(DG_ERR_USAGE, e.what());
  } catch (const dg::DataError& e) {
    return fail(DG_ERR_DATA, e.what());
  } catch (const dg::NumericalError& e) {
    return fail(DG_ERR_NUMERICAL, e.what());
  } catch (const dg::IoError& e) {
    return fail(DG_ERR_IO, e.what());
  } catch (const dg::ShapeError& e) {
    return fail(DG_ERR_SHAPE, e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(DG_ERR_IO, e.what());
  } catch (const std::bad_alloc&) {
    return fail(DG_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(DG_ERR_INTERNAL, e.what());
  }
}

dg_status copy_out(const std::string& value, char* buf, size_t cap, size_t* needed) {
  if (needed) *needed = value.size() + 1;
  if (!buf) return DG_OK;
  if (cap < value.size() + 1) return fail(DG_ERR_USAGE, "buffer too small");
  std::memcpy(buf, value.c_str(), value.size() + 1);
  return DG_OK;
}

dg::Box box_from(const double b[4]) { return dg::Box::checked(b[0], b[1], b[2], b[3]); }

}  // namespace

extern "C" {

const char* dg_version(void) { return "0.1.0"; }

const char* dg_last_error(void) { return g_last_error.c_str(); }

int dg_exit_code(dg_status status) {
  switch (status) {
    case DG_OK:
      return 0;
    case DG_ERR_USAGE:
      return 1;
    case DG_ERR_NUMERICAL:
      return 3;
    default:
      return 2;
  }
}

dg_status dg_config_create(dg_config** out) {
  if (!out) return fail(DG_ERR_USAGE, "null output pointer");
  return guarded([&] { *out = new dg_config(); });
}

void dg_config_destroy(dg_config* config) { delete config; }

dg_status dg_config_set(dg_config* config, const char* key, const char* value) {
  if (!config || !key || !value) return fail(DG_ERR_USAGE, "null argument");
  return guarded([&] { config->run.set(key, value); });
}

dg_status dg_config_load_file(dg_config* config, const char* path) {
  if (!config || !path) return fail(DG_ERR_USAGE, "null argument");
  return guarded([&] { config->run.load_file(path); });
}

dg_status dg_config_get(const dg_config* config, const char* key, char* buf, size_t cap, size_t* needed) {
  if (!config || !key) return fail(DG_ERR_USAGE, "null argument");
  std::string value;
  const dg_status s = guarded([&] { value = config->run.get(key); });
  return s == DG_OK ? copy_out(value, buf, cap, needed) : s;
}

size_t dg_config_key_count(void) { return dg::RunConfig::keys().size(); }

const char* dg_config_key_name(size_t index) {
  const auto& k = dg::RunConfig::keys();
  return index < k.size() ? k[index].name.c_str() : nullptr;
}

const char* dg_config_key_section(size_t index) {
  const auto& k = dg::RunConfig::keys();
  return index < k.size() ? k[index].section.c_str() : nullptr;
}

const char* dg_config_key_help(size_t index) {
  const auto& k = dg::RunConfig::keys();
  return index < k.size() ? k[index].help.c_str() : nullptr;
}

size_t dg_command_count(void) { return std::size(dg::kCommands); }

const char* dg_command_name(size_t index) {
  return index < std::size(dg::kCommands) ? dg::kCommands[index].data() : nullptr;
}

dg_status dg_run(const dg_config* config, const char* command) {
  if (!config || !command) return fail(DG_ERR_USAGE, "null argument");
  return guarded([&] {
    dg::run_command(command, config->run, std::cout, std::cerr);
    std::cout.flush();
  });
}

dg_status dg_model_load(const char* checkpoint_path, dg_model** out) {
  if (!checkpoint_path || !out) return fail(DG_ERR_USAGE, "null argument");
  return guarded([&] {
    auto m = std::make_unique<dg_model>();
    m->model = dg::load_model(checkpoint_path);
    *out = m.release();
  });
}

void dg_model_destroy(dg_model* model) { delete model; }

dg_status dg_model_num_classes(const dg_model* model, size_t* out) {
  if (!model || !out) return fail(DG_ERR_USAGE, "null argument");
  *out = model->model->config().num_classes;
  return DG_OK;
}

dg_status dg_model_config_get(const dg_model* model, const char* key, char* buf, size_t cap, size_t* needed) {
  if (!model || !key) return fail(DG_ERR_USAGE, "null argument");
  for (const auto& [k, v] : model->model->config().entries())
    if (k == key) return copy_out(v, buf, cap, needed);
  return fail(DG_ERR_USAGE, std::string("unknown model key '") + key + "'");
}

dg_status dg_model_predict(const dg_model* model, const double* pixels, size_t width, size_t height,
                           const double box1[4], const double box2[4], const double* proposals,
                           size_t num_proposals, double* probs, size_t probs_len) {
  if (!model || !pixels || !box1 || !box2 || !probs) return fail(DG_ERR_USAGE, "null argument");
  if (num_proposals > 0 && !proposals) return fail(DG_ERR_USAGE, "proposals is null");
  const dg::ModelConfig& config = model->model->config();
  if (probs_len < config.num_classes) return fail(DG_ERR_USAGE, "probs buffer too small");
  if (width == 0 || height == 0) return fail(DG_ERR_DATA, "empty image");
  return guarded([&] {
    dg::ImagePlane image;
    image.width = width;
    image.height = height;
    image.values.assign(pixels, pixels + 3 * width * height);
    for (double v : image.values)
      if (!std::isfinite(v)) throw dg::DataError("image contains non-finite pixels");

    dg::Dataset ds;
    dg::ImageRecord rec;
    rec.id = "input";
    rec.width = static_cast<double>(width);
    rec.height = static_cast<double>(height);
    rec.persons = {{0, box_from(box1), ""}, {1, box_from(box2), ""}};
    dg::PairSample sample;
    sample.image_id = rec.id;
    sample.person1 = 0;
    sample.person2 = 1;
    sample.b1 = rec.persons[0].box;
    sample.b2 = rec.persons[1].box;
    auto& props = ds.proposals[rec.id];
    for (size_t i = 0; i < num_proposals; ++i) {
      const double* p = proposals + 5 * i;
      props.push_back({dg::Box::checked(p[0], p[1], p[2], p[3]), p[4]});
    }
    ds.images.emplace(rec.id, rec);
    ds.put_pixels(rec.id, std::move(image));
    const dg::PreparedSample prepared = dg::prepare_sample(ds, sample, config);
    const dg::ScoreBundle b = model->model->score(prepared);
    std::copy(b.p.begin(), b.p.end(), probs);
  });
}

}  // extern "C"
