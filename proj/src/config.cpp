#include "defnet/config.hpp"

#include <cmath>
#include <limits>

#include "defnet/error.hpp"
#include "defnet/io.hpp"

namespace defnet {
namespace {

using nlohmann::json;

// Overlays `user` onto `base`, rejecting keys that `base` does not have.
void merge_known(json& base, const json& user, const std::string& where) {
  if (!user.is_object())
    throw ValidationError("config " + (where.empty() ? std::string("root") : where) +
                          " must be an object");
  for (const auto& [key, value] : user.items()) {
    const std::string path = where.empty() ? key : where + "." + key;
    if (!base.contains(key)) throw ValidationError("unknown config key '" + path + "'");
    json& slot = base[key];
    if (slot.is_object())
      merge_known(slot, value, path);
    else
      slot = value;
  }
}

double get_double(const json& j, const char* key, const std::string& section) {
  const json& v = j.at(key);
  if (!v.is_number())
    throw ValidationError("config " + section + "." + key + " must be a number");
  return v.get<double>();
}

std::int64_t get_integer(const json& j, const char* key, const std::string& section) {
  const json& v = j.at(key);
  if (v.is_number_integer()) return v.get<std::int64_t>();
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (std::trunc(d) == d && std::abs(d) < 9.0e15) return static_cast<std::int64_t>(d);
  }
  throw ValidationError("config " + section + "." + key + " must be an integer");
}

int get_int(const json& j, const char* key, const std::string& section) {
  const std::int64_t v = get_integer(j, key, section);
  if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max())
    throw ValidationError("config " + section + "." + key + " is out of range");
  return static_cast<int>(v);
}

std::uint64_t get_seed(const json& j, const char* key, const std::string& section) {
  const json& v = j.at(key);
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  const std::int64_t s = get_integer(j, key, section);
  if (s < 0) throw ValidationError("config " + section + "." + key + " must be >= 0");
  return static_cast<std::uint64_t>(s);
}

std::string get_string(const json& j, const char* key, const std::string& section) {
  const json& v = j.at(key);
  if (!v.is_string())
    throw ValidationError("config " + section + "." + key + " must be a string");
  return v.get<std::string>();
}

template <std::size_t K, typename T>
std::array<T, K> get_array(const json& j, const char* key, const std::string& section) {
  const json& v = j.at(key);
  if (!v.is_array() || v.size() != K)
    throw ValidationError("config " + section + "." + key + " must be an array of " +
                          std::to_string(K) + " numbers");
  std::array<T, K> out{};
  for (std::size_t i = 0; i < K; ++i) {
    json wrapper = {{"v", v[i]}};
    if constexpr (std::is_integral_v<T>)
      out[i] = get_int(wrapper, "v", section + "." + key);
    else
      out[i] = get_double(wrapper, "v", section + "." + key);
  }
  return out;
}

}  // namespace

void RunConfig::validate() const {
  if (threads < 0) throw ValidationError("threads must be >= 0");
  if (mesh.path.empty()) {
    for (int c : mesh.cells)
      if (c < 1) throw ValidationError("mesh cells must be >= 1");
    for (double s : mesh.size)
      if (!(s > 0.0) || !std::isfinite(s)) throw ValidationError("mesh size must be > 0");
  }
  (void)material.material();
  if (dataset.modes < 1) throw ValidationError("dataset modes must be >= 1");
  if (dataset.samples < 1) throw ValidationError("dataset samples must be >= 1");
  if (!(dataset.d_max_over_L >= 0.0) || !std::isfinite(dataset.d_max_over_L))
    throw ValidationError("dataset d_max_over_L must be >= 0");
  if (!(dataset.patch_prob >= 0.0 && dataset.patch_prob <= 1.0))
    throw ValidationError("dataset patch_prob must be in [0, 1]");
  solver.validate();
  train.validate();
  if (eval.samples < 1) throw ValidationError("eval samples must be >= 1");
  if (bench.samples < 1) throw ValidationError("bench samples must be >= 1");
  for (double s : bench.sweep)
    if (!(s > 0.0) || !std::isfinite(s)) throw ValidationError("bench sweep entries must be > 0");
}

nlohmann::json to_json(const RunConfig& c) {
  return {
      {"seed", c.seed},
      {"threads", c.threads},
      {"mesh", {{"path", c.mesh.path}, {"cells", c.mesh.cells}, {"size", c.mesh.size}}},
      {"material",
       {{"model", to_string(c.material.model)},
        {"young_modulus", c.material.young_modulus},
        {"poisson_ratio", c.material.poisson_ratio}}},
      {"dataset",
       {{"modes", c.dataset.modes},
        {"samples", c.dataset.samples},
        {"d_max_over_L", c.dataset.d_max_over_L},
        {"patch_prob", c.dataset.patch_prob}}},
      {"solver",
       {{"eps", c.solver.eps},
        {"eta", c.solver.eta},
        {"max_iters", c.solver.max_iters},
        {"linear_solver", to_string(c.solver.linear_solver)}}},
      {"train",
       {{"loss", to_string(c.train.loss)},
        {"epochs", c.train.epochs},
        {"batch_size", c.train.batch_size},
        {"seed", c.train.seed},
        {"lr", c.train.adam.lr},
        {"beta1", c.train.adam.beta1},
        {"beta2", c.train.adam.beta2},
        {"adam_eps", c.train.adam.eps},
        {"lr_decay", c.train.lr_decay},
        {"validation_fraction", c.train.validation_fraction},
        {"hidden_layers", c.train.hidden_layers}}},
      {"eval", {{"samples", c.eval.samples}}},
      {"bench", {{"samples", c.bench.samples}, {"sweep", c.bench.sweep}}},
  };
}

RunConfig config_from_json(const nlohmann::json& user) {
  json j = to_json(RunConfig{});
  merge_known(j, user, "");
  RunConfig c;
  try {
    c.seed = get_seed(j, "seed", "root");
    c.threads = get_int(j, "threads", "root");

    const json& m = j["mesh"];
    c.mesh.path = get_string(m, "path", "mesh");
    c.mesh.cells = get_array<3, int>(m, "cells", "mesh");
    c.mesh.size = get_array<3, double>(m, "size", "mesh");

    const json& mat = j["material"];
    c.material.model = material_model_from_string(get_string(mat, "model", "material"));
    c.material.young_modulus = get_double(mat, "young_modulus", "material");
    c.material.poisson_ratio = get_double(mat, "poisson_ratio", "material");

    const json& d = j["dataset"];
    c.dataset.modes = get_int(d, "modes", "dataset");
    c.dataset.samples = get_int(d, "samples", "dataset");
    c.dataset.d_max_over_L = get_double(d, "d_max_over_L", "dataset");
    c.dataset.patch_prob = get_double(d, "patch_prob", "dataset");

    const json& s = j["solver"];
    c.solver.eps = get_double(s, "eps", "solver");
    c.solver.eta = get_double(s, "eta", "solver");
    c.solver.max_iters = get_int(s, "max_iters", "solver");
    c.solver.linear_solver = linear_solver_from_string(get_string(s, "linear_solver", "solver"));

    const json& t = j["train"];
    c.train.loss = loss_kind_from_string(get_string(t, "loss", "train"));
    c.train.epochs = get_int(t, "epochs", "train");
    c.train.batch_size = get_int(t, "batch_size", "train");
    c.train.seed = get_seed(t, "seed", "train");
    c.train.adam.lr = get_double(t, "lr", "train");
    c.train.adam.beta1 = get_double(t, "beta1", "train");
    c.train.adam.beta2 = get_double(t, "beta2", "train");
    c.train.adam.eps = get_double(t, "adam_eps", "train");
    c.train.lr_decay = get_double(t, "lr_decay", "train");
    c.train.validation_fraction = get_double(t, "validation_fraction", "train");
    c.train.hidden_layers = get_int(t, "hidden_layers", "train");

    c.eval.samples = get_int(j["eval"], "samples", "eval");

    const json& b = j["bench"];
    c.bench.samples = get_int(b, "samples", "bench");
    if (!b["sweep"].is_array()) throw ValidationError("config bench.sweep must be an array");
    c.bench.sweep.clear();
    for (const auto& v : b["sweep"]) {
      if (!v.is_number()) throw ValidationError("config bench.sweep must hold numbers");
      c.bench.sweep.push_back(v.get<double>());
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed config: ") + e.what());
  }
  c.validate();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  return config_from_json(read_json(path));
}

void apply_override(RunConfig& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ValidationError("override '" + assignment + "' is not of the form key=value");
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;

  json patch = json::object();
  json* cursor = &patch;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot - start);
    if (part.empty()) throw ValidationError("override key '" + key + "' is malformed");
    if (dot == std::string::npos) {
      (*cursor)[part] = value;
      break;
    }
    cursor = &(*cursor)[part];
    *cursor = json::object();
    start = dot + 1;
  }
  json merged = to_json(config);
  merge_known(merged, patch, "");
  config = config_from_json(merged);
}

}  // namespace defnet
