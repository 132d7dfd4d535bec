#include "depthlayers/cli/config.hpp"

#include <cstdio>
#include <functional>
#include <map>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "depthlayers/core/atomic_file.hpp"
#include "depthlayers/core/error.hpp"

namespace depthlayers {

const char* to_string(BackendKind b) {
  switch (b) {
    case BackendKind::toynet: return "toynet";
    case BackendKind::propagation: return "propagation";
    case BackendKind::identity: return "identity";
  }
  return "?";
}

BackendKind parse_backend(const std::string& s) {
  if (s == "toynet") return BackendKind::toynet;
  if (s == "propagation") return BackendKind::propagation;
  if (s == "identity") return BackendKind::identity;
  throw InvalidArgument("unknown backend '" + s + "' (toynet, propagation, identity)");
}

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double to_double(const std::string& key, const std::string& s) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size()) throw InvalidArgument("config " + key + ": '" + s + "' is not a number");
  return v;
}

long long to_int(const std::string& key, const std::string& s) {
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size()) throw InvalidArgument("config " + key + ": '" + s + "' is not an integer");
  return v;
}

bool to_bool(const std::string& key, const std::string& s) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw InvalidArgument("config " + key + ": '" + s + "' is not a boolean");
}

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

std::string join_ints(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
  return out;
}

// One table drives both directions, so every key that parses also formats.
struct Field {
  std::string section;
  std::string key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

std::vector<Field> fields() {
  std::vector<Field> f;
  auto dbl = [&](std::string sec, std::string key, std::function<double&(RunConfig&)> ref) {
    const std::string full = sec + "." + key;
    f.push_back({sec, key, [ref](const RunConfig& c) { return fmt_double(ref(const_cast<RunConfig&>(c))); },
                 [ref, full](RunConfig& c, const std::string& s) { ref(c) = to_double(full, s); }});
  };
  auto num = [&](std::string sec, std::string key, std::function<int&(RunConfig&)> ref) {
    const std::string full = sec + "." + key;
    f.push_back({sec, key, [ref](const RunConfig& c) { return std::to_string(ref(const_cast<RunConfig&>(c))); },
                 [ref, full](RunConfig& c, const std::string& s) {
                   const long long v = to_int(full, s);
                   if (v < INT32_MIN || v > INT32_MAX) throw InvalidArgument("config " + full + " is out of range");
                   ref(c) = static_cast<int>(v);
                 }});
  };
  auto flag = [&](std::string sec, std::string key, std::function<bool&(RunConfig&)> ref) {
    const std::string full = sec + "." + key;
    f.push_back({sec, key, [ref](const RunConfig& c) { return std::string(ref(const_cast<RunConfig&>(c)) ? "true" : "false"); },
                 [ref, full](RunConfig& c, const std::string& s) { ref(c) = to_bool(full, s); }});
  };
  auto path = [&](std::string sec, std::string key, std::function<std::filesystem::path&(RunConfig&)> ref) {
    f.push_back({sec, key, [ref](const RunConfig& c) { return ref(const_cast<RunConfig&>(c)).string(); },
                 [ref](RunConfig& c, const std::string& s) { ref(c) = s; }});
  };

  f.push_back({"run", "seed", [](const RunConfig& c) { return std::to_string(c.seed); },
               [](RunConfig& c, const std::string& s) {
                 if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
                   throw InvalidArgument("config run.seed must be a non-negative integer");
                 c.seed = std::stoull(s);
               }});
  num("run", "workers", [](RunConfig& c) -> int& { return c.workers; });
  num("run", "count", [](RunConfig& c) -> int& { return c.count; });

  path("paths", "dataset", [](RunConfig& c) -> std::filesystem::path& { return c.paths.dataset; });
  path("paths", "checkpoint", [](RunConfig& c) -> std::filesystem::path& { return c.paths.checkpoint; });
  path("paths", "output", [](RunConfig& c) -> std::filesystem::path& { return c.paths.output; });
  path("paths", "masks", [](RunConfig& c) -> std::filesystem::path& { return c.paths.masks; });

  num("generate", "patch_width", [](RunConfig& c) -> int& { return c.generator.patch.width; });
  num("generate", "patch_height", [](RunConfig& c) -> int& { return c.generator.patch.height; });
  dbl("generate", "canvas_scale", [](RunConfig& c) -> double& { return c.generator.canvas_scale; });
  dbl("generate", "mask_object", [](RunConfig& c) -> double& { return c.generator.mix.object; });
  dbl("generate", "mask_sky", [](RunConfig& c) -> double& { return c.generator.mix.sky; });
  dbl("generate", "mask_human", [](RunConfig& c) -> double& { return c.generator.mix.human; });
  dbl("generate", "human_hole_fraction", [](RunConfig& c) -> double& { return c.generator.mix.human_hole_fraction; });
  dbl("generate", "hole_prob_for_holed", [](RunConfig& c) -> double& { return c.generator.hole_prob_for_holed; });
  num("generate", "scene_planes", [](RunConfig& c) -> int& { return c.generator.scene.planes; });
  dbl("generate", "scene_max_tilt", [](RunConfig& c) -> double& { return c.generator.scene.max_tilt; });
  dbl("generate", "scene_texture", [](RunConfig& c) -> double& { return c.generator.scene.texture; });
  dbl("generate", "min_instance_fraction", [](RunConfig& c) -> double& { return c.generator.min_instance_fraction; });

  num("perturb", "morph_iters_min", [](RunConfig& c) -> int& { return c.generator.perturb.morph_iters.lo; });
  num("perturb", "morph_iters_max", [](RunConfig& c) -> int& { return c.generator.perturb.morph_iters.hi; });
  num("perturb", "morph_kernel", [](RunConfig& c) -> int& { return c.generator.perturb.morph_kernel; });
  dbl("perturb", "blur_small_sigma_min", [](RunConfig& c) -> double& { return c.generator.perturb.blur_small_sigma.lo; });
  dbl("perturb", "blur_small_sigma_max", [](RunConfig& c) -> double& { return c.generator.perturb.blur_small_sigma.hi; });
  dbl("perturb", "blur_large_sigma_min", [](RunConfig& c) -> double& { return c.generator.perturb.blur_large_sigma.lo; });
  dbl("perturb", "blur_large_sigma_max", [](RunConfig& c) -> double& { return c.generator.perturb.blur_large_sigma.hi; });
  dbl("perturb", "blur_small_prob", [](RunConfig& c) -> double& { return c.generator.perturb.blur_small_prob; });
  dbl("perturb", "order_scheme_prob", [](RunConfig& c) -> double& { return c.generator.perturb.order_scheme_prob; });
  num("perturb", "hole_ring_width", [](RunConfig& c) -> int& { return c.generator.perturb.hole_ring_width; });
  dbl("perturb", "hole_perturb_prob", [](RunConfig& c) -> double& { return c.generator.perturb.hole_perturb_prob; });

  f.push_back({"train", "widths",
               [](const RunConfig& c) {
                 const auto& w = c.train.net.widths;
                 return join_ints({w[0], w[1], w[2]});
               },
               [](RunConfig& c, const std::string& s) {
                 const auto parts = split(s);
                 if (parts.size() != 3) throw InvalidArgument("config train.widths needs three integers");
                 for (int i = 0; i < 3; ++i) c.train.net.widths[static_cast<std::size_t>(i)] =
                     static_cast<int>(to_int("train.widths", parts[static_cast<std::size_t>(i)]));
               }});
  flag("train", "residual", [](RunConfig& c) -> bool& { return c.train.net.residual; });
  num("train", "bottleneck_blocks", [](RunConfig& c) -> int& { return c.train.net.bottleneck_blocks; });
  dbl("train", "slope", [](RunConfig& c) -> double& { return c.train.net.slope; });
  dbl("train", "learning_rate", [](RunConfig& c) -> double& { return c.train.learning_rate; });
  dbl("train", "first_decay", [](RunConfig& c) -> double& { return c.train.first_decay; });
  dbl("train", "second_decay", [](RunConfig& c) -> double& { return c.train.second_decay; });
  dbl("train", "decay_factor", [](RunConfig& c) -> double& { return c.train.decay_factor; });
  num("train", "batch", [](RunConfig& c) -> int& { return c.train.batch; });
  dbl("train", "beta1", [](RunConfig& c) -> double& { return c.train.adam.beta1; });
  dbl("train", "beta2", [](RunConfig& c) -> double& { return c.train.adam.beta2; });
  dbl("train", "eps", [](RunConfig& c) -> double& { return c.train.adam.eps; });
  dbl("train", "weight_decay", [](RunConfig& c) -> double& { return c.train.adam.weight_decay; });
  num("train", "stage1_iterations", [](RunConfig& c) -> int& { return c.stage1_iterations; });
  num("train", "stage2_iterations", [](RunConfig& c) -> int& { return c.stage2_iterations; });
  num("train", "checkpoint_every", [](RunConfig& c) -> int& { return c.checkpoint_every; });

  dbl("metrics", "r3_threshold", [](RunConfig& c) -> double& { return c.metrics.r3_threshold; });
  dbl("metrics", "whdr_delta", [](RunConfig& c) -> double& { return c.metrics.whdr_delta; });
  f.push_back({"metrics", "whdr_pairs",
               [](const RunConfig& c) { return std::to_string(c.metrics.whdr_pairs ? *c.metrics.whdr_pairs : 0); },
               [](RunConfig& c, const std::string& s) {
                 const long long v = to_int("metrics.whdr_pairs", s);
                 if (v < 0) throw InvalidArgument("config metrics.whdr_pairs must be >= 0");
                 c.metrics.whdr_pairs = v == 0 ? std::nullopt : std::optional<std::size_t>(static_cast<std::size_t>(v));
               }});
  f.push_back({"metrics", "whdr_seed", [](const RunConfig& c) { return std::to_string(c.metrics.whdr_seed); },
               [](RunConfig& c, const std::string& s) {
                 if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
                   throw InvalidArgument("config metrics.whdr_seed must be a non-negative integer");
                 c.metrics.whdr_seed = std::stoull(s);
               }});
  dbl("metrics", "edge_threshold", [](RunConfig& c) -> double& { return c.metrics.edge_threshold; });
  dbl("metrics", "edge_truncation", [](RunConfig& c) -> double& { return c.metrics.edge_truncation; });
  num("metrics", "boundary_erode", [](RunConfig& c) -> int& { return c.metrics.boundary_erode; });
  num("metrics", "boundary_dilate", [](RunConfig& c) -> int& { return c.metrics.boundary_dilate; });
  dbl("metrics", "min_instance_fraction", [](RunConfig& c) -> double& { return c.metrics.min_instance_fraction; });

  f.push_back({"refine", "backend", [](const RunConfig& c) { return std::string(to_string(c.refine.backend)); },
               [](RunConfig& c, const std::string& s) { c.refine.backend = parse_backend(s); }});
  flag("refine", "layered", [](RunConfig& c) -> bool& { return c.refine.layered; });
  num("refine", "erode_kernel", [](RunConfig& c) -> int& { return c.refine.erode_kernel; });
  num("refine", "dilate_kernel", [](RunConfig& c) -> int& { return c.refine.dilate_kernel; });
  num("refine", "radius", [](RunConfig& c) -> int& { return c.refine.radius; });
  num("refine", "infer_size", [](RunConfig& c) -> int& { return c.refine.infer_size; });
  flag("refine", "emit_layers", [](RunConfig& c) -> bool& { return c.refine.emit_layers; });

  flag("sweep", "enabled", [](RunConfig& c) -> bool& { return c.sweep.enabled; });
  f.push_back({"sweep", "ops",
               [](const RunConfig& c) {
                 std::string out;
                 for (std::size_t i = 0; i < c.sweep.ops.size(); ++i) out += (i ? "," : "") + std::string(to_string(c.sweep.ops[i]));
                 return out;
               },
               [](RunConfig& c, const std::string& s) {
                 c.sweep.ops.clear();
                 for (const auto& p : split(s)) {
                   if (p == "opening") c.sweep.ops.push_back(MaskDegradation::opening);
                   else if (p == "closing") c.sweep.ops.push_back(MaskDegradation::closing);
                   else throw InvalidArgument("config sweep.ops: unknown operation '" + p + "'");
                 }
               }});
  f.push_back({"sweep", "kernels", [](const RunConfig& c) { return join_ints(c.sweep.kernels); },
               [](RunConfig& c, const std::string& s) {
                 c.sweep.kernels.clear();
                 for (const auto& p : split(s)) c.sweep.kernels.push_back(static_cast<int>(to_int("sweep.kernels", p)));
               }});
  return f;
}

const std::vector<Field>& field_table() {
  static const std::vector<Field> table = fields();
  return table;
}

}  // namespace

void RunConfig::validate() const {
  if (workers < 0) throw InvalidArgument("run.workers must be >= 0");
  if (count < 1) throw InvalidArgument("run.count must be positive");
  if (generator.patch.width < 8 || generator.patch.height < 8) throw InvalidArgument("patch sides must be at least 8");
  if (!(generator.canvas_scale >= 1.0)) throw InvalidArgument("generate.canvas_scale must be >= 1");
  generator.mix.validate();
  generator.perturb.validate();
  if (generator.scene.planes != 1 && generator.scene.planes != 2)
    throw InvalidArgument("generate.scene_planes must be 1 or 2");
  if (!(generator.hole_prob_for_holed >= 0.0 && generator.hole_prob_for_holed <= 1.0))
    throw InvalidArgument("generate.hole_prob_for_holed must lie in [0, 1]");
  nn::TrainConfig t = train;
  t.iterations = 1;
  t.validate();
  if (stage1_iterations < 1 || stage2_iterations < 1) throw InvalidArgument("stage iterations must be positive");
  if (checkpoint_every < 0) throw InvalidArgument("train.checkpoint_every must be >= 0");
  if (!(metrics.r3_threshold >= 0.0)) throw InvalidArgument("metrics.r3_threshold must be >= 0");
  if (!(metrics.whdr_delta >= 0.0)) throw InvalidArgument("metrics.whdr_delta must be >= 0");
  if (!(metrics.edge_truncation > 0.0)) throw InvalidArgument("metrics.edge_truncation must be positive");
  if (metrics.boundary_erode < 1 || metrics.boundary_erode % 2 == 0 || metrics.boundary_dilate < 1 ||
      metrics.boundary_dilate % 2 == 0)
    throw InvalidArgument("metrics boundary kernels must be odd and positive");
  if (refine.erode_kernel < 1 || refine.erode_kernel % 2 == 0 || refine.dilate_kernel < 1 ||
      refine.dilate_kernel % 2 == 0)
    throw InvalidArgument("refine kernels must be odd and positive");
  if (refine.radius < 1) throw InvalidArgument("refine.radius must be positive");
  if (refine.infer_size < 0 || (refine.infer_size > 0 && refine.infer_size < 8))
    throw InvalidArgument("refine.infer_size must be 0 or at least 8");
  for (int k : sweep.kernels)
    if (k != 0 && (k < 3 || k % 2 == 0)) throw InvalidArgument("sweep kernels must be 0 or odd >= 3");
}

RunConfig parse_config(const std::string& text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw InvalidArgument(std::string("config syntax: ") + e.what());
  }
  std::map<std::pair<std::string, std::string>, const Field*> index;
  for (const Field& f : field_table()) index[{f.section, f.key}] = &f;

  RunConfig c;
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty())
      throw InvalidArgument("config key '" + section + "' must sit inside a [section]");
    for (const auto& [key, value] : body) {
      const auto it = index.find({section, key});
      if (it == index.end()) throw InvalidArgument("unknown config key " + section + "." + key);
      it->second->set(c, value.data());
    }
  }
  c.validate();
  return c;
}

void apply_override(RunConfig& c, const std::string& assignment) {
  const auto eq = assignment.find('=');
  const auto dot = assignment.find('.');
  if (eq == std::string::npos || dot == std::string::npos || dot > eq)
    throw InvalidArgument("override must look like section.key=value, got '" + assignment + "'");
  const std::string section = assignment.substr(0, dot);
  const std::string key = assignment.substr(dot + 1, eq - dot - 1);
  for (const Field& f : field_table())
    if (f.section == section && f.key == key) {
      f.set(c, assignment.substr(eq + 1));
      return;
    }
  throw InvalidArgument("unknown config key " + section + "." + key);
}

RunConfig load_config(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw InvalidArgument("config file " + path.string() + " does not exist");
  return parse_config(read_file(path));
}

std::string format_config(const RunConfig& c) {
  std::string out;
  std::string section;
  for (const Field& f : field_table()) {
    if (f.section != section) {
      out += (section.empty() ? "[" : "\n[") + f.section + "]\n";
      section = f.section;
    }
    out += f.key + " = " + f.get(c) + "\n";
  }
  return out;
}

}  // namespace depthlayers
