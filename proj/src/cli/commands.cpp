#include "depthlayers/cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iostream>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"

#include "depthlayers/cli/dataset.hpp"
#include "depthlayers/cli/io.hpp"
#include "depthlayers/cli/viz.hpp"
#include "depthlayers/core/atomic_file.hpp"
#include "depthlayers/core/compose.hpp"
#include "depthlayers/core/parallel.hpp"
#include "depthlayers/core/resample.hpp"

namespace depthlayers::cli {

namespace fs = std::filesystem;

namespace {

void require_input(const fs::path& p, const std::string& what) {
  if (p.empty()) throw InvalidArgument(what + " is required");
  if (!fs::exists(p)) throw DataError(what + " " + p.string() + " does not exist");
}

void require_output(const fs::path& p, const std::string& what) {
  if (p.empty()) throw InvalidArgument(what + " is required");
}

bool finite_params(const nn::ModelParams& p) {
  for (const auto& nt : p.tensors())
    for (double v : nt.value.data)
      if (!std::isfinite(v)) return false;
  return true;
}

const char* mode_name(nn::TrainMode m) {
  switch (m) {
    case nn::TrainMode::stage1: return "stage1";
    case nn::TrainMode::stage2: return "stage2";
    case nn::TrainMode::direct: return "direct";
  }
  return "?";
}

void run_stage(nn::TrainState& st, const std::vector<TrainingSample>& data, const RunConfig& cfg, const fs::path& out) {
  const fs::path ckpt = out / (std::string(mode_name(st.mode)) + ".ckpt");
  const fs::path csv = out / (std::string(mode_name(st.mode)) + "_loss.csv");
  const int every = cfg.checkpoint_every;
  const int report_every = std::max(1, st.config.iterations / 10);
  auto on_iteration = [&](const nn::TrainState& s) {
    if (s.iteration % report_every == 0 || s.iteration == s.config.iterations) {
      const auto& r = s.log.back();
      spdlog::info("{} iteration {}/{} loss {:.5f}", mode_name(s.mode), s.iteration, s.config.iterations, r.total);
    }
    if (every > 0 && s.iteration % every == 0 && s.iteration < s.config.iterations) {
      nn::save_checkpoint(ckpt, s);
      nn::write_loss_csv(csv, s.log);
    }
  };
  nn::train(st, data, st.config.iterations, on_iteration, cfg.workers);
  if (!finite_params(st.params)) throw NumericError(std::string(mode_name(st.mode)) + " training produced non-finite weights");
  if (st.optimizer.skipped > 0)
    spdlog::warn("{}: {} updates skipped for non-finite gradients", mode_name(st.mode), st.optimizer.skipped);
  nn::save_checkpoint(ckpt, st);
  nn::write_loss_csv(csv, st.log);
}

nn::TrainConfig stage_config(const RunConfig& cfg, int iterations) {
  nn::TrainConfig t = cfg.train;
  t.seed = cfg.seed;
  t.iterations = iterations;
  return t;
}

void run_stage2_from(const nn::ModelParams& init, Size sample_size, const RunConfig& cfg, const TrainRequest& req,
                     const std::vector<TrainingSample>& data, const fs::path& out) {
  if (!(init.config() == cfg.train.net))
    throw DataError("stage-1 network configuration differs from the configured one");
  nn::TrainState st =
      nn::start_training(stage_config(cfg, req.iterations.value_or(cfg.stage2_iterations)), nn::TrainMode::stage2, &init);
  st.sample_size = sample_size;
  run_stage(st, data, cfg, out);
}

Raster<double> resize_alpha(const Mask& m, Size to) { return resize_nearest(m, to).alpha(); }

}  // namespace

GenerateSummary generate(const RunConfig& cfg, const fs::path& out) {
  cfg.validate();
  require_output(out, "output directory");
  if (fs::exists(out / "samples") && !fs::is_empty(out / "samples"))
    throw InvalidArgument(out.string() + " already holds samples");
  const auto n = static_cast<std::size_t>(cfg.count);
  std::vector<Mask> pool;
  if (!cfg.paths.masks.empty()) pool = io::load_mask_pool(cfg.paths.masks);
  std::vector<MaskCategory> categories(n);
  parallel_for(n, cfg.workers, [&](std::size_t i) {
    const TrainingSample s = synthesize_training_sample(cfg.generator, cfg.seed, i, pool);
    io::write_sample(out, i, s, cfg.seed);
    categories[i] = s.category;
  });
  RunConfig record = cfg;
  record.paths = {};
  record.paths.masks = cfg.paths.masks;
  record.workers = 1;
  write_file_atomic(out / "generation.ini", format_config(record));

  GenerateSummary sum;
  sum.samples = n;
  for (MaskCategory c : categories) {
    switch (c) {
      case MaskCategory::object: ++sum.object; break;
      case MaskCategory::sky: ++sum.sky; break;
      case MaskCategory::human: ++sum.human; break;
      case MaskCategory::human_with_holes: ++sum.human_with_holes; break;
    }
  }
  return sum;
}

void train(const RunConfig& cfg, const TrainRequest& req, const fs::path& dataset, const fs::path& out) {
  cfg.validate();
  require_input(dataset, "dataset");
  require_output(out, "output directory");
  if (req.iterations && *req.iterations < 1) throw InvalidArgument("--iters must be positive");
  if (req.resume.empty() && req.stages == StageSelection::stage2 && req.init.empty() && cfg.paths.checkpoint.empty() &&
      !req.from_scratch)
    throw InvalidArgument("stage 2 needs a stage-1 checkpoint (--init) or --from-scratch");
  const auto data = io::read_dataset(dataset, cfg.workers);
  spdlog::info("training on {} samples of {}", data.size(), to_string(data.front().depth.size()));

  if (!req.resume.empty()) {
    require_input(req.resume, "resume checkpoint");
    nn::TrainState st = nn::load_checkpoint(req.resume);
    run_stage(st, data, cfg, out);
    if (st.mode == nn::TrainMode::stage1 && req.stages == StageSelection::both)
      run_stage2_from(st.params, st.sample_size, cfg, req, data, out);
    return;
  }

  switch (req.stages) {
    case StageSelection::stage1:
    case StageSelection::both: {
      nn::TrainState st =
          nn::start_training(stage_config(cfg, req.iterations.value_or(cfg.stage1_iterations)), nn::TrainMode::stage1);
      run_stage(st, data, cfg, out);
      if (req.stages == StageSelection::both) run_stage2_from(st.params, st.sample_size, cfg, req, data, out);
      return;
    }
    case StageSelection::stage2: {
      const fs::path init = req.init.empty() ? cfg.paths.checkpoint : req.init;
      if (!init.empty()) {
        require_input(init, "stage-1 checkpoint");
        const nn::TrainState s1 = nn::load_checkpoint(init);
        if (s1.mode != nn::TrainMode::stage1) throw DataError(init.string() + " is not a stage-1 checkpoint");
        if (s1.sample_size.area() != 0 && !(s1.sample_size == data.front().depth.size()))
          throw DataError("stage-1 checkpoint was trained on " + to_string(s1.sample_size) + " samples, dataset holds " +
                          to_string(data.front().depth.size()));
        run_stage2_from(s1.params, s1.sample_size, cfg, req, data, out);
      } else if (req.from_scratch) {
        run_stage2_from(nn::ModelParams::initialize(cfg.train.net, cfg.seed), {}, cfg, req, data, out);
      } else {
        throw InvalidArgument("stage 2 needs a stage-1 checkpoint (--init) or --from-scratch");
      }
      return;
    }
    case StageSelection::direct: {
      const int iters = req.iterations.value_or(cfg.stage1_iterations + cfg.stage2_iterations);
      nn::TrainState st = nn::start_training(stage_config(cfg, iters), nn::TrainMode::direct);
      run_stage(st, data, cfg, out);
      return;
    }
  }
}

Refiner::Refiner(const RefineOptions& opts, const fs::path& checkpoint) : opts_(opts) {
  switch (opts.backend) {
    case BackendKind::identity:
      layer1_ = std::make_unique<IdentityBackend>();
      layer2_ = std::make_unique<IdentityBackend>();
      break;
    case BackendKind::propagation:
      // Eroding the inverse mask is dilating the mask, so the second layer takes the dilation kernel.
      layer1_ = std::make_unique<PropagationBackend>(opts.erode_kernel, opts.radius);
      layer2_ = std::make_unique<PropagationBackend>(opts.dilate_kernel, opts.radius);
      break;
    case BackendKind::toynet: {
      require_input(checkpoint, "toynet checkpoint");
      const nn::TrainState st = nn::load_checkpoint(checkpoint);
      layer1_ = nn::export_backend(st.params);
      layer2_ = nn::export_backend(st.params);
      break;
    }
  }
}

LayeredResult Refiner::layered(const DepthMap& d, const RgbImage& rgb, const Mask& m) const {
  if (opts_.infer_size == 0 || (d.width() == opts_.infer_size && d.height() == opts_.infer_size))
    return refine_layered(*layer1_, *layer2_, d, rgb, m);
  const Size work{opts_.infer_size, opts_.infer_size};
  const Mask small(resize_alpha(m, work), m.kind());
  LayeredResult r = refine_layered(*layer1_, *layer2_, resize_bilinear(d, work), resize_bilinear(rgb, work), small);
  LayeredResult out;
  out.layer1 = resize_bilinear(r.layer1, d.size());
  out.layer2 = resize_bilinear(r.layer2, d.size());
  out.merged = merge_layers(out.layer1, out.layer2, m);
  return out;
}

DepthMap Refiner::refine(const DepthMap& d, const RgbImage& rgb, const Mask& m) const {
  if (opts_.layered) return layered(d, rgb, m).merged;
  if (opts_.infer_size == 0) return direct_refine(*layer1_, d, rgb, m);
  const Size work{opts_.infer_size, opts_.infer_size};
  const DepthMap small =
      direct_refine(*layer1_, resize_bilinear(d, work), resize_bilinear(rgb, work), Mask(resize_alpha(m, work), m.kind()));
  return resize_bilinear(small, d.size());
}

DepthMap Refiner::refine_instances(const DepthMap& d, const RgbImage& rgb, const InstanceMap& inst,
                                   double min_fraction) const {
  if (!opts_.layered) throw InvalidArgument("instance-map refinement is layered only");
  if (opts_.infer_size == 0) return depthlayers::refine_instances(*layer1_, *layer2_, d, rgb, inst, min_fraction);
  const Size work{opts_.infer_size, opts_.infer_size};
  const DepthMap small = depthlayers::refine_instances(*layer1_, *layer2_, resize_bilinear(d, work),
                                                       resize_bilinear(rgb, work), resize_nearest(inst, work), min_fraction);
  return resize_bilinear(small, d.size());
}

io::EvaluationReport evaluate_dataset(const RunConfig& cfg, const fs::path& dataset, const std::vector<DepthMap>& preds) {
  const auto dirs = io::list_samples(dataset);
  if (dirs.size() != preds.size())
    throw DataError("dataset holds " + std::to_string(dirs.size()) + " samples but " + std::to_string(preds.size()) +
                    " predictions were given");
  io::EvaluationReport rep;
  rep.options = cfg.metrics;
  rep.images.resize(dirs.size());
  parallel_for(dirs.size(), cfg.workers, [&](std::size_t i) {
    const TrainingSample s = io::read_sample(dirs[i]);
    rep.images[i].name = dirs[i].filename().string();
    rep.images[i].metrics = evaluate(preds[i], s.depth, io::mask_instances(s.mask), &s.perturbed, cfg.metrics);
  });
  std::vector<MetricsReport> all;
  for (const auto& im : rep.images) all.push_back(im.metrics);
  rep.aggregate = aggregate(all);
  return rep;
}

std::vector<io::SweepRow> degradation_sweep(const RunConfig& cfg, const Refiner& refiner, const fs::path& dataset) {
  const auto dirs = io::list_samples(dataset);
  const std::size_t cells = cfg.sweep.ops.size() * cfg.sweep.kernels.size();
  // reports[cell][sample]
  std::vector<std::vector<MetricsReport>> reports(cells, std::vector<MetricsReport>(dirs.size()));
  MetricOptions opts = cfg.metrics;
  parallel_for(dirs.size(), cfg.workers, [&](std::size_t i) {
    const TrainingSample s = io::read_sample(dirs[i]);
    const InstanceMap inst = io::mask_instances(s.mask);
    std::size_t cell = 0;
    for (MaskDegradation op : cfg.sweep.ops)
      for (int k : cfg.sweep.kernels) {
        const Mask degraded = degrade_mask(s.mask, op, k);
        reports[cell++][i] = evaluate(refiner.refine(s.perturbed, s.rgb, degraded), s.depth, inst, nullptr, opts);
      }
  });
  std::vector<io::SweepRow> rows;
  std::size_t cell = 0;
  for (MaskDegradation op : cfg.sweep.ops)
    for (int k : cfg.sweep.kernels) {
      const MetricsReport a = aggregate(reports[cell++]);
      rows.push_back({op, k, a.mbe, a.rmse});
    }
  return rows;
}

namespace {

std::vector<fs::path> list_files(const fs::path& dir, std::initializer_list<const char*> exts) {
  if (!fs::is_directory(dir)) return {dir};
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const std::string ext = e.path().extension().string();
    for (const char* x : exts)
      if (ext == x) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

void write_depth_png_colored(const DepthMap& d, const fs::path& path) {
  write_file_atomic(path, io::encode_png_rgb8(d.width(), d.height(), viz::colorize_depth(d)));
}

struct Common {
  fs::path config;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::string log_level = "info";
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config, "INI run configuration");
  sub->add_option("--set", c.overrides, "Override a config key, e.g. --set train.batch=4")->take_all();
  sub->add_option("--seed", c.seed, "Master seed");
  sub->add_option("--workers", c.workers, "Worker threads (0 = all cores)");
  sub->add_option("--log-level", c.log_level, "trace, debug, info, warn, error, off");
}

RunConfig resolve(const Common& c) {
  RunConfig cfg;
  if (!c.config.empty()) cfg = load_config(c.config);
  for (const std::string& kv : c.overrides) apply_override(cfg, kv);
  if (c.seed) cfg.seed = *c.seed;
  if (c.workers) cfg.workers = *c.workers;
  cfg.validate();
  return cfg;
}

void set_log_level(const std::string& level) {
  const auto lv = spdlog::level::from_str(level);
  if (lv == spdlog::level::off && level != "off") throw InvalidArgument("unknown log level '" + level + "'");
  spdlog::set_level(lv);
}

void use_stderr_logger() {
  static bool done = false;
  if (done) return;
  done = true;
  auto logger = spdlog::stderr_color_mt("depthlayers");
  spdlog::set_default_logger(logger);
}

int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::usage: return kExitUsage;
    case ErrorKind::data: return kExitData;
    case ErrorKind::numeric: return kExitNumeric;
  }
  return kExitData;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  use_stderr_logger();
  CLI::App app{"Mask-guided layered depth refinement toolkit", "depthlayers"};
  app.require_subcommand(1);

  // generate
  Common gen_c;
  fs::path gen_out;
  std::optional<int> gen_count, gen_patch;
  auto* gen = app.add_subcommand("generate", "Synthesize a training dataset");
  add_common(gen, gen_c);
  gen->add_option("--out", gen_out, "Dataset root (default: paths.output)");
  gen->add_option("--count", gen_count, "Number of samples");
  gen->add_option("--patch", gen_patch, "Square patch side in pixels");
  fs::path gen_masks;
  gen->add_option("--masks", gen_masks, "Directory of PNG masks to use instead of procedural ones");

  // train
  Common tr_c;
  fs::path tr_dataset, tr_out, tr_init, tr_resume;
  std::string tr_stage = "both";
  std::optional<int> tr_iters, tr_every;
  bool tr_scratch = false;
  auto* tr = app.add_subcommand("train", "Train the toy network");
  add_common(tr, tr_c);
  tr->add_option("--dataset", tr_dataset, "Dataset root (default: paths.dataset)");
  tr->add_option("--out", tr_out, "Output directory (default: paths.output)");
  tr->add_option("--stage", tr_stage, "1, 2, both or direct")->check(CLI::IsMember({"1", "2", "both", "direct"}));
  tr->add_option("--iters", tr_iters, "Iterations for each selected stage");
  tr->add_option("--init", tr_init, "Stage-1 checkpoint for stage 2 (default: paths.checkpoint)");
  tr->add_option("--resume", tr_resume, "Continue from a checkpoint");
  tr->add_option("--checkpoint-every", tr_every, "Save a checkpoint every N iterations");
  tr->add_flag("--from-scratch", tr_scratch, "Allow stage 2 without stage-1 weights");

  // refine
  Common rf_c;
  fs::path rf_depth, rf_rgb, rf_mask, rf_inst, rf_out, rf_dataset, rf_ckpt;
  std::optional<std::string> rf_backend;
  std::optional<int> rf_infer;
  bool rf_emit = false, rf_direct = false;
  auto* rf = app.add_subcommand("refine", "Refine depth with a mask or an instance map");
  add_common(rf, rf_c);
  rf->add_option("--depth", rf_depth, "Input depth (.pfm or 16-bit .png)");
  rf->add_option("--rgb", rf_rgb, "Input image (.png)");
  rf->add_option("--mask", rf_mask, "Mask (.png)");
  rf->add_option("--instances", rf_inst, "Instance-id map (.png)");
  rf->add_option("--dataset", rf_dataset, "Refine every sample's perturbed depth instead of one file");
  rf->add_option("--out", rf_out, "Output depth file, or directory with --dataset");
  rf->add_option("--backend", rf_backend, "toynet, propagation or identity")
      ->check(CLI::IsMember({"toynet", "propagation", "identity"}));
  rf->add_option("--checkpoint", rf_ckpt, "Toynet checkpoint (default: paths.checkpoint)");
  rf->add_option("--infer-size", rf_infer, "Run the backend at N x N and resize back (0 = native)");
  rf->add_flag("--emit-layers", rf_emit, "Also write both refined layers");
  rf->add_flag("--direct", rf_direct, "Single pass without layering");

  // evaluate
  Common ev_c;
  fs::path ev_pred, ev_gt, ev_inst, ev_initial, ev_dataset, ev_out, ev_ckpt;
  std::optional<std::string> ev_backend;
  bool ev_sweep = false;
  auto* ev = app.add_subcommand("evaluate", "Compute metrics and the optional mask-degradation sweep");
  add_common(ev, ev_c);
  ev->add_option("--pred", ev_pred, "Prediction file or directory");
  ev->add_option("--gt", ev_gt, "Ground-truth file or directory");
  ev->add_option("--instances", ev_inst, "Instance map file or directory");
  ev->add_option("--initial", ev_initial, "Initial estimates for R3 (file or directory)");
  ev->add_option("--dataset", ev_dataset, "Generated dataset providing gt, masks and initial estimates");
  ev->add_option("--out", ev_out, "Output directory for report.json and sweep.csv");
  ev->add_flag("--sweep", ev_sweep, "Run the mask-degradation sweep on --dataset");
  ev->add_option("--backend", ev_backend, "Backend for the sweep")->check(CLI::IsMember({"toynet", "propagation", "identity"}));
  ev->add_option("--checkpoint", ev_ckpt, "Toynet checkpoint for the sweep");

  // viz
  Common vz_c;
  fs::path vz_depth, vz_rgb, vz_initial, vz_gt, vz_out;
  double vz_range = 0.0;
  bool vz_ply = false;
  auto* vz = app.add_subcommand("viz", "Colour maps, improvement maps and point clouds");
  add_common(vz, vz_c);
  vz->add_option("--depth", vz_depth, "Depth to visualise (the refined estimate for improvement maps)")->required();
  vz->add_option("--rgb", vz_rgb, "Image for point colours");
  vz->add_option("--initial", vz_initial, "Initial estimate, enables the improvement map with --gt");
  vz->add_option("--gt", vz_gt, "Ground truth for the improvement map");
  vz->add_option("--out", vz_out, "Output directory")->required();
  vz->add_option("--range", vz_range, "Improvement map colour range (0 = largest magnitude)");
  vz->add_flag("--ply", vz_ply, "Write cloud.ply");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  if (!rev.empty()) rev.pop_back();
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*gen) {
      set_log_level(gen_c.log_level);
      RunConfig cfg = resolve(gen_c);
      if (gen_count) cfg.count = *gen_count;
      if (gen_patch) cfg.generator.patch = {*gen_patch, *gen_patch};
      if (!gen_masks.empty()) cfg.paths.masks = gen_masks;
      cfg.validate();
      const fs::path out = gen_out.empty() ? cfg.paths.output : gen_out;
      const auto s = generate(cfg, out);
      std::printf("generated %zu samples in %s: object %zu, sky %zu, human %zu, human_with_holes %zu\n", s.samples,
                  out.string().c_str(), s.object, s.sky, s.human, s.human_with_holes);
    } else if (*tr) {
      set_log_level(tr_c.log_level);
      RunConfig cfg = resolve(tr_c);
      if (tr_every) cfg.checkpoint_every = *tr_every;
      cfg.validate();
      TrainRequest req;
      req.stages = tr_stage == "1" ? StageSelection::stage1
                   : tr_stage == "2" ? StageSelection::stage2
                   : tr_stage == "direct" ? StageSelection::direct
                                          : StageSelection::both;
      req.iterations = tr_iters;
      req.init = tr_init;
      req.resume = tr_resume;
      req.from_scratch = tr_scratch;
      const fs::path out = tr_out.empty() ? cfg.paths.output : tr_out;
      train(cfg, req, tr_dataset.empty() ? cfg.paths.dataset : tr_dataset, out);
      std::printf("training finished, outputs in %s\n", out.string().c_str());
    } else if (*rf) {
      set_log_level(rf_c.log_level);
      RunConfig cfg = resolve(rf_c);
      if (rf_backend) cfg.refine.backend = parse_backend(*rf_backend);
      if (rf_infer) cfg.refine.infer_size = *rf_infer;
      if (rf_emit) cfg.refine.emit_layers = true;
      if (rf_direct) cfg.refine.layered = false;
      cfg.validate();
      if (cfg.refine.emit_layers && !cfg.refine.layered) throw InvalidArgument("--emit-layers needs layered refinement");
      require_output(rf_out, "--out");
      const Refiner refiner(cfg.refine, rf_ckpt.empty() ? cfg.paths.checkpoint : rf_ckpt);
      if (!rf_dataset.empty()) {
        require_input(rf_dataset, "dataset");
        const auto dirs = io::list_samples(rf_dataset);
        parallel_for(dirs.size(), cfg.workers, [&](std::size_t i) {
          const TrainingSample s = io::read_sample(dirs[i]);
          const std::string stem = dirs[i].filename().string();
          if (cfg.refine.emit_layers) {
            const LayeredResult r = refiner.layered(s.perturbed, s.rgb, s.mask);
            io::save_depth(r.merged, rf_out / (stem + ".pfm"));
            io::save_depth(r.layer1, rf_out / (stem + "_layer1.pfm"));
            io::save_depth(r.layer2, rf_out / (stem + "_layer2.pfm"));
          } else {
            io::save_depth(refiner.refine(s.perturbed, s.rgb, s.mask), rf_out / (stem + ".pfm"));
          }
        });
        std::printf("refined %zu samples into %s\n", dirs.size(), rf_out.string().c_str());
      } else {
        require_input(rf_depth, "--depth");
        require_input(rf_rgb, "--rgb");
        if (rf_mask.empty() == rf_inst.empty()) throw InvalidArgument("give exactly one of --mask and --instances");
        const auto in = io::ingest_depth(rf_depth);
        const RgbImage rgb = io::load_rgb(rf_rgb);
        require_same_size(in.depth.size(), rgb.size(), "refine inputs");
        if (!rf_mask.empty()) {
          require_input(rf_mask, "--mask");
          const Mask m = io::load_mask(rf_mask);
          require_same_size(in.depth.size(), m.size(), "refine inputs");
          if (cfg.refine.emit_layers) {
            const LayeredResult r = refiner.layered(in.depth, rgb, m);
            io::save_depth(r.merged, rf_out);
            const fs::path stem = rf_out.parent_path() / rf_out.stem();
            io::save_depth(r.layer1, stem.string() + "_layer1" + rf_out.extension().string());
            io::save_depth(r.layer2, stem.string() + "_layer2" + rf_out.extension().string());
          } else {
            io::save_depth(refiner.refine(in.depth, rgb, m), rf_out);
          }
        } else {
          if (cfg.refine.emit_layers) throw InvalidArgument("--emit-layers applies to --mask inputs");
          require_input(rf_inst, "--instances");
          const InstanceMap inst = io::load_instances(rf_inst);
          require_same_size(in.depth.size(), inst.size(), "refine inputs");
          io::save_depth(refiner.refine_instances(in.depth, rgb, inst, cfg.metrics.min_instance_fraction), rf_out);
        }
        std::printf("wrote %s\n", rf_out.string().c_str());
      }
    } else if (*ev) {
      set_log_level(ev_c.log_level);
      RunConfig cfg = resolve(ev_c);
      if (ev_sweep) cfg.sweep.enabled = true;
      if (ev_backend) cfg.refine.backend = parse_backend(*ev_backend);
      cfg.validate();
      const fs::path out = ev_out.empty() ? cfg.paths.output : ev_out;
      require_output(out, "--out");
      const fs::path dataset = ev_dataset.empty() ? cfg.paths.dataset : ev_dataset;
      io::EvaluationReport rep;
      rep.options = cfg.metrics;
      if (!ev_pred.empty()) {
        require_input(ev_pred, "--pred");
        const auto pred_files = list_files(ev_pred, {".pfm", ".png"});
        std::vector<fs::path> preds;
        for (const auto& p : pred_files)
          if (p.stem().string().find("_layer") == std::string::npos) preds.push_back(p);
        if (!ev_gt.empty()) {
          require_input(ev_gt, "--gt");
          require_input(ev_inst, "--instances");
          const auto gts = list_files(ev_gt, {".pfm", ".png"});
          const auto insts = list_files(ev_inst, {".png"});
          std::vector<fs::path> inits;
          if (!ev_initial.empty()) {
            require_input(ev_initial, "--initial");
            inits = list_files(ev_initial, {".pfm", ".png"});
          }
          if (gts.size() != preds.size() || insts.size() != preds.size() || (!inits.empty() && inits.size() != preds.size()))
            throw DataError("prediction, ground-truth, instance and initial sets differ in size");
          rep.images.resize(preds.size());
          parallel_for(preds.size(), cfg.workers, [&](std::size_t i) {
            const DepthMap pred = io::ingest_depth(preds[i]).depth;
            const DepthMap gt = io::ingest_depth(gts[i]).depth;
            const InstanceMap inst = io::load_instances(insts[i]);
            std::optional<DepthMap> init;
            if (!inits.empty()) init = io::ingest_depth(inits[i]).depth;
            rep.images[i].name = preds[i].stem().string();
            rep.images[i].metrics = evaluate(pred, gt, inst, init ? &*init : nullptr, cfg.metrics);
          });
          std::vector<MetricsReport> all;
          for (const auto& im : rep.images) all.push_back(im.metrics);
          rep.aggregate = aggregate(all);
        } else {
          require_input(dataset, "--dataset or --gt");
          std::vector<DepthMap> maps(preds.size());
          parallel_for(preds.size(), cfg.workers, [&](std::size_t i) { maps[i] = io::ingest_depth(preds[i]).depth; });
          rep = evaluate_dataset(cfg, dataset, maps);
        }
      } else if (!cfg.sweep.enabled) {
        throw InvalidArgument("evaluate needs --pred, or --sweep with --dataset");
      }
      if (cfg.sweep.enabled) {
        require_input(dataset, "--dataset");
        const Refiner refiner(cfg.refine, ev_ckpt.empty() ? cfg.paths.checkpoint : ev_ckpt);
        rep.sweep = degradation_sweep(cfg, refiner, dataset);
        write_file_atomic(out / "sweep.csv", io::sweep_to_csv(rep.sweep));
      }
      write_file_atomic(out / "report.json", io::report_to_json(rep));
      if (!rep.images.empty()) {
        const MetricsReport& a = rep.aggregate;
        std::printf("images %zu  rmse %.5f  whdr %.5f  mbe %.5f  r3 %s  eps_acc %.4f  eps_comp %.4f\n", rep.images.size(),
                    a.rmse, a.whdr, a.mbe, a.r3 ? std::to_string(*a.r3).c_str() : "n/a", a.eps_acc, a.eps_comp);
      }
      for (const auto& row : rep.sweep)
        std::printf("sweep %s k=%d  mbe %.5f  rmse %.5f\n", to_string(row.op), row.kernel, row.mbe, row.rmse);
    } else if (*vz) {
      set_log_level(vz_c.log_level);
      RunConfig cfg = resolve(vz_c);
      require_input(vz_depth, "--depth");
      const DepthMap d = io::ingest_depth(vz_depth).depth;
      write_depth_png_colored(d, vz_out / "depth.png");
      if (!vz_initial.empty() || !vz_gt.empty()) {
        require_input(vz_initial, "--initial");
        require_input(vz_gt, "--gt");
        const DepthMap gt = io::ingest_depth(vz_gt).depth;
        const DepthMap init = io::ingest_depth(vz_initial).depth;
        require_same_size(d.size(), gt.size(), "viz inputs");
        require_same_size(init.size(), gt.size(), "viz inputs");
        const Raster<double> map =
            improvement_map(align_scale_shift(init, gt).aligned, align_scale_shift(d, gt).aligned, gt);
        double range = vz_range;
        if (range <= 0.0)
          for (double v : map.vector()) range = std::max(range, std::abs(v));
        write_file_atomic(vz_out / "improvement.png",
                          io::encode_png_rgb8(map.width(), map.height(), viz::colorize_signed(map, range)));
      }
      if (vz_ply) {
        std::optional<RgbImage> rgb;
        if (!vz_rgb.empty()) {
          require_input(vz_rgb, "--rgb");
          rgb = io::load_rgb(vz_rgb);
          require_same_size(d.size(), rgb->size(), "viz inputs");
        }
        write_file_atomic(vz_out / "cloud.ply", viz::encode_ply(viz::back_project(d, rgb ? &*rgb : nullptr)));
      }
      std::printf("wrote visualisations to %s\n", vz_out.string().c_str());
    }
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    return exit_code(e.kind());
  } catch (const fs::filesystem_error& e) {
    spdlog::error("{}", e.what());
    return kExitData;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitData;
  }
  std::fflush(stdout);
  return kExitOk;
}

}  // namespace depthlayers::cli
