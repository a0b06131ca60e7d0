#include "rsn/cli/cli.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <random>

#include "rsn/analysis/calibrate.hpp"
#include "rsn/analysis/symbolic.hpp"
#include "rsn/analysis/templates.hpp"
#include "rsn/arch/grad_cases.hpp"
#include "rsn/codec/hmp_io.hpp"
#include "rsn/data/coco.hpp"
#include "rsn/data/synth.hpp"
#include "rsn/metrics/average_precision.hpp"
#include "rsn/metrics/coco_io.hpp"
#include "rsn/train/trainer.hpp"

namespace rsn::cli {

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string shortest(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string percent(double ratio) { return (ratio >= 0 ? "+" : "") + fixed(100 * ratio, 1) + "%"; }

std::uint64_t default_seed() {
  const char* env = std::getenv("RSN_SEED");
  if (env == nullptr || *env == '\0') return 7;
  std::uint64_t v = 0;
  const char* end = env + std::char_traits<char>::length(env);
  const auto r = std::from_chars(env, end, v);
  if (r.ec != std::errc() || r.ptr != end) throw UsageError("RSN_SEED must be an unsigned integer, got '" + std::string(env) + "'");
  return v;
}

Extent parse_extent(const std::string& s) {
  const auto x = s.find('x');
  int h = 0, w = 0;
  const char* a = s.data();
  const char* e = s.data() + s.size();
  if (x == std::string::npos || std::from_chars(a, a + x, h).ptr != a + x ||
      std::from_chars(a + x + 1, e, w).ptr != e || h <= 0 || w <= 0) {
    throw UsageError("--input expects HEIGHTxWIDTH, e.g. 256x192; got '" + s + "'");
  }
  return {h, w};
}

NetworkConfig network_from(const std::string& name, const std::string& input) {
  NetworkConfig cfg = resolve_config(name);
  if (!input.empty()) {
    const Extent e = parse_extent(input);
    cfg.input_h = e.h;
    cfg.input_w = e.w;
    cfg.validate();
  }
  return cfg;
}

// ---------------------------------------------------------------- analyze

struct AnalyzeOptions {
  std::string block = "all";
  int branches = 4;
  std::string fusion = "rsn";
  bool kv = false;
};

int analyze(const AnalyzeOptions& o, std::ostream& out) {
  if (o.block == "all") {
    for (const BlockTemplate& t : emit_block_templates()) {
      const RFRow row = rf_row(t);
      if (o.kv) {
        for (std::size_t i = 0; i < row.cells.size(); ++i)
          out << t.name << ".y" << i + 1 << "=" << to_string(row.cells[i]) << "\n";
      } else {
        char name[16];
        std::snprintf(name, sizeof name, "%-8s", row.name.c_str());
        out << name << format_row(row) << "\n";
      }
    }
    return kExitOk;
  }
  const BlockTemplate t = block_template(parse_family(o.block), o.branches, parse_fusion(o.fusion));
  const RFRow row = rf_row(t);
  if (!o.kv) out << "block " << t.name << ", " << t.branches << " branches\n";
  for (std::size_t i = 0; i < row.cells.size(); ++i)
    out << "y" << i + 1 << (o.kv ? "=" : ": ") << to_string(row.cells[i]) << "\n";
  return kExitOk;
}

// ------------------------------------------------------------------ count

struct CountOptions {
  std::string config = "rsn18";
  std::string input;
  bool breakdown = false;
  bool kv = false;
};

int count(const CountOptions& o, std::ostream& out) {
  const NetworkConfig cfg = network_from(o.config, o.input);
  const CostReport rep = network_cost(cfg);
  const std::string extent = std::to_string(cfg.input_h) + "x" + std::to_string(cfg.input_w);
  const ReferenceCost* ref = cfg.input_h == 256 && cfg.input_w == 192 ? reference_cost(cfg.name) : nullptr;
  if (o.kv) {
    out << "config=" << cfg.name << "\ninput=" << extent << "\nparams=" << rep.params << "\nmacs=" << rep.flops
        << "\nmparams=" << fixed(rep.mparams(), 3) << "\ngflops=" << fixed(rep.gflops(), 3) << "\nflop_unit=mac\n";
  } else {
    out << "config  " << cfg.name << " at " << extent << "\n"
        << "params  " << rep.params << " (" << fixed(rep.mparams(), 2) << " M)\n"
        << "flops   " << rep.flops << " (" << fixed(rep.gflops(), 3)
        << " GFLOPs, one multiply-accumulate counted as one FLOP)\n";
  }
  if (ref != nullptr) {
    const double dp = rep.mparams() / ref->mparams - 1, df = rep.gflops() / ref->gflops - 1;
    const bool ok = std::abs(dp) <= ref->params_tolerance && std::abs(df) <= ref->flops_tolerance;
    if (o.kv) {
      out << "ref_mparams=" << shortest(ref->mparams) << "\nref_gflops=" << shortest(ref->gflops)
          << "\nparams_deviation=" << fixed(dp, 4) << "\nflops_deviation=" << fixed(df, 4)
          << "\nwithin_tolerance=" << (ok ? 1 : 0) << "\n";
    } else {
      out << "published " << shortest(ref->mparams) << " M / " << shortest(ref->gflops) << " GFLOPs: params "
          << percent(dp) << " (tolerance " << fixed(100 * ref->params_tolerance, 0) << "%), flops " << percent(df)
          << " (tolerance " << fixed(100 * ref->flops_tolerance, 0) << "%)" << (ok ? "" : " OUT OF TOLERANCE")
          << "\n";
    }
  }
  if (o.breakdown) {
    for (const CostEntry& e : rep.entries) {
      if (e.params == 0 && e.macs == 0) continue;
      if (o.kv) {
        out << "entry=" << e.name << " kind=" << sym_kind_name(e.kind) << " params=" << e.params << " macs=" << e.macs
            << "\n";
      } else {
        out << "  " << e.name << "  " << sym_kind_name(e.kind) << "  params " << e.params << "  macs " << e.macs
            << "\n";
      }
    }
  }
  return kExitOk;
}

// -------------------------------------------------------------- calibrate

struct CalibrateOptions {
  std::string config = "rsn18";
  double mparams = 0;
  double gflops = 0;
  std::string write;
  bool ablation = false;
  bool kv = false;
};

int calibrate(const CalibrateOptions& o, std::ostream& out) {
  NetworkConfig cfg = resolve_config(o.config);
  if (o.ablation) {
    for (const AblationVariant& v : ablation_suite(cfg)) {
      if (o.kv) {
        out << "variant=" << '"' << v.label << '"' << " multiplier=" << shortest(v.cfg.width_multiplier)
            << " macs=" << v.cost.flops << " params=" << v.cost.params << " flop_ratio=" << fixed(v.flop_ratio, 4)
            << "\n";
      } else {
        char line[160];
        std::snprintf(line, sizeof line, "%-16s m=%-8s %8.3f GFLOPs %8.2f M params  flops %s of rsn B=4",
                      v.label.c_str(), shortest(v.cfg.width_multiplier).c_str(), v.cost.gflops(), v.cost.mparams(),
                      percent(v.flop_ratio - 1).c_str());
        out << line << "\n";
      }
    }
    return kExitOk;
  }
  if (o.mparams > 0 && o.gflops > 0) throw UsageError("give either --params or --flops, not both");
  double mparams = o.mparams, gflops = o.gflops;
  if (mparams <= 0 && gflops <= 0) {
    const ReferenceCost* ref = reference_cost(cfg.name);
    if (ref == nullptr) throw UsageError("config '" + cfg.name + "' has no published size; pass --params or --flops");
    mparams = ref->mparams;
  }
  const CalibrationTarget what = mparams > 0 ? CalibrationTarget::params : CalibrationTarget::flops;
  const auto target = static_cast<std::int64_t>(std::llround(mparams > 0 ? mparams * 1e6 : gflops * 1e9));
  const CalibrationResult r = calibrate_width(cfg, what, target);
  cfg.width_multiplier = r.multiplier;
  if (o.kv) {
    out << "config=" << cfg.name << "\ntarget=" << (mparams > 0 ? "params" : "flops") << "\nmultiplier="
        << shortest(r.multiplier) << "\nparams=" << r.cost.params << "\nmacs=" << r.cost.flops << "\n";
  } else {
    out << cfg.name << ": width multiplier " << shortest(r.multiplier) << " gives " << fixed(r.cost.mparams(), 2)
        << " M params, " << fixed(r.cost.gflops(), 3) << " GFLOPs\n";
  }
  if (!o.write.empty()) {
    std::ofstream f(o.write);
    if (!f) throw std::runtime_error("cannot write " + o.write);
    write_config(f, cfg);
  }
  return kExitOk;
}

// ------------------------------------------------------------------ train

struct TrainOptions {
  std::string config = "rsn-tiny";
  std::string data = "synth";
  std::string image_root;
  int images = 32;
  int steps = 300;
  int epochs = 1;
  int batch = 8;
  std::uint64_t seed = 7;
  double lr = 5e-4;
  double final_lr = 0;
  double weight_decay = 1e-5;
  bool no_augment = false;
  int probe_every = 0;
  std::string checkpoint;
  std::string resume;
  std::string log;
  std::string loss = "mse";
};

std::vector<TrainExample> load_examples(const std::string& data, const std::string& image_root, int synth_images,
                                        std::uint64_t seed) {
  std::vector<TrainExample> ex;
  if (data == "synth") {
    SynthDataset d = synth_generate(seed, synth_images);
    for (std::size_t i = 0; i < d.images.size(); ++i)
      ex.push_back({std::move(d.images[i]), d.annotations.annotations[i].pose});
    return ex;
  }
  const DatasetIndex idx = load_coco_annotations(data, image_root);
  for (const DatasetEntry& e : idx.entries) {
    Image img = load_pnm(e.image_path);
    if (img.channels == 1) {
      Image rgb(3, img.height, img.width);
      for (int c = 0; c < 3; ++c) std::copy(img.data.begin(), img.data.end(), rgb.data.begin() + c * img.data.size());
      img = std::move(rgb);
    }
    ex.push_back({std::move(img), e.annotation.pose});
  }
  if (ex.empty()) throw std::runtime_error(data + ": no usable annotations");
  return ex;
}

int train(const TrainOptions& o, std::ostream& out) {
  const NetworkConfig net = resolve_config(o.config);
  if (o.steps < 1 || o.epochs < 1 || o.steps % o.epochs != 0) {
    throw UsageError("--steps must be a positive multiple of --epochs");
  }
  TrainConfig cfg;
  cfg.epochs = o.epochs;
  cfg.iterations_per_epoch = o.steps / o.epochs;
  cfg.base_lr = o.lr;
  cfg.final_lr = o.final_lr;
  cfg.weight_decay = o.weight_decay;
  cfg.batch_size = o.batch;
  cfg.seed = o.seed;
  cfg.loss = parse_loss(o.loss);
  cfg.augment.enabled = !o.no_augment;
  cfg.probe_every = o.probe_every;
  cfg.validate();

  Trainer trainer(net, cfg, load_examples(o.data, o.image_root, o.images, o.seed));
  if (!o.resume.empty()) trainer.restore(Checkpoint::load(o.resume));

  std::ofstream log_file;
  if (!o.log.empty()) {
    log_file.open(o.log);
    if (!log_file) throw std::runtime_error("cannot write " + o.log);
  }
  std::ostream& log = o.log.empty() ? out : log_file;
  std::vector<double> losses;
  ProbeRecord last_probe;
  const auto t0 = std::chrono::steady_clock::now();
  trainer.run(
      [&](const StepRecord& r) {
        losses.push_back(r.loss);
        log << to_kv(r) << "\n";
      },
      [&](const ProbeRecord& p) {
        last_probe = p;
        log << to_kv(p) << "\n";
      });
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!o.checkpoint.empty()) trainer.checkpoint().save(o.checkpoint);
  if (!losses.empty()) {
    out << "summary steps=" << trainer.steps_done() << " first_loss=" << shortest(losses.front())
        << " last_loss=" << shortest(losses.back()) << " pck=" << shortest(last_probe.pck)
        << " masked_batches=" << trainer.masked_batches() << " seconds=" << fixed(seconds, 1) << "\n";
  }
  return kExitOk;
}

// ----------------------------------------------------------------- decode

struct DecodeOptions {
  std::string input;
  std::string flipped;
  std::string pairs = "coco";
  std::string offset = "unit";
  bool no_blur = false;
  double quarter = 0.25;
  bool kv = false;
};

int decode_cmd(const DecodeOptions& o, std::ostream& out) {
  const HeatmapStack h = load_hmp(o.input);
  std::optional<HeatmapStack> flipped;
  if (!o.flipped.empty()) flipped = mirror(load_hmp(o.flipped));
  DecodeConfig dc;
  dc.blur = !o.no_blur;
  dc.offset = o.offset == "none" ? 0.0 : o.quarter;
  dc.offset_mode = o.offset == "full" ? OffsetMode::full : OffsetMode::unit;
  const KeypointSet k = decode(h, flipped, resolve_flip_pairs(o.pairs), 1.0, dc);
  for (std::size_t j = 0; j < k.joints.size(); ++j) {
    const Joint& p = k.joints[j];
    if (o.kv) {
      out << "joint=" << j << " x=" << shortest(p.x) << " y=" << shortest(p.y) << " score=" << shortest(p.score)
          << "\n";
    } else {
      out << j << "  " << fixed(p.x, 2) << "  " << fixed(p.y, 2) << "  " << fixed(p.score, 4) << "\n";
    }
  }
  out << (o.kv ? "pose_score=" : "pose score ") << shortest(k.score) << "\n";
  return kExitOk;
}

// ------------------------------------------------------------------- eval

struct EvalOptions {
  std::string gt;
  std::string results;
  std::string checkpoint;
  std::string config = "rsn-tiny";
  std::string image_root;
  std::string write_results;
  std::string sigmas;
  double pck_threshold = 0.1;
  bool kv = false;
};

int eval(const EvalOptions& o, std::ostream& out) {
  if (o.results.empty() == o.checkpoint.empty()) throw UsageError("eval needs exactly one of --results or --checkpoint");
  const CocoDataset gt = read_coco_annotations(std::filesystem::path(o.gt));
  std::vector<Detection> dets;
  std::optional<PckReport> pck_report;
  if (!o.results.empty()) {
    dets = read_coco_results(std::filesystem::path(o.results));
  } else {
    const NetworkConfig net = resolve_config(o.config);
    Module<float> model = build_network<float>(net, 0);
    load_weights(model.graph, Checkpoint::load(o.checkpoint));
    const DatasetIndex idx = index_dataset(gt, o.image_root.empty() ? std::filesystem::path(o.gt).parent_path()
                                                                    : std::filesystem::path(o.image_root));
    std::vector<TrainExample> ex;
    for (const DatasetEntry& e : idx.entries) ex.push_back({load_pnm(e.image_path), e.annotation.pose});
    const std::vector<KeypointSet> pred =
        predict_poses(model.graph, model.outputs.back(), net, ex, resolve_flip_pairs("coco"));
    for (std::size_t i = 0; i < pred.size(); ++i)
      dets.push_back({idx.entries[i].annotation.id, idx.entries[i].image.id, pred[i], pred[i].score});
    pck_report = box_pck(pred, ex, o.pck_threshold);
    if (!o.write_results.empty()) {
      std::ofstream f(o.write_results);
      if (!f) throw std::runtime_error("cannot write " + o.write_results);
      write_coco_results(f, dets);
    }
  }
  const GroundTruthSet gts = ground_truths(gt);
  std::vector<double> sigmas;
  if (!o.sigmas.empty()) {
    sigmas = load_sigmas(o.sigmas);
  } else {
    sigmas.assign(coco_sigmas().begin(), coco_sigmas().end());
  }
  const std::vector<double> thresholds = coco_thresholds();
  const APReport ap = average_precision(dets, gts.gts, sigmas, thresholds);
  if (o.kv) {
    out << "ap=" << fixed(ap.mean_ap, 4) << "\nap50=" << fixed(ap.at(0.5), 4) << "\nap75=" << fixed(ap.at(0.75), 4)
        << "\ndetections=" << dets.size() << "\nground_truths=" << gts.gts.size()
        << "\nskipped_crowd=" << gts.skipped_crowd << "\nskipped_unlabeled=" << gts.skipped_unlabeled << "\n";
    if (pck_report) out << "pck=" << fixed(pck_report->overall, 4) << "\npck_threshold=" << shortest(o.pck_threshold) << "\n";
  } else {
    out << "AP " << fixed(ap.mean_ap, 4) << "  AP50 " << fixed(ap.at(0.5), 4) << "  AP75 " << fixed(ap.at(0.75), 4)
        << "  (" << dets.size() << " detections, " << gts.gts.size() << " ground truths; skipped "
        << gts.skipped_crowd << " crowd, " << gts.skipped_unlabeled << " unlabeled)\n";
    if (pck_report) {
      out << "PCK@" << shortest(o.pck_threshold) << " " << fixed(pck_report->overall, 4) << " (box-normalized)\n";
    }
  }
  return kExitOk;
}

// -------------------------------------------------------------- gradcheck

struct GradCheckCliOptions {
  bool all = false;
  std::string primitive;
  bool blocks = false;
  int cases = 20;
  double tol = 1e-4;
  std::uint64_t seed = 7;
  bool kv = false;
};

int gradcheck(const GradCheckCliOptions& o, std::ostream& out) {
  if (!o.all && o.primitive.empty() && !o.blocks) throw UsageError("gradcheck needs --all, --blocks or --primitive");
  std::vector<GradSuiteLine> lines;
  if (!o.primitive.empty()) {
    std::mt19937_64 rng(o.seed);
    GradSuiteLine line{o.primitive};
    for (int i = 0; i < o.cases; ++i) {
      const GradCheckReport r = run_case(make_primitive_case(o.primitive, rng), o.tol);
      ++line.cases;
      if (!r.passed) ++line.failures;
      line.worst = std::max(line.worst, r.max_rel_error);
      for (const GradCheckEntry& e : r.entries) line.skipped += e.skipped;
    }
    lines.push_back(line);
  }
  if (o.all) {
    const auto p = primitive_grad_suite(o.cases, o.seed, o.tol);
    lines.insert(lines.end(), p.begin(), p.end());
  }
  if (o.all || o.blocks) {
    const auto b = block_grad_suite(o.cases, o.seed, o.tol);
    lines.insert(lines.end(), b.begin(), b.end());
  }
  int failures = 0;
  for (const GradSuiteLine& l : lines) {
    failures += l.failures;
    if (o.kv) {
      out << "check=" << '"' << l.label << '"' << " cases=" << l.cases << " failures=" << l.failures
          << " worst=" << shortest(l.worst) << " skipped=" << l.skipped << "\n";
    } else {
      char buf[160];
      std::snprintf(buf, sizeof buf, "%s  %-28s %3d cases  worst rel. error %.2e  (%zu kink skips)",
                    l.failures == 0 ? "PASS" : "FAIL", l.label.c_str(), l.cases, l.worst, l.skipped);
      out << buf << "\n";
    }
  }
  out << (o.kv ? "failures=" : "failures: ") << failures << "\n";
  return failures == 0 ? kExitOk : kExitDomainError;
}

// ------------------------------------------------------------------ synth

struct SynthOptions {
  std::string out;
  int count = 32;
  std::uint64_t seed = 7;
  int width = 160;
  int height = 160;
  double noise = 0.25;
};

int synth(const SynthOptions& o, std::ostream& out) {
  const SynthDataset d = synth_generate(o.seed, o.count, SynthConfig{o.width, o.height, o.noise});
  write_dataset(o.out, d);
  out << "wrote " << o.count << " images and " << (std::filesystem::path(o.out) / "annotations.json").string()
      << "\n";
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Residual steps network toolkit: architecture analysis, training and evaluation", "rsn"};
  app.require_subcommand(1, 1);

  std::uint64_t seed = 7;
  try {
    seed = default_seed();
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  AnalyzeOptions ao;
  auto* analyze_cmd = app.add_subcommand("analyze", "Receptive fields of a block's split outputs");
  analyze_cmd->add_option("--block", ao.block, "resnet, res2net, osnet, rsn or all")
      ->check(CLI::IsMember({"all", "resnet", "res2net", "osnet", "rsn"}))
      ->capture_default_str();
  analyze_cmd->add_option("--branches", ao.branches, "Branch count of the rsn block")
      ->check(CLI::Range(1, 16))
      ->capture_default_str();
  analyze_cmd->add_option("--fusion", ao.fusion, "rsn, baseline1 or baseline2")
      ->check(CLI::IsMember({"rsn", "baseline1", "baseline2"}))
      ->capture_default_str();
  analyze_cmd->add_flag("--kv", ao.kv, "Machine-readable key=value output");

  CountOptions co;
  auto* count_cmd = app.add_subcommand("count", "Parameters and FLOPs (multiply-accumulates) of a network");
  count_cmd->add_option("--config", co.config, "Preset name or config file")->capture_default_str();
  count_cmd->add_option("--input", co.input, "Input size HEIGHTxWIDTH (default: the config's)");
  count_cmd->add_flag("--breakdown", co.breakdown, "List every counted layer");
  count_cmd->add_flag("--kv", co.kv, "Machine-readable key=value output");

  CalibrateOptions cao;
  auto* cal_cmd = app.add_subcommand("calibrate", "Fit the width multiplier to a size target");
  cal_cmd->add_option("--config", cao.config, "Preset name or config file")->capture_default_str();
  cal_cmd->add_option("--params", cao.mparams, "Target parameter count in millions")->check(CLI::PositiveNumber);
  cal_cmd->add_option("--flops", cao.gflops, "Target GFLOPs")->check(CLI::PositiveNumber);
  cal_cmd->add_option("--write", cao.write, "Write the calibrated config here");
  cal_cmd->add_flag("--ablation", cao.ablation, "FLOP-matched fusion and branch-count variants of the config");
  cal_cmd->add_flag("--kv", cao.kv, "Machine-readable key=value output");

  TrainOptions to;
  to.seed = seed;
  auto* train_cmd = app.add_subcommand("train", "Train a network; logs key=value records per step");
  train_cmd->add_option("--config", to.config, "Preset name or config file")->capture_default_str();
  train_cmd->add_option("--data", to.data, "'synth' or a COCO keypoint annotation file")->capture_default_str();
  train_cmd->add_option("--image-root", to.image_root, "Image directory (default: next to the annotations)");
  train_cmd->add_option("--images", to.images, "Synthetic image count")->check(CLI::PositiveNumber)->capture_default_str();
  train_cmd->add_option("--steps", to.steps, "Total optimizer steps")->capture_default_str();
  train_cmd->add_option("--epochs", to.epochs, "Epochs the steps are divided into")->capture_default_str();
  train_cmd->add_option("--batch", to.batch, "Batch size")->check(CLI::Range(2, 4096))->capture_default_str();
  train_cmd->add_option("--seed", to.seed, "Seed (default: RSN_SEED or 7)");
  train_cmd->add_option("--lr", to.lr, "Initial learning rate")->capture_default_str();
  train_cmd->add_option("--final-lr", to.final_lr, "Learning rate reached at the last step")->capture_default_str();
  train_cmd->add_option("--weight-decay", to.weight_decay, "L2 weight decay")->capture_default_str();
  train_cmd->add_option("--loss", to.loss, "Loss kind")->check(CLI::IsMember({"mse"}))->capture_default_str();
  train_cmd->add_flag("--no-augment", to.no_augment, "Disable rotation, scale and flip augmentation");
  train_cmd->add_option("--probe-every", to.probe_every, "Steps between PCK probes (default: once per epoch)");
  train_cmd->add_option("--checkpoint", to.checkpoint, "Write the final state here");
  train_cmd->add_option("--resume", to.resume, "Continue from this checkpoint");
  train_cmd->add_option("--log", to.log, "Write the step log here instead of stdout");

  DecodeOptions dco;
  auto* decode_cmd_ = app.add_subcommand("decode", "Decode joints from a heatmap file");
  decode_cmd_->add_option("--input", dco.input, "Heatmap file")->required();
  decode_cmd_->add_option("--flipped", dco.flipped, "Heatmaps predicted on the mirrored input (flip test)");
  decode_cmd_->add_option("--pairs", dco.pairs, "coco, mpii, none or a flip-pair file")->capture_default_str();
  decode_cmd_->add_option("--offset", dco.offset, "unit, full or none")
      ->check(CLI::IsMember({"unit", "full", "none"}))
      ->capture_default_str();
  decode_cmd_->add_option("--shift", dco.quarter, "Sub-pixel shift toward the second peak")->capture_default_str();
  decode_cmd_->add_flag("--no-blur", dco.no_blur, "Skip Gaussian smoothing before peak search");
  decode_cmd_->add_flag("--kv", dco.kv, "Machine-readable key=value output");

  EvalOptions eo;
  auto* eval_cmd = app.add_subcommand("eval", "OKS average precision (and PCK when running a checkpoint)");
  eval_cmd->add_option("--gt", eo.gt, "COCO keypoint annotation file")->required();
  eval_cmd->add_option("--results", eo.results, "COCO keypoint results file");
  eval_cmd->add_option("--checkpoint", eo.checkpoint, "Run this trained network over the annotated images");
  eval_cmd->add_option("--config", eo.config, "Network of the checkpoint")->capture_default_str();
  eval_cmd->add_option("--image-root", eo.image_root, "Image directory (default: next to the annotations)");
  eval_cmd->add_option("--write-results", eo.write_results, "Save the checkpoint's predictions as COCO results");
  eval_cmd->add_option("--sigmas", eo.sigmas, "Per-joint OKS constants (default: COCO)");
  eval_cmd->add_option("--pck", eo.pck_threshold, "PCK threshold, relative to the box's longer side")
      ->capture_default_str();
  eval_cmd->add_flag("--kv", eo.kv, "Machine-readable key=value output");

  GradCheckCliOptions go;
  go.seed = seed;
  auto* grad_cmd = app.add_subcommand("gradcheck", "Finite-difference gradient verification");
  grad_cmd->add_flag("--all", go.all, "Every primitive plus every block variant");
  grad_cmd->add_flag("--blocks", go.blocks, "Residual steps blocks (B = 2..6, all fusion modes) and PRM");
  grad_cmd->add_option("--primitive", go.primitive, "A single primitive")
      ->check(CLI::IsMember(differentiable_primitives()));
  grad_cmd->add_option("--cases", go.cases, "Random shapes per check")->check(CLI::PositiveNumber)->capture_default_str();
  grad_cmd->add_option("--tol", go.tol, "Relative error tolerance")->capture_default_str();
  grad_cmd->add_option("--seed", go.seed, "Seed (default: RSN_SEED or 7)");
  grad_cmd->add_flag("--kv", go.kv, "Machine-readable key=value output");

  SynthOptions so;
  so.seed = seed;
  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic stick-figure dataset");
  synth_cmd->add_option("--out", so.out, "Output directory")->required();
  synth_cmd->add_option("--count", so.count, "Number of images")->check(CLI::PositiveNumber)->capture_default_str();
  synth_cmd->add_option("--seed", so.seed, "Seed (default: RSN_SEED or 7)");
  synth_cmd->add_option("--width", so.width, "Image width")->check(CLI::Range(16, 4096))->capture_default_str();
  synth_cmd->add_option("--height", so.height, "Image height")->check(CLI::Range(16, 4096))->capture_default_str();
  synth_cmd->add_option("--noise", so.noise, "Background noise amplitude")->check(CLI::Range(0.0, 1.0))->capture_default_str();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*analyze_cmd) return analyze(ao, out);
    if (*count_cmd) return count(co, out);
    if (*cal_cmd) return calibrate(cao, out);
    if (*train_cmd) return train(to, out);
    if (*decode_cmd_) return decode_cmd(dco, out);
    if (*eval_cmd) return eval(eo, out);
    if (*grad_cmd) return gradcheck(go, out);
    if (*synth_cmd) return synth(so, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\nRun with --help for usage.\n";
    return kExitUsage;
  } catch (const NonFiniteLossError& e) {
    err << "error: training aborted: " << e.what() << "\n";
    return kExitDomainError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitDomainError;
  }
  return kExitUsage;
}

}  // namespace rsn::cli
