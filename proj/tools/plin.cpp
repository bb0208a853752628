// plin: LiDAR frame interpolation pipeline.
//
// Exit codes: 0 success, 1 usage error, 2 data/format error, 3 numerical
// failure. PLIN_THREADS caps the OpenMP worker count.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "plin/depth_io.hpp"
#include "plin/errors.hpp"
#include "plin/eval.hpp"
#include "plin/flow.hpp"
#include "plin/nn/checkpoint.hpp"
#include "plin/nn/train.hpp"
#include "plin/parallel.hpp"
#include "plin/pseudo_lidar.hpp"
#include "plin/synth.hpp"
#include "plin/warp.hpp"

namespace fs = std::filesystem;
using namespace plin;

namespace {

std::string read_text_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write " + path);
  f << text;
}

int run_flow_mid(const std::string& fwd_path, const std::string& bwd_path,
                 const std::string& out_prefix) {
  FlowField fwd = read_flo(fwd_path);
  FlowField bwd = read_flo(bwd_path);

  FlowConsistency fc = flow_consistency(fwd, bwd);
  std::printf("flow consistency |fwd+bwd|: mean %.6g px, max %.6g px over %d "
              "pixels\n",
              fc.mean, fc.max, fc.both_valid);

  MidpointFlows mid = midpoint_flows(fwd, bwd);
  write_flo(out_prefix + "_to_prev.flo", mid.to_prev);
  write_flo(out_prefix + "_to_next.flo", mid.to_next);
  std::printf("wrote %s_to_prev.flo and %s_to_next.flo\n", out_prefix.c_str(),
              out_prefix.c_str());
  return 0;
}

struct InterpolateArgs {
  std::string d_prev, d_next, fwd, bwd;
  std::string color, checkpoint, out, ply, intrinsics;
  double gamma = 0.5;
  bool gamma_set = false;
  bool classical = false;
};

int run_interpolate(const InterpolateArgs& a) {
  DepthMap d_prev = read_depth_png(a.d_prev);
  DepthMap d_next = read_depth_png(a.d_next);
  FlowField fwd = read_flo(a.fwd);
  FlowField bwd = read_flo(a.bwd);

  const bool network = !a.classical && !a.checkpoint.empty();
  if (!a.classical && a.checkpoint.empty())
    throw std::invalid_argument(
        "interpolate: pass --checkpoint for network mode or --classical");

  DepthMap result;
  if (network) {
    if (a.color.empty())
      throw std::invalid_argument(
          "interpolate: network mode needs --color for the refinement net");
    nn::LoadedCheckpoint ck = nn::load_checkpoint(a.checkpoint);
    const double gamma = a.gamma_set ? a.gamma : ck.gamma;
    ColorImage color = read_color_png(a.color);
    nn::TrainSample sample =
        nn::assemble_sample(d_prev, d_next, fwd, bwd, color, gamma);
    result = nn::predict(ck.net, sample).refined;
  } else {
    MidpointFlows mid = midpoint_flows(fwd, bwd);
    result = make_warped_pair(d_prev, d_next, mid.to_prev, mid.to_next,
                              a.gamma)
                 .fused;
  }

  write_depth_png(a.out, result);
  std::printf("wrote %s (%d valid pixels, %s mode)\n", a.out.c_str(),
              result.mask.count(), network ? "network" : "classical");

  if (!a.ply.empty()) {
    if (a.intrinsics.empty())
      throw std::invalid_argument("interpolate: --ply needs --intrinsics");
    CameraIntrinsics k = read_intrinsics(a.intrinsics);
    PointCloud cloud = back_project(result, k);
    write_ply_file(a.ply, cloud);
    std::printf("wrote %s (%zu points)\n", a.ply.c_str(), cloud.count());
  }
  return 0;
}

int run_convert(const std::string& depth_path, const std::string& intr_path,
                const std::string& out_path) {
  DepthMap d = read_depth_png(depth_path);
  CameraIntrinsics k = read_intrinsics(intr_path);
  PointCloud cloud = back_project(d, k);
  write_ply_file(out_path, cloud);
  std::printf("wrote %s (%zu points)\n", out_path.c_str(), cloud.count());
  return 0;
}

struct TrainArgs {
  std::string manifest, out, loss_csv;
  int epochs = 10;
  std::uint64_t seed = 0;
  double lr = 1e-5;
  double gamma = 0.5;
  double w1 = 0.1, w2 = 1.0;
  bool residual = false;
  bool no_flip = false;
  bool no_shuffle = false;
};

int run_train(const TrainArgs& a) {
  std::vector<SampleRecord> records = read_manifest(a.manifest);
  if (records.empty()) throw DataError("train: empty manifest");

  std::vector<nn::TrainSample> samples;
  samples.reserve(records.size());
  for (const SampleRecord& r : records)
    samples.push_back(nn::load_sample(r, a.gamma));

  nn::TrainConfig cfg;
  cfg.epochs = a.epochs;
  cfg.lr = a.lr;
  cfg.seed = a.seed;
  cfg.gamma = a.gamma;
  cfg.w1 = a.w1;
  cfg.w2 = a.w2;
  cfg.flip = !a.no_flip;
  cfg.shuffle = !a.no_shuffle;
  cfg.refine.residual = a.residual;

  nn::TrainResult r = nn::train_loop(samples, cfg);
  nn::save_checkpoint(a.out, r.net, a.gamma);

  std::string csv_path = a.loss_csv.empty() ? a.out + ".loss.csv" : a.loss_csv;
  write_text_file(csv_path, nn::trace_csv(r.trace));

  std::printf("trained %zu steps over %d epochs on %zu samples\n",
              r.trace.size(), a.epochs, samples.size());
  std::printf("first total %.9g, last total %.9g\n", r.trace.front().total,
              r.trace.back().total);
  std::printf("wrote %s and %s\n", a.out.c_str(), csv_path.c_str());
  return 0;
}

int run_eval(const std::string& pred_path, const std::string& gt_path,
             const std::string& out_csv) {
  std::ostringstream csv;
  csv << metrics_csv_header() << '\n';

  if (fs::is_directory(pred_path) != fs::is_directory(gt_path))
    throw std::invalid_argument(
        "eval: pred and gt must both be files or both directories");

  if (!fs::is_directory(pred_path)) {
    MetricReport r =
        evaluate(read_depth_png(pred_path), read_depth_png(gt_path));
    std::printf("%s\n", metrics_table("pred", r).c_str());
    csv << metrics_csv_line("pred", r) << '\n';
  } else {
    std::vector<std::string> names;
    for (const auto& entry : fs::directory_iterator(pred_path))
      if (entry.path().extension() == ".png")
        names.push_back(entry.path().filename().string());
    std::sort(names.begin(), names.end());
    if (names.empty()) throw DataError("eval: no .png files in " + pred_path);

    MetricReport mean;
    int count = 0;
    for (const std::string& name : names) {
      fs::path gp = fs::path(gt_path) / name;
      if (!fs::exists(gp))
        throw DataError("eval: missing ground truth " + gp.string());
      MetricReport r = evaluate(read_depth_png((fs::path(pred_path) / name).string()),
                                read_depth_png(gp.string()));
      std::printf("%s\n", metrics_table(name, r).c_str());
      csv << metrics_csv_line(name, r) << '\n';
      mean.rmse += r.rmse;
      mean.mae += r.mae;
      mean.irmse += r.irmse;
      mean.imae += r.imae;
      mean.valid_count += r.valid_count;
      ++count;
    }
    mean.rmse /= count;
    mean.mae /= count;
    mean.irmse /= count;
    mean.imae /= count;
    std::printf("%s\n", metrics_table("mean", mean).c_str());
    csv << metrics_csv_line("mean", mean) << '\n';
  }

  if (!out_csv.empty()) write_text_file(out_csv, csv.str());
  return 0;
}

int run_synth(const std::string& spec_path, const std::string& out_dir,
              bool seed_set, std::uint64_t seed) {
  SynthJob job = parse_scene_spec(read_text_file(spec_path));
  if (seed_set) job.seed = seed;
  std::vector<SceneSpec> scenes = scenes_for_job(job);
  std::string manifest = generate_dataset(scenes, out_dir);
  std::printf("wrote %zu samples, manifest %s\n", scenes.size(),
              manifest.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  apply_thread_cap();

  CLI::App app{"LiDAR frame interpolation pipeline"};
  app.require_subcommand(1);

  // flow-mid
  std::string fm_fwd, fm_bwd, fm_out;
  CLI::App* flow_mid = app.add_subcommand(
      "flow-mid", "Intermediate-frame flows from a bidirectional pair");
  flow_mid->add_option("fwd", fm_fwd, "forward cross-frame .flo")
      ->required()
      ->check(CLI::ExistingFile);
  flow_mid->add_option("bwd", fm_bwd, "backward cross-frame .flo")
      ->required()
      ->check(CLI::ExistingFile);
  flow_mid->add_option("--out", fm_out, "output prefix")->required();

  // interpolate
  InterpolateArgs ia;
  CLI::App* interp = app.add_subcommand(
      "interpolate", "Interpolate the middle depth frame");
  interp->add_option("d_prev", ia.d_prev, "previous sparse depth PNG")
      ->required()
      ->check(CLI::ExistingFile);
  interp->add_option("d_next", ia.d_next, "next sparse depth PNG")
      ->required()
      ->check(CLI::ExistingFile);
  interp->add_option("fwd", ia.fwd, "forward cross-frame .flo")
      ->required()
      ->check(CLI::ExistingFile);
  interp->add_option("bwd", ia.bwd, "backward cross-frame .flo")
      ->required()
      ->check(CLI::ExistingFile);
  interp->add_option("--color", ia.color, "middle-frame color PNG")
      ->check(CLI::ExistingFile);
  interp->add_option("--checkpoint", ia.checkpoint, "trained network")
      ->check(CLI::ExistingFile);
  interp->add_flag("--classical", ia.classical,
                   "fused warp only, no network");
  CLI::Option* gamma_opt =
      interp->add_option("--gamma", ia.gamma, "fusion weight in [0,1]")
          ->check(CLI::Range(0.0, 1.0));
  interp->add_option("--out", ia.out, "output depth PNG")->required();
  interp->add_option("--ply", ia.ply, "also write a point cloud here");
  interp->add_option("--intrinsics", ia.intrinsics, "intrinsics text file")
      ->check(CLI::ExistingFile);

  // convert
  std::string cv_depth, cv_intr, cv_out;
  CLI::App* convert = app.add_subcommand(
      "convert", "Back-project a depth PNG to a point cloud");
  convert->add_option("depth", cv_depth, "depth PNG")
      ->required()
      ->check(CLI::ExistingFile);
  convert->add_option("--intrinsics", cv_intr, "intrinsics text file")
      ->required()
      ->check(CLI::ExistingFile);
  convert->add_option("--out", cv_out, "output .ply")->required();

  // train
  TrainArgs ta;
  CLI::App* train = app.add_subcommand("train", "Train the cascade");
  train->add_option("manifest", ta.manifest, "dataset manifest")
      ->required()
      ->check(CLI::ExistingFile);
  train->add_option("--out", ta.out, "checkpoint path")->required();
  train->add_option("--loss-csv", ta.loss_csv,
                    "loss trace path (default <out>.loss.csv)");
  train->add_option("--epochs", ta.epochs, "training epochs")
      ->check(CLI::PositiveNumber);
  train->add_option("--seed", ta.seed, "RNG seed");
  train->add_option("--lr", ta.lr, "initial learning rate");
  train->add_option("--gamma", ta.gamma, "fusion weight in [0,1]")
      ->check(CLI::Range(0.0, 1.0));
  train->add_option("--w1", ta.w1, "coarse loss weight");
  train->add_option("--w2", ta.w2, "refined loss weight");
  train->add_flag("--residual", ta.residual,
                  "refinement predicts a correction, not absolute depth");
  train->add_flag("--no-flip", ta.no_flip, "disable flip augmentation");
  train->add_flag("--no-shuffle", ta.no_shuffle, "keep dataset order");

  // eval
  std::string ev_pred, ev_gt, ev_out;
  CLI::App* eval_cmd = app.add_subcommand(
      "eval", "Depth metrics against ground truth (file or directory)");
  eval_cmd->add_option("pred", ev_pred, "prediction PNG or directory")
      ->required()
      ->check(CLI::ExistingPath);
  eval_cmd->add_option("gt", ev_gt, "ground-truth PNG or directory")
      ->required()
      ->check(CLI::ExistingPath);
  eval_cmd->add_option("--out", ev_out, "write metrics CSV here");

  // synth
  std::string sy_spec, sy_out;
  std::uint64_t sy_seed = 0;
  CLI::App* synth = app.add_subcommand(
      "synth", "Generate a synthetic dataset from a scene spec");
  synth->add_option("spec", sy_spec, "scene spec text file")
      ->required()
      ->check(CLI::ExistingFile);
  synth->add_option("--out", sy_out, "output dataset directory")->required();
  CLI::Option* seed_opt =
      synth->add_option("--seed", sy_seed, "override the spec's seed");

  try {
    app.parse(argc, argv);

    if (flow_mid->parsed()) return run_flow_mid(fm_fwd, fm_bwd, fm_out);
    if (interp->parsed()) {
      ia.gamma_set = gamma_opt->count() > 0;
      return run_interpolate(ia);
    }
    if (convert->parsed()) return run_convert(cv_depth, cv_intr, cv_out);
    if (train->parsed()) return run_train(ta);
    if (eval_cmd->parsed()) return run_eval(ev_pred, ev_gt, ev_out);
    if (synth->parsed())
      return run_synth(sy_spec, sy_out, seed_opt->count() > 0, sy_seed);
    return 1;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const NumericError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  }
}
