// Command-line front end for training, prediction, and evaluation.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dhp/config.hpp"
#include "dhp/error.hpp"
#include "dhp/evaluate.hpp"
#include "dhp/gradcheck.hpp"
#include "dhp/offline.hpp"
#include "dhp/online.hpp"
#include "dhp/pandata_io.hpp"
#include "dhp/synth.hpp"
#include "dhp/train.hpp"

namespace fs = std::filesystem;
using namespace dhp;

namespace {

RunConfig config_or_default(const std::string& path) {
  if (path.empty()) {
    RunConfig c;
    c.propagate();
    return c;
  }
  return load_run_config(path);
}

std::vector<TrainingVideo> training_set(const std::string& data_dir, const TrainConfig& cfg) {
  std::vector<TrainingVideo> out;
  for (const VideoData& v : read_dataset(data_dir)) out.push_back(make_training_video(v, cfg.frame_stride, cfg.max_steps));
  return out;
}

// Map sequences in `dir`: either one sequence or one per subdirectory.
std::vector<MapSequence> read_map_sequences(const fs::path& dir) {
  if (fs::exists(dir / "maps.json")) return {read_map_sequence(dir)};
  std::vector<fs::path> subdirs;
  if (fs::is_directory(dir))
    for (const auto& e : fs::directory_iterator(dir))
      if (e.is_directory() && fs::exists(e.path() / "maps.json")) subdirs.push_back(e.path());
  std::sort(subdirs.begin(), subdirs.end());
  if (subdirs.empty()) throw InputError(dir.string() + ": no map sequences found");
  std::vector<MapSequence> out;
  for (const auto& d : subdirs) out.push_back(read_map_sequence(d));
  return out;
}

std::map<std::string, std::vector<HMTrace>> traces_by_video(const std::vector<HMTrace>& traces) {
  std::map<std::string, std::vector<HMTrace>> out;
  for (const HMTrace& t : traces) out[t.video_id].push_back(t);
  return out;
}

void write_jsonl(std::ofstream& out, const nlohmann::json& j) {
  out << j.dump() << '\n';
  out.flush();
}

int run_train(const std::string& data, const std::string& config, const std::string& out, int workers,
              std::optional<std::uint64_t> seed, const std::string& log_path, const std::string& init_ckpt,
              bool supervised) {
  RunConfig cfg = config_or_default(config);
  if (workers > 0) cfg.train.workers = workers;
  if (seed) cfg.train.seed = *seed;
  cfg.train.validate();
  const auto videos = training_set(data, cfg.train);
  std::ofstream log(log_path.empty() ? out + ".log.jsonl" : log_path);
  if (!log) throw InputError("cannot write training log");
  TrainHooks hooks;
  hooks.on_episode = [&](const EpisodeLog& e) { write_jsonl(log, e.to_json()); };
  hooks.on_checkpoint = [&](const net::Params<float>& p, std::uint64_t update) {
    net::save_checkpoint(p, out + ".update" + std::to_string(update));
  };
  std::optional<net::Params<float>> init;
  if (!init_ckpt.empty()) init = net::load_checkpoint(init_ckpt);
  const TrainResult r = supervised ? train_supervised(videos, cfg.train, hooks, init ? &*init : nullptr)
                                   : train_offline(videos, cfg.train, hooks, init ? &*init : nullptr);
  net::save_checkpoint(r.params, out);
  std::printf("%s: %zu episodes, %llu updates\n", out.c_str(), r.log.size(), (unsigned long long)r.updates);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Head-movement prediction for panoramic video"};
  app.require_subcommand(1);
  std::string config;
  std::optional<std::uint64_t> seed;

  // gen-synth
  auto* gen = app.add_subcommand("gen-synth", "Generate a synthetic blob world");
  std::string spec_path, out_dir;
  int heldout = 0;
  std::uint64_t gen_seed = 1;
  gen->add_option("--spec", spec_path, "Synthetic world spec (JSON)")->required();
  gen->add_option("--out", out_dir, "Output data directory")->required();
  gen->add_option("--seed", gen_seed, "Seed");
  gen->add_option("--heldout", heldout, "Last K subjects per video go to heldout.csv instead of traces.csv");

  // derive-scanpaths
  auto* derive = app.add_subcommand("derive-scanpaths", "Per-step direction and magnitude of traces");
  std::string traces_path, out_path;
  derive->add_option("--traces", traces_path)->required();
  derive->add_option("--out", out_path)->required();

  // train-offline / train-supervised
  std::string data_dir, log_path, init_ckpt;
  int workers = 0;
  auto* train = app.add_subcommand("train-offline", "Reward-driven multi-worker training");
  auto* sup = app.add_subcommand("train-supervised", "Supervised baseline training");
  for (auto* sc : {train, sup}) {
    sc->add_option("--data", data_dir, "Data directory")->required();
    sc->add_option("--config", config, "Run config (JSON)");
    sc->add_option("--out", out_path, "Checkpoint path")->required();
    sc->add_option("--workers", workers, "Worker threads (overrides config)");
    sc->add_option("--seed", seed, "Seed (overrides config)");
    sc->add_option("--log", log_path, "JSON-lines training log (default <out>.log.jsonl)");
    sc->add_option("--init", init_ckpt, "Start from this checkpoint");
  }

  // predict-offline
  auto* pred = app.add_subcommand("predict-offline", "HM maps from N workflows");
  std::string video_dir, ckpt;
  std::optional<int> n_workflows;
  pred->add_option("--video", video_dir, "Video directory or data directory")->required();
  pred->add_option("--ckpt", ckpt)->required();
  pred->add_option("--n", n_workflows, "Workflows (overrides config)");
  pred->add_option("--seed", seed, "Seed (overrides config)");
  pred->add_option("--config", config);
  pred->add_option("--out", out_dir)->required();

  // gt-maps
  auto* gtmaps = app.add_subcommand("gt-maps", "HM maps of recorded traces");
  gtmaps->add_option("--traces", traces_path)->required();
  gtmaps->add_option("--config", config);
  gtmaps->add_option("--out", out_dir)->required();

  // fit-fcb
  auto* fit = app.add_subcommand("fit-fcb", "Fit the front-centre bias prior");
  std::string pred_dir, gt_dir;
  fit->add_option("--pred", pred_dir)->required();
  fit->add_option("--gt", gt_dir)->required();
  fit->add_option("--config", config);
  fit->add_option("--out", out_path)->required();

  // predict-online
  auto* online = app.add_subcommand("predict-online", "Online prediction for each viewer of a trace file");
  std::string trace_path, subject, online_log;
  bool no_offline_init = false, no_gt_history = false;
  online->add_option("--video", video_dir)->required();
  online->add_option("--trace", trace_path)->required();
  online->add_option("--ckpt", ckpt);
  online->add_flag("--no-offline-init", no_offline_init);
  online->add_flag("--no-gt-history", no_gt_history);
  online->add_option("--subject", subject, "Only this subject");
  online->add_option("--config", config);
  online->add_option("--seed", seed);
  online->add_option("--log", online_log, "Per-frame instrumentation log (JSON lines)");
  online->add_option("--out", out_path)->required();

  // predict-baseline
  auto* base = app.add_subcommand("predict-baseline", "Baseline online predictions");
  int which = 1;
  base->add_option("--trace", trace_path)->required();
  base->add_option("--kind", which, "1: repeat last step, 2: random step")->check(CLI::IsMember({1, 2}));
  base->add_option("--config", config);
  base->add_option("--seed", seed);
  base->add_option("--out", out_path)->required();

  // evaluate / evaluate-mo
  auto* eval = app.add_subcommand("evaluate", "CC, NSS, shuffled AUC of map sequences");
  std::string maps_dir, fcb_path;
  eval->add_option("--maps", maps_dir)->required();
  eval->add_option("--traces", traces_path)->required();
  eval->add_option("--fcb", fcb_path);
  eval->add_option("--config", config);
  eval->add_option("--out", out_path)->required();
  auto* evalmo = app.add_subcommand("evaluate-mo", "Mean overlap of online predictions");
  evalmo->add_option("--pred", pred_dir)->required();
  evalmo->add_option("--trace", trace_path)->required();
  evalmo->add_option("--config", config);

  // gradcheck
  auto* gc = app.add_subcommand("gradcheck", "Finite-difference check of the network gradients");
  std::uint64_t gc_seed = 1;
  gc->add_option("--seed", gc_seed);

  // render
  auto* render = app.add_subcommand("render", "Write a map as a PGM image");
  std::string map_path;
  render->add_option("--map", map_path)->required();
  render->add_option("--out", out_path)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*gen) {
      const SynthSpec spec = synth_spec_from_json(read_json_file(spec_path));
      if (heldout < 0 || heldout >= spec.subjects) throw InputError("--heldout must be in [0, subjects)");
      for (const SynthVideo& v : gen_synthetic(spec, gen_seed)) {
        VideoData d = to_video_data(v);
        std::vector<HMTrace> held(d.traces.end() - heldout, d.traces.end());
        d.traces.resize(d.traces.size() - std::size_t(heldout));
        write_video_data(fs::path(out_dir) / v.video_id, d);
        if (heldout > 0) write_traces_csv(fs::path(out_dir) / v.video_id / "heldout.csv", held);
      }
      return 0;
    }
    if (*derive) {
      write_scanpaths_csv(out_path, read_traces_csv(traces_path));
      return 0;
    }
    if (*train || *sup)
      return run_train(data_dir, config, out_path, workers, seed, log_path, init_ckpt, bool(*sup));
    if (*pred) {
      RunConfig cfg = config_or_default(config);
      if (n_workflows) cfg.offline.workflows = *n_workflows;
      if (seed) cfg.offline.seed = *seed;
      const net::Params<float> params = net::load_checkpoint(ckpt);
      const auto videos = read_dataset(video_dir);
      for (const VideoData& v : videos) {
        const fs::path dir = videos.size() == 1 && fs::exists(fs::path(video_dir) / "video.json")
                                 ? fs::path(out_dir)
                                 : fs::path(out_dir) / v.video.video_id;
        write_map_sequence(dir, {v.video.video_id, predict_hm_maps(v.video.frames, params, cfg.offline)});
      }
      return 0;
    }
    if (*gtmaps) {
      const RunConfig cfg = config_or_default(config);
      const auto by_video = traces_by_video(read_traces_csv(traces_path));
      for (const auto& [vid, traces] : by_video) {
        const fs::path dir = by_video.size() == 1 ? fs::path(out_dir) : fs::path(out_dir) / vid;
        write_map_sequence(dir, {vid, ground_truth_maps(traces, cfg.map_raster, cfg.sigma_smooth_deg)});
      }
      return 0;
    }
    if (*fit) {
      const RunConfig cfg = config_or_default(config);
      const auto preds = read_map_sequences(pred_dir);
      const auto gts = read_map_sequences(gt_dir);
      std::map<std::string, const MapSequence*> gt_by_id;
      for (const auto& g : gts) gt_by_id[g.video_id] = &g;
      std::vector<HMMap> p_all, g_all;
      for (const auto& p : preds) {
        const auto it = gt_by_id.find(p.video_id);
        if (it == gt_by_id.end()) throw InputError("fit-fcb: no ground-truth maps for " + p.video_id);
        if (it->second->maps.size() != p.maps.size()) throw InputError("fit-fcb: frame counts differ for " + p.video_id);
        p_all.insert(p_all.end(), p.maps.begin(), p.maps.end());
        g_all.insert(g_all.end(), it->second->maps.begin(), it->second->maps.end());
      }
      const FcbFit f = fit_fcb(p_all, g_all, cfg.fcb);
      write_json_file(out_path, f.params.to_json());
      std::printf("sigma_f %.1f w1 %.2f w2 %.2f mean CC %.4f (%zu frames skipped)\n", f.params.sigma_f_deg,
                  f.params.w1, f.params.w2, f.mean_cc, f.skipped_frames.size());
      return 0;
    }
    if (*online) {
      RunConfig cfg = config_or_default(config);
      cfg.online.use_offline_init = !no_offline_init;
      cfg.online.use_gt_history = !no_gt_history;
      if (seed) cfg.online.seed = *seed;
      std::optional<net::Params<float>> offline;
      if (cfg.online.use_offline_init) {
        if (ckpt.empty()) throw InputError("predict-online: --ckpt is required unless --no-offline-init");
        offline = net::load_checkpoint(ckpt);
      }
      const Video video = read_video(video_dir);
      std::ofstream log;
      if (!online_log.empty()) {
        log.open(online_log);
        if (!log) throw InputError("cannot write " + online_log);
      }
      std::vector<PredictionRow> rows;
      for (const HMTrace& tr : read_traces_csv(trace_path)) {
        if (tr.video_id != video.video_id) continue;
        if (!subject.empty() && tr.subject_id != subject) continue;
        const OnlineRun run = run_online(video.frames, tr.positions, cfg.online, offline ? &*offline : nullptr);
        for (std::size_t k = 0; k < run.predicted.size(); ++k)
          rows.push_back({tr.video_id, tr.subject_id, int(k + 1), run.predicted[k], run.mo[k]});
        if (log.is_open())
          for (const auto& l : run.log) {
            nlohmann::json j = l.to_json();
            j["subject_id"] = tr.subject_id;
            write_jsonl(log, j);
          }
        std::printf("%s/%s: mean MO %.4f\n", tr.video_id.c_str(), tr.subject_id.c_str(), run.mean_mo());
      }
      if (rows.empty()) throw InputError("predict-online: no matching traces for video " + video.video_id);
      write_predictions_csv(out_path, rows);
      return 0;
    }
    if (*base) {
      RunConfig cfg = config_or_default(config);
      if (seed) cfg.online.seed = *seed;
      std::vector<PredictionRow> rows;
      std::uint64_t k_trace = 0;
      for (const HMTrace& tr : read_traces_csv(trace_path)) {
        const OnlineRun run = which == 1 ? run_baseline1(tr.positions, cfg.online.eval_mo)
                                         : run_baseline2(tr.positions, cfg.nu_max, episode_seed(cfg.online.seed, 0, int(k_trace)),
                                                         cfg.online.eval_mo);
        ++k_trace;
        for (std::size_t k = 0; k < run.predicted.size(); ++k)
          rows.push_back({tr.video_id, tr.subject_id, int(k + 1), run.predicted[k], run.mo[k]});
      }
      write_predictions_csv(out_path, rows);
      return 0;
    }
    if (*eval) {
      const RunConfig cfg = config_or_default(config);
      const auto seqs = read_map_sequences(maps_dir);
      auto by_video = traces_by_video(read_traces_csv(traces_path));
      std::vector<EvalVideo> inputs;
      for (const auto& s : seqs) {
        const auto it = by_video.find(s.video_id);
        if (it == by_video.end()) throw InputError("evaluate: no traces for " + s.video_id);
        inputs.push_back({s.video_id, s.maps, it->second});
      }
      std::optional<FcbParams> fcb;
      if (!fcb_path.empty()) fcb = FcbParams::from_json(read_json_file(fcb_path));
      const auto scores = evaluate_maps(inputs, cfg.eval, cfg.sigma_smooth_deg, fcb, cfg.fcb.half_exponent);
      write_json_file(out_path, eval_report_json(scores));
      write_eval_csv(fs::path(out_path).replace_extension(".csv"), scores);
      for (const auto& s : scores)
        std::printf("%s: CC %.4f NSS %.4f sAUC %.4f\n", s.video_id.c_str(), s.cc, s.nss, s.sauc);
      return 0;
    }
    if (*evalmo) {
      const RunConfig cfg = config_or_default(config);
      std::map<std::pair<std::string, std::string>, std::vector<GeoPos>> traces;
      for (const HMTrace& tr : read_traces_csv(trace_path)) traces[{tr.video_id, tr.subject_id}] = tr.positions;
      double sum = 0.0;
      std::size_t n = 0;
      for (const PredictionRow& r : read_predictions_csv(pred_dir)) {
        const auto it = traces.find({r.video_id, r.subject_id});
        if (it == traces.end()) throw InputError("evaluate-mo: no trace for " + r.video_id + "/" + r.subject_id);
        if (r.frame < 0 || std::size_t(r.frame) >= it->second.size())
          throw InputError("evaluate-mo: frame " + std::to_string(r.frame) + " outside the trace");
        sum += mo(r.pred, it->second[r.frame], cfg.eval.mo);
        ++n;
      }
      if (n == 0) throw InputError("evaluate-mo: no predictions");
      std::cout << nlohmann::json{{"mean_mo", sum / double(n)}, {"predictions", n}}.dump() << '\n';
      return 0;
    }
    if (*gc) {
      bool ok = true;
      for (int steps : {1, 5}) {
        net::GradcheckOptions o;
        o.seed = gc_seed;
        o.steps = steps;
        const auto r = net::run_gradcheck(o);
        for (const auto& t : r.tensors)
          std::printf("%d-step %-24s checked %2d  max rel err %.3e\n", steps, t.tensor.c_str(), t.checked,
                      t.max_rel_error);
        std::printf("%d-step tape: max rel err %.3e %s\n", steps, r.max_rel_error, r.passed ? "PASS" : "FAIL");
        ok = ok && r.passed;
      }
      return ok ? 0 : 3;
    }
    if (*render) {
      export_map_pgm(out_path, read_map(map_path));
      return 0;
    }
  } catch (const NumericError& e) {
    std::fprintf(stderr, "numeric error: %s\n", e.what());
    return 3;
  } catch (const InputError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const fs::filesystem_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
