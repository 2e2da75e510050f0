#include "dhp/config.hpp"

#include "dhp/error.hpp"
#include "dhp/pandata_io.hpp"
#include "dhp/strict_json.hpp"

namespace dhp {

using nlohmann::json;

void RunConfig::propagate() {
  train.reward = reward;
  train.nu_max = nu_max;
  online.reward = reward;
  online.nu_max = nu_max;
  offline.raster = map_raster;
  offline.sigma_smooth_deg = sigma_smooth_deg;
}

namespace {

MoResolution mo_from(StrictObject& o, const std::string& key, MoResolution fallback) {
  if (!o.has(key)) return fallback;
  const json& arr = o.child(key);
  if (!arr.is_array() || arr.size() != 2) throw InputError("config: '" + key + "' must be [width, height]");
  return MoResolution{arr[0].get<int>(), arr[1].get<int>()};
}

json mo_json(MoResolution r) { return json::array({r.width, r.height}); }

template <class Fn>
void section(StrictObject& root, const std::string& name, Fn&& fn) {
  if (!root.has(name)) return;
  StrictObject o(root.child(name), "config." + name);
  fn(o);
  o.finish();
}

}  // namespace

RunConfig run_config_from_json(const json& j) {
  StrictObject root(j, "config");
  const int version = root.require<int>("schema_version");
  if (version != kConfigSchemaVersion)
    throw InputError("config: unsupported schema_version " + std::to_string(version));
  RunConfig c;
  section(root, "reward", [&](StrictObject& o) {
    c.reward.rho_deg = o.get("rho_deg", c.reward.rho_deg);
    c.reward.varrho_rad = o.get("varrho_rad", c.reward.varrho_rad);
    c.reward.varsigma_deg = o.get("varsigma_deg", c.reward.varsigma_deg);
  });
  section(root, "net", [&](StrictObject& o) { c.nu_max = o.get("nu_max", c.nu_max); });
  section(root, "train", [&](StrictObject& o) {
    TrainConfig& t = c.train;
    t.workers = o.get("workers", t.workers);
    t.gamma = o.get("gamma", t.gamma);
    t.lr = o.get("lr", t.lr);
    t.rms_decay = o.get("rms_decay", t.rms_decay);
    t.rms_eps = o.get("rms_eps", t.rms_eps);
    t.entropy_beta = o.get("entropy_beta", t.entropy_beta);
    t.epsilon = o.get("epsilon", t.epsilon);
    t.value_coef = o.get("value_coef", t.value_coef);
    t.magnitude_coef = o.get("magnitude_coef", t.magnitude_coef);
    t.grad_clip = o.get("grad_clip", t.grad_clip);
    t.max_episodes = o.get("max_episodes", t.max_episodes);
    t.max_seconds = o.get("max_seconds", t.max_seconds);
    t.max_steps = o.get("max_steps", t.max_steps);
    t.frame_stride = o.get("frame_stride", t.frame_stride);
    t.checkpoint_every = o.get("checkpoint_every", t.checkpoint_every);
    t.seed = o.get("seed", t.seed);
  });
  section(root, "maps", [&](StrictObject& o) {
    c.map_raster.width = o.get("width", c.map_raster.width);
    c.map_raster.height = o.get("height", c.map_raster.height);
    c.sigma_smooth_deg = o.get("sigma_smooth_deg", c.sigma_smooth_deg);
  });
  section(root, "offline", [&](StrictObject& o) {
    c.offline.workflows = o.get("workflows", c.offline.workflows);
    c.offline.seed = o.get("seed", c.offline.seed);
    c.offline.greedy = o.get("greedy", c.offline.greedy);
    c.offline.threads = o.get("threads", c.offline.threads);
  });
  section(root, "fcb", [&](StrictObject& o) {
    c.fcb.sigma_min = o.get("sigma_min_deg", c.fcb.sigma_min);
    c.fcb.sigma_max = o.get("sigma_max_deg", c.fcb.sigma_max);
    c.fcb.coarse_step = o.get("coarse_step_deg", c.fcb.coarse_step);
    c.fcb.fine_step = o.get("fine_step_deg", c.fcb.fine_step);
    c.fcb.w1_step = o.get("w1_step", c.fcb.w1_step);
    c.fcb.half_exponent = o.get("half_exponent", c.fcb.half_exponent);
  });
  section(root, "online", [&](StrictObject& o) {
    OnlineConfig& n = c.online;
    n.episodes = o.get("episodes", n.episodes);
    n.th_mo = o.get("th_mo", n.th_mo);
    n.lr = o.get("lr", n.lr);
    n.rms_decay = o.get("rms_decay", n.rms_decay);
    n.rms_eps = o.get("rms_eps", n.rms_eps);
    n.epsilon = o.get("epsilon", n.epsilon);
    n.gamma = o.get("gamma", n.gamma);
    n.entropy_beta = o.get("entropy_beta", n.entropy_beta);
    n.value_coef = o.get("value_coef", n.value_coef);
    n.magnitude_coef = o.get("magnitude_coef", n.magnitude_coef);
    n.grad_clip = o.get("grad_clip", n.grad_clip);
    n.train_mo = mo_from(o, "train_mo_resolution", n.train_mo);
    n.eval_mo = mo_from(o, "eval_mo_resolution", n.eval_mo);
    n.seed = o.get("seed", n.seed);
  });
  section(root, "metrics", [&](StrictObject& o) {
    c.eval.sauc_other_frames = o.get("sauc_other_frames", c.eval.sauc_other_frames);
    c.eval.sauc_seed = o.get("sauc_seed", c.eval.sauc_seed);
    c.eval.mo = mo_from(o, "mo_resolution", c.eval.mo);
  });
  root.finish();

  c.propagate();
  c.train.validate();
  c.online.validate();
  if (c.map_raster.width != 2 * c.map_raster.height || c.map_raster.height < 2)
    throw InputError("config.maps: need width == 2*height");
  if (!(c.sigma_smooth_deg > 0.0)) throw InputError("config.maps: sigma_smooth_deg must be positive");
  if (c.offline.workflows < 1 || c.offline.threads < 1) throw InputError("config.offline: counts must be >= 1");
  if (c.eval.sauc_other_frames < 1) throw InputError("config.metrics: sauc_other_frames must be >= 1");
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) { return run_config_from_json(read_json_file(path)); }

json RunConfig::to_json() const {
  const TrainConfig& t = train;
  const OnlineConfig& n = online;
  return {
      {"schema_version", kConfigSchemaVersion},
      {"reward", {{"rho_deg", reward.rho_deg}, {"varrho_rad", reward.varrho_rad}, {"varsigma_deg", reward.varsigma_deg}}},
      {"net", {{"nu_max", nu_max}}},
      {"train",
       {{"workers", t.workers}, {"gamma", t.gamma}, {"lr", t.lr}, {"rms_decay", t.rms_decay}, {"rms_eps", t.rms_eps},
        {"entropy_beta", t.entropy_beta}, {"epsilon", t.epsilon}, {"value_coef", t.value_coef},
        {"magnitude_coef", t.magnitude_coef}, {"grad_clip", t.grad_clip}, {"max_episodes", t.max_episodes},
        {"max_seconds", t.max_seconds}, {"max_steps", t.max_steps}, {"frame_stride", t.frame_stride},
        {"checkpoint_every", t.checkpoint_every}, {"seed", t.seed}}},
      {"maps", {{"width", map_raster.width}, {"height", map_raster.height}, {"sigma_smooth_deg", sigma_smooth_deg}}},
      {"offline",
       {{"workflows", offline.workflows}, {"seed", offline.seed}, {"greedy", offline.greedy},
        {"threads", offline.threads}}},
      {"fcb",
       {{"sigma_min_deg", fcb.sigma_min}, {"sigma_max_deg", fcb.sigma_max}, {"coarse_step_deg", fcb.coarse_step},
        {"fine_step_deg", fcb.fine_step}, {"w1_step", fcb.w1_step}, {"half_exponent", fcb.half_exponent}}},
      {"online",
       {{"episodes", n.episodes}, {"th_mo", n.th_mo}, {"lr", n.lr}, {"rms_decay", n.rms_decay},
        {"rms_eps", n.rms_eps}, {"epsilon", n.epsilon}, {"gamma", n.gamma}, {"entropy_beta", n.entropy_beta},
        {"value_coef", n.value_coef}, {"magnitude_coef", n.magnitude_coef}, {"grad_clip", n.grad_clip},
        {"train_mo_resolution", mo_json(n.train_mo)}, {"eval_mo_resolution", mo_json(n.eval_mo)},
        {"seed", n.seed}}},
      {"metrics",
       {{"sauc_other_frames", eval.sauc_other_frames}, {"sauc_seed", eval.sauc_seed}, {"mo_resolution", mo_json(eval.mo)}}},
  };
}

}  // namespace dhp
