// rsnet command-line front end. Every artifact is a pure function of the
// resolved config (written next to the outputs as config.json); timings are
// printed but never written.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "rsnet/model/weights.hpp"
#include "rsnet/pipeline/bench.hpp"
#include "rsnet/pipeline/campaign.hpp"
#include "rsnet/pipeline/scene.hpp"
#include "rsnet/pipeline/wheeled.hpp"
#include "rsnet/pipeline/workflow.hpp"
#include "rsnet/util/csv.hpp"
#include "rsnet/util/rng.hpp"

namespace fs = std::filesystem;
using namespace rsnet;
using pipeline::PipelineConfig;

namespace {

struct Globals {
  std::string config;
  std::string out = "out";
  std::uint64_t seed = 0;
  CLI::Option* seed_opt = nullptr;
};

std::ofstream open_out(const fs::path& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  return f;
}

PipelineConfig resolve(const Globals& g) {
  PipelineConfig c = g.config.empty() ? PipelineConfig{} : pipeline::load_config(g.config);
  if (g.seed_opt && g.seed_opt->count()) c.seed = g.seed;
  c.validate();
  return c;
}

fs::path prepare(const Globals& g, const PipelineConfig& c) {
  const fs::path out(g.out);
  fs::create_directories(out);
  open_out(out / "config.json") << pipeline::config_to_json(c).dump(2) << '\n';
  return out;
}

model::RsNetModel load_model(const std::string& path) {
  if (path.empty()) throw std::runtime_error("a trained model is required (--model FILE)");
  if (!fs::exists(path)) throw std::runtime_error("model file not found: " + path);
  return model::load_weights(path);
}

synth::Dataset dataset_for(const PipelineConfig& c, const std::string& dir) {
  return dir.empty() ? pipeline::make_dataset(c) : synth::read_dataset(dir);
}

void write_eval_header(std::ofstream& f) {
  f << "model,split,samples,spec_mse,mean_pearson,min_pearson,accuracy,friction_mae\n";
}

void write_eval_row(std::ofstream& f, const std::string& name, const std::string& split, const model::EvalSummary& e) {
  f << csv::join({name, split, std::to_string(e.samples), csv::num(e.spec_mse), csv::num(e.mean_pearson),
                  csv::num(e.min_pearson), csv::num(e.accuracy), csv::num(e.friction_mae)})
    << '\n';
}

int cmd_gen_data(const Globals& g) {
  const auto c = resolve(g);
  const auto out = prepare(g, c);
  const auto data = pipeline::make_dataset(c);
  synth::write_dataset(data, out);
  std::printf("wrote %zu train, %zu val, %zu test, %zu held-out samples to %s\n", data.train.size(), data.val.size(),
              data.test.size(), data.heldout.size(), out.string().c_str());
  return 0;
}

int cmd_train(const Globals& g, const std::string& data_dir) {
  const auto c = resolve(g);
  const auto out = prepare(g, c);
  const auto data = dataset_for(c, data_dir);
  if (data.class_names != c.training_class_names()) {
    throw std::runtime_error("dataset classes do not match the config's training classes");
  }
  const auto m = pipeline::train_models(c, data.train);

  model::save_weights(m.backbone, out / "backbone.rsnw");
  model::save_weights(m.classifier, out / "classifier.rsnw");
  model::save_weights(m.friction, out / "friction.rsnw");
  model::write_training_log(m.pretrain_log, out / "pretrain_log.csv");
  model::write_training_log(m.classifier_log, out / "classifier_log.csv");
  model::write_training_log(m.friction_log, out / "friction_log.csv");

  auto f = open_out(out / "eval.csv");
  write_eval_header(f);
  const std::pair<const char*, const model::RsNetModel*> models[] = {
      {"backbone", &m.backbone}, {"classifier", &m.classifier}, {"friction", &m.friction}};
  for (const auto& [name, model] : models) {
    for (const auto& [split, set] : {std::pair{"val", &data.val}, std::pair{"test", &data.test}}) {
      const auto e = model::evaluate(*model, *set);
      write_eval_row(f, name, split, e);
      std::printf("%-10s %-4s pearson %.4f (min %.4f)  accuracy %.3f  friction MAE %.4f\n", name, split,
                  e.mean_pearson, e.min_pearson, e.accuracy, e.friction_mae);
    }
  }
  return 0;
}

int cmd_eval_spectral(const Globals& g, const std::string& model_path, const std::string& data_dir) {
  const auto c = resolve(g);
  const auto m = load_model(model_path);
  const auto out = prepare(g, c);
  const auto data = dataset_for(c, data_dir);

  auto rows = pipeline::spectral_rows(m.backbone, data.test, "test");
  const auto held = pipeline::spectral_rows(m.backbone, data.heldout, "heldout");
  rows.insert(rows.end(), held.begin(), held.end());
  pipeline::write_spectral_csv(out / "spectral_eval.csv", rows);

  auto f = open_out(out / "class_spectra.csv");
  f << "split,class,series,peak";
  for (int b = 0; b < c.grid.bands; ++b) f << ",b" << b;
  f << '\n';
  for (const auto& [split, set] : {std::pair{"test", &data.test}, std::pair{"heldout", &data.heldout}}) {
    for (const auto& cm : pipeline::class_mean_spectra(m.backbone, *set)) {
      for (const auto& [series, v, pk] : {std::tuple{"true", &cm.truth, cm.peak_true},
                                          std::tuple{"predicted", &cm.predicted, cm.peak_pred}}) {
        f << split << ',' << cm.class_name << ',' << series << ',' << pk;
        for (double x : *v) f << ',' << csv::num(x);
        f << '\n';
      }
      std::printf("%-8s %-9s peak true %2d predicted %2d\n", split, cm.class_name.c_str(), cm.peak_true,
                  cm.peak_pred);
    }
  }
  double min_test = 1.0;
  for (const auto& r : rows) {
    if (r.split == "test") min_test = std::min(min_test, r.pearson);
  }
  std::printf("test samples %zu, min pearson %.4f\n", data.test.size(), min_test);
  return 0;
}

int cmd_sim_quad(const Globals& g, double true_mu, double controller_mu) {
  auto c = resolve(g);
  if (true_mu >= 0.0) c.quad.true_mu = true_mu;
  if (controller_mu >= 0.0) c.quad.controller_mu = controller_mu;
  c.validate();
  const auto out = prepare(g, c);
  const auto r = quad::run_episode(c.quad);
  quad::write_trace_csv(out / "trace.csv", r.trace);
  const auto& m = r.metrics;
  auto f = open_out(out / "metrics.csv");
  f << "true_mu,controller_mu,success,min_height,fall_time,slippage_ratio,tracking_cost,effort_cost,slip_samples,"
       "mpc_failures\n";
  f << csv::join({csv::num(c.quad.true_mu), csv::num(c.quad.controller_mu), m.success ? "1" : "0",
                  csv::num(m.min_height), csv::num(m.fall_time), csv::num(m.slippage_ratio),
                  csv::num(m.tracking_cost), csv::num(m.effort_cost), std::to_string(m.slip_samples),
                  std::to_string(m.mpc_failures)})
    << '\n';
  std::printf("%s: min height %.3f m, fall time %.3f s, slippage %.3f\n", m.success ? "success" : "fall",
              m.min_height, m.fall_time, m.slippage_ratio);
  return 0;
}

int cmd_sim_mppi(const Globals& g, const std::string& model_path, int seeds) {
  auto c = resolve(g);
  if (seeds > 0) c.wheeled.seeds = seeds;
  const auto m = load_model(model_path);
  const auto out = prepare(g, c);
  const auto names = c.training_class_names();
  const auto r = c.response();

  auto f = open_out(out / "wheeled.csv");
  f << "seed,condition,outcome,time_to_goal,path_length,patch_samples\n";
  int base_occ = 0, aware_occ = 0;
  double base_t = 0.0, aware_t = 0.0;
  for (int i = 0; i < c.wheeled.seeds; ++i) {
    const std::uint64_t s = mix_seed(c.seed, static_cast<std::uint64_t>(i));
    const auto rep = pipeline::run_wheeled_comparison(c.wheeled.scenario, m, names, c.classes, c.grid, r, c.mppi,
                                                      c.wheeled.max_steps, s, c.segment);
    for (const auto& [cond, p] : {std::pair{"baseline", &rep.baseline}, std::pair{"aware", &rep.aware}}) {
      f << csv::join({std::to_string(i), cond, mppi::to_string(p->outcome), csv::num(p->time_to_goal),
                      csv::num(p->path_length), std::to_string(p->patch_samples)})
        << '\n';
    }
    base_occ += rep.baseline.patch_samples > 0;
    aware_occ += rep.aware.patch_samples > 0;
    base_t += rep.baseline.time_to_goal;
    aware_t += rep.aware.time_to_goal;
    if (i == 0) {
      mppi::write_world(out / "world_aware.txt", rep.aware_world);
      mppi::write_world(out / "world_baseline.txt", rep.baseline_world);
      mppi::write_trajectory_csv(out / "baseline_path.csv", rep.baseline, c.mppi.dt);
      mppi::write_trajectory_csv(out / "aware_path.csv", rep.aware, c.mppi.dt);
      mppi::write_ppm(out / "paths.ppm", rep.aware_world, {rep.baseline, rep.aware});
      pipeline::write_image_ppm(out / "scene.ppm",
                                pipeline::render_overhead(c.wheeled.scenario, c.classes, c.grid, r,
                                                          mix_seed(s, 0x5ce7e))
                                    .rgb);
    }
  }
  std::printf("runs crossing the patch: baseline %d/%d, terrain-aware %d/%d; mean time-to-goal %.2f s vs %.2f s\n",
              base_occ, c.wheeled.seeds, aware_occ, c.wheeled.seeds, base_t / c.wheeled.seeds,
              aware_t / c.wheeled.seeds);
  return 0;
}

int cmd_monte_carlo(const Globals& g, const std::string& model_path, int episodes, bool full) {
  auto c = resolve(g);
  if (full) c.campaign.episodes = 1000;
  if (episodes > 0) c.campaign.episodes = episodes;
  c.validate();
  const auto m = load_model(model_path);
  const auto out = prepare(g, c);
  const auto rep = pipeline::monte_carlo_quad(c.campaign_config(), m, c.classes, c.grid, c.response());
  pipeline::write_campaign_csv(out / "campaign.csv", rep.rows);
  pipeline::write_summary_csv(out / "summary.csv", rep.summary);
  std::printf("%-9s %8s %9s %10s %10s %9s\n", "variant", "episodes", "success%", "slippage", "tracking", "effort");
  for (const auto& s : rep.summary) {
    std::printf("%-9s %8d %9.1f %10.4f %10.3f %9.3f\n", s.variant.c_str(), s.episodes, s.success_rate,
                s.slippage_mean, s.tracking_normalized, s.effort_normalized);
  }
  return 0;
}

int cmd_bench(const Globals& g, const std::vector<std::string>& model_paths, int frames) {
  auto c = resolve(g);
  if (frames >= 0) c.bench.frames = frames;
  std::vector<model::RsNetModel> models;
  for (const auto& p : model_paths) models.push_back(load_model(p));
  if (models.empty()) throw std::runtime_error("a trained model is required (--model FILE)");
  const auto out = prepare(g, c);

  std::vector<const model::RsNetModel*> ptrs;
  for (const auto& m : models) ptrs.push_back(&m);
  std::vector<std::vector<model::TaskOutput>> preds;
  const auto b = pipeline::benchmark_inference(pipeline::bench_frames(c), ptrs, c.segment, &preds);

  auto f = open_out(out / "predictions.csv");
  f << "frame,model,patch,argmax,friction,probabilities\n";
  for (std::size_t k = 0; k < preds.size(); ++k) {
    for (std::size_t p = 0; p < preds[k].size(); ++p) {
      const auto& o = preds[k][p];
      std::string probs;
      for (std::size_t j = 0; j < o.probabilities.size(); ++j) probs += (j ? " " : "") + csv::num(o.probabilities[j]);
      f << csv::join({std::to_string(k / ptrs.size()), std::to_string(k % ptrs.size()), std::to_string(p),
                      o.probabilities.empty() ? "" : std::to_string(o.argmax()), csv::num(o.friction), probs})
        << '\n';
    }
  }
  std::printf("frames %d, patches %d, %.3f s: %.2f frames/s, %.1f patches/s\n", b.frames, b.patches, b.seconds,
              b.frames_per_second, b.patches_per_second);
  std::printf("per patch %.3f ms in the pipeline vs %.3f ms alone (ratio %.2f)\n", 1e3 * b.seconds_per_patch,
              1e3 * b.batch1_seconds_per_patch, b.overhead_ratio);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rsnet: spectral terrain perception and friction-aware planning"};
  app.name("rsnet");
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config, "JSON config file (defaults for missing keys)")->check(CLI::ExistingFile);
  g.seed_opt = app.add_option("--seed", g.seed, "run seed, overrides the config");
  app.add_option("--out", g.out, "output directory")->capture_default_str();

  std::string model_path, data_dir;
  std::vector<std::string> model_paths;
  int episodes = 0, seeds = 0, frames = -1;
  bool full = false;
  double true_mu = -1.0, controller_mu = -1.0;

  auto* gen = app.add_subcommand("gen-data", "generate the synthetic dataset");
  auto* train = app.add_subcommand("train", "pretrain the backbone and fine-tune classifier and friction heads");
  train->add_option("--data", data_dir, "dataset directory from gen-data (generated in memory if omitted)");
  auto* evals = app.add_subcommand("eval-spectral", "spectral reconstruction metrics on test and held-out classes");
  evals->add_option("--model", model_path, "weight file")->required();
  evals->add_option("--data", data_dir, "dataset directory");
  auto* quad_cmd = app.add_subcommand("sim-quad", "one quadruped trot episode");
  quad_cmd->add_option("--true-mu", true_mu, "ground friction");
  quad_cmd->add_option("--controller-mu", controller_mu, "friction assumed by the MPC");
  auto* mppi_cmd = app.add_subcommand("sim-mppi", "baseline vs terrain-aware MPPI over seeds");
  mppi_cmd->add_option("--model", model_path, "classifier weight file")->required();
  mppi_cmd->add_option("--seeds", seeds, "number of seeds");
  auto* mc = app.add_subcommand("monte-carlo", "fixed vs informed friction campaign");
  mc->add_option("--model", model_path, "friction weight file")->required();
  mc->add_option("--episodes", episodes, "number of episodes");
  mc->add_flag("--full", full, "run 1000 episodes");
  auto* bench = app.add_subcommand("bench", "segment -> predict throughput");
  bench->add_option("--model", model_paths, "weight file(s)")->required();
  bench->add_option("--frames", frames, "number of frames");
  app.require_subcommand(1);

  if (argc < 2) {
    std::cerr << app.help();
    return 2;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << '\n' << app.help();
    return 2;
  }

  try {
    if (*gen) return cmd_gen_data(g);
    if (*train) return cmd_train(g, data_dir);
    if (*evals) return cmd_eval_spectral(g, model_path, data_dir);
    if (*quad_cmd) return cmd_sim_quad(g, true_mu, controller_mu);
    if (*mppi_cmd) return cmd_sim_mppi(g, model_path, seeds);
    if (*mc) return cmd_monte_carlo(g, model_path, episodes, full);
    if (*bench) return cmd_bench(g, model_paths, frames);
  } catch (const pipeline::ConfigError& e) {
    std::cerr << "rsnet: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "rsnet: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
