#include "rsnet/pipeline/campaign.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <stdexcept>

#include "rsnet/pipeline/inference.hpp"
#include "rsnet/pipeline/scene.hpp"
#include "rsnet/util/binary_io.hpp"
#include "rsnet/util/csv.hpp"
#include "rsnet/util/rng.hpp"

namespace rsnet::pipeline {

void CampaignConfig::validate() const {
  if (episodes < 1) throw std::invalid_argument("campaign: episodes must be >= 1");
  if (terrains.empty()) throw std::invalid_argument("campaign: terrains must not be empty");
  if (!(fixed_mu >= synth::kMinFriction && fixed_mu <= synth::kMaxFriction)) {
    throw std::invalid_argument("campaign: fixed_mu must lie in [0.05, 1.0]");
  }
  if (!(friction_safety > 0.0 && friction_safety <= 1.0)) {
    throw std::invalid_argument("campaign: friction_safety must lie in (0, 1]");
  }
  if (scene_px < segment.output_size) throw std::invalid_argument("campaign: scene_px below the model input size");
  segment.validate();
  episode.validate();
}

CampaignReport monte_carlo_quad(const CampaignConfig& config, const model::RsNetModel& friction_model,
                                const std::vector<synth::MaterialSpec>& table, const synth::WavelengthGrid& grid,
                                const synth::ResponseMatrix& r) {
  config.validate();
  require_head(friction_model, model::HeadKind::regression, "monte_carlo_quad");
  for (const auto& t : config.terrains) synth::find_material(table, t);

  const int n = config.episodes;
  std::vector<CampaignRow> rows(2 * static_cast<std::size_t>(n));
  std::vector<std::exception_ptr> errors(n);
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n; ++i) {
    try {
      Rng rng(mix_seed(config.seed, static_cast<std::uint64_t>(i)));
      const std::string& terrain = config.terrains[rng.index(config.terrains.size())];
      const std::uint64_t scene_seed = rng.next_u64();
      const std::uint64_t episode_seed = rng.next_u64();
      const synth::MaterialSpec& mat = synth::find_material(table, terrain);

      const SceneImage frame = render_tiles({{terrain}}, config.scene_px, table, grid, r, scene_seed);
      const FrictionEstimate est = estimate_friction(frame.rgb, friction_model, config.segment);

      const double mus[2] = {config.fixed_mu, controller_friction(est.mu_hat, config.friction_safety)};
      const char* names[2] = {kFixedVariant, kInformedVariant};
      for (int v = 0; v < 2; ++v) {
        quad::EpisodeConfig ec = config.episode;
        ec.true_mu = mat.friction;
        ec.controller_mu = mus[v];
        ec.seed = episode_seed;
        CampaignRow& row = rows[2 * static_cast<std::size_t>(i) + v];
        row.episode = i;
        row.variant = names[v];
        row.terrain = terrain;
        row.true_mu = mat.friction;
        row.estimated_mu = est.mu_hat;
        row.controller_mu = mus[v];
        row.seed = episode_seed;
        row.metrics = quad::run_episode(ec).metrics;
      }
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  CampaignReport report;
  report.summary = summarize(rows);
  report.rows = std::move(rows);
  return report;
}

std::vector<VariantSummary> summarize(const std::vector<CampaignRow>& rows) {
  std::vector<std::string> order;
  for (const auto& row : rows) {
    if (std::find(order.begin(), order.end(), row.variant) == order.end()) order.push_back(row.variant);
  }
  std::vector<VariantSummary> out;
  for (const auto& name : order) {
    VariantSummary s;
    s.variant = name;
    double succ = 0.0, fails = 0.0;
    double sl = 0.0, sl2 = 0.0, tr = 0.0, tr2 = 0.0, ef = 0.0, ef2 = 0.0;
    for (const auto& row : rows) {
      if (row.variant != name) continue;
      const auto& m = row.metrics;
      ++s.episodes;
      succ += m.success ? 1.0 : 0.0;
      fails += m.mpc_failures;
      sl += m.slippage_ratio;
      tr += m.tracking_cost;
      ef += m.effort_cost;
    }
    const double k = s.episodes;
    s.success_rate = 100.0 * succ / k;
    s.slippage_mean = sl / k;
    s.tracking_mean = tr / k;
    s.effort_mean = ef / k;
    s.mpc_failures_mean = fails / k;
    for (const auto& row : rows) {
      if (row.variant != name) continue;
      const auto& m = row.metrics;
      sl2 += (m.slippage_ratio - s.slippage_mean) * (m.slippage_ratio - s.slippage_mean);
      tr2 += (m.tracking_cost - s.tracking_mean) * (m.tracking_cost - s.tracking_mean);
      ef2 += (m.effort_cost - s.effort_mean) * (m.effort_cost - s.effort_mean);
    }
    s.slippage_std = std::sqrt(sl2 / k);
    s.tracking_std = std::sqrt(tr2 / k);
    s.effort_std = std::sqrt(ef2 / k);
    out.push_back(s);
  }
  const VariantSummary* ref = nullptr;
  for (const auto& s : out) {
    if (s.variant == kInformedVariant) ref = &s;
  }
  if (!ref && !out.empty()) ref = &out.back();
  const double tr_ref = ref ? ref->tracking_mean : 0.0, ef_ref = ref ? ref->effort_mean : 0.0;
  for (auto& s : out) {
    s.tracking_normalized = tr_ref > 0.0 ? s.tracking_mean / tr_ref : 0.0;
    s.effort_normalized = ef_ref > 0.0 ? s.effort_mean / ef_ref : 0.0;
  }
  return out;
}

namespace {

const char* kRowHeader =
    "episode,variant,terrain,true_mu,estimated_mu,controller_mu,seed,success,min_height,fall_time,"
    "slippage_ratio,tracking_cost,effort_cost,slip_samples,mpc_failures";

}  // namespace

void write_campaign_csv(const std::filesystem::path& path, const std::vector<CampaignRow>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << kRowHeader << '\n';
  for (const auto& r : rows) {
    const auto& m = r.metrics;
    out << csv::join({std::to_string(r.episode), r.variant, r.terrain, csv::num(r.true_mu), csv::num(r.estimated_mu),
                      csv::num(r.controller_mu), std::to_string(r.seed), m.success ? "1" : "0", csv::num(m.min_height),
                      csv::num(m.fall_time), csv::num(m.slippage_ratio), csv::num(m.tracking_cost),
                      csv::num(m.effort_cost), std::to_string(m.slip_samples), std::to_string(m.mpc_failures)})
        << '\n';
  }
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::vector<CampaignRow> read_campaign_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw io::FormatError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kRowHeader) throw io::FormatError(path.string() + ": unexpected header");
  std::vector<CampaignRow> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = csv::split(line);
    if (f.size() != 15) throw io::FormatError(path.string() + ":" + std::to_string(lineno) + ": expected 15 fields");
    try {
      CampaignRow r;
      r.episode = std::stoi(f[0]);
      r.variant = f[1];
      r.terrain = f[2];
      r.true_mu = csv::to_double(f[3]);
      r.estimated_mu = csv::to_double(f[4]);
      r.controller_mu = csv::to_double(f[5]);
      r.seed = std::stoull(f[6]);
      r.metrics.success = f[7] == "1";
      r.metrics.min_height = csv::to_double(f[8]);
      r.metrics.fall_time = csv::to_double(f[9]);
      r.metrics.slippage_ratio = csv::to_double(f[10]);
      r.metrics.tracking_cost = csv::to_double(f[11]);
      r.metrics.effort_cost = csv::to_double(f[12]);
      r.metrics.slip_samples = std::stoi(f[13]);
      r.metrics.mpc_failures = std::stoi(f[14]);
      rows.push_back(std::move(r));
    } catch (const std::exception& e) {
      throw io::FormatError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return rows;
}

void write_summary_csv(const std::filesystem::path& path, const std::vector<VariantSummary>& summary) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "variant,episodes,success_rate,slippage_mean,slippage_std,tracking_mean,tracking_std,effort_mean,effort_std,"
         "tracking_normalized,effort_normalized,mpc_failures_mean\n";
  for (const auto& s : summary) {
    out << csv::join({s.variant, std::to_string(s.episodes), csv::num(s.success_rate), csv::num(s.slippage_mean),
                      csv::num(s.slippage_std), csv::num(s.tracking_mean), csv::num(s.tracking_std),
                      csv::num(s.effort_mean), csv::num(s.effort_std), csv::num(s.tracking_normalized),
                      csv::num(s.effort_normalized), csv::num(s.mpc_failures_mean)})
        << '\n';
  }
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace rsnet::pipeline
