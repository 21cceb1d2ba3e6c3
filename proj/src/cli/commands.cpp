// Copyright 2026 The keytrack Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "keytrack/cli/commands.hpp"

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "keytrack/cli/run.hpp"
#include "keytrack/eval/report.hpp"
#include "keytrack/motion/motion_io.hpp"

namespace keytrack::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

ExperimentConfig ResolveConfig(const CommandOptions& o) {
  ExperimentConfig c = LoadConfig(o.config, o.overrides, o.method);
  if (o.seed_given) c = WithSeed(c, o.seed);
  return c;
}

std::string Timestamp() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  localtime_r(&t, &tm);
  std::ostringstream s;
  s << std::put_time(&tm, "%Y%m%d-%H%M%S");
  return s.str();
}

// Creates a fresh run directory and records the resolved config in it.
std::string MakeRunDir(const CommandOptions& o, const std::string& command, const Experiment& x) {
  const std::string stem = command + "-" + x.hash + "-" + Timestamp();
  fs::path dir = fs::path(o.out) / stem;
  for (int k = 1; fs::exists(dir); ++k) dir = fs::path(o.out) / (stem + "-" + std::to_string(k));
  fs::create_directories(dir);
  json run = {{"command", command},
              {"config_hash", x.hash},
              {"seed", x.cfg.seed},
              {"overrides", o.overrides},
              {"method", o.method},
              {"config", ConfigToJson(x.cfg)}};
  eval::WriteText((dir / "config.json").string(), run.dump(2) + "\n");
  return dir.string();
}

json PlanToJson(const motion::KeyframePlan& p) {
  json keys = json::array();
  for (std::size_t i = 0; i < p.size(); ++i)
    keys.push_back({{"phase", p.key_phases[i]},
                    {"frame", p.frame_index[i]},
                    {"label", p.labels[i]},
                    {"reward_scale", p.reward_scale[i]},
                    {"edited", p.edited[i] != 0}});
  return keys;
}

void PrintSummary(const std::vector<train::IterationMetrics>& m) {
  if (m.empty()) return;
  const auto& last = m.back();
  std::cout << "iterations: " << m.size() << "  final sparse return " << last.mean_return_sparse << "  dense return "
            << last.mean_return_dense << "  train success " << last.success_rate_train << "  ("
            << last.wallclock << " s)\n";
}

train::PolicyBundle RequirePolicy(const std::string& path) {
  if (path.empty()) Fail(ErrorCode::kDependency, "no checkpoint given: pass --checkpoint PATH");
  if (!fs::exists(path)) Fail(ErrorCode::kDependency, "checkpoint not found at expected path: " + path);
  return LoadPolicy(path);
}

json SummaryJson(const eval::SweepReport& r) {
  json out;
  for (const char* band : {"easy", "hard", "overall"}) {
    const eval::BandSummary& s = r.band(band);
    auto stat = [](const eval::Stat& st) { return json{{"mean", st.mean}, {"std", st.std}}; };
    out[band] = {{"episodes", s.episodes},
                 {"success", stat(s.success)},
                 {"E_g_bpe_sparse_mm", stat(s.e_g_mm)},
                 {"E_l_bpe_dense_mm", stat(s.e_l_mm)},
                 {"E_smth_dense", stat(s.e_smth)}};
  }
  return out;
}

}  // namespace

int CmdGenMotion(const CommandOptions& o) {
  const Experiment x(ResolveConfig(o));
  const std::string dir = MakeRunDir(o, "gen-motion", x);
  motion::SaveMotion(x.ds.base(), dir + "/motion.json");
  sim::SaveMorphology(x.morph, dir + "/morphology.json");
  eval::WriteText(dir + "/keyframes.json",
                  json{{"config_hash", x.hash}, {"keyframes", PlanToJson(x.ds.plan())}}.dump(2) + "\n");
  std::cout << "generated " << motion::TaskName(x.cfg.dataset.params.task) << " reference: "
            << x.ds.base().frame_count() << " frames, " << x.ds.plan().size() << " keyframes\n"
            << "artifacts: " << dir << "\n";
  return kExitOk;
}

int CmdEdit(const CommandOptions& o) {
  const Experiment x(ResolveConfig(o));
  const std::string dir = MakeRunDir(o, "edit", x);
  std::vector<double> psis = o.psi;
  if (psis.empty())
    for (const auto& p : eval::BandGrid(x.cfg.bands, x.cfg.eval.points_per_range, eval::ParseBand(o.band)))
      psis.push_back(p.psi);
  std::ofstream f(dir + "/edits.jsonl");
  for (double psi : psis) {
    const motion::EditedMotion e = x.ds.Edit(psi);
    json keys = json::array();
    for (std::size_t i = 0; i < e.keyframes.size(); ++i) {
      const motion::Frame& fr = e.keyframes[i];
      keys.push_back({{"phase", x.ds.plan().key_phases[i]},
                      {"root", {fr.root_pos.x(), fr.root_pos.y()}},
                      {"pitch", fr.root_pitch},
                      {"joints", std::vector<double>(fr.joint_angles.data(),
                                                      fr.joint_angles.data() + fr.joint_angles.size())}});
    }
    f << json{{"psi", psi}, {"config_hash", x.hash}, {"delta", e.spec.delta()}, {"keyframes", keys}}.dump() << "\n";
    if (e.has_dense()) {
      std::ostringstream name;
      name << dir << "/dense_psi_" << std::fixed << std::setprecision(3) << psi << ".json";
      motion::SaveMotion(e.dense, name.str());
    }
  }
  std::cout << "edited " << psis.size() << " task values (" << motion::DatasetModeName(x.cfg.dataset.mode)
            << ")\nartifacts: " << dir << "\n";
  return kExitOk;
}

int CmdTrainStage1(const CommandOptions& o) {
  const Experiment x(ResolveConfig(o));
  const std::string dir = MakeRunDir(o, "train-stage1", x);
  std::ofstream metrics(dir + "/metrics.jsonl");
  const train::StageResult r = RunStage1(x, &metrics);
  SavePolicy(x, r.bundle, dir + "/stage1.ckpt");
  PrintSummary(r.metrics);
  std::cout << "base hash " << train::BaseHash(r.bundle) << "\ncheckpoint: " << dir << "/stage1.ckpt\n";
  return kExitOk;
}

int CmdTrainStage2(const CommandOptions& o) {
  const Experiment x(ResolveConfig(o));
  const std::string base_path = !o.checkpoint.empty() ? o.checkpoint : x.cfg.train.base_checkpoint;
  if (base_path.empty())
    Fail(ErrorCode::kDependency,
         "stage-2 training needs a stage-1 checkpoint: pass --checkpoint PATH or set train.base_checkpoint");
  if (!fs::exists(base_path))
    Fail(ErrorCode::kDependency, "stage-1 checkpoint not found at expected path: " + base_path);
  const nets::Checkpoint ck = nets::LoadCheckpoint(base_path);
  const train::PolicyBundle base = train::FromCheckpoint(ck);
  const std::string dir = MakeRunDir(o, "train-stage2", x);
  std::ofstream metrics(dir + "/metrics.jsonl");
  const train::StageResult r = RunStage2(x, base, ck.Meta("base_hash"), &metrics);
  SavePolicy(x, r.bundle, dir + "/stage2.ckpt");
  PrintSummary(r.metrics);
  std::cout << "adapters trained on base " << r.bundle.base_hash << "\ncheckpoint: " << dir << "/stage2.ckpt\n";
  return kExitOk;
}

int CmdEval(const CommandOptions& o) {
  const Experiment x(ResolveConfig(o));
  const train::PolicyBundle policy = RequirePolicy(o.checkpoint);
  const eval::SweepReport r = EvaluateBands(x, policy, eval::ParseBand(o.band));
  const std::string dir = MakeRunDir(o, "eval", x);
  std::ofstream eps(dir + "/episodes.jsonl");
  for (const auto& e : r.episodes) eps << e.ToJson().dump() << "\n";
  json summary = SummaryJson(r);
  summary["config_hash"] = x.hash;
  summary["checkpoint"] = o.checkpoint;
  eval::WriteText(dir + "/summary.json", summary.dump(2) + "\n");
  const std::string csv = eval::ComparisonCsv({{"policy", r}});
  eval::WriteText(dir + "/table.csv", csv);
  std::cout << csv << "artifacts: " << dir << "\n";
  return kExitOk;
}

int CmdCompare(const CommandOptions& o) {
  const Experiment x(ResolveConfig(o));
  if (o.runs.empty()) Fail(ErrorCode::kConfig, "compare needs at least one --run label=checkpoint");
  std::vector<eval::MethodResult> results;
  std::vector<std::pair<std::string, train::PolicyBundle>> policies;
  for (const std::string& spec : o.runs) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0) Fail(ErrorCode::kConfig, "--run must look like label=checkpoint");
    const std::string label = spec.substr(0, eq);
    train::PolicyBundle p = RequirePolicy(spec.substr(eq + 1));
    results.push_back({label, EvaluateBands(x, p, eval::ParseBand(o.band))});
    policies.emplace_back(label, std::move(p));
  }
  const std::string dir = MakeRunDir(o, "compare", x);
  const std::string csv = eval::ComparisonCsv(results);
  eval::WriteText(dir + "/compare.csv", csv);
  std::vector<eval::Series> curves;
  for (const auto& r : results) curves.push_back(eval::ErrorVsPsi(r));
  eval::WriteText(dir + "/error_vs_psi.svg",
                  eval::SvgLinePlot("Global keyframe error vs task value", "task value", "E_g (mm)", curves));
  // Phase-interval and compensation traces at both ends of the easy band.
  for (const auto& [label, p] : policies) {
    if (!p.has_phase) continue;
    eval::EvalConfig ec = x.cfg.eval;
    ec.record_traces = true;
    std::vector<eval::Series> dphi, delta;
    for (double psi : {x.cfg.bands.easy.lo, x.cfg.bands.easy.hi}) {
      const eval::EpisodeReport e =
          eval::RunEpisode(p, x.ds, x.morph, x.cfg.env, ec, psi, eval::EpisodeSeed(x.cfg.eval_seeds[0], 0, 0));
      std::ostringstream name;
      name << "psi=" << psi;
      dphi.push_back({name.str(), e.trace.phi, e.trace.dphi});
      delta.push_back({name.str(), e.trace.phi, e.trace.delta_action_norm});
    }
    eval::WriteText(dir + "/phase_interval_" + label + ".svg",
                    eval::SvgLinePlot("Phase interval (" + label + ")", "phase", "dphi", dphi));
    eval::WriteText(dir + "/delta_action_" + label + ".svg",
                    eval::SvgLinePlot("Action compensation (" + label + ")", "phase", "|delta action|", delta));
  }
  std::cout << csv << "artifacts: " << dir << "\n";
  return kExitOk;
}

int ExitCodeFor(ErrorCode c) {
  switch (c) {
    case ErrorCode::kConfig:
      return kExitConfig;
    case ErrorCode::kDependency:
    case ErrorCode::kHashMismatch:
    case ErrorCode::kMorphologyMismatch:
      return kExitDependency;
    default:
      return kExitRuntime;
  }
}

}  // namespace keytrack::cli
