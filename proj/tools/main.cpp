#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "anticipatr/errors.hpp"
#include "commands.hpp"

namespace {

using namespace anticipatr;
using namespace anticipatr::cli;

std::vector<CamMethod> parse_methods(const std::string& csv) {
  std::vector<CamMethod> out;
  std::stringstream ss(csv);
  std::string name;
  while (std::getline(ss, name, ',')) {
    if (name.empty()) continue;
    auto m = parse_cam_method(name);
    if (!m.has_value()) {
      throw CLI::ValidationError("--methods", "unknown method '" + name +
                                                  "' (valid: grad-cam, grad-cam++, "
                                                  "xgrad-cam, eigen-cam)");
    }
    out.push_back(*m);
  }
  if (out.empty()) throw CLI::ValidationError("--methods", "no methods selected");
  return out;
}

std::map<const CLI::App*, std::string> config_paths;

void add_config_file(CLI::App& cmd) {
  cmd.add_option("--config", config_paths[&cmd], "key=value config file; flags override it");
}

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  return s.substr(a, s.find_last_not_of(" \t\r") - a + 1);
}

// Fill in options the command line left at their defaults. Runs after parsing,
// so a flag always beats the file.
void apply_config_file(CLI::App& cmd) {
  const std::string& path = config_paths[&cmd];
  if (path.empty()) return;
  std::ifstream file(path);
  if (!file) throw CLI::ValidationError("--config", "cannot open " + path);
  std::string line;
  int lineno = 0;
  while (std::getline(file, line)) {
    ++lineno;
    std::string text = trim(line);
    if (text.empty() || text[0] == '#') continue;
    std::size_t eq = text.find('=');
    if (eq == std::string::npos) {
      throw CLI::ValidationError("--config", path + ":" + std::to_string(lineno) +
                                                 ": expected key=value");
    }
    std::string key = trim(text.substr(0, eq));
    std::string value = trim(text.substr(eq + 1));
    CLI::Option* opt = cmd.get_option_no_throw("--" + key);
    if (opt == nullptr || key == "config") {
      throw CLI::ValidationError("--config", path + ":" + std::to_string(lineno) +
                                                 ": unknown key '" + key + "'");
    }
    if (opt->count() > 0) continue;
    opt->add_result(value);
    opt->run_callback();
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"traffic-accident anticipation pipeline"};
  app.require_subcommand(1);

  // --- synth ---
  SynthOptions synth;
  CLI::App* synth_cmd = app.add_subcommand("synth", "generate a synthetic dataset");
  add_config_file(*synth_cmd);
  synth_cmd->add_option("--out", synth.out_dir, "output directory")->required();
  synth_cmd->add_option("--seed", synth.cfg.seed, "rng seed")->required();
  synth_cmd->add_option("--positives", synth.cfg.n_positive, "positive video count");
  synth_cmd->add_option("--negatives", synth.cfg.n_negative, "negative video count");
  synth_cmd->add_option("--frames", synth.cfg.frames, "frames per video");
  synth_cmd->add_option("--fps", synth.cfg.fps, "frames per second");
  synth_cmd->add_option("--channels", synth.cfg.channels, "feature channels K");
  synth_cmd->add_option("--map-h", synth.cfg.map_h, "feature map rows U");
  synth_cmd->add_option("--map-w", synth.cfg.map_w, "feature map cols V");
  synth_cmd->add_option("--amplitude", synth.cfg.amplitude, "planted signal peak");
  synth_cmd->add_option("--lead", synth.cfg.lead, "signal ramp length in frames");
  synth_cmd->add_option("--noise", synth.cfg.noise_scale, "background noise scale");

  // --- train ---
  TrainOptions train;
  CLI::App* train_cmd = app.add_subcommand("train", "train a network on a manifest");
  add_config_file(*train_cmd);
  train_cmd->add_option("--manifest", train.manifest, "dataset manifest")->required();
  train_cmd->add_option("--out", train.out_dir, "output directory")->required();
  train_cmd->add_option("--seed", train.train.seed, "rng seed")->required();
  train_cmd->add_option("--lr", train.train.lr, "learning rate");
  train_cmd->add_option("--batch-size", train.train.batch_size, "videos per batch");
  train_cmd->add_option("--epochs", train.train.epochs, "training epochs");
  train_cmd->add_option("--patience", train.train.patience, "plateau patience in epochs");
  train_cmd->add_option("--decay", train.train.decay, "plateau lr decay factor");
  train_cmd->add_option("--feature-dim", train.feature_dim, "dense feature width d");
  train_cmd->add_option("--hidden-dim", train.hidden_dim, "GRU hidden width");
  train_cmd->add_option("--history", train.history_len, "pooled history length M");
  std::string resume_path;
  train_cmd->add_option("--resume", resume_path, "checkpoint to continue from");

  // --- explain ---
  ExplainOptions explain;
  std::string explain_methods = "grad-cam";
  std::string frames_dir;
  CLI::App* explain_cmd = app.add_subcommand("explain", "write saliency maps and probabilities");
  add_config_file(*explain_cmd);
  explain_cmd->add_option("--checkpoint", explain.checkpoint, "trained checkpoint")->required();
  explain_cmd->add_option("--manifest", explain.manifest, "dataset manifest")->required();
  explain_cmd->add_option("--out", explain.out_dir, "output directory")->required();
  explain_cmd->add_option("--methods", explain_methods,
                          "comma-separated: grad-cam,grad-cam++,xgrad-cam,eigen-cam");
  explain_cmd->add_option("--out-h", explain.out_h, "saliency output height");
  explain_cmd->add_option("--out-w", explain.out_w, "saliency output width");
  explain_cmd->add_option("--frames", frames_dir, "frame PPMs for overlays (<dir>/<id>/frame_%04d.ppm)");

  // --- eval ---
  EvalOptions eval;
  CLI::App* eval_cmd = app.add_subcommand("eval", "anticipation metrics for a checkpoint");
  add_config_file(*eval_cmd);
  eval_cmd->add_option("--checkpoint", eval.checkpoint, "trained checkpoint")->required();
  eval_cmd->add_option("--manifest", eval.manifest, "dataset manifest")->required();
  eval_cmd->add_option("--out", eval.out_dir, "output directory")->required();

  // --- xai-eval ---
  XaiEvalOptions xai;
  std::string xai_methods = "grad-cam";
  CLI::App* xai_cmd = app.add_subcommand("xai-eval", "score saliency maps against gaze");
  add_config_file(*xai_cmd);
  xai_cmd->add_option("--saliency", xai.saliency_dir, "explain output directory")->required();
  xai_cmd->add_option("--gaze", xai.gaze_csv, "gaze log CSV")->required();
  xai_cmd->add_option("--manifest", xai.manifest, "dataset manifest")->required();
  xai_cmd->add_option("--out", xai.out_dir, "output directory")->required();
  xai_cmd->add_option("--seed", xai.seed, "rng seed")->required();
  xai_cmd->add_option("--methods", xai_methods,
                      "comma-separated: grad-cam,grad-cam++,xgrad-cam,eigen-cam");
  xai_cmd->add_option("--fixation-threshold", xai.fixation_threshold,
                      "attention step-filter threshold");
  xai_cmd->add_option("--kernel-size", xai.kernel_size, "gaussian kernel size");
  xai_cmd->add_option("--sigma", xai.sigma, "gaussian kernel sigma");
  xai_cmd->add_option("--borji-splits", xai.borji_splits, "negative resamples per map");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << app.help();
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    for (CLI::App* cmd : {synth_cmd, train_cmd, explain_cmd, eval_cmd, xai_cmd}) {
      if (cmd->parsed()) apply_config_file(*cmd);
    }
    if (synth_cmd->parsed()) {
      synth.cfg.validate();
      return run_synth(synth);
    }
    if (train_cmd->parsed()) {
      if (!resume_path.empty()) train.resume = resume_path;
      train.train.validate();
      return run_train(train);
    }
    if (explain_cmd->parsed()) {
      explain.methods = parse_methods(explain_methods);
      if (!frames_dir.empty()) explain.frames_dir = frames_dir;
      return run_explain(explain);
    }
    if (eval_cmd->parsed()) {
      return run_eval(eval);
    }
    if (xai_cmd->parsed()) {
      xai.methods = parse_methods(xai_methods);
      return run_xai_eval(xai);
    }
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  std::cerr << "error: no subcommand\n";
  return 2;
}
