#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <set>

#include "anticipatr/gaze.hpp"
#include "anticipatr/image_io.hpp"
#include "anticipatr/metrics.hpp"
#include "anticipatr/net.hpp"
#include "anticipatr/parallel.hpp"
#include "anticipatr/rng.hpp"

namespace anticipatr::cli {

namespace {

namespace fs = std::filesystem;
using clock_type = std::chrono::steady_clock;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string frame_name(std::size_t t, const char* ext) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "frame_%04zu.%s", t, ext);
  return buf;
}

std::vector<TrainVideo> load_dataset(const std::vector<VideoRecord>& records) {
  std::vector<TrainVideo> out(records.size());
  parallel_for(records.size(), [&](std::size_t i) {
    TrainVideo v;
    v.frames = load_fmap(records[i].path);
    if (v.frames.size() != records[i].frames) {
      throw DataError(records[i].path.string() + ": manifest declares " +
                      std::to_string(records[i].frames) + " frames, file has " +
                      std::to_string(v.frames.size()));
    }
    v.label = records[i].label;
    v.tau = records[i].tau;
    v.fps = records[i].fps;
    out[i] = std::move(v);
  });
  return out;
}

NetConfig config_from_frames(const FeatureMapSeq& frames, std::size_t d, std::size_t h,
                             std::size_t m) {
  NetConfig cfg;
  cfg.channels = frames.front().shape[0];
  cfg.map_h = frames.front().shape[1];
  cfg.map_w = frames.front().shape[2];
  cfg.feature_dim = d;
  cfg.hidden_dim = h;
  cfg.history_len = m;
  return cfg;
}

ProbabilitySeries series_for(const VideoRecord& rec, const std::vector<double>& probs) {
  ProbabilitySeries s;
  s.video_id = rec.id;
  s.probs = probs;
  s.label = rec.label;
  s.tau = rec.tau;
  s.fps = rec.fps;
  return s;
}

SaliencyMap compute_map(NetActivations& acts, CamMethod m, std::size_t t, std::size_t out_h,
                        std::size_t out_w) {
  switch (m) {
    case CamMethod::grad_cam: return grad_cam(acts, t, ClassId::accident, out_h, out_w);
    case CamMethod::grad_cam_pp: return grad_cam_pp(acts, t, ClassId::accident, out_h, out_w);
    case CamMethod::xgrad_cam: return xgrad_cam(acts, t, ClassId::accident, out_h, out_w);
    case CamMethod::eigen_cam: return eigen_cam(acts, t, out_h, out_w);
  }
  throw ContractError("unknown saliency method");
}

}  // namespace

int run_synth(const SynthOptions& opt) {
  if (opt.cfg.n_positive == 0) {
    std::cerr << "warning: generating no positive videos; anticipation metrics will be "
                 "uncomputable on this dataset\n";
  }
  SynthResult result = synth_generate(opt.cfg, opt.out_dir);
  std::cout << result.manifest.string() << "\n";
  return 0;
}

int run_train(const TrainOptions& opt) {
  std::vector<VideoRecord> records = load_manifest(opt.manifest);
  if (records.empty()) throw DataError("train: manifest " + opt.manifest.string() + " is empty");
  std::vector<TrainVideo> videos = load_dataset(records);

  NetConfig net_cfg =
      config_from_frames(videos.front().frames, opt.feature_dim, opt.hidden_dim, opt.history_len);
  std::optional<NetParams> start;
  if (opt.resume.has_value()) {
    auto [ckpt_cfg, ckpt_params] = load_checkpoint(*opt.resume);
    if (!(ckpt_cfg == net_cfg)) {
      throw DataError("train: checkpoint " + opt.resume->string() +
                      " was written for a different net configuration");
    }
    start = std::move(ckpt_params);
  }

  TrainResult result = train(videos, net_cfg, opt.train, start);

  fs::create_directories(opt.out_dir);
  fs::path ckpt = opt.out_dir / "checkpoint.antn";
  save_checkpoint(ckpt, net_cfg, result.params);

  std::ofstream loss_csv(opt.out_dir / "loss.csv", std::ios::trunc);
  loss_csv << "epoch,loss\n";
  for (std::size_t e = 0; e < result.epoch_losses.size(); ++e) {
    loss_csv << e << ',' << fmt(result.epoch_losses[e]) << '\n';
  }
  std::cout << ckpt.string() << "\n";
  return 0;
}

int run_explain(const ExplainOptions& opt) {
  auto [net_cfg, params] = load_checkpoint(opt.checkpoint);
  std::vector<VideoRecord> records = load_manifest(opt.manifest);
  fs::create_directories(opt.out_dir);

  struct Timing {
    double forward_s = 0.0;
    std::size_t frames = 0;
    std::map<CamMethod, double> method_s;
  };
  std::vector<Timing> timings(records.size());

  parallel_for(records.size(), [&](std::size_t i) {
    const VideoRecord& rec = records[i];
    FeatureMapSeq frames = load_fmap(rec.path);
    fs::path video_dir = opt.out_dir / rec.id;
    fs::create_directories(video_dir);

    auto t0 = clock_type::now();
    NetActivations acts = forward_video(frames, params, net_cfg, /*input_grads=*/true);
    timings[i].forward_s = std::chrono::duration<double>(clock_type::now() - t0).count();
    timings[i].frames = frames.size();

    std::ofstream probs_csv(video_dir / "probs.csv", std::ios::trunc);
    probs_csv << "frame,prob\n";
    for (std::size_t t = 0; t < acts.probs.size(); ++t) {
      probs_csv << t << ',' << fmt(acts.probs[t]) << '\n';
    }

    for (CamMethod m : opt.methods) {
      fs::path method_dir = video_dir / cam_method_name(m);
      fs::create_directories(method_dir);
      auto m0 = clock_type::now();
      for (std::size_t t = 0; t < frames.size(); ++t) {
        SaliencyMap map = compute_map(acts, m, t, opt.out_h, opt.out_w);
        std::optional<fs::path> frame_ppm, overlay;
        if (opt.frames_dir.has_value()) {
          fs::path candidate = *opt.frames_dir / rec.id / frame_name(t, "ppm");
          if (fs::exists(candidate)) {
            frame_ppm = candidate;
            overlay = method_dir / (frame_name(t, "ppm"));
          }
        }
        export_saliency(map, method_dir / frame_name(t, "pgm"), frame_ppm, overlay);
      }
      timings[i].method_s[m] += std::chrono::duration<double>(clock_type::now() - m0).count();
    }
  });

  // informational speed report, paper-style figures vary with hardware
  double fwd = 0.0;
  std::size_t n_frames = 0;
  std::map<CamMethod, double> per_method;
  for (const Timing& t : timings) {
    fwd += t.forward_s;
    n_frames += t.frames;
    for (auto& [m, s] : t.method_s) per_method[m] += s;
  }
  if (n_frames > 0) {
    std::cerr << "inference speed: forward pass " << fmt(double(n_frames) / std::max(fwd, 1e-12))
              << " frames/s\n";
    for (auto& [m, s] : per_method) {
      std::cerr << "inference speed: " << cam_method_name(m) << " "
                << fmt(1e3 * s / double(n_frames)) << " ms/frame\n";
    }
  }
  std::cout << opt.out_dir.string() << "\n";
  return 0;
}

int run_eval(const EvalOptions& opt) {
  auto [net_cfg, params] = load_checkpoint(opt.checkpoint);
  std::vector<VideoRecord> records = load_manifest(opt.manifest);
  std::vector<ProbabilitySeries> series(records.size());

  parallel_for(records.size(), [&](std::size_t i) {
    FeatureMapSeq frames = load_fmap(records[i].path);
    NetActivations acts = forward_video(frames, params, net_cfg, /*input_grads=*/false);
    series[i] = series_for(records[i], acts.probs);
  });

  AnticipationReport rep = anticipation_report(series);
  fs::create_directories(opt.out_dir);
  {
    std::ofstream os(opt.out_dir / "summary.csv", std::ios::trunc);
    os << "AP,mTTA,P@80R,TTA@80R\n";
    os << fmt(rep.ap) << ',' << fmt(rep.mtta_s) << ',' << fmt(rep.p_at_80r) << ','
       << fmt(rep.tta_80r_s) << '\n';
  }
  {
    std::ofstream os(opt.out_dir / "per_video.csv", std::ios::trunc);
    os << "id,label,tau,score\n";
    for (const ProbabilitySeries& s : series) {
      os << s.video_id << ',' << s.label << ',';
      if (s.tau.has_value()) os << *s.tau;
      os << ',' << fmt(decision_score(s)) << '\n';
    }
  }
  std::cout << (opt.out_dir / "summary.csv").string() << "\n";
  return 0;
}

int run_xai_eval(const XaiEvalOptions& opt) {
  std::vector<GazePoint> points = load_gaze_csv(opt.gaze_csv);
  if (points.empty()) throw DataError("xai-eval: gaze file " + opt.gaze_csv.string() +
                                      " contains no records");
  std::vector<VideoRecord> records = load_manifest(opt.manifest);
  std::map<std::string, int> labels;
  for (const VideoRecord& r : records) labels[r.id] = r.label;

  // group gaze points by video, then frame
  std::map<std::string, std::map<std::size_t, std::vector<GazePoint>>> by_video;
  for (GazePoint& p : points) by_video[p.video][p.frame].push_back(std::move(p));

  struct Cell {
    double sum = 0.0;
    std::size_t n = 0;
    void add(double v) {
      sum += v;
      n += 1;
    }
    double mean() const { return n > 0 ? sum / double(n) : 0.0; }
  };
  // per method: [pos/neg][metric 0..3 = nss, auc_j, auc_b, kl]
  std::map<CamMethod, Cell> agg[2][4];
  std::size_t skipped_frames = 0;

  fs::create_directories(opt.out_dir);
  std::ofstream detail(opt.out_dir / "xai_frames.csv", std::ios::trunc);
  detail << "video,frame,method,nss,auc_j,auc_b,kl\n";

  for (auto& [video_id, frames] : by_video) {
    auto label_it = labels.find(video_id);
    if (label_it == labels.end()) {
      throw DataError("xai-eval: gaze log references video " + video_id +
                      " that is not in the manifest");
    }
    fs::path video_dir = opt.saliency_dir / video_id;
    if (!fs::exists(video_dir)) {
      throw DataError("xai-eval: no saliency output for video " + video_id + " under " +
                      opt.saliency_dir.string());
    }
    int cls = label_it->second != 0 ? 0 : 1;

    for (auto& [frame, frame_points] : frames) {
      // map resolution comes from the saliency files themselves
      fs::path first_pgm =
          video_dir / cam_method_name(opt.methods.front()) / frame_name(frame, "pgm");
      if (!fs::exists(first_pgm)) {
        throw DataError("xai-eval: missing saliency map " + first_pgm.string());
      }
      Tensor ref = read_pgm(first_pgm);
      Tensor counts = accumulate_gaze(frame_points, ref.shape[0], ref.shape[1]);
      Tensor attention = attention_map(counts, opt.kernel_size, opt.sigma);
      Tensor fixations = fixation_map(attention, opt.fixation_threshold);
      double f_sum = 0.0;
      for (double v : fixations.data) f_sum += v;
      if (f_sum == 0.0) {
        ++skipped_frames;
        continue;
      }

      for (CamMethod m : opt.methods) {
        fs::path pgm = video_dir / cam_method_name(m) / frame_name(frame, "pgm");
        if (!fs::exists(pgm)) throw DataError("xai-eval: missing saliency map " + pgm.string());
        Tensor saliency = read_pgm(pgm);
        std::uint64_t borji_seed = stream_seed(
            opt.seed, "borji/" + video_id + "/" + std::to_string(frame) + "/" +
                          cam_method_name(m));
        double v_nss, v_aucj, v_aucb, v_kl;
        try {
          v_nss = nss(saliency, fixations);
          v_aucj = auc_judd(saliency, fixations);
          v_aucb = auc_borji(saliency, fixations, opt.borji_splits, borji_seed);
          v_kl = kl_div(saliency, fixations);
        } catch (const MetricError&) {
          ++skipped_frames;
          continue;
        }
        agg[cls][0][m].add(v_nss);
        agg[cls][1][m].add(v_aucj);
        agg[cls][2][m].add(v_aucb);
        agg[cls][3][m].add(v_kl);
        detail << video_id << ',' << frame << ',' << cam_method_name(m) << ',' << fmt(v_nss)
               << ',' << fmt(v_aucj) << ',' << fmt(v_aucb) << ',' << fmt(v_kl) << '\n';
      }
    }
  }

  std::ofstream summary(opt.out_dir / "xai_summary.csv", std::ios::trunc);
  summary << "method,NSS_pos,AUC-J_pos,AUC-B_pos,KL_pos,NSS_neg,AUC-J_neg,AUC-B_neg,KL_neg,"
             "frames_pos,frames_neg\n";
  for (CamMethod m : opt.methods) {
    summary << cam_method_name(m);
    for (int cls = 0; cls < 2; ++cls) {
      for (int metric = 0; metric < 4; ++metric) summary << ',' << fmt(agg[cls][metric][m].mean());
    }
    summary << ',' << agg[0][0][m].n << ',' << agg[1][0][m].n << '\n';
  }
  if (skipped_frames > 0) {
    std::cerr << "xai-eval: skipped " << skipped_frames
              << " frame evaluations with degenerate fixation or saliency maps\n";
  }
  std::cout << (opt.out_dir / "xai_summary.csv").string() << "\n";
  return 0;
}

}  // namespace anticipatr::cli
