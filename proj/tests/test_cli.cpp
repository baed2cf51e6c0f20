#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "anticipatr/data.hpp"
#include "anticipatr/net.hpp"
#include "anticipatr/train.hpp"
#include "doctest.h"

namespace fs = std::filesystem;
using namespace anticipatr;

namespace {

const char* cli = ANTICIPATR_CLI_PATH;

fs::path temp_dir(const char* tag) {
  fs::path dir = fs::temp_directory_path() / (std::string("anticipatr_cli_") + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int run(const std::string& args, const fs::path& log = "/dev/null") {
  std::string cmd = std::string(cli) + " " + args + " >" + log.string() + " 2>&1";
  int rc = std::system(cmd.c_str());
  REQUIRE(rc != -1);
  return WEXITSTATUS(rc);
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  REQUIRE(f.good());
  return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

std::size_t line_count(const fs::path& p) {
  std::string s = slurp(p);
  return std::size_t(std::count(s.begin(), s.end(), '\n'));
}

// shared tiny dataset + checkpoint, built once
struct Pipeline {
  fs::path data = temp_dir("data");
  fs::path model = temp_dir("model");

  Pipeline() {
    REQUIRE(run("synth --out " + data.string() +
                " --seed 13 --positives 3 --negatives 3 --frames 8 --lead 4"
                " --channels 2 --map-h 6 --map-w 6") == 0);
    REQUIRE(run("train --manifest " + (data / "manifest.csv").string() + " --out " +
                model.string() +
                " --seed 1 --epochs 3 --lr 1e-3 --feature-dim 8 --hidden-dim 6 --history 2") == 0);
  }
};

Pipeline& pipeline() {
  static Pipeline p;
  return p;
}

}  // namespace

TEST_CASE("argument errors exit with status 2") {
  CHECK(run("") == 2);                          // subcommand required
  CHECK(run("synth --seed 1") == 2);            // missing --out
  CHECK(run("synth --out /tmp/x") == 2);        // missing --seed
  CHECK(run("nonsense --out /tmp/x") == 2);     // unknown subcommand
  CHECK(run("train --manifest m --out o") == 2);  // missing --seed

  fs::path log = fs::temp_directory_path() / "anticipatr_cli_methods.log";
  Pipeline& p = pipeline();
  CHECK(run("explain --checkpoint " + (p.model / "checkpoint.antn").string() + " --manifest " +
                (p.data / "manifest.csv").string() + " --out /tmp/x --methods sam-cam",
            log) == 2);
  std::string err = slurp(log);
  // the message names every valid method
  CHECK(err.find("sam-cam") != std::string::npos);
  CHECK(err.find("grad-cam++") != std::string::npos);
  CHECK(err.find("xgrad-cam") != std::string::npos);
  CHECK(err.find("eigen-cam") != std::string::npos);
  fs::remove(log);
}

TEST_CASE("help exits zero") {
  CHECK(run("--help") == 0);
  CHECK(run("synth --help") == 0);
}

TEST_CASE("synth is deterministic per seed") {
  fs::path a = temp_dir("syn_a");
  fs::path b = temp_dir("syn_b");
  std::string args =
      " --seed 21 --positives 2 --negatives 2 --frames 6 --lead 3 --channels 2 --map-h 5 --map-w 5";
  REQUIRE(run("synth --out " + a.string() + args) == 0);
  REQUIRE(run("synth --out " + b.string() + args) == 0);
  CHECK(slurp(a / "manifest.csv") == slurp(b / "manifest.csv"));
  for (const auto& entry : fs::directory_iterator(a)) {
    CHECK(slurp(entry.path()) == slurp(b / entry.path().filename()));
  }

  fs::path c = temp_dir("syn_c");
  REQUIRE(run("synth --out " + c.string() + " --seed 22" + args.substr(10)) == 0);
  // a different seed changes the noise fields (the manifest may coincide)
  CHECK(slurp(a / "v0000.fmap") != slurp(c / "v0000.fmap"));
  fs::remove_all(a);
  fs::remove_all(b);
  fs::remove_all(c);
}

TEST_CASE("train writes a checkpoint and a full loss curve") {
  Pipeline& p = pipeline();
  CHECK(fs::exists(p.model / "checkpoint.antn"));
  // header plus one row per epoch
  CHECK(line_count(p.model / "loss.csv") == 4);
  std::string head = slurp(p.model / "loss.csv").substr(0, 11);
  CHECK(head == "epoch,loss\n");

  // retraining with the same seed reproduces the checkpoint bit for bit
  fs::path again = temp_dir("model2");
  REQUIRE(run("train --manifest " + (p.data / "manifest.csv").string() + " --out " +
              again.string() +
              " --seed 1 --epochs 3 --lr 1e-3 --feature-dim 8 --hidden-dim 6 --history 2") == 0);
  CHECK(slurp(p.model / "checkpoint.antn") == slurp(again / "checkpoint.antn"));
  CHECK(slurp(p.model / "loss.csv") == slurp(again / "loss.csv"));
  fs::remove_all(again);
}

TEST_CASE("explain writes one map per frame per method") {
  Pipeline& p = pipeline();
  fs::path out = temp_dir("explain");
  REQUIRE(run("explain --checkpoint " + (p.model / "checkpoint.antn").string() + " --manifest " +
              (p.data / "manifest.csv").string() + " --out " + out.string() +
              " --methods grad-cam,eigen-cam --out-h 24 --out-w 24") == 0);
  std::size_t videos = 0;
  for (const auto& entry : fs::directory_iterator(out)) {
    if (!entry.is_directory()) continue;
    ++videos;
    CHECK(line_count(entry.path() / "probs.csv") == 9);  // header + 8 frames
    for (const char* method : {"grad-cam", "eigen-cam"}) {
      std::size_t maps = 0;
      for (const auto& f : fs::directory_iterator(entry.path() / method)) {
        CHECK(f.path().extension() == ".pgm");
        ++maps;
      }
      CHECK(maps == 8);
    }
  }
  CHECK(videos == 6);
  fs::remove_all(out);
}

TEST_CASE("a zero checkpoint scores every frame at one half") {
  Pipeline& p = pipeline();
  NetConfig cfg;
  cfg.channels = 2;
  cfg.map_h = 6;
  cfg.map_w = 6;
  cfg.feature_dim = 8;
  cfg.hidden_dim = 6;
  cfg.history_len = 2;
  fs::path dir = temp_dir("zero");
  save_checkpoint(dir / "zero.antn", cfg, NetParams::zeros(cfg));

  fs::path out = temp_dir("zero_out");
  REQUIRE(run("explain --checkpoint " + (dir / "zero.antn").string() + " --manifest " +
              (p.data / "manifest.csv").string() + " --out " + out.string()) == 0);
  for (const auto& entry : fs::directory_iterator(out)) {
    if (!entry.is_directory()) continue;
    std::ifstream probs(entry.path() / "probs.csv");
    std::string line;
    std::getline(probs, line);  // header
    while (std::getline(probs, line)) {
      CHECK(line.substr(line.find(',') + 1) == "0.5");
    }
  }
  fs::remove_all(dir);
  fs::remove_all(out);
}

TEST_CASE("eval emits metrics and is reproducible") {
  Pipeline& p = pipeline();
  fs::path a = temp_dir("eval_a");
  fs::path b = temp_dir("eval_b");
  std::string args = "eval --checkpoint " + (p.model / "checkpoint.antn").string() +
                     " --manifest " + (p.data / "manifest.csv").string() + " --out ";
  REQUIRE(run(args + a.string()) == 0);
  REQUIRE(run(args + b.string()) == 0);
  CHECK(slurp(a / "summary.csv") == slurp(b / "summary.csv"));
  CHECK(slurp(a / "per_video.csv") == slurp(b / "per_video.csv"));
  CHECK(slurp(a / "summary.csv").substr(0, 21) == "AP,mTTA,P@80R,TTA@80R");
  CHECK(line_count(a / "per_video.csv") == 7);  // header + 6 videos
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("runtime failures exit with status 1") {
  Pipeline& p = pipeline();
  // checkpoint whose shape disagrees with the data
  fs::path dir = temp_dir("badshape");
  NetConfig wrong;
  wrong.channels = 3;  // data has 2
  wrong.map_h = 6;
  wrong.map_w = 6;
  wrong.feature_dim = 8;
  wrong.hidden_dim = 6;
  wrong.history_len = 2;
  save_checkpoint(dir / "wrong.antn", wrong, NetParams::zeros(wrong));
  CHECK(run("eval --checkpoint " + (dir / "wrong.antn").string() + " --manifest " +
            (p.data / "manifest.csv").string() + " --out " + (dir / "out").string()) == 1);

  // corrupt feature file behind a valid manifest
  fs::path cdir = temp_dir("corrupt");
  std::ofstream(cdir / "v.fmap", std::ios::binary) << "garbage";
  std::ofstream(cdir / "manifest.csv") << "v,0,,10,8,v.fmap\n";
  CHECK(run("train --manifest " + (cdir / "manifest.csv").string() + " --out " +
            (cdir / "out").string() + " --seed 1 --epochs 1") == 1);

  // missing files
  CHECK(run("train --manifest /nonexistent/m.csv --out " + (dir / "o2").string() + " --seed 1") ==
        1);
  CHECK(run("eval --checkpoint /nonexistent/c.antn --manifest " +
            (p.data / "manifest.csv").string() + " --out " + (dir / "o3").string()) == 1);
  fs::remove_all(dir);
  fs::remove_all(cdir);
}

TEST_CASE("xai-eval scores saliency against gaze") {
  Pipeline& p = pipeline();
  fs::path sal = temp_dir("xai_sal");
  REQUIRE(run("explain --checkpoint " + (p.model / "checkpoint.antn").string() + " --manifest " +
              (p.data / "manifest.csv").string() + " --out " + sal.string() +
              " --methods grad-cam --out-h 24 --out-w 24") == 0);

  // synthetic gaze: a cluster of fixations on one video's first frame
  std::vector<VideoRecord> recs = load_manifest(p.data / "manifest.csv");
  fs::path gaze = sal / "gaze.csv";
  {
    std::ofstream g(gaze);
    g << "participant_id,video_id,frame_index,timestamp_ms,x,y,kind\n";
    for (int i = 0; i < 5; ++i) {
      g << "p1," << recs[0].id << ",0," << i * 30 << "," << (10 + i) << ",12,fixation\n";
      g << "p1," << recs[1].id << ",1," << i * 30 << "," << (8 + i) << ",6,fixation\n";
    }
  }

  fs::path out = temp_dir("xai_out");
  std::string args = "xai-eval --saliency " + sal.string() + " --gaze " + gaze.string() +
                     " --manifest " + (p.data / "manifest.csv").string() +
                     " --kernel-size 9 --sigma 2 --borji-splits 20 --out ";
  REQUIRE(run(args + out.string() + " --seed 5") == 0);
  CHECK(fs::exists(out / "xai_summary.csv"));
  CHECK(line_count(out / "xai_summary.csv") == 2);  // header + grad-cam row
  // header + up to 2 scored frames (a degenerate map may be skipped)
  CHECK(line_count(out / "xai_frames.csv") >= 2);
  CHECK(line_count(out / "xai_frames.csv") <= 3);

  // same seed reproduces, different seed moves the resampled columns
  fs::path out2 = temp_dir("xai_out2");
  REQUIRE(run(args + out2.string() + " --seed 5") == 0);
  CHECK(slurp(out / "xai_summary.csv") == slurp(out2 / "xai_summary.csv"));

  // unknown video id in the gaze log is a data error
  std::ofstream(gaze, std::ios::app) << "p1,not_a_video,0,0,1,1,fixation\n";
  CHECK(run(args + (sal / "o3").string() + " --seed 5") == 1);

  // gaze file with only a header has nothing to score
  fs::path empty = sal / "empty.csv";
  std::ofstream(empty) << "participant_id,video_id,frame_index,timestamp_ms,x,y,kind\n";
  CHECK(run("xai-eval --saliency " + sal.string() + " --gaze " + empty.string() + " --manifest " +
            (p.data / "manifest.csv").string() + " --out " + (sal / "o4").string() + " --seed 5") ==
        1);
  fs::remove_all(sal);
  fs::remove_all(out);
  fs::remove_all(out2);
}

TEST_CASE("config file supplies defaults that flags override") {
  fs::path dir = temp_dir("config");
  std::ofstream(dir / "synth.cfg") << "positives=2\nnegatives=1\nframes=6\nlead=3\n"
                                   << "channels=2\nmap-h=5\nmap-w=5\n";
  REQUIRE(run("synth --config " + (dir / "synth.cfg").string() + " --out " +
              (dir / "a").string() + " --seed 3") == 0);
  CHECK(line_count(dir / "a" / "manifest.csv") == 3);

  // flag beats the file
  REQUIRE(run("synth --config " + (dir / "synth.cfg").string() + " --out " +
              (dir / "b").string() + " --seed 3 --negatives 3") == 0);
  CHECK(line_count(dir / "b" / "manifest.csv") == 5);
  fs::remove_all(dir);
}
