#include "anticipatr/data.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>

#include "anticipatr/parallel.hpp"
#include "anticipatr/rng.hpp"

namespace anticipatr {

namespace {

constexpr char kFmapMagic[4] = {'F', 'M', 'A', 'P'};
constexpr std::uint32_t kFmapVersion = 1;

void write_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32(std::istream& is, const std::filesystem::path& path, std::size_t offset) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4)) {
    throw FormatError(path.string() + ": truncated header at byte offset " +
                      std::to_string(offset));
  }
  return std::uint32_t(b[0]) | (std::uint32_t(b[1]) << 8) | (std::uint32_t(b[2]) << 16) |
         (std::uint32_t(b[3]) << 24);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

}  // namespace

std::vector<VideoRecord> load_manifest(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw DataError("manifest: cannot open " + path.string());
  std::filesystem::path base = path.parent_path();
  std::vector<VideoRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f = split_csv(line);
    if (f.size() != 6) {
      throw DataError("manifest: line " + std::to_string(lineno) + " has " +
                      std::to_string(f.size()) + " fields, expected 6");
    }
    VideoRecord r;
    try {
      r.id = f[0];
      r.label = std::stoi(f[1]);
      if (!f[2].empty()) r.tau = std::stoul(f[2]);
      r.fps = std::stod(f[3]);
      r.frames = std::stoul(f[4]);
    } catch (const std::exception&) {
      throw DataError("manifest: unparseable record at line " + std::to_string(lineno));
    }
    std::filesystem::path p = f[5];
    r.path = p.is_absolute() ? p : base / p;
    if (r.label != 0 && r.label != 1) {
      throw DataError("manifest: line " + std::to_string(lineno) + ": label must be 0 or 1");
    }
    if (r.label == 1 && !r.tau.has_value()) {
      throw DataError("manifest: line " + std::to_string(lineno) + ": positive video lacks tau");
    }
    if (r.tau.has_value() && *r.tau > r.frames) {
      throw DataError("manifest: line " + std::to_string(lineno) + ": tau beyond video length");
    }
    if (r.fps <= 0.0) {
      throw DataError("manifest: line " + std::to_string(lineno) + ": fps must be positive");
    }
    out.push_back(std::move(r));
  }
  return out;
}

void save_manifest(const std::filesystem::path& path, const std::vector<VideoRecord>& records) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw DataError("manifest: cannot write " + path.string());
  for (const VideoRecord& r : records) {
    os << r.id << ',' << r.label << ',';
    if (r.tau.has_value()) os << *r.tau;
    os << ',' << r.fps << ',' << r.frames << ',' << r.path.filename().string() << '\n';
  }
}

void save_fmap(const std::filesystem::path& path, const FeatureMapSeq& seq) {
  if (seq.empty()) throw ContractError("save_fmap: empty sequence");
  const auto& s = seq.front().shape;
  if (s.size() != 3) throw ShapeError("save_fmap: frames must be K x U x V");
  for (const Tensor& t : seq) {
    if (t.shape != s) throw ShapeError("save_fmap: frames disagree on shape");
  }
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw FormatError("save_fmap: cannot write " + path.string());
  os.write(kFmapMagic, 4);
  write_u32(os, kFmapVersion);
  write_u32(os, static_cast<std::uint32_t>(seq.size()));
  for (std::size_t d : s) write_u32(os, static_cast<std::uint32_t>(d));
  for (const Tensor& t : seq) {
    for (double v : t.data) {
      float f = static_cast<float>(v);
      std::uint32_t bits;
      std::memcpy(&bits, &f, 4);
      write_u32(os, bits);
    }
  }
}

FeatureMapSeq load_fmap(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("load_fmap: cannot open " + path.string());
  char magic[4];
  if (!is.read(magic, 4)) throw FormatError(path.string() + ": truncated at byte offset 0");
  if (std::memcmp(magic, kFmapMagic, 4) != 0) {
    throw FormatError(path.string() + ": bad magic at byte offset 0, expected \"FMAP\"");
  }
  std::uint32_t version = read_u32(is, path, 4);
  if (version != kFmapVersion) {
    throw FormatError(path.string() + ": unsupported version " + std::to_string(version));
  }
  std::uint32_t t = read_u32(is, path, 8);
  std::uint32_t k = read_u32(is, path, 12);
  std::uint32_t u = read_u32(is, path, 16);
  std::uint32_t v = read_u32(is, path, 20);
  if (t == 0 || k == 0 || u == 0 || v == 0) {
    throw FormatError(path.string() + ": zero dimension in header");
  }
  std::size_t per_frame = std::size_t(k) * u * v;
  FeatureMapSeq seq;
  seq.reserve(t);
  std::size_t offset = 24;
  std::vector<char> buf(per_frame * 4);
  for (std::uint32_t frame = 0; frame < t; ++frame) {
    if (!is.read(buf.data(), std::streamsize(buf.size()))) {
      throw FormatError(path.string() + ": truncated payload at byte offset " +
                        std::to_string(offset + std::size_t(is.gcount())));
    }
    std::vector<double> vals(per_frame);
    for (std::size_t i = 0; i < per_frame; ++i) {
      std::uint32_t bits = std::uint32_t(static_cast<unsigned char>(buf[4 * i])) |
                           (std::uint32_t(static_cast<unsigned char>(buf[4 * i + 1])) << 8) |
                           (std::uint32_t(static_cast<unsigned char>(buf[4 * i + 2])) << 16) |
                           (std::uint32_t(static_cast<unsigned char>(buf[4 * i + 3])) << 24);
      float f;
      std::memcpy(&f, &bits, 4);
      if (!std::isfinite(f)) {
        throw FormatError(path.string() + ": non-finite value at byte offset " +
                          std::to_string(offset + 4 * i));
      }
      vals[i] = double(f);
    }
    seq.push_back(Tensor({k, u, v}, std::move(vals)));
    offset += buf.size();
  }
  char extra;
  if (is.read(&extra, 1)) {
    throw FormatError(path.string() + ": trailing bytes after declared payload at byte offset " +
                      std::to_string(offset));
  }
  return seq;
}

SynthConfig::Patch SynthConfig::patch() const {
  return Patch{map_h / 4, map_w / 4, std::max<std::size_t>(1, map_h / 2),
               std::max<std::size_t>(1, map_w / 2)};
}

void SynthConfig::validate() const {
  if (frames == 0 || channels == 0 || map_h == 0 || map_w == 0) {
    throw ContractError("synth config: dimensions must be positive");
  }
  if (amplitude <= 0.0) throw ContractError("synth config: amplitude must be positive");
  if (lead == 0 || lead > frames) {
    throw ContractError("synth config: lead must lie in [1, frames]");
  }
  if (fps <= 0.0) throw ContractError("synth config: fps must be positive");
  if (signal_channel >= channels) throw ContractError("synth config: signal channel out of range");
  Patch p = patch();
  if (p.row0 + p.rows > map_h || p.col0 + p.cols > map_w) {
    throw ContractError("synth config: patch exceeds map bounds");
  }
}

SynthResult synth_generate(const SynthConfig& cfg, const std::filesystem::path& out_dir) {
  cfg.validate();
  std::filesystem::create_directories(out_dir);
  std::size_t total = cfg.n_positive + cfg.n_negative;

  std::vector<VideoRecord> records(total);
  SynthConfig::Patch patch = cfg.patch();

  parallel_for(total, [&](std::size_t i) {
    bool positive = i < cfg.n_positive;
    std::mt19937_64 rng(mix_seed(stream_seed(cfg.seed, "synth") + i));
    std::normal_distribution<double> noise(0.0, cfg.noise_scale);

    std::optional<std::size_t> tau;
    if (positive) {
      // final 20% of frames, mirroring crash placement in the last seconds
      std::size_t lo = (cfg.frames * 4) / 5;
      if (lo >= cfg.frames) lo = cfg.frames - 1;
      std::uniform_int_distribution<std::size_t> place(lo, cfg.frames - 1);
      tau = place(rng);
    }

    FeatureMapSeq seq;
    seq.reserve(cfg.frames);
    for (std::size_t t = 0; t < cfg.frames; ++t) {
      Tensor frame = Tensor::zeros({cfg.channels, cfg.map_h, cfg.map_w});
      for (double& v : frame.data) v = noise(rng);
      if (positive) {
        double frac;
        if (t >= *tau) {
          frac = 1.0;
        } else if (cfg.lead == 0 || double(*tau) - double(t) >= double(cfg.lead)) {
          frac = 0.0;
        } else {
          frac = 1.0 - (double(*tau) - double(t)) / double(cfg.lead);
        }
        if (frac > 0.0) {
          double add = cfg.amplitude * frac;
          std::size_t base = cfg.signal_channel * cfg.map_h * cfg.map_w;
          for (std::size_t r = patch.row0; r < patch.row0 + patch.rows; ++r) {
            for (std::size_t c = patch.col0; c < patch.col0 + patch.cols; ++c) {
              frame.data[base + r * cfg.map_w + c] += add;
            }
          }
        }
      }
      seq.push_back(std::move(frame));
    }

    char name[32];
    std::snprintf(name, sizeof(name), "v%04zu.fmap", i);
    std::filesystem::path file = out_dir / name;
    save_fmap(file, seq);

    VideoRecord r;
    std::snprintf(name, sizeof(name), "v%04zu", i);
    r.id = name;
    r.label = positive ? 1 : 0;
    r.tau = tau;
    r.fps = cfg.fps;
    r.frames = cfg.frames;
    r.path = file;
    records[i] = std::move(r);
  });

  SynthResult result;
  result.records = std::move(records);
  result.manifest = out_dir / "manifest.csv";
  save_manifest(result.manifest, result.records);
  return result;
}

}  // namespace anticipatr
