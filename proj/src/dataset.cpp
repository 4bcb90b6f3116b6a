#include "mmseq/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "mmseq/error.hpp"
#include "mmseq/rng.hpp"

namespace mmseq {

namespace {

constexpr char kTextMagic[] = "mmseq-dataset";
constexpr char kBinaryMagic[8] = {'M', 'M', 'S', 'Q', 'D', 'S', '0', '1'};
constexpr double kMeanTolerance = 1e-9;

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view tok, const std::string& where) {
  double v = 0.0;
  const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
    throw DataError(where + ": cannot parse number '" + std::string(tok) + "'");
  }
  return v;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      break;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

void parse_numbers(std::string_view field, double* dst, std::size_t expect,
                   const std::string& where) {
  std::size_t count = 0;
  std::size_t start = 0;
  while (start < field.size()) {
    std::size_t end = field.find(' ', start);
    if (end == std::string_view::npos) end = field.size();
    if (end > start) {
      if (count >= expect) {
        throw DataError(where + ": has more than " + std::to_string(expect) + " values");
      }
      dst[count++] = parse_double(field.substr(start, end - start), where);
    }
    start = end + 1;
  }
  if (count != expect) {
    throw DataError(where + ": has " + std::to_string(count) + " values, expected " +
                    std::to_string(expect));
  }
}

void validate_example(const FrameExample& ex, const DatasetHeader& header,
                      const std::string& where) {
  if (ex.visual.rows < 1) {
    throw DataError(where + ": empty frame sequence");
  }
  if (ex.visual.rows != ex.audio.rows) {
    throw DataError(where + ": visual has " + std::to_string(ex.visual.rows) +
                    " frames but audio has " + std::to_string(ex.audio.rows));
  }
  if (ex.visual.cols != header.visual_dim || ex.audio.cols != header.audio_dim) {
    throw DataError(where + ": feature widths do not match the header");
  }
  if (!all_finite(ex.visual) || !all_finite(ex.audio) || !all_finite(ex.mean_visual) ||
      !all_finite(ex.mean_audio)) {
    throw DataError(where + ": non-finite feature value");
  }
  for (std::size_t i = 1; i < ex.labels.size(); ++i) {
    if (ex.labels[i] == ex.labels[i - 1]) {
      throw DataError(where + ": duplicate label " + std::to_string(ex.labels[i]));
    }
  }
  for (std::int32_t l : ex.labels) {
    if (l < 0 || static_cast<std::size_t>(l) >= header.num_classes) {
      throw DataError(where + ": label " + std::to_string(l) + " outside [0, " +
                      std::to_string(header.num_classes) + ")");
    }
  }
  const Vec mv = column_means(ex.visual);
  const Vec ma = column_means(ex.audio);
  for (std::size_t j = 0; j < mv.size(); ++j) {
    if (std::abs(mv[j] - ex.mean_visual[j]) > kMeanTolerance) {
      throw DataError(where + ": field 'mean_visual' disagrees with the frame means");
    }
  }
  for (std::size_t j = 0; j < ma.size(); ++j) {
    if (std::abs(ma[j] - ex.mean_audio[j]) > kMeanTolerance) {
      throw DataError(where + ": field 'mean_audio' disagrees with the frame means");
    }
  }
}

void write_dataset_text(const std::vector<FrameExample>& examples, const DatasetHeader& h,
                        std::ofstream& out) {
  out << kTextMagic << " v1 classes=" << h.num_classes << " frames=" << h.frames
      << " dv=" << h.visual_dim << " da=" << h.audio_dim << " videos=" << examples.size()
      << "\n";
  for (const FrameExample& ex : examples) {
    out << ex.video_id << '|';
    for (std::size_t i = 0; i < ex.labels.size(); ++i) {
      if (i) out << ',';
      out << ex.labels[i];
    }
    out << '|' << ex.visual.rows << '|';
    for (std::size_t i = 0; i < ex.visual.data.size(); ++i) {
      if (i) out << ' ';
      out << format_double(ex.visual.data[i]);
    }
    out << '|';
    for (std::size_t i = 0; i < ex.audio.data.size(); ++i) {
      if (i) out << ' ';
      out << format_double(ex.audio.data[i]);
    }
    out << '|';
    for (std::size_t i = 0; i < ex.mean_visual.size(); ++i) {
      if (i) out << ' ';
      out << format_double(ex.mean_visual[i]);
    }
    out << '|';
    for (std::size_t i = 0; i < ex.mean_audio.size(); ++i) {
      if (i) out << ' ';
      out << format_double(ex.mean_audio[i]);
    }
    out << '\n';
  }
}

template <typename T>
void put_raw(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get_raw(std::ifstream& in, const std::string& where) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) {
    throw DataError(where + ": truncated file");
  }
  return v;
}

void write_dataset_binary(const std::vector<FrameExample>& examples, const DatasetHeader& h,
                          std::ofstream& out) {
  out.write(kBinaryMagic, sizeof(kBinaryMagic));
  put_raw<std::uint32_t>(out, 1);  // version
  put_raw<std::uint64_t>(out, h.num_classes);
  put_raw<std::uint64_t>(out, h.frames);
  put_raw<std::uint64_t>(out, h.visual_dim);
  put_raw<std::uint64_t>(out, h.audio_dim);
  put_raw<std::uint64_t>(out, examples.size());
  for (const FrameExample& ex : examples) {
    put_raw<std::uint32_t>(out, static_cast<std::uint32_t>(ex.video_id.size()));
    out.write(ex.video_id.data(), static_cast<std::streamsize>(ex.video_id.size()));
    put_raw<std::uint32_t>(out, static_cast<std::uint32_t>(ex.labels.size()));
    for (std::int32_t l : ex.labels) put_raw<std::int32_t>(out, l);
    put_raw<std::uint64_t>(out, ex.visual.rows);
    out.write(reinterpret_cast<const char*>(ex.visual.data.data()),
              static_cast<std::streamsize>(ex.visual.data.size() * sizeof(double)));
    out.write(reinterpret_cast<const char*>(ex.audio.data.data()),
              static_cast<std::streamsize>(ex.audio.data.size() * sizeof(double)));
    out.write(reinterpret_cast<const char*>(ex.mean_visual.data()),
              static_cast<std::streamsize>(ex.mean_visual.size() * sizeof(double)));
    out.write(reinterpret_cast<const char*>(ex.mean_audio.data()),
              static_cast<std::streamsize>(ex.mean_audio.size() * sizeof(double)));
  }
}

std::vector<FrameExample> load_dataset_text(std::ifstream& in, DatasetHeader& header,
                                            const std::string& path) {
  std::string line;
  if (!std::getline(in, line)) {
    throw DataError(path + ": empty file");
  }
  std::istringstream hs(line);
  std::string magic, version;
  hs >> magic >> version;
  if (magic != kTextMagic) {
    throw DataError(path + ": not a dataset file");
  }
  if (version != "v1") {
    throw DataError(path + ": unsupported dataset version '" + version + "'");
  }
  std::size_t videos = 0;
  std::string kv;
  while (hs >> kv) {
    const std::size_t eq = kv.find('=');
    if (eq == std::string::npos) {
      throw DataError(path + ": malformed header token '" + kv + "'");
    }
    const std::string key = kv.substr(0, eq);
    const std::size_t value = static_cast<std::size_t>(
        parse_double(std::string_view(kv).substr(eq + 1), path + ": header"));
    if (key == "classes") {
      header.num_classes = value;
    } else if (key == "frames") {
      header.frames = value;
    } else if (key == "dv") {
      header.visual_dim = value;
    } else if (key == "da") {
      header.audio_dim = value;
    } else if (key == "videos") {
      videos = value;
    } else {
      throw DataError(path + ": unknown header key '" + key + "'");
    }
  }

  std::vector<FrameExample> out;
  out.reserve(videos);
  std::size_t record = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::string where = path + ": record " + std::to_string(record);
    const auto fields = split(line, '|');
    if (fields.size() != 7) {
      throw DataError(where + ": has " + std::to_string(fields.size()) + " fields, expected 7");
    }
    FrameExample ex;
    ex.video_id = std::string(fields[0]);
    if (ex.video_id.empty()) {
      throw DataError(where + ": field 'video_id' is empty");
    }
    if (!fields[1].empty()) {
      for (std::string_view tok : split(fields[1], ',')) {
        ex.labels.push_back(
            static_cast<std::int32_t>(parse_double(tok, where + ": field 'labels'")));
      }
      std::sort(ex.labels.begin(), ex.labels.end());
    }
    const std::size_t t_len =
        static_cast<std::size_t>(parse_double(fields[2], where + ": field 'frames'"));
    if (t_len < 1) {
      throw DataError(where + ": field 'frames' must be >= 1");
    }
    ex.visual = Matrix(t_len, header.visual_dim);
    ex.audio = Matrix(t_len, header.audio_dim);
    ex.mean_visual.resize(header.visual_dim);
    ex.mean_audio.resize(header.audio_dim);
    parse_numbers(fields[3], ex.visual.data.data(), t_len * header.visual_dim,
                  where + ": field 'visual'");
    parse_numbers(fields[4], ex.audio.data.data(), t_len * header.audio_dim,
                  where + ": field 'audio'");
    parse_numbers(fields[5], ex.mean_visual.data(), header.visual_dim,
                  where + ": field 'mean_visual'");
    parse_numbers(fields[6], ex.mean_audio.data(), header.audio_dim,
                  where + ": field 'mean_audio'");
    validate_example(ex, header, where);
    out.push_back(std::move(ex));
    ++record;
  }
  if (videos != out.size()) {
    throw DataError(path + ": header promises " + std::to_string(videos) + " videos, found " +
                    std::to_string(out.size()));
  }
  return out;
}

// the caller has already consumed the 8-byte magic
std::vector<FrameExample> load_dataset_binary(std::ifstream& in, DatasetHeader& header,
                                              const std::string& path) {
  const std::uint32_t version = get_raw<std::uint32_t>(in, path);
  if (version != 1) {
    throw DataError(path + ": unsupported dataset version " + std::to_string(version));
  }
  header.num_classes = get_raw<std::uint64_t>(in, path);
  header.frames = get_raw<std::uint64_t>(in, path);
  header.visual_dim = get_raw<std::uint64_t>(in, path);
  header.audio_dim = get_raw<std::uint64_t>(in, path);
  const std::uint64_t videos = get_raw<std::uint64_t>(in, path);

  std::vector<FrameExample> out;
  out.reserve(videos);
  for (std::uint64_t r = 0; r < videos; ++r) {
    const std::string where = path + ": record " + std::to_string(r);
    FrameExample ex;
    const std::uint32_t id_len = get_raw<std::uint32_t>(in, where);
    ex.video_id.resize(id_len);
    in.read(ex.video_id.data(), id_len);
    const std::uint32_t n_labels = get_raw<std::uint32_t>(in, where);
    for (std::uint32_t i = 0; i < n_labels; ++i) {
      ex.labels.push_back(get_raw<std::int32_t>(in, where + ": field 'labels'"));
    }
    std::sort(ex.labels.begin(), ex.labels.end());
    const std::uint64_t t_len = get_raw<std::uint64_t>(in, where);
    if (t_len < 1) {
      throw DataError(where + ": field 'frames' must be >= 1");
    }
    ex.visual = Matrix(t_len, header.visual_dim);
    ex.audio = Matrix(t_len, header.audio_dim);
    ex.mean_visual.resize(header.visual_dim);
    ex.mean_audio.resize(header.audio_dim);
    auto read_block = [&](double* dst, std::size_t n, const char* field) {
      in.read(reinterpret_cast<char*>(dst), static_cast<std::streamsize>(n * sizeof(double)));
      if (!in) {
        throw DataError(where + ": field '" + field + "' is truncated");
      }
    };
    read_block(ex.visual.data.data(), ex.visual.data.size(), "visual");
    read_block(ex.audio.data.data(), ex.audio.data.size(), "audio");
    read_block(ex.mean_visual.data(), ex.mean_visual.size(), "mean_visual");
    read_block(ex.mean_audio.data(), ex.mean_audio.size(), "mean_audio");
    validate_example(ex, header, where);
    out.push_back(std::move(ex));
  }
  return out;
}

}  // namespace

SyntheticDataset generate_synthetic(const DatasetSpec& spec) {
  if (spec.num_videos < 1 || spec.num_classes < 1 || spec.frames < 1 || spec.visual_dim < 1 ||
      spec.audio_dim < 1) {
    throw ConfigError("generate_synthetic: all counts must be >= 1");
  }
  if (spec.labels_per_video < 1.0 ||
      spec.labels_per_video > static_cast<double>(spec.num_classes)) {
    throw ConfigError("generate_synthetic: labels_per_video must lie in [1, num_classes]");
  }
  if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0) && spec.num_videos > 1) {
    throw ConfigError("generate_synthetic: train_fraction must lie in (0, 1)");
  }

  SplitMix64 master(spec.seed);
  SplitMix64 rng_patterns(master.next());
  SplitMix64 rng_videos(master.next());

  const std::size_t c_num = spec.num_classes;
  const std::size_t half = (c_num + 1) / 2;

  // one unit-norm direction per pattern index, spanning both modalities
  auto draw_direction = [&](std::size_t dim) {
    Vec v(dim);
    double norm = 0.0;
    for (double& x : v) {
      x = rng_patterns.next_gaussian();
      norm += x * x;
    }
    norm = std::sqrt(norm);
    if (norm > 0.0) {
      for (double& x : v) x /= norm;
    }
    return v;
  };
  std::vector<Vec> vis_pattern(half), aud_pattern(half);
  for (std::size_t d = 0; d < half; ++d) {
    vis_pattern[d] = draw_direction(spec.visual_dim);
    aud_pattern[d] = draw_direction(spec.audio_dim);
  }

  // class-specific frame-position bands: paired classes share a direction
  // but live in opposite halves of the timeline
  const std::size_t band_len = std::max<std::size_t>(1, spec.frames / 5);
  auto band_start_range = [&](std::size_t cls) {
    const bool early = cls < half;
    const std::size_t half_t = std::max<std::size_t>(1, spec.frames / 2);
    const std::size_t lo = early ? 0 : std::min(spec.frames - 1, half_t);
    const std::size_t hi_excl = early ? half_t : spec.frames;
    const std::size_t span = hi_excl > lo + band_len ? hi_excl - lo - band_len + 1 : 1;
    return std::pair<std::size_t, std::size_t>(lo, span);
  };

  const double label_p =
      c_num > 1 ? (spec.labels_per_video - 1.0) / static_cast<double>(c_num - 1) : 0.0;

  auto make_example = [&](std::size_t index) {
    FrameExample ex;
    char idbuf[24];
    std::snprintf(idbuf, sizeof(idbuf), "v%06zu", index);
    ex.video_id = idbuf;
    ex.visual = Matrix(spec.frames, spec.visual_dim);
    ex.audio = Matrix(spec.frames, spec.audio_dim);
    for (double& v : ex.visual.data) v = rng_videos.next_gaussian();
    for (double& v : ex.audio.data) v = rng_videos.next_gaussian();

    // 1 + Binomial(C-1, p) labels, mean = labels_per_video
    std::size_t n_labels = 1;
    for (std::size_t c = 0; c + 1 < c_num; ++c) {
      if (rng_videos.next_unit() <= label_p) ++n_labels;
    }
    std::vector<std::int32_t> pool(c_num);
    for (std::size_t c = 0; c < c_num; ++c) pool[c] = static_cast<std::int32_t>(c);
    for (std::size_t i = 0; i < n_labels; ++i) {
      const std::size_t j = i + rng_videos.next_below(c_num - i);
      std::swap(pool[i], pool[j]);
    }
    ex.labels.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(n_labels));
    std::sort(ex.labels.begin(), ex.labels.end());

    for (std::int32_t cls : ex.labels) {
      const std::size_t dir_idx = static_cast<std::size_t>(cls) % half;
      const auto [lo, span] = band_start_range(static_cast<std::size_t>(cls));
      const std::size_t start = lo + rng_videos.next_below(span);
      for (std::size_t t = start; t < std::min(start + band_len, spec.frames); ++t) {
        for (std::size_t j = 0; j < spec.visual_dim; ++j) {
          ex.visual(t, j) += spec.signal_strength * vis_pattern[dir_idx][j];
        }
        for (std::size_t j = 0; j < spec.audio_dim; ++j) {
          ex.audio(t, j) += spec.signal_strength * aud_pattern[dir_idx][j];
        }
      }
    }
    ex.mean_visual = column_means(ex.visual);
    ex.mean_audio = column_means(ex.audio);
    return ex;
  };

  SyntheticDataset out;
  const std::size_t n_train = spec.num_videos > 1
                                  ? static_cast<std::size_t>(std::llround(
                                        spec.train_fraction * static_cast<double>(spec.num_videos)))
                                  : 1;
  for (std::size_t i = 0; i < spec.num_videos; ++i) {
    FrameExample ex = make_example(i);
    if (i < n_train) {
      out.train.push_back(std::move(ex));
    } else {
      out.test.push_back(std::move(ex));
    }
  }
  return out;
}

void write_dataset(const std::vector<FrameExample>& examples, const DatasetHeader& header,
                   const std::string& path, FileFormat format) {
  std::ofstream out(path, format == FileFormat::binary ? std::ios::binary : std::ios::out);
  if (!out) {
    throw DataError("write_dataset: cannot open '" + path + "' for writing");
  }
  if (format == FileFormat::binary) {
    write_dataset_binary(examples, header, out);
  } else {
    write_dataset_text(examples, header, out);
  }
  if (!out) {
    throw DataError("write_dataset: write to '" + path + "' failed");
  }
}

std::vector<FrameExample> load_dataset(const std::string& path, DatasetHeader* header) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw DataError("load_dataset: cannot open '" + path + "'");
  }
  char magic[8] = {};
  in.read(magic, sizeof(magic));
  if (!in) {
    throw DataError(path + ": file too short");
  }
  DatasetHeader local;
  DatasetHeader& h = header ? *header : local;
  if (std::memcmp(magic, kBinaryMagic, sizeof(kBinaryMagic)) == 0) {
    return load_dataset_binary(in, h, path);
  }
  in.seekg(0);
  return load_dataset_text(in, h, path);
}

GroundTruth ground_truth_of(const std::vector<FrameExample>& examples) {
  GroundTruth truth;
  for (const FrameExample& ex : examples) truth[ex.video_id] = ex.labels;
  return truth;
}

void write_predictions(const PredictionSet& preds, const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw DataError("write_predictions: cannot open '" + path + "' for writing");
  }
  out << "VideoId,LabelConfidencePairs\n";
  for (const auto& [vid, plist] : preds) {
    PredictionList sorted = plist;
    std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return a.first < b.first;
    });
    out << vid << ',';
    char buf[48];
    for (std::size_t i = 0; i < sorted.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%s%d %.6f", i ? " " : "", sorted[i].first,
                    sorted[i].second);
      out << buf;
    }
    out << '\n';
  }
  if (!out) {
    throw DataError("write_predictions: write to '" + path + "' failed");
  }
}

PredictionSet read_predictions(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw DataError("read_predictions: cannot open '" + path + "'");
  }
  std::string line;
  if (!std::getline(in, line) || line != "VideoId,LabelConfidencePairs") {
    throw DataError(path + ": missing prediction header");
  }
  PredictionSet out;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::string where = path + ": row " + std::to_string(row);
    const std::size_t comma = line.find(',');
    if (comma == std::string::npos || comma == 0) {
      throw DataError(where + ": malformed row");
    }
    const std::string vid = line.substr(0, comma);
    if (out.count(vid)) {
      throw DataError(where + ": duplicate video id '" + vid + "'");
    }
    PredictionList plist;
    std::istringstream rest(line.substr(comma + 1));
    std::string label_tok, conf_tok;
    while (rest >> label_tok) {
      if (!(rest >> conf_tok)) {
        throw DataError(where + ": label '" + label_tok + "' has no confidence");
      }
      plist.emplace_back(
          static_cast<std::int32_t>(parse_double(label_tok, where + ": label")),
          parse_double(conf_tok, where + ": confidence"));
    }
    out[vid] = std::move(plist);
    ++row;
  }
  return out;
}

double quantize_confidence(double conf) {
  return static_cast<double>(std::llround(conf * 1e6)) / 1e6;
}

}  // namespace mmseq
