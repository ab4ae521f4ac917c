#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "vibrodiag/error.hpp"
#include "vibrodiag/labels.hpp"
#include "vibrodiag/parallel.hpp"
#include "vibrodiag/text.hpp"

namespace vibrodiag {

namespace fs = std::filesystem;

/// One row of a recording: time in seconds, acceleration in g.
/// Rows with an unparseable or non-finite cell keep their position but are
/// flagged `missing`; the spectrum stage drops them.
struct AxisSample {
  double time = 0.0;
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  bool missing = false;

  friend bool operator==(const AxisSample&, const AxisSample&) = default;
};

struct VibrationRecord {
  std::vector<AxisSample> samples;
  ConditionLabel label = ConditionLabel::Normal;
  std::string source_path;

  std::size_t valid_count() const noexcept {
    return static_cast<std::size_t>(std::count_if(
        samples.begin(), samples.end(),
        [](const AxisSample& s) { return !s.missing; }));
  }

  // Time span between the first and last usable rows.
  double duration_s() const noexcept {
    const auto first = std::find_if(samples.begin(), samples.end(),
                                    [](const auto& s) { return !s.missing; });
    const auto last = std::find_if(samples.rbegin(), samples.rend(),
                                   [](const auto& s) { return !s.missing; });
    if (first == samples.end()) return 0.0;
    return last->time - first->time;
  }

  // (n - 1) / (t_last - t_first) over usable rows.
  double sample_rate_hz() const noexcept {
    const std::size_t n = valid_count();
    const double span = duration_s();
    if (n < 2 || span <= 0.0) return 0.0;
    return static_cast<double>(n - 1) / span;
  }
};

inline constexpr double kDatasetSampleRateHz = 20000.0;
inline constexpr double kDatasetDurationS = 5.0;

/// Soft checks for records that claim to come from the lab dataset.
inline std::vector<std::string> dataset_record_warnings(
    const VibrationRecord& record) {
  std::vector<std::string> warnings;
  const double rate = record.sample_rate_hz();
  if (std::abs(rate - kDatasetSampleRateHz) > 0.05 * kDatasetSampleRateHz) {
    warnings.push_back(record.source_path + ": sample rate " +
                       text::format_double(rate) +
                       " Hz is not within 5% of 20000 Hz");
  }
  // Rows are stamped at the start of each sample, so a full recording spans
  // one sample period less than its nominal length.
  const double duration = record.duration_s() + (rate > 0.0 ? 1.0 / rate : 0.0);
  if (std::abs(duration - kDatasetDurationS) > 0.05 * kDatasetDurationS) {
    warnings.push_back(record.source_path + ": duration " +
                       text::format_double(duration) + " s is not about 5 s");
  }
  return warnings;
}

// ---------------------------------------------------------------------------
// Dataset layout

/// Directory names per condition, relative to the dataset root. A condition
/// may span several directories (e.g. one per unbalance severity); they all
/// map to the same label.
struct DatasetLayout {
  std::map<ConditionLabel, std::vector<std::string>> dirs;

  static DatasetLayout defaults() {
    DatasetLayout layout;
    for (auto label : kAllConditions)
      layout.dirs[label] = {std::string(default_dir_name(label))};
    return layout;
  }
};

inline std::optional<ConditionLabel> parse_label_key(std::string_view key) {
  key = text::trim(key);
  for (auto label : kAllConditions) {
    if (text::iequals(key, default_dir_name(label)) ||
        text::iequals(key, label_name(label)))
      return label;
  }
  if (auto code = text::parse_int(key)) return from_code(static_cast<int>(*code));
  return std::nullopt;
}

/// Manifest format: one `condition=dir[,dir...]` per line, `#` comments.
/// Conditions not mentioned keep their default directory.
inline DatasetLayout parse_manifest(std::string_view content) {
  DatasetLayout layout = DatasetLayout::defaults();
  std::size_t line_no = 0;
  std::istringstream in{std::string(content)};
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    auto body = text::trim(line);
    if (body.empty() || body.front() == '#') continue;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos)
      throw Error(ErrorCode::InvalidConfig,
                  "manifest line " + std::to_string(line_no) + " lacks '='");
    const auto label = parse_label_key(body.substr(0, eq));
    if (!label)
      throw Error(ErrorCode::InvalidConfig,
                  "manifest line " + std::to_string(line_no) +
                      ": unknown condition '" +
                      std::string(body.substr(0, eq)) + "'");
    std::vector<std::string> names;
    for (auto part : text::split(body.substr(eq + 1), ',')) {
      part = text::trim(part);
      if (!part.empty()) names.emplace_back(part);
    }
    if (names.empty())
      throw Error(ErrorCode::InvalidConfig,
                  "manifest line " + std::to_string(line_no) +
                      " names no directory");
    layout.dirs[*label] = std::move(names);
  }
  return layout;
}

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  return std::string(std::istreambuf_iterator<char>(in), {});
}

inline void write_file(const fs::path& path, std::string_view content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

inline DatasetLayout load_manifest(const fs::path& path) {
  return parse_manifest(read_file(path));
}

struct DatasetEntry {
  fs::path path;
  ConditionLabel label;

  friend bool operator==(const DatasetEntry&, const DatasetEntry&) = default;
};

/// Lists every .csv file below each condition directory (recursively),
/// labelled by the condition that owns the directory, sorted by path.
inline std::vector<DatasetEntry> scan_dataset(
    const fs::path& root, const DatasetLayout& layout = DatasetLayout::defaults()) {
  std::vector<DatasetEntry> entries;
  for (const auto& [label, names] : layout.dirs) {
    std::size_t found = 0;
    for (const auto& name : names) {
      const fs::path dir = root / name;
      if (!fs::is_directory(dir))
        throw Error(ErrorCode::MissingConditionDir, dir.string());
      for (const auto& item : fs::recursive_directory_iterator(dir)) {
        if (!item.is_regular_file()) continue;
        const auto& p = item.path();
        if (!text::iequals(p.extension().string(), ".csv")) continue;
        if (p.filename().string().starts_with('.')) continue;
        entries.push_back({p, label});
        ++found;
      }
    }
    if (found == 0)
      throw Error(ErrorCode::EmptyConditionDir,
                  std::string(label_name(label)) + " has no CSV files under " +
                      (root / names.front()).string());
  }
  std::sort(entries.begin(), entries.end(),
            [](const DatasetEntry& a, const DatasetEntry& b) {
              return a.path.generic_string() < b.path.generic_string();
            });
  return entries;
}

// ---------------------------------------------------------------------------
// CSV records

inline VibrationRecord parse_record_text(std::string_view content,
                                         ConditionLabel label,
                                         std::string source_path = {}) {
  if (content.starts_with("\xEF\xBB\xBF")) content.remove_prefix(3);

  VibrationRecord record;
  record.label = label;
  record.source_path = std::move(source_path);
  const std::string& where = record.source_path;

  bool header_seen = false;
  std::size_t line_no = 0;
  double last_time = -std::numeric_limits<double>::infinity();
  constexpr std::array<std::string_view, 4> kHeader = {"time", "x", "y", "z"};

  std::size_t pos = 0;
  while (pos < content.size()) {
    auto end = content.find('\n', pos);
    if (end == std::string_view::npos) end = content.size();
    const std::string_view line = text::trim(content.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (line.empty()) continue;

    const auto fields = text::split(line, ',');
    if (fields.size() != 4)
      throw Error(ErrorCode::MalformedCsv,
                  where + ":" + std::to_string(line_no) + ": expected 4 columns, got " +
                      std::to_string(fields.size()));
    if (!header_seen) {
      for (std::size_t i = 0; i < 4; ++i) {
        if (!text::iequals(text::trim(fields[i]), kHeader[i]))
          throw Error(ErrorCode::MalformedCsv,
                      where + ": missing 'Time,X,Y,Z' header");
      }
      header_seen = true;
      continue;
    }

    AxisSample s;
    std::array<double*, 4> slots = {&s.time, &s.x, &s.y, &s.z};
    for (std::size_t i = 0; i < 4; ++i) {
      const auto v = text::parse_double(fields[i]);
      *slots[i] = v.value_or(std::numeric_limits<double>::quiet_NaN());
      if (!v || !std::isfinite(*v)) s.missing = true;
    }
    if (!s.missing) {
      if (s.time < 0.0 || s.time <= last_time)
        throw Error(ErrorCode::MalformedCsv,
                    where + ":" + std::to_string(line_no) +
                        ": time must be non-negative and strictly increasing");
      last_time = s.time;
    }
    record.samples.push_back(s);
  }
  if (!header_seen) throw Error(ErrorCode::MalformedCsv, where + ": empty file");
  if (record.valid_count() < 2)
    throw Error(ErrorCode::TooShort, where + ": fewer than 2 usable rows");
  return record;
}

/// Reads a `Time,X,Y,Z` CSV file into a record with the given label.
inline VibrationRecord parse_record(const fs::path& path, ConditionLabel label) {
  return parse_record_text(read_file(path), label, path.string());
}

/// Inverse of parse_record for finite rows; missing rows are written as NaN.
inline std::string serialize_record(const VibrationRecord& record) {
  std::string out = "Time,X,Y,Z\n";
  out.reserve(record.samples.size() * 40 + out.size());
  for (const auto& s : record.samples) {
    if (s.missing) {
      out += "nan,nan,nan,nan\n";
      continue;
    }
    text::append_double(out, s.time);
    out += ',';
    text::append_double(out, s.x);
    out += ',';
    text::append_double(out, s.y);
    out += ',';
    text::append_double(out, s.z);
    out += '\n';
  }
  return out;
}

inline void write_record(const fs::path& path, const VibrationRecord& record) {
  write_file(path, serialize_record(record));
}

}  // namespace vibrodiag
