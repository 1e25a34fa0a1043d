// Copyright 2026 The prm-vision Authors
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

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <thread>

#include <spdlog/spdlog.h>

#include "prm/camera.hpp"

namespace prm::camera {

namespace fs = std::filesystem;

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::optional<PixelFormat> format_for_extension(const fs::path& p) {
  const auto ext = lower(p.extension().string());
  if (ext == ".png") return PixelFormat::png_bytes;
  if (ext == ".jpg" || ext == ".jpeg") return PixelFormat::jpeg_bytes;
  return std::nullopt;
}

std::uint32_t be32(const std::string& d, std::size_t at) {
  return (std::uint32_t(std::uint8_t(d[at])) << 24) | (std::uint32_t(std::uint8_t(d[at + 1])) << 16) |
         (std::uint32_t(std::uint8_t(d[at + 2])) << 8) | std::uint32_t(std::uint8_t(d[at + 3]));
}

std::uint32_t be16(const std::string& d, std::size_t at) {
  return (std::uint32_t(std::uint8_t(d[at])) << 8) | std::uint32_t(std::uint8_t(d[at + 1]));
}

// Reads dimensions from the PNG IHDR chunk.
bool png_size(const std::string& d, std::uint32_t& w, std::uint32_t& h) {
  static const std::string kSig("\x89PNG\r\n\x1a\n", 8);
  if (d.size() < 24 || d.compare(0, 8, kSig) != 0 || d.compare(12, 4, "IHDR") != 0) return false;
  w = be32(d, 16);
  h = be32(d, 20);
  return w > 0 && h > 0;
}

// Walks JPEG segments up to the first start-of-frame marker.
bool jpeg_size(const std::string& d, std::uint32_t& w, std::uint32_t& h) {
  if (d.size() < 4 || std::uint8_t(d[0]) != 0xFF || std::uint8_t(d[1]) != 0xD8) return false;
  std::size_t i = 2;
  while (i + 4 <= d.size()) {
    if (std::uint8_t(d[i]) != 0xFF) return false;
    const std::uint8_t marker = std::uint8_t(d[i + 1]);
    if (marker == 0xFF) {
      ++i;
      continue;
    }
    if (marker == 0xD8 || (marker >= 0xD0 && marker <= 0xD7) || marker == 0x01) {
      i += 2;
      continue;
    }
    const auto len = be16(d, i + 2);
    if (len < 2) return false;
    const bool sof = marker >= 0xC0 && marker <= 0xCF && marker != 0xC4 && marker != 0xC8 &&
                     marker != 0xCC;
    if (sof) {
      if (i + 9 > d.size()) return false;
      h = be16(d, i + 5);
      w = be16(d, i + 7);
      return w > 0 && h > 0;
    }
    i += 2 + len;
  }
  return false;
}

std::map<std::string, std::string> read_labels(const fs::path& file) {
  std::map<std::string, std::string> labels;
  std::ifstream in(file);
  if (!in) return labels;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      spdlog::warn("{}:{}: expected filename<TAB>label", file.string(), lineno);
      continue;
    }
    labels[line.substr(0, tab)] = line.substr(tab + 1);
  }
  return labels;
}

}  // namespace

Frame read_image_file(const fs::path& path, std::uint64_t index) {
  const auto format = format_for_extension(path);
  if (!format) throw SourceError("not a png or jpg file: " + path.string());
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  if (in) buf << in.rdbuf();
  if (!in) throw SourceError("unreadable frame " + path.string());
  Frame frame;
  frame.index = index;
  frame.format = *format;
  frame.data = buf.str();
  const bool ok = frame.format == PixelFormat::png_bytes
                      ? png_size(frame.data, frame.width, frame.height)
                      : jpeg_size(frame.data, frame.width, frame.height);
  if (!ok) throw SourceError("corrupt frame " + path.string());
  frame.source_id = path.string();
  return frame;
}

DirectorySource::DirectorySource(fs::path dir, std::chrono::nanoseconds period)
    : dir_(std::move(dir)), period_(period) {
  std::error_code ec;
  if (!fs::is_directory(dir_, ec)) {
    throw SourceError("frame directory not found: " + dir_.string());
  }
  fs::directory_iterator it(dir_, ec);
  if (ec) throw SourceError("cannot list " + dir_.string() + ": " + ec.message());
  for (const auto& entry : it) {
    if (format_for_extension(entry.path())) files_.push_back(entry.path());
  }
  std::sort(files_.begin(), files_.end(),
            [](const fs::path& a, const fs::path& b) { return a.filename() < b.filename(); });
  labels_ = read_labels(dir_ / "labels.tsv");
}

std::optional<Frame> DirectorySource::next_frame() {
  while (next_ < files_.size()) {
    const std::size_t index = next_++;
    const auto& path = files_[index];
    Frame frame;
    try {
      frame = read_image_file(path, index);
    } catch (const SourceError& e) {
      spdlog::warn("skipping frame: {}", e.what());
      ++skipped_;
      continue;
    }
    frame.capture_time = period_ * static_cast<std::int64_t>(index);
    frame.source_id = dir_.string();
    if (auto l = labels_.find(path.filename().string()); l != labels_.end()) {
      frame.label = l->second;
    }
    return frame;
  }
  exhausted_ = true;
  return std::nullopt;
}

SyntheticSource::SyntheticSource(Options options)
    : options_(std::move(options)), rng_(options_.seed), start_(std::chrono::steady_clock::now()) {
  if (options_.width == 0 || options_.height == 0) {
    throw std::invalid_argument("synthetic frames need positive dimensions");
  }
  if (options_.period <= std::chrono::nanoseconds::zero()) {
    throw std::invalid_argument("synthetic frame period must be positive");
  }
}

Frame SyntheticSource::make_frame(std::uint64_t index) {
  Frame frame;
  frame.index = index;
  frame.capture_time = options_.period * static_cast<std::int64_t>(index);
  frame.width = options_.width;
  frame.height = options_.height;
  frame.format = PixelFormat::rgb8;
  frame.data.resize(std::size_t(options_.width) * options_.height * 3);
  for (std::size_t i = 0; i < frame.data.size(); ++i) {
    frame.data[i] = static_cast<char>((i + index * 7) & 0xFF);
  }
  frame.source_id = "synthetic";
  return frame;
}

std::optional<Frame> SyntheticSource::next_frame() {
  if (options_.count) {
    if (next_ >= *options_.count) {
      exhausted_ = true;
      return std::nullopt;
    }
    auto frame = make_frame(next_++);
    if (!options_.labels.empty()) {
      frame.label = options_.labels[rng_() % options_.labels.size()];
    }
    return frame;
  }
  // Live: wait for the next due frame, or jump to the newest if behind.
  const auto elapsed = std::chrono::steady_clock::now() - start_;
  const auto due = static_cast<std::uint64_t>(elapsed / options_.period);
  std::uint64_t index = next_;
  if (due > index) {
    index = due;
  } else if (due < index) {
    std::this_thread::sleep_until(start_ + options_.period * static_cast<std::int64_t>(index));
  }
  std::optional<std::string> label;
  for (; next_ <= index; ++next_) {
    if (!options_.labels.empty()) label = options_.labels[rng_() % options_.labels.size()];
  }
  auto frame = make_frame(index);
  frame.label = label;
  return frame;
}

std::unique_ptr<FrameSource> open_source(const config::CameraConfig& camera,
                                         const fs::path& base_dir) {
  auto resolve = [&](const std::string& p) {
    fs::path path(p);
    return path.is_relative() && !base_dir.empty() ? base_dir / path : path;
  };
  switch (camera.choose_input) {
    case config::InputKind::frames:
      if (!camera.input_video) throw SourceError("frames input needs Input_video (a directory)");
      return std::make_unique<DirectorySource>(resolve(*camera.input_video));
    case config::InputKind::video:
      throw SourceError(
          "video decoding is not supported; extract frames into a directory and use "
          "Choose_input: frames");
    case config::InputKind::webcam:
      return std::make_unique<SyntheticSource>(SyntheticSource::Options{});
  }
  throw SourceError("unknown input kind");
}

}  // namespace prm::camera
