#include "tad/frame_io.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <memory>
#include <regex>
#include <sstream>

#include "json.hpp"

namespace tad {

ParseError::ParseError(const std::string& what, std::size_t line)
    : std::runtime_error(line ? what + " (line " + std::to_string(line) + ")" : what), line_(line) {}

namespace {

std::string lower_ext(const fs::path& p) {
  std::string e = p.extension().string();
  std::transform(e.begin(), e.end(), e.begin(), [](unsigned char c) { return std::tolower(c); });
  return e;
}

// Reads the next whitespace-delimited PGM header token, skipping comments.
std::string pgm_token(std::istream& in) {
  std::string tok;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(c));
  }
  return tok;
}

}  // namespace

GrayFrame read_pgm(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  if (pgm_token(in) != "P5") throw ParseError(path.string() + ": not a binary PGM (P5)");
  int w = 0, h = 0, maxv = 0;
  try {
    w = std::stoi(pgm_token(in));
    h = std::stoi(pgm_token(in));
    maxv = std::stoi(pgm_token(in));
  } catch (const std::exception&) {
    throw ParseError(path.string() + ": malformed PGM header");
  }
  if (w < 1 || h < 1 || maxv < 1 || maxv > 255) throw ParseError(path.string() + ": unsupported PGM header");
  GrayFrame f(w, h);
  in.read(reinterpret_cast<char*>(f.data.data()), static_cast<std::streamsize>(f.data.size()));
  if (in.gcount() != static_cast<std::streamsize>(f.data.size())) throw ParseError(path.string() + ": truncated PGM");
  if (maxv != 255)
    for (auto& v : f.data) v = static_cast<std::uint8_t>(std::min(255, v * 255 / maxv));
  return f;
}

void write_pgm(const fs::path& path, const GrayFrame& frame) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "P5\n" << frame.width << ' ' << frame.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(frame.data.data()), static_cast<std::streamsize>(frame.data.size()));
}

GrayFrame read_png(const fs::path& path) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.string().c_str()))
    throw ParseError(path.string() + ": " + img.message);
  // Decode to RGB so the luma weights are ours rather than libpng's.
  img.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> rgb(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, rgb.data(), 0, nullptr)) {
    std::string msg = img.message;
    png_image_free(&img);
    throw ParseError(path.string() + ": " + msg);
  }
  GrayFrame f(static_cast<int>(img.width), static_cast<int>(img.height));
  for (std::size_t i = 0; i < f.data.size(); ++i) f.data[i] = luma(rgb[3 * i], rgb[3 * i + 1], rgb[3 * i + 2]);
  return f;
}

void write_png(const fs::path& path, const GrayFrame& frame) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(frame.width);
  img.height = static_cast<png_uint_32>(frame.height);
  img.format = PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&img, path.string().c_str(), 0, frame.data.data(), 0, nullptr))
    throw std::runtime_error(path.string() + ": " + img.message);
}

void write_png_rgb(const fs::path& path, const RgbImage& image) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(image.width);
  img.height = static_cast<png_uint_32>(image.height);
  img.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&img, path.string().c_str(), 0, image.data.data(), 0, nullptr))
    throw std::runtime_error(path.string() + ": " + img.message);
}

namespace {

void write_png_1bit(const fs::path& path, const BinaryMask& mask) {
  std::unique_ptr<FILE, int (*)(FILE*)> fp(std::fopen(path.string().c_str(), "wb"), &std::fclose);
  if (!fp) throw std::runtime_error("cannot write " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("libpng initialisation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error(path.string() + ": PNG write failed");
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(mask.width), static_cast<png_uint_32>(mask.height), 1,
               PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<png_byte> row(static_cast<std::size_t>((mask.width + 7) / 8));
  for (int y = 0; y < mask.height; ++y) {
    std::fill(row.begin(), row.end(), 0);
    for (int x = 0; x < mask.width; ++x)
      if (mask.at(x, y)) row[static_cast<std::size_t>(x / 8)] |= static_cast<png_byte>(0x80 >> (x % 8));
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace

void write_mask(const fs::path& path, const BinaryMask& mask) {
  if (lower_ext(path) == ".png") {
    write_png_1bit(path, mask);
    return;
  }
  GrayFrame f(mask.width, mask.height);
  for (std::size_t i = 0; i < f.data.size(); ++i) f.data[i] = mask.data[i] ? 255 : 0;
  write_pgm(path, f);
}

BinaryMask read_mask(const fs::path& path) {
  GrayFrame f = read_image(path);
  BinaryMask m(f.width, f.height);
  for (std::size_t i = 0; i < f.data.size(); ++i) m.data[i] = f.data[i] >= 128;
  return m;
}

GrayFrame read_image(const fs::path& path) {
  std::string e = lower_ext(path);
  if (e == ".png") return read_png(path);
  if (e == ".pgm") return read_pgm(path);
  throw ParseError(path.string() + ": unsupported image extension");
}

void write_image(const fs::path& path, const GrayFrame& frame) {
  std::string e = lower_ext(path);
  if (e == ".png")
    write_png(path, frame);
  else if (e == ".pgm")
    write_pgm(path, frame);
  else
    throw InvalidInput(path.string() + ": unsupported image extension");
}

FrameSequence read_frame_dir(const fs::path& dir, double fps) {
  if (!fs::is_directory(dir)) throw ParseError(dir.string() + ": not a directory");
  if (fps <= 0) throw InvalidInput("read_frame_dir: fps must be positive");
  static const std::regex digits("[0-9]+");
  struct Entry {
    long long key;
    std::string name;
    fs::path path;
  };
  std::vector<Entry> entries;
  for (const auto& de : fs::directory_iterator(dir)) {
    if (!de.is_regular_file()) continue;
    std::string e = lower_ext(de.path());
    if (e != ".png" && e != ".pgm") continue;
    std::string name = de.path().filename().string();
    std::smatch m;
    long long key = std::regex_search(name, m, digits) ? std::stoll(m.str()) : -1;
    entries.push_back({key, name, de.path()});
  }
  std::sort(entries.begin(), entries.end(),
            [](const Entry& a, const Entry& b) { return a.key != b.key ? a.key < b.key : a.name < b.name; });
  FrameSequence seq;
  seq.fps = fps;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    GrayFrame f = read_image(entries[i].path);
    if (!seq.frames.empty() && (f.width != seq.frames[0].width || f.height != seq.frames[0].height))
      throw ParseError(entries[i].path.string() + ": frame size differs from the first frame");
    f.frame_index = static_cast<std::int64_t>(i);
    f.timestamp = static_cast<double>(i) / fps;
    seq.frames.push_back(std::move(f));
  }
  return seq;
}

FrameSequence read_raw(const fs::path& raw_path) {
  fs::path sidecar = fs::path(raw_path).replace_extension(".json");
  std::ifstream js(sidecar);
  if (!js) throw ParseError("missing sidecar " + sidecar.string());
  nlohmann::json j;
  try {
    js >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(sidecar.string() + ": " + e.what());
  }
  int w = 0, h = 0;
  double fps = 0;
  try {
    w = j.at("width").get<int>();
    h = j.at("height").get<int>();
    fps = j.at("fps").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(sidecar.string() + ": " + e.what());
  }
  if (w < 1 || h < 1 || fps <= 0) throw ParseError(sidecar.string() + ": invalid width/height/fps");
  std::ifstream in(raw_path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + raw_path.string());
  const std::size_t fsz = static_cast<std::size_t>(w) * h;
  const auto total = static_cast<std::size_t>(fs::file_size(raw_path));
  if (total % fsz != 0) throw ParseError(raw_path.string() + ": size is not a multiple of the frame size");
  FrameSequence seq;
  seq.fps = fps;
  seq.frames.reserve(total / fsz);
  for (std::size_t i = 0; i < total / fsz; ++i) {
    GrayFrame f(w, h);
    in.read(reinterpret_cast<char*>(f.data.data()), static_cast<std::streamsize>(fsz));
    f.frame_index = static_cast<std::int64_t>(i);
    f.timestamp = static_cast<double>(i) / fps;
    seq.frames.push_back(std::move(f));
  }
  return seq;
}

void write_raw(const fs::path& raw_path, const FrameSequence& seq) {
  if (seq.empty()) throw InvalidInput("write_raw: empty sequence");
  const auto& f0 = seq.frames.front();
  {
    std::ofstream out(raw_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + raw_path.string());
    for (const auto& f : seq.frames) {
      if (f.width != f0.width || f.height != f0.height) throw InvalidInput("write_raw: frame size mismatch");
      out.write(reinterpret_cast<const char*>(f.data.data()), static_cast<std::streamsize>(f.data.size()));
    }
  }
  nlohmann::ordered_json j;
  j["width"] = f0.width;
  j["height"] = f0.height;
  j["fps"] = seq.fps;
  std::ofstream js(fs::path(raw_path).replace_extension(".json"));
  js << j.dump(2) << '\n';
}

FrameSequence read_frames(const fs::path& path, double fps_hint) {
  if (fs::is_directory(path)) return read_frame_dir(path, fps_hint);
  std::string e = lower_ext(path);
  if (e == ".raw") return read_raw(path);
  if (e == ".json") return read_raw(fs::path(path).replace_extension(".raw"));
  throw ParseError(path.string() + ": expected a frame directory, .raw file or .json sidecar");
}

void write_frame_dir(const fs::path& dir, const FrameSequence& seq, const std::string& ext) {
  fs::create_directories(dir);
  char name[64];
  for (std::size_t i = 0; i < seq.frames.size(); ++i) {
    std::snprintf(name, sizeof name, "frame_%06zu.%s", i, ext.c_str());
    write_image(dir / name, seq.frames[i]);
  }
}

}  // namespace tad
