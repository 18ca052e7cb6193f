#include "cinetrack/metaimage.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>

namespace cinetrack {

namespace {

std::string trim(const std::string &s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos)
    return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<double> parse_numbers(const std::string &key, const std::string &value) {
  std::istringstream in(value);
  std::vector<double> out;
  std::string tok;
  while (in >> tok) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(tok, &used);
    } catch (const std::exception &) {
      used = 0;
    }
    if (used != tok.size())
      throw HeaderError("metaimage: malformed value for " + key + ": '" + value + "'");
    out.push_back(v);
  }
  return out;
}

bool parse_bool(const std::string &key, const std::string &value) {
  if (value == "True" || value == "true" || value == "1")
    return true;
  if (value == "False" || value == "false" || value == "0")
    return false;
  throw HeaderError("metaimage: malformed boolean for " + key + ": '" + value + "'");
}

std::size_t element_size(ElementType t) {
  switch (t) {
  case ElementType::met_uchar:
    return 1;
  case ElementType::met_short:
    return 2;
  case ElementType::met_float:
    return 4;
  }
  return 0;
}

const char *element_name(ElementType t) {
  switch (t) {
  case ElementType::met_uchar:
    return "MET_UCHAR";
  case ElementType::met_short:
    return "MET_SHORT";
  case ElementType::met_float:
    return "MET_FLOAT";
  }
  return "";
}

template <typename T> T load(const char *p, bool swap) {
  std::array<char, sizeof(T)> bytes;
  std::memcpy(bytes.data(), p, sizeof(T));
  if (swap)
    std::reverse(bytes.begin(), bytes.end());
  T v;
  std::memcpy(&v, bytes.data(), sizeof(T));
  return v;
}

template <typename T> void store(std::string &out, T v) {
  std::array<char, sizeof(T)> bytes;
  std::memcpy(bytes.data(), &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big)
    std::reverse(bytes.begin(), bytes.end());
  out.append(bytes.data(), bytes.size());
}

// Descriptive keys that carry no geometry or payload information.
const std::set<std::string> kIgnoredKeys = {"Comment", "Name", "AnatomicalOrientation",
                                            "CenterOfRotation", "ElementMin",
                                            "ElementMax", "Modality"};

} // namespace

MetaImage read_metaimage(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw IoError("metaimage: cannot open " + path.string());
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  std::map<std::string, std::string> header;
  std::size_t pos = 0;
  bool found_data = false;
  while (pos < data.size()) {
    const auto eol = data.find('\n', pos);
    if (eol == std::string::npos)
      throw HeaderError("metaimage: header ends before ElementDataFile in " + path.string());
    const std::string line = trim(data.substr(pos, eol - pos));
    pos = eol + 1;
    if (line.empty())
      continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw HeaderError("metaimage: malformed header line '" + line + "'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (header.count(key))
      throw HeaderError("metaimage: duplicate header key " + key);
    header[key] = value;
    if (key == "ElementDataFile") {
      found_data = true;
      break;
    }
  }
  if (!found_data)
    throw HeaderError("metaimage: missing ElementDataFile in " + path.string());

  MetaImage img;
  std::optional<std::vector<double>> dims, spacing, offset;
  std::optional<ElementType> type;
  bool msb = false;
  for (const auto &[key, value] : header) {
    if (key == "ObjectType") {
      if (value != "Image")
        throw UnsupportedFormatError("metaimage: ObjectType " + value + " not supported");
    } else if (key == "NDims") {
      const auto v = parse_numbers(key, value);
      if (v.size() != 1 || (v[0] != 2.0 && v[0] != 3.0))
        throw UnsupportedFormatError("metaimage: NDims must be 2 or 3, got '" + value + "'");
      img.ndims = static_cast<int>(v[0]);
    } else if (key == "DimSize") {
      dims = parse_numbers(key, value);
    } else if (key == "ElementSpacing" || key == "ElementSize") {
      spacing = parse_numbers(key, value);
    } else if (key == "Offset" || key == "Origin" || key == "Position") {
      if (offset)
        throw HeaderError("metaimage: more than one of Offset/Origin/Position");
      offset = parse_numbers(key, value);
    } else if (key == "ElementType") {
      if (value == "MET_UCHAR")
        type = ElementType::met_uchar;
      else if (value == "MET_SHORT")
        type = ElementType::met_short;
      else if (value == "MET_FLOAT")
        type = ElementType::met_float;
      else
        throw UnsupportedFormatError("metaimage: unsupported ElementType " + value);
    } else if (key == "ElementByteOrderMSB" || key == "BinaryDataByteOrderMSB") {
      msb = parse_bool(key, value);
    } else if (key == "BinaryData") {
      if (!parse_bool(key, value))
        throw UnsupportedFormatError("metaimage: ASCII payloads not supported");
    } else if (key == "CompressedData") {
      if (parse_bool(key, value))
        throw UnsupportedFormatError("metaimage: compressed payloads not supported");
    } else if (key == "TransformMatrix" || key == "Rotation" || key == "Orientation") {
      const auto m = parse_numbers(key, value);
      const std::size_t d = static_cast<std::size_t>(std::llround(std::sqrt(m.size())));
      for (std::size_t i = 0; i < m.size(); ++i)
        if (d * d != m.size() || m[i] != ((i % (d + 1) == 0) ? 1.0 : 0.0))
          throw UnsupportedFormatError("metaimage: only identity orientation supported");
    } else if (key == "ElementNumberOfChannels") {
      if (value != "1")
        throw UnsupportedFormatError("metaimage: multi-channel images not supported");
    } else if (key == "ElementDataFile") {
      if (value != "LOCAL")
        throw UnsupportedFormatError("metaimage: only ElementDataFile = LOCAL supported");
    } else if (kIgnoredKeys.count(key) == 0) {
      throw HeaderError("metaimage: unrecognized header key " + key);
    }
  }
  if (!header.count("NDims"))
    throw HeaderError("metaimage: missing NDims");
  if (!dims)
    throw HeaderError("metaimage: missing DimSize");
  if (!type)
    throw HeaderError("metaimage: missing ElementType");
  const auto nd = static_cast<std::size_t>(img.ndims);
  if (dims->size() != nd)
    throw HeaderError("metaimage: DimSize has wrong arity");
  if (spacing && spacing->size() != nd)
    throw HeaderError("metaimage: ElementSpacing has wrong arity");
  if (offset && offset->size() != nd)
    throw HeaderError("metaimage: Offset has wrong arity");
  for (double d : *dims)
    if (!(d >= 1.0) || d != std::floor(d))
      throw HeaderError("metaimage: DimSize entries must be positive integers");

  const auto cols = static_cast<Eigen::Index>((*dims)[0]);
  const auto rows = static_cast<Eigen::Index>((*dims)[1]);
  const std::size_t nframes = nd == 3 ? static_cast<std::size_t>((*dims)[2]) : 1;
  Eigen::Vector2d sp(1.0, 1.0), org(0.0, 0.0);
  if (spacing)
    sp = Eigen::Vector2d((*spacing)[0], (*spacing)[1]);
  if (offset)
    org = Eigen::Vector2d((*offset)[0], (*offset)[1]);
  if (nd == 3) {
    if (spacing)
      img.frame_spacing = (*spacing)[2];
    if (offset)
      img.frame_offset = (*offset)[2];
  }
  try {
    img.geometry = Geometry(rows, cols, sp, org);
  } catch (const ConfigurationError &e) {
    throw HeaderError(std::string("metaimage: ") + e.what());
  }
  img.element_type = *type;

  const std::size_t esize = element_size(*type);
  const std::size_t expected =
      static_cast<std::size_t>(rows * cols) * nframes * esize;
  const std::size_t available = data.size() - pos;
  if (available != expected)
    throw CorruptFileError("metaimage: payload has " + std::to_string(available) +
                           " bytes, header implies " + std::to_string(expected) + " in " +
                           path.string());

  const bool swap = msb != (std::endian::native == std::endian::big);
  const char *p = data.data() + pos;
  img.frames.reserve(nframes);
  for (std::size_t f = 0; f < nframes; ++f) {
    GridArray<double> v(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c, p += esize) {
        switch (*type) {
        case ElementType::met_uchar:
          v(r, c) = static_cast<unsigned char>(*p);
          break;
        case ElementType::met_short:
          v(r, c) = load<std::int16_t>(p, swap);
          break;
        case ElementType::met_float:
          v(r, c) = load<float>(p, swap);
          break;
        }
      }
    }
    if (!v.allFinite())
      throw CorruptFileError("metaimage: non-finite intensity in " + path.string());
    img.frames.emplace_back(img.geometry, std::move(v));
  }
  return img;
}

Image2Dd read_image(const std::filesystem::path &path) {
  auto m = read_metaimage(path);
  if (m.ndims != 2)
    throw HeaderError("metaimage: expected a 2D image in " + path.string());
  return std::move(m.frames.front());
}

std::vector<Image2Dd> read_image_stack(const std::filesystem::path &path) {
  return read_metaimage(path).frames;
}

namespace {

Mask2D to_mask(const Image2Dd &img, const std::filesystem::path &path) {
  Mask2D::Storage v(img.rows(), img.cols());
  for (Eigen::Index r = 0; r < img.rows(); ++r)
    for (Eigen::Index c = 0; c < img.cols(); ++c) {
      const double x = img(r, c);
      if (x != 0.0 && x != 1.0)
        throw CorruptFileError("metaimage: mask value outside {0, 1} in " + path.string());
      v(r, c) = static_cast<std::uint8_t>(x);
    }
  return Mask2D(img.geometry(), std::move(v));
}

void write_file(const std::filesystem::path &path, int ndims, const Geometry &g,
                std::size_t nframes, double frame_spacing, ElementType type,
                const std::string &payload) {
  std::ostringstream h;
  h << std::setprecision(std::numeric_limits<double>::max_digits10);
  h << "ObjectType = Image\n";
  h << "NDims = " << ndims << "\n";
  h << "BinaryData = True\n";
  h << "BinaryDataByteOrderMSB = False\n";
  h << "CompressedData = False\n";
  if (ndims == 2) {
    h << "TransformMatrix = 1 0 0 1\n";
    h << "Offset = " << g.origin.x() << " " << g.origin.y() << "\n";
    h << "ElementSpacing = " << g.spacing.x() << " " << g.spacing.y() << "\n";
    h << "DimSize = " << g.cols << " " << g.rows << "\n";
  } else {
    h << "TransformMatrix = 1 0 0 0 1 0 0 0 1\n";
    h << "Offset = " << g.origin.x() << " " << g.origin.y() << " 0\n";
    h << "ElementSpacing = " << g.spacing.x() << " " << g.spacing.y() << " "
      << frame_spacing << "\n";
    h << "DimSize = " << g.cols << " " << g.rows << " " << nframes << "\n";
  }
  h << "ElementType = " << element_name(type) << "\n";
  h << "ElementDataFile = LOCAL\n";

  if (path.has_parent_path())
    std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw IoError("metaimage: cannot write " + path.string());
  const std::string header = h.str();
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  if (!out)
    throw IoError("metaimage: write failed for " + path.string());
}

void append_payload(std::string &payload, const Image2Dd &img, ElementType type) {
  for (Eigen::Index r = 0; r < img.rows(); ++r) {
    for (Eigen::Index c = 0; c < img.cols(); ++c) {
      const double v = img(r, c);
      switch (type) {
      case ElementType::met_uchar:
        if (v != std::floor(v) || v < 0.0 || v > 255.0)
          throw ConfigurationError("metaimage: value not representable as MET_UCHAR");
        payload.push_back(static_cast<char>(static_cast<unsigned char>(v)));
        break;
      case ElementType::met_short:
        if (v != std::floor(v) || v < -32768.0 || v > 32767.0)
          throw ConfigurationError("metaimage: value not representable as MET_SHORT");
        store(payload, static_cast<std::int16_t>(v));
        break;
      case ElementType::met_float:
        store(payload, static_cast<float>(v));
        break;
      }
    }
  }
}

Image2Dd mask_as_image(const Mask2D &m) {
  return Image2Dd(m.geometry(), m.values().cast<double>());
}

} // namespace

Mask2D read_mask(const std::filesystem::path &path) {
  return to_mask(read_image(path), path);
}

std::vector<Mask2D> read_mask_stack(const std::filesystem::path &path) {
  std::vector<Mask2D> out;
  for (const auto &f : read_image_stack(path))
    out.push_back(to_mask(f, path));
  return out;
}

void write_image(const Image2Dd &img, const std::filesystem::path &path, ElementType type) {
  std::string payload;
  append_payload(payload, img, type);
  write_file(path, 2, img.geometry(), 1, 1.0, type, payload);
}

void write_image_stack(const std::vector<Image2Dd> &frames, const std::filesystem::path &path,
                       ElementType type, double frame_spacing) {
  if (frames.empty())
    throw ConfigurationError("metaimage: empty frame stack");
  std::string payload;
  for (const auto &f : frames) {
    require_same_geometry(f.geometry(), frames.front().geometry(), "write_image_stack");
    append_payload(payload, f, type);
  }
  write_file(path, 3, frames.front().geometry(), frames.size(), frame_spacing, type, payload);
}

void write_mask(const Mask2D &mask, const std::filesystem::path &path) {
  write_image(mask_as_image(mask), path, ElementType::met_uchar);
}

void write_mask_stack(const std::vector<Mask2D> &masks, const std::filesystem::path &path,
                      double frame_spacing) {
  std::vector<Image2Dd> frames;
  for (const auto &m : masks)
    frames.push_back(mask_as_image(m));
  write_image_stack(frames, path, ElementType::met_uchar, frame_spacing);
}

} // namespace cinetrack
