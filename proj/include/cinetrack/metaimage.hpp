#pragma once

#include <filesystem>
#include <vector>

#include "cinetrack/image.hpp"

namespace cinetrack {

/// Pixel types of the supported MetaImage subset.
enum class ElementType { met_uchar, met_short, met_float };

/// Contents of a MetaImage file. NDims = 2 gives one frame; NDims = 3 is read
/// as 2D + time with the third axis indexing frames.
struct MetaImage {
  int ndims = 2;
  Geometry geometry;
  ElementType element_type = ElementType::met_float;
  double frame_spacing = 1.0;
  double frame_offset = 0.0;
  std::vector<Image2Dd> frames;
};

/// Reads the LOCAL-payload MetaImage subset: ObjectType, NDims (2 or 3),
/// DimSize, ElementSpacing, Offset, ElementType (MET_UCHAR, MET_SHORT,
/// MET_FLOAT), ElementByteOrderMSB, ElementDataFile = LOCAL, plus the
/// standard descriptive keys written by common tools when they hold their
/// trivial values. Unknown keys raise HeaderError; a payload whose byte count
/// differs from the header raises CorruptFileError.
MetaImage read_metaimage(const std::filesystem::path &path);

/// Single 2D image; HeaderError if the file holds a stack.
Image2Dd read_image(const std::filesystem::path &path);
std::vector<Image2Dd> read_image_stack(const std::filesystem::path &path);

/// Masks must contain only 0 and 1; anything else is a CorruptFileError.
Mask2D read_mask(const std::filesystem::path &path);
std::vector<Mask2D> read_mask_stack(const std::filesystem::path &path);

/// Writes little-endian payloads. MET_UCHAR and MET_SHORT require integral
/// values in range; MET_FLOAT rounds to single precision.
void write_image(const Image2Dd &img, const std::filesystem::path &path,
                 ElementType type = ElementType::met_float);
void write_image_stack(const std::vector<Image2Dd> &frames, const std::filesystem::path &path,
                       ElementType type = ElementType::met_float,
                       double frame_spacing = 1.0);
void write_mask(const Mask2D &mask, const std::filesystem::path &path);
void write_mask_stack(const std::vector<Mask2D> &masks, const std::filesystem::path &path,
                      double frame_spacing = 1.0);

} // namespace cinetrack
