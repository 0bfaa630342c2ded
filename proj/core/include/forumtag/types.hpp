#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>
#include <variant>

namespace forumtag {

// Annotation-time resource types. Codes are stable and used in files.
enum class ResourceTypeFine : std::uint8_t {
  Assessments = 0,
  Exams = 1,
  Videos = 2,
  Readings = 3,
  Slides = 4,
  Transcripts = 5,
  AdditionalResources = 6,
};

inline constexpr std::array<ResourceTypeFine, 7> kFineTypes = {
    ResourceTypeFine::Assessments, ResourceTypeFine::Exams,
    ResourceTypeFine::Videos,      ResourceTypeFine::Readings,
    ResourceTypeFine::Slides,      ResourceTypeFine::Transcripts,
    ResourceTypeFine::AdditionalResources};

// Tagging-time resource types: the four teaching-material fine types are
// folded into Coursewares.
enum class ResourceType : std::uint8_t {
  Assessments = 0,
  Exams = 1,
  Videos = 2,
  Coursewares = 3,
};

inline constexpr std::array<ResourceType, 4> kResourceTypes = {
    ResourceType::Assessments, ResourceType::Exams, ResourceType::Videos,
    ResourceType::Coursewares};

using MentionType = std::variant<ResourceTypeFine, ResourceType>;

std::string_view to_string(ResourceTypeFine t);
std::string_view to_string(ResourceType t);
std::optional<ResourceTypeFine> parse_fine_type(std::string_view name);
std::optional<ResourceType> parse_resource_type(std::string_view name);

ResourceType collapse_type(ResourceTypeFine t);
ResourceType coarse_type(const MentionType& t);
std::string_view to_string(const MentionType& t);

// BIO tag inventory. O is index 0; each type contributes a B and an I tag.
enum class Tag : std::uint8_t {
  O = 0,
  Assessments_B,
  Assessments_I,
  Exams_B,
  Exams_I,
  Videos_B,
  Videos_I,
  Coursewares_B,
  Coursewares_I,
};

inline constexpr std::size_t kNumTags = 9;

constexpr std::size_t tag_index(Tag t) { return static_cast<std::size_t>(t); }
constexpr Tag tag_from_index(std::size_t i) { return static_cast<Tag>(i); }

constexpr Tag make_tag(ResourceType type, bool begin) {
  return static_cast<Tag>(1 + 2 * static_cast<std::size_t>(type) + (begin ? 0 : 1));
}
constexpr bool is_begin(Tag t) { return t != Tag::O && tag_index(t) % 2 == 1; }
constexpr bool is_inside(Tag t) { return t != Tag::O && tag_index(t) % 2 == 0; }
// Undefined for O.
constexpr ResourceType tag_type(Tag t) {
  return static_cast<ResourceType>((tag_index(t) - 1) / 2);
}

std::string_view to_string(Tag t);
std::optional<Tag> parse_tag(std::string_view name);

}  // namespace forumtag
