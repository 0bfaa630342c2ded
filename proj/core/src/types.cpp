#include "forumtag/types.hpp"

namespace forumtag {
namespace {

constexpr std::array<std::string_view, 7> kFineNames = {
    "Assessments", "Exams", "Videos", "Readings", "Slides", "Transcripts",
    "AdditionalResources"};
constexpr std::array<std::string_view, 4> kCoarseNames = {"Assessments", "Exams", "Videos",
                                                          "Coursewares"};
constexpr std::array<std::string_view, kNumTags> kTagNames = {
    "O",       "Assessments_B", "Assessments_I", "Exams_B",      "Exams_I",
    "Videos_B", "Videos_I",     "Coursewares_B", "Coursewares_I"};

}  // namespace

std::string_view to_string(ResourceTypeFine t) { return kFineNames[static_cast<std::size_t>(t)]; }
std::string_view to_string(ResourceType t) { return kCoarseNames[static_cast<std::size_t>(t)]; }
std::string_view to_string(Tag t) { return kTagNames[tag_index(t)]; }

std::string_view to_string(const MentionType& t) {
  return std::visit([](auto v) { return to_string(v); }, t);
}

std::optional<ResourceTypeFine> parse_fine_type(std::string_view name) {
  for (std::size_t i = 0; i < kFineNames.size(); ++i) {
    if (kFineNames[i] == name) return static_cast<ResourceTypeFine>(i);
  }
  return std::nullopt;
}

std::optional<ResourceType> parse_resource_type(std::string_view name) {
  for (std::size_t i = 0; i < kCoarseNames.size(); ++i) {
    if (kCoarseNames[i] == name) return static_cast<ResourceType>(i);
  }
  return std::nullopt;
}

std::optional<Tag> parse_tag(std::string_view name) {
  for (std::size_t i = 0; i < kTagNames.size(); ++i) {
    if (kTagNames[i] == name) return tag_from_index(i);
  }
  return std::nullopt;
}

ResourceType collapse_type(ResourceTypeFine t) {
  switch (t) {
    case ResourceTypeFine::Assessments:
      return ResourceType::Assessments;
    case ResourceTypeFine::Exams:
      return ResourceType::Exams;
    case ResourceTypeFine::Videos:
      return ResourceType::Videos;
    case ResourceTypeFine::Readings:
    case ResourceTypeFine::Slides:
    case ResourceTypeFine::Transcripts:
    case ResourceTypeFine::AdditionalResources:
      return ResourceType::Coursewares;
  }
  return ResourceType::Coursewares;
}

ResourceType coarse_type(const MentionType& t) {
  if (const auto* fine = std::get_if<ResourceTypeFine>(&t)) return collapse_type(*fine);
  return std::get<ResourceType>(t);
}

}  // namespace forumtag
