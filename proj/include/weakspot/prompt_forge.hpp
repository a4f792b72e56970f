#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "weakspot/association_review.hpp"
#include "weakspot/core_data.hpp"
#include "weakspot/weakspot_audit.hpp"

namespace weakspot {

enum class DescriptionPurpose { weakspot, mitigation };

std::string_view to_string(DescriptionPurpose purpose);
DescriptionPurpose parse_description_purpose(std::string_view text);

struct TextualDescription {
  std::string text;
  DescriptionPurpose purpose = DescriptionPurpose::weakspot;
  std::string target_class;
  std::optional<std::string> pivotal_id;
  std::vector<std::string> tags;

  friend bool operator==(const TextualDescription&, const TextualDescription&) = default;
};

/// Insertion-ordered set keyed by (text, target_class).
class DescriptionSet {
 public:
  // False when an entry with the same key is already present.
  bool insert(TextualDescription description);

  const std::vector<TextualDescription>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }

 private:
  std::vector<TextualDescription> entries_;
};

/// "traffic_cop" -> "traffic cop".
std::string humanize_label(std::string_view label);

/// Puts "a <class_phrase>" in place of the first subject token of the
/// caption, or prefixes it when the caption has none.
std::string replace_subject(std::string_view caption, std::string_view class_phrase);

std::string append_scene(std::string_view text, const std::optional<Scene>& scene);

TextualDescription describe_pivotal(const Record& record, const ClassVocabulary& vocabulary);

std::vector<TextualDescription> mitigation_prompts(const Association& spurious,
                                                   std::span<const std::string> attribute_variants);

struct DescriptionBuild {
  DescriptionSet set;
  std::size_t skipped_missing_caption = 0;
};

/// Pivotal descriptions (ordered by pivotal id) followed by mitigation
/// prompts (ordered by association key), deduplicated.
DescriptionBuild build_set(std::span<const Weakspot> weakspots,
                           std::span<const Association> spurious_associations,
                           const DatasetBundle& bundle,
                           std::span<const std::string> attribute_variants = {});

Json to_json(const TextualDescription& description);
TextualDescription description_from_json(const Json& j);
std::string encode_descriptions(const DescriptionSet& set);

}  // namespace weakspot
