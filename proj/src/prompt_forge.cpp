#include "weakspot/prompt_forge.hpp"

#include <algorithm>
#include <array>
#include <cctype>

#include "weakspot/error.hpp"

namespace weakspot {

namespace {

// Longest first, so "a person" wins over any shorter token at one position.
constexpr std::array<std::string_view, 8> kSubjectTokens = {
    "a person", "a woman", "someone", "people", "a man", "they", "she", "he"};

bool is_word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

char lower(char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); }

bool matches_word_at(std::string_view text, std::size_t pos, std::string_view token) {
  if (pos + token.size() > text.size()) return false;
  if (pos > 0 && is_word_char(text[pos - 1])) return false;
  const std::size_t end = pos + token.size();
  if (end < text.size() && is_word_char(text[end])) return false;
  for (std::size_t i = 0; i < token.size(); ++i) {
    if (lower(text[pos + i]) != lower(token[i])) return false;
  }
  return true;
}

bool contains_word(std::string_view text, std::string_view phrase) {
  for (std::size_t pos = 0; pos + phrase.size() <= text.size(); ++pos) {
    if (matches_word_at(text, pos, phrase)) return true;
  }
  return false;
}

std::string key_of(const TextualDescription& d) { return d.text + '\x1f' + d.target_class; }

}  // namespace

std::string_view to_string(DescriptionPurpose purpose) {
  return purpose == DescriptionPurpose::weakspot ? "weakspot" : "mitigation";
}

DescriptionPurpose parse_description_purpose(std::string_view text) {
  if (text == "weakspot") return DescriptionPurpose::weakspot;
  if (text == "mitigation") return DescriptionPurpose::mitigation;
  throw Error(ErrorCode::ParseError, "unknown description purpose '" + std::string(text) + "'");
}

bool DescriptionSet::insert(TextualDescription description) {
  const auto key = key_of(description);
  const bool present = std::any_of(entries_.begin(), entries_.end(),
                                   [&](const auto& e) { return key_of(e) == key; });
  if (present) return false;
  entries_.push_back(std::move(description));
  return true;
}

std::string humanize_label(std::string_view label) {
  if (label.empty()) throw Error(ErrorCode::EmptyLabel, "class label is empty");
  std::string phrase;
  phrase.reserve(label.size());
  for (char c : label) phrase.push_back(c == '_' ? ' ' : lower(c));
  return phrase;
}

std::string replace_subject(std::string_view caption, std::string_view class_phrase) {
  if (class_phrase.empty()) throw Error(ErrorCode::EmptyLabel, "class phrase is empty");
  const std::string subject = "a " + std::string(class_phrase);
  // Already names the subject; keeps the rule idempotent on its own output.
  if (contains_word(caption, subject)) return std::string(caption);

  for (std::size_t pos = 0; pos < caption.size(); ++pos) {
    for (auto token : kSubjectTokens) {
      if (matches_word_at(caption, pos, token)) {
        std::string out(caption.substr(0, pos));
        out += subject;
        out += caption.substr(pos + token.size());
        return out;
      }
    }
  }
  return subject + ", " + std::string(caption);
}

std::string append_scene(std::string_view text, const std::optional<Scene>& scene) {
  std::string out(text);
  if (!scene) return out;
  if (scene->environment == Environment::indoor) out += ", indoors";
  if (scene->environment == Environment::outdoor) out += ", outdoors";
  if (scene->venue && !scene->venue->empty()) {
    std::string venue = *scene->venue;
    std::replace(venue.begin(), venue.end(), '_', ' ');
    out += ", in a " + venue;
  }
  return out;
}

TextualDescription describe_pivotal(const Record& record, const ClassVocabulary& vocabulary) {
  if (!record.caption) {
    throw Error(ErrorCode::MissingCaption, "record '" + record.id + "' has no caption");
  }
  if (!vocabulary.contains(record.true_class)) {
    throw Error(ErrorCode::UnknownClass, "class '" + record.true_class + "' not in vocabulary");
  }
  TextualDescription d;
  d.text = append_scene(replace_subject(*record.caption, humanize_label(record.true_class)),
                        record.scene);
  d.purpose = DescriptionPurpose::weakspot;
  d.target_class = record.true_class;
  d.pivotal_id = record.id;
  d.tags = {"weakspot", record.true_class};
  return d;
}

std::vector<TextualDescription> mitigation_prompts(const Association& spurious,
                                                   std::span<const std::string> attribute_variants) {
  const std::string cls = humanize_label(spurious.predicted_class);
  const std::string object = humanize_label(spurious.object_label);
  const std::string tail = cls + " with a " + object;

  std::vector<TextualDescription> prompts;
  prompts.reserve(attribute_variants.size() + 1);
  const auto make = [&](std::string text) {
    TextualDescription d;
    d.text = std::move(text);
    d.purpose = DescriptionPurpose::mitigation;
    d.target_class = spurious.predicted_class;
    d.tags = {"mitigation", "object:" + spurious.object_label};
    return d;
  };
  prompts.push_back(make("a " + tail));
  for (const auto& variant : attribute_variants) {
    prompts.push_back(make(variant + " " + tail));
  }
  return prompts;
}

DescriptionBuild build_set(std::span<const Weakspot> weakspots,
                           std::span<const Association> spurious_associations,
                           const DatasetBundle& bundle,
                           std::span<const std::string> attribute_variants) {
  DescriptionBuild build;

  std::vector<const Weakspot*> pivotals;
  for (const auto& w : weakspots) pivotals.push_back(&w);
  std::sort(pivotals.begin(), pivotals.end(),
            [](const auto* a, const auto* b) { return a->pivotal_id < b->pivotal_id; });
  for (const auto* w : pivotals) {
    const auto row = bundle.find(w->pivotal_id);
    if (!row) {
      throw Error(ErrorCode::InvalidArgument,
                  "pivotal '" + w->pivotal_id + "' not found in bundle");
    }
    const Record& record = bundle.records()[*row];
    if (!record.caption) {
      ++build.skipped_missing_caption;
      continue;
    }
    build.set.insert(describe_pivotal(record, bundle.vocabulary()));
  }

  std::vector<const Association*> associations;
  for (const auto& a : spurious_associations) associations.push_back(&a);
  std::sort(associations.begin(), associations.end(),
            [](const auto* a, const auto* b) { return a->key() < b->key(); });
  for (const auto* a : associations) {
    for (auto& prompt : mitigation_prompts(*a, attribute_variants)) {
      build.set.insert(std::move(prompt));
    }
  }
  return build;
}

Json to_json(const TextualDescription& d) {
  return {{"text", d.text},
          {"purpose", to_string(d.purpose)},
          {"target_class", d.target_class},
          {"pivotal_id", d.pivotal_id ? Json(*d.pivotal_id) : Json(nullptr)},
          {"tags", d.tags}};
}

TextualDescription description_from_json(const Json& j) {
  try {
    TextualDescription d;
    d.text = j.at("text").get<std::string>();
    d.purpose = parse_description_purpose(j.at("purpose").get<std::string>());
    d.target_class = j.at("target_class").get<std::string>();
    if (auto it = j.find("pivotal_id"); it != j.end() && !it->is_null()) {
      d.pivotal_id = it->get<std::string>();
    }
    d.tags = j.value("tags", std::vector<std::string>{});
    if (d.text.empty()) throw Error(ErrorCode::ParseError, "description text is empty");
    return d;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("description: ") + e.what());
  }
}

std::string encode_descriptions(const DescriptionSet& set) {
  std::string out;
  for (const auto& d : set.entries()) {
    out += to_json(d).dump();
    out += '\n';
  }
  return out;
}

}  // namespace weakspot
