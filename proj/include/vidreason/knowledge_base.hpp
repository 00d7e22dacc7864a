#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

namespace vidreason {

inline constexpr std::string_view kNullAction = "null";

enum class TransitionKind { attribute, relationship };

std::string_view to_string(TransitionKind kind);

// Ordered name lists. A name's position is its one-hot index.
struct Vocabulary {
  std::vector<std::string> objects;
  std::vector<std::string> attributes;
  std::vector<std::string> relationships;
  std::vector<std::string> actions;  // actions[0] == "null"

  std::optional<std::size_t> object_index(std::string_view name) const;
  std::optional<std::size_t> attribute_index(std::string_view name) const;
  std::optional<std::size_t> relationship_index(std::string_view name) const;
  std::optional<std::size_t> action_index(std::string_view name) const;

  bool operator==(const Vocabulary&) const = default;
};

// A binary attribute (e.g. closed/open) and the categories that carry it.
struct AttributeDomain {
  std::array<std::string, 2> pair;
  std::vector<std::string> objects;

  bool contains(std::string_view value) const;
  bool applies_to(std::string_view object) const;
  bool operator==(const AttributeDomain&) const = default;
};

// A binary relationship between an ordered (subject, object) category pair.
struct RelationshipDomain {
  std::array<std::string, 2> pair;
  std::vector<std::string> subjects;
  std::vector<std::string> objects;

  bool contains(std::string_view value) const;
  bool applies_to(std::string_view subject, std::string_view object) const;
  bool operator==(const RelationshipDomain&) const = default;
};

struct AttributeActionRule {
  std::string action;
  std::string pre;
  std::string eff;
  std::vector<std::string> objects;
  bool operator==(const AttributeActionRule&) const = default;
};

struct RelationshipActionRule {
  std::string action;
  std::string pre;
  std::string eff;
  std::vector<std::string> subjects;
  std::vector<std::string> objects;
  bool operator==(const RelationshipActionRule&) const = default;
};

struct Cardinalities {
  std::size_t objects = 0;        // M
  std::size_t attributes = 0;     // S
  std::size_t relationships = 0;  // N
  std::size_t actions = 0;        // K
  bool operator==(const Cardinalities&) const = default;
};

// One legal (scope, pre, eff) combination with its action label. For
// attribute transitions `object` is empty and `subject` holds the category.
struct LabeledTransition {
  TransitionKind kind = TransitionKind::attribute;
  std::string subject;
  std::string object;
  std::string pre;
  std::string eff;
  std::string action;
  bool operator==(const LabeledTransition&) const = default;
};

// Vocabularies, state domains and transition->action rules. Immutable once
// loaded.
class KnowledgeBase {
 public:
  KnowledgeBase() = default;

  const Vocabulary& vocabulary() const { return vocabulary_; }
  const std::vector<AttributeDomain>& attribute_domains() const { return attribute_domains_; }
  const std::vector<RelationshipDomain>& relationship_domains() const {
    return relationship_domains_;
  }
  const std::vector<AttributeActionRule>& attribute_rules() const { return attribute_rules_; }
  const std::vector<RelationshipActionRule>& relationship_rules() const {
    return relationship_rules_;
  }
  Cardinalities cardinalities() const;

  // Index of the domain whose pair contains `value`.
  std::optional<std::size_t> attribute_domain_of(std::string_view value) const;
  std::optional<std::size_t> relationship_domain_of(std::string_view value) const;

  // Return the rule's action, or "null" for identity transitions and
  // in-domain transitions no rule covers. Throws DomainError when the
  // values are unknown or the domain does not apply to the categories.
  std::string lookup_attribute_action(std::string_view object, std::string_view pre,
                                      std::string_view eff) const;
  std::string lookup_relationship_action(std::string_view subject, std::string_view object,
                                         std::string_view pre, std::string_view eff) const;

  // Every legal transition, identity pairs included, in domain/category/value
  // file order.
  std::vector<LabeledTransition> enumerate_attribute_transitions() const;
  std::vector<LabeledTransition> enumerate_relationship_transitions() const;
  std::vector<LabeledTransition> enumerate_transitions() const;

  bool operator==(const KnowledgeBase&) const = default;

 private:
  friend KnowledgeBase load_knowledge_base(std::string_view, const std::string&);

  Vocabulary vocabulary_;
  std::vector<AttributeDomain> attribute_domains_;
  std::vector<RelationshipDomain> relationship_domains_;
  std::vector<AttributeActionRule> attribute_rules_;
  std::vector<RelationshipActionRule> relationship_rules_;

  // (object, pre, eff) -> action
  std::map<std::tuple<std::string, std::string, std::string>, std::string> attribute_index_;
  // (subject, object, pre, eff) -> action
  std::map<std::tuple<std::string, std::string, std::string, std::string>, std::string>
      relationship_index_;
};

// Parse and validate a knowledge document. `source` prefixes error locations.
// Throws ParseError for malformed JSON or schema, ValidationError for
// semantic problems.
KnowledgeBase load_knowledge_base(std::string_view text, const std::string& source = "knowledge");
KnowledgeBase load_knowledge_base_file(const std::filesystem::path& path);

}  // namespace vidreason
