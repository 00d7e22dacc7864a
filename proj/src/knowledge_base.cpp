#include "vidreason/knowledge_base.hpp"

#include <algorithm>
#include <set>

#include "json_util.hpp"
#include "vidreason/error.hpp"
#include "vidreason/io.hpp"

namespace vidreason {

namespace {

using detail::json;

std::optional<std::size_t> find_index(const std::vector<std::string>& names,
                                      std::string_view name) {
  auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) return std::nullopt;
  return static_cast<std::size_t>(it - names.begin());
}

bool has(const std::vector<std::string>& names, std::string_view name) {
  return find_index(names, name).has_value();
}

std::string describe(const std::string& a, const std::string& b, const std::string& c) {
  return "(" + a + ", " + b + " -> " + c + ")";
}

class Loader {
 public:
  Loader(std::string source) : source_(std::move(source)) {}

  std::string at(const std::string& path) const { return source_ + ":" + path; }

  void unique_names(const std::vector<std::string>& names, const std::string& path) const {
    std::set<std::string> seen;
    for (std::size_t i = 0; i < names.size(); ++i) {
      if (names[i].empty()) throw ValidationError("empty name", at(detail::indexed(path, i)));
      if (!seen.insert(names[i]).second)
        throw ValidationError("duplicate name '" + names[i] + "'", at(detail::indexed(path, i)));
    }
  }

  void known_objects(const Vocabulary& vocab, const std::vector<std::string>& names,
                     const std::string& path) const {
    for (std::size_t i = 0; i < names.size(); ++i)
      if (!vocab.object_index(names[i]))
        throw ValidationError("unknown object category '" + names[i] + "'",
                              at(detail::indexed(path, i)));
    unique_names(names, path);
  }

  std::array<std::string, 2> pair(const json& value, const std::string& path) const {
    auto names = detail::get_string_array(value, at(path));
    if (names.size() != 2) throw ParseError("pair must hold exactly two values", at(path));
    if (names[0] == names[1]) throw ValidationError("pair values must differ", at(path));
    return {names[0], names[1]};
  }

 private:
  std::string source_;
};

}  // namespace

std::string_view to_string(TransitionKind kind) {
  return kind == TransitionKind::attribute ? "attribute" : "relationship";
}

std::optional<std::size_t> Vocabulary::object_index(std::string_view name) const {
  return find_index(objects, name);
}
std::optional<std::size_t> Vocabulary::attribute_index(std::string_view name) const {
  return find_index(attributes, name);
}
std::optional<std::size_t> Vocabulary::relationship_index(std::string_view name) const {
  return find_index(relationships, name);
}
std::optional<std::size_t> Vocabulary::action_index(std::string_view name) const {
  return find_index(actions, name);
}

bool AttributeDomain::contains(std::string_view value) const {
  return pair[0] == value || pair[1] == value;
}
bool AttributeDomain::applies_to(std::string_view object) const { return has(objects, object); }

bool RelationshipDomain::contains(std::string_view value) const {
  return pair[0] == value || pair[1] == value;
}
bool RelationshipDomain::applies_to(std::string_view subject, std::string_view object) const {
  return has(subjects, subject) && has(objects, object);
}

Cardinalities KnowledgeBase::cardinalities() const {
  return {vocabulary_.objects.size(), vocabulary_.attributes.size(),
          vocabulary_.relationships.size(), vocabulary_.actions.size()};
}

std::optional<std::size_t> KnowledgeBase::attribute_domain_of(std::string_view value) const {
  for (std::size_t i = 0; i < attribute_domains_.size(); ++i)
    if (attribute_domains_[i].contains(value)) return i;
  return std::nullopt;
}

std::optional<std::size_t> KnowledgeBase::relationship_domain_of(std::string_view value) const {
  for (std::size_t i = 0; i < relationship_domains_.size(); ++i)
    if (relationship_domains_[i].contains(value)) return i;
  return std::nullopt;
}

std::string KnowledgeBase::lookup_attribute_action(std::string_view object, std::string_view pre,
                                                   std::string_view eff) const {
  auto domain = attribute_domain_of(pre);
  if (!domain) throw DomainError("unknown attribute value '" + std::string(pre) + "'");
  if (!attribute_domains_[*domain].contains(eff))
    throw DomainError("attribute values '" + std::string(pre) + "' and '" + std::string(eff) +
                      "' belong to different domains");
  if (!attribute_domains_[*domain].applies_to(object))
    throw DomainError("attribute pair " + attribute_domains_[*domain].pair[0] + "/" +
                      attribute_domains_[*domain].pair[1] + " does not apply to '" +
                      std::string(object) + "'");
  if (pre == eff) return std::string(kNullAction);
  auto it = attribute_index_.find({std::string(object), std::string(pre), std::string(eff)});
  return it == attribute_index_.end() ? std::string(kNullAction) : it->second;
}

std::string KnowledgeBase::lookup_relationship_action(std::string_view subject,
                                                      std::string_view object,
                                                      std::string_view pre,
                                                      std::string_view eff) const {
  auto domain = relationship_domain_of(pre);
  if (!domain) throw DomainError("unknown relationship value '" + std::string(pre) + "'");
  const auto& d = relationship_domains_[*domain];
  if (!d.contains(eff))
    throw DomainError("relationship values '" + std::string(pre) + "' and '" +
                      std::string(eff) + "' belong to different domains");
  if (!d.applies_to(subject, object))
    throw DomainError("relationship pair " + d.pair[0] + "/" + d.pair[1] +
                      " does not apply to (" + std::string(subject) + ", " +
                      std::string(object) + ")");
  if (pre == eff) return std::string(kNullAction);
  auto it = relationship_index_.find(
      {std::string(subject), std::string(object), std::string(pre), std::string(eff)});
  return it == relationship_index_.end() ? std::string(kNullAction) : it->second;
}

std::vector<LabeledTransition> KnowledgeBase::enumerate_attribute_transitions() const {
  std::vector<LabeledTransition> out;
  for (const auto& domain : attribute_domains_)
    for (const auto& object : domain.objects)
      for (const auto& pre : domain.pair)
        for (const auto& eff : domain.pair)
          out.push_back({TransitionKind::attribute, object, "", pre, eff,
                         lookup_attribute_action(object, pre, eff)});
  return out;
}

std::vector<LabeledTransition> KnowledgeBase::enumerate_relationship_transitions() const {
  std::vector<LabeledTransition> out;
  for (const auto& domain : relationship_domains_)
    for (const auto& subject : domain.subjects)
      for (const auto& object : domain.objects)
        for (const auto& pre : domain.pair)
          for (const auto& eff : domain.pair)
            out.push_back({TransitionKind::relationship, subject, object, pre, eff,
                           lookup_relationship_action(subject, object, pre, eff)});
  return out;
}

std::vector<LabeledTransition> KnowledgeBase::enumerate_transitions() const {
  auto out = enumerate_attribute_transitions();
  auto rel = enumerate_relationship_transitions();
  out.insert(out.end(), rel.begin(), rel.end());
  return out;
}

KnowledgeBase load_knowledge_base(std::string_view text, const std::string& source) {
  const json doc = detail::parse_json(text, source);
  Loader ld(source);
  detail::check_keys(doc,
                     {"objects", "attributes", "relationships", "actions", "attribute_rules",
                      "relationship_rules"},
                     ld.at("$"));

  const json empty = json::array();
  auto section = [&](const char* key) -> const json& {
    auto it = doc.find(key);
    return it == doc.end() ? empty : *it;
  };

  KnowledgeBase kb;
  Vocabulary& vocab = kb.vocabulary_;

  vocab.objects = detail::get_string_array(detail::require_key(doc, "objects", ld.at("$")),
                                           ld.at("objects"));
  ld.unique_names(vocab.objects, "objects");

  vocab.actions = detail::get_string_array(detail::require_key(doc, "actions", ld.at("$")),
                                           ld.at("actions"));
  ld.unique_names(vocab.actions, "actions");
  if (vocab.actions.empty() || vocab.actions.front() != kNullAction)
    throw ValidationError("\"null\" must be the first action", ld.at("actions"));

  const json& attributes = section("attributes");
  detail::require_array(attributes, ld.at("attributes"));
  for (std::size_t i = 0; i < attributes.size(); ++i) {
    const std::string path = detail::indexed("attributes", i);
    detail::check_keys(attributes[i], {"pair", "objects"}, ld.at(path));
    AttributeDomain domain;
    domain.pair = ld.pair(detail::require_key(attributes[i], "pair", ld.at(path)), path + ".pair");
    domain.objects = detail::get_string_array(
        detail::require_key(attributes[i], "objects", ld.at(path)), ld.at(path + ".objects"));
    ld.known_objects(vocab, domain.objects, path + ".objects");
    for (const auto& value : domain.pair) {
      if (vocab.attribute_index(value))
        throw ValidationError("attribute value '" + value + "' already defined",
                              ld.at(path + ".pair"));
      vocab.attributes.push_back(value);
    }
    kb.attribute_domains_.push_back(std::move(domain));
  }

  const json& relationships = section("relationships");
  detail::require_array(relationships, ld.at("relationships"));
  for (std::size_t i = 0; i < relationships.size(); ++i) {
    const std::string path = detail::indexed("relationships", i);
    detail::check_keys(relationships[i], {"pair", "subjects", "objects"}, ld.at(path));
    RelationshipDomain domain;
    domain.pair =
        ld.pair(detail::require_key(relationships[i], "pair", ld.at(path)), path + ".pair");
    domain.subjects = detail::get_string_array(
        detail::require_key(relationships[i], "subjects", ld.at(path)), ld.at(path + ".subjects"));
    domain.objects = detail::get_string_array(
        detail::require_key(relationships[i], "objects", ld.at(path)), ld.at(path + ".objects"));
    ld.known_objects(vocab, domain.subjects, path + ".subjects");
    ld.known_objects(vocab, domain.objects, path + ".objects");
    for (const auto& value : domain.pair) {
      if (vocab.relationship_index(value) || vocab.attribute_index(value))
        throw ValidationError("state value '" + value + "' already defined",
                              ld.at(path + ".pair"));
      vocab.relationships.push_back(value);
    }
    kb.relationship_domains_.push_back(std::move(domain));
  }

  auto check_action = [&](const std::string& action, const std::string& path) {
    if (!vocab.action_index(action))
      throw ValidationError("unknown action '" + action + "'", ld.at(path));
    if (action == kNullAction)
      throw ValidationError("rules may not target \"null\"", ld.at(path));
  };

  // Rule bookkeeping for conflict messages: key -> (rule path, action).
  std::map<std::tuple<std::string, std::string, std::string>, std::pair<std::string, std::string>>
      attribute_owner;
  const json& attribute_rules = section("attribute_rules");
  detail::require_array(attribute_rules, ld.at("attribute_rules"));
  for (std::size_t i = 0; i < attribute_rules.size(); ++i) {
    const std::string path = detail::indexed("attribute_rules", i);
    const json& node = attribute_rules[i];
    detail::check_keys(node, {"action", "pre", "eff", "objects"}, ld.at(path));
    AttributeActionRule rule;
    rule.action = detail::get_string(detail::require_key(node, "action", ld.at(path)),
                                     ld.at(path + ".action"));
    rule.pre = detail::get_string(detail::require_key(node, "pre", ld.at(path)),
                                  ld.at(path + ".pre"));
    rule.eff = detail::get_string(detail::require_key(node, "eff", ld.at(path)),
                                  ld.at(path + ".eff"));
    rule.objects = detail::get_string_array(detail::require_key(node, "objects", ld.at(path)),
                                            ld.at(path + ".objects"));
    check_action(rule.action, path + ".action");
    auto domain = kb.attribute_domain_of(rule.pre);
    if (!domain) throw ValidationError("unknown attribute value '" + rule.pre + "'", ld.at(path + ".pre"));
    if (!kb.attribute_domains_[*domain].contains(rule.eff))
      throw ValidationError("effect '" + rule.eff + "' is not in the precondition's domain",
                            ld.at(path + ".eff"));
    if (rule.pre == rule.eff)
      throw ValidationError("precondition equals effect", ld.at(path));
    if (rule.objects.empty()) throw ValidationError("rule lists no objects", ld.at(path + ".objects"));
    ld.known_objects(vocab, rule.objects, path + ".objects");
    for (std::size_t j = 0; j < rule.objects.size(); ++j) {
      const auto& object = rule.objects[j];
      if (!kb.attribute_domains_[*domain].applies_to(object))
        throw ValidationError("attribute domain does not apply to '" + object + "'",
                              ld.at(detail::indexed(path + ".objects", j)));
      auto key = std::make_tuple(object, rule.pre, rule.eff);
      auto [it, inserted] = attribute_owner.emplace(key, std::make_pair(path, rule.action));
      if (!inserted && it->second.second != rule.action)
        throw ValidationError(path + " (" + rule.action + ") conflicts with " + it->second.first +
                                  " (" + it->second.second + ") on " +
                                  describe(object, rule.pre, rule.eff),
                              ld.at(path));
      kb.attribute_index_[key] = rule.action;
    }
    kb.attribute_rules_.push_back(std::move(rule));
  }

  std::map<std::tuple<std::string, std::string, std::string, std::string>,
           std::pair<std::string, std::string>>
      relationship_owner;
  const json& relationship_rules = section("relationship_rules");
  detail::require_array(relationship_rules, ld.at("relationship_rules"));
  for (std::size_t i = 0; i < relationship_rules.size(); ++i) {
    const std::string path = detail::indexed("relationship_rules", i);
    const json& node = relationship_rules[i];
    detail::check_keys(node, {"action", "pre", "eff", "subjects", "objects"}, ld.at(path));
    RelationshipActionRule rule;
    rule.action = detail::get_string(detail::require_key(node, "action", ld.at(path)),
                                     ld.at(path + ".action"));
    rule.pre = detail::get_string(detail::require_key(node, "pre", ld.at(path)),
                                  ld.at(path + ".pre"));
    rule.eff = detail::get_string(detail::require_key(node, "eff", ld.at(path)),
                                  ld.at(path + ".eff"));
    rule.subjects = detail::get_string_array(detail::require_key(node, "subjects", ld.at(path)),
                                             ld.at(path + ".subjects"));
    rule.objects = detail::get_string_array(detail::require_key(node, "objects", ld.at(path)),
                                            ld.at(path + ".objects"));
    check_action(rule.action, path + ".action");
    auto domain = kb.relationship_domain_of(rule.pre);
    if (!domain)
      throw ValidationError("unknown relationship value '" + rule.pre + "'", ld.at(path + ".pre"));
    const auto& d = kb.relationship_domains_[*domain];
    if (!d.contains(rule.eff))
      throw ValidationError("effect '" + rule.eff + "' is not in the precondition's domain",
                            ld.at(path + ".eff"));
    if (rule.pre == rule.eff) throw ValidationError("precondition equals effect", ld.at(path));
    if (rule.subjects.empty() || rule.objects.empty())
      throw ValidationError("rule lists no subjects or objects", ld.at(path));
    ld.known_objects(vocab, rule.subjects, path + ".subjects");
    ld.known_objects(vocab, rule.objects, path + ".objects");
    for (const auto& subject : rule.subjects) {
      for (const auto& object : rule.objects) {
        if (!d.applies_to(subject, object))
          throw ValidationError("relationship domain does not apply to (" + subject + ", " +
                                    object + ")",
                                ld.at(path));
        auto key = std::make_tuple(subject, object, rule.pre, rule.eff);
        auto [it, inserted] = relationship_owner.emplace(key, std::make_pair(path, rule.action));
        if (!inserted && it->second.second != rule.action)
          throw ValidationError(path + " (" + rule.action + ") conflicts with " +
                                    it->second.first + " (" + it->second.second + ") on (" +
                                    subject + ", " + object + ", " + rule.pre + " -> " +
                                    rule.eff + ")",
                                ld.at(path));
        kb.relationship_index_[key] = rule.action;
      }
    }
    kb.relationship_rules_.push_back(std::move(rule));
  }

  return kb;
}

KnowledgeBase load_knowledge_base_file(const std::filesystem::path& path) {
  return load_knowledge_base(read_text_file(path), path.string());
}

}  // namespace vidreason
