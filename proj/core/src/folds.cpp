#include "geowealth/folds.hpp"

#include <algorithm>
#include <set>

#include "geowealth/csv.hpp"
#include "geowealth/error.hpp"
#include "geowealth/rng.hpp"

namespace geowealth {

void FoldPlan::validate() const {
  if (groups.size() < 3) throw ConfigError("fold plan needs at least three groups");
  if (folds.empty()) throw ConfigError("fold plan has no folds");
  std::set<std::string> surveys;
  for (const auto& [name, members] : groups) {
    if (members.empty()) throw ConfigError("fold group '" + name + "' is empty");
    for (const auto& s : members) {
      if (!surveys.insert(s).second) throw ConfigError("survey '" + s + "' is in two fold groups");
    }
  }
  for (std::size_t f = 0; f < folds.size(); ++f) {
    const auto& fold = folds[f];
    std::set<std::string> used;
    auto use = [&](const std::string& g) {
      if (!groups.contains(g)) throw ConfigError("fold " + std::to_string(f + 1) + " names unknown group '" + g + "'");
      if (!used.insert(g).second) throw ConfigError("fold " + std::to_string(f + 1) + " uses group '" + g + "' twice");
    };
    for (const auto& g : fold.train_groups) use(g);
    use(fold.val_group);
    use(fold.test_group);
    if (used.size() != groups.size()) {
      throw ConfigError("fold " + std::to_string(f + 1) + " does not cover every group");
    }
  }
}

std::string FoldPlan::group_of(const std::string& survey_id) const {
  for (const auto& [name, members] : groups) {
    if (std::find(members.begin(), members.end(), survey_id) != members.end()) return name;
  }
  return {};
}

FoldPlan FoldPlan::rotation(std::map<std::string, std::vector<std::string>> groups) {
  FoldPlan plan;
  plan.groups = std::move(groups);
  std::vector<std::string> names;
  for (const auto& [name, members] : plan.groups) names.push_back(name);
  const std::size_t n = names.size();
  for (std::size_t k = 0; k < n; ++k) {
    Fold fold;
    fold.test_group = names[k];
    fold.val_group = names[(k + 1) % n];
    for (std::size_t g = 0; g < n; ++g) {
      if (g != k && g != (k + 1) % n) fold.train_groups.push_back(names[g]);
    }
    plan.folds.push_back(std::move(fold));
  }
  plan.validate();
  return plan;
}

FoldPlan load_fold_groups(const std::string& path) {
  csv::Reader reader(path, "group,survey_id");
  std::map<std::string, std::vector<std::string>> groups;
  std::vector<std::string_view> f;
  while (reader.next(f)) {
    if (f[0].empty() || f[1].empty()) reader.fail("empty group or survey_id");
    groups[std::string(f[0])].emplace_back(f[1]);
  }
  return FoldPlan::rotation(std::move(groups));
}

void save_fold_groups(const std::string& path, const FoldPlan& plan) {
  auto out = csv::open_output(path);
  out << "group,survey_id\n";
  for (const auto& [name, members] : plan.groups) {
    for (const auto& s : members) out << name << ',' << s << '\n';
  }
  if (!out) throw Error("failed writing '" + path + "'");
}

FoldPlan random_fold_plan(std::span<const std::string> survey_ids, std::size_t n_groups,
                          std::uint64_t seed) {
  std::vector<std::string> unique(survey_ids.begin(), survey_ids.end());
  std::sort(unique.begin(), unique.end());
  unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
  if (n_groups < 3 || n_groups > 26) throw ConfigError("fold plan needs between 3 and 26 groups");
  if (unique.size() < n_groups) {
    throw ConfigError("need at least " + std::to_string(n_groups) + " surveys for " +
                      std::to_string(n_groups) + " fold groups, found " +
                      std::to_string(unique.size()));
  }
  Rng rng(seed);
  rng.shuffle(std::span<std::string>(unique));
  std::map<std::string, std::vector<std::string>> groups;
  for (std::size_t i = 0; i < unique.size(); ++i) {
    groups[std::string(1, static_cast<char>('A' + i % n_groups))].push_back(unique[i]);
  }
  for (auto& [name, members] : groups) std::sort(members.begin(), members.end());
  return FoldPlan::rotation(std::move(groups));
}

}  // namespace geowealth
