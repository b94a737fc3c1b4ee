#include "poisonlab/filter_report.hpp"

#include <algorithm>

#include <json.hpp>

namespace poisonlab {

bool FilterReport::kept(std::uint64_t id) const {
    return std::binary_search(kept_ids.begin(), kept_ids.end(), id);
}

std::unordered_set<std::uint64_t> FilterReport::kept_set() const {
    return {kept_ids.begin(), kept_ids.end()};
}

void FilterReport::check_partition(const FeatureDataset& ds) const {
    if (kept_ids.size() + removed_ids.size() != ds.size())
        throw DatasetError("filter report does not cover the dataset");
    std::unordered_set<std::uint64_t> seen;
    seen.reserve(ds.size());
    for (std::uint64_t id : kept_ids)
        if (!ds.contains_id(id) || !seen.insert(id).second)
            throw DatasetError("filter report kept id " + std::to_string(id) +
                               " duplicated or unknown");
    for (std::uint64_t id : removed_ids)
        if (!ds.contains_id(id) || !seen.insert(id).second)
            throw DatasetError("filter report removed id " + std::to_string(id) +
                               " duplicated or unknown");
}

std::string FilterReport::to_json() const {
    nlohmann::json j;
    j["defense"] = defense_name;
    nlohmann::json params = nlohmann::json::object();
    for (const auto& [key, value] : parameters) params[key] = value;
    j["params"] = params;
    j["kept"] = kept_ids;
    j["removed"] = removed_ids;
    return j.dump();
}

FilterReport FilterReport::from_json(const std::string& text) {
    const nlohmann::json j = nlohmann::json::parse(text);
    FilterReport report;
    report.defense_name = j.at("defense").get<std::string>();
    for (const auto& [key, value] : j.at("params").items())
        report.parameters.emplace_back(key, value.get<std::string>());
    report.kept_ids = j.at("kept").get<std::vector<std::uint64_t>>();
    report.removed_ids = j.at("removed").get<std::vector<std::uint64_t>>();
    return report;
}

FilterReport make_report(const FeatureDataset& ds, std::string defense_name,
                         std::vector<std::pair<std::string, std::string>> parameters,
                         const std::unordered_set<std::uint64_t>& removed) {
    FilterReport report;
    report.defense_name = std::move(defense_name);
    report.parameters = std::move(parameters);
    for (std::size_t r = 0; r < ds.size(); ++r) {
        const std::uint64_t id = ds.id(r);
        if (removed.count(id))
            report.removed_ids.push_back(id);
        else
            report.kept_ids.push_back(id);
    }
    std::sort(report.kept_ids.begin(), report.kept_ids.end());
    std::sort(report.removed_ids.begin(), report.removed_ids.end());
    report.check_partition(ds);
    return report;
}

}  // namespace poisonlab
