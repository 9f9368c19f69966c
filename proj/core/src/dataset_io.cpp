#include <fstream>

#include "meta_json.hpp"
#include "mtrack/csv.hpp"
#include "mtrack/error.hpp"
#include "mtrack/preprocess.hpp"

namespace mtrack {

using nlohmann::json;

namespace detail {

json dataset_meta(const ProcessedDataset& ds) {
    json meta;
    meta["I"] = ds.I;
    meta["J"] = ds.J;
    meta["N"] = ds.N;
    meta["K"] = ds.K();
    meta["formula"] = ds.Z.formula;
    meta["columns"] = ds.Z.column_names;
    json factors = json::array();
    for (const auto& f : ds.factors) factors.push_back({{"name", f.name}, {"levels", f.levels}});
    meta["factors"] = factors;
    meta["subject_ids"] = ds.subject_ids;
    meta["trial_ids"] = ds.trial_ids;
    meta["trial_levels"] = ds.trial_levels;
    json map = json::array();
    for (std::size_t i = 0; i < ds.I; ++i)
        for (std::size_t j = 0; j < ds.J; ++j)
            map.push_back({{"column", ds.column(i, j) + 1},
                           {"sbj", ds.subject_ids.at(i)},
                           {"trial", ds.trial_ids.at(j)}});
    meta["column_map"] = map;
    return meta;
}

void write_json(const std::filesystem::path& path, const json& doc) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write " + path.string());
    out << doc.dump(2) << '\n';
}

json read_json(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("missing " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ValidationError(path.filename().string() + ": " + e.what());
    }
}

ProcessedDataset read_dataset_files(const std::filesystem::path& dir, const std::string& y_file,
                                    const std::string& d_file) {
    const json meta = read_json(dir / "meta.json");
    ProcessedDataset ds;
    try {
        ds.I = meta.at("I").get<std::size_t>();
        ds.J = meta.at("J").get<std::size_t>();
        ds.N = meta.at("N").get<std::size_t>();
        ds.Z.formula = meta.value("formula", std::string{});
        ds.subject_ids = meta.at("subject_ids").get<std::vector<int>>();
        ds.trial_ids = meta.at("trial_ids").get<std::vector<int>>();
        if (meta.contains("trial_levels"))
            ds.trial_levels = meta["trial_levels"].get<std::vector<std::vector<std::size_t>>>();
        for (const auto& f : meta.value("factors", json::array()))
            ds.factors.push_back({f.at("name").get<std::string>(), f.at("levels").get<std::vector<std::string>>()});
    } catch (const json::exception& e) {
        throw ValidationError("meta.json: " + std::string(e.what()));
    }

    ds.Y = csv::read_matrix(dir / y_file);
    ds.D = csv::read_matrix(dir / d_file);
    ds.Z.Z = csv::read_matrix(dir / "Z.csv", &ds.Z.column_names);
    ds.validate();
    return ds;
}

}  // namespace detail

void write_dataset(const std::filesystem::path& dir, const ProcessedDataset& ds) {
    ds.validate();
    std::filesystem::create_directories(dir);
    const auto labels = column_labels(ds);
    csv::write_matrix(dir / "Y.csv", ds.Y, labels);
    csv::write_matrix(dir / "D.csv", ds.D, labels);
    csv::write_matrix(dir / "Z.csv", ds.Z.Z, ds.Z.column_names);
    detail::write_json(dir / "meta.json", detail::dataset_meta(ds));
}

ProcessedDataset read_dataset(const std::filesystem::path& dir) {
    return detail::read_dataset_files(dir, "Y.csv", "D.csv");
}

}  // namespace mtrack
