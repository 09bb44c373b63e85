#include "schedsynth/report_io.hpp"

#include <cstdio>
#include <fstream>

#include "schedsynth/errors.hpp"

namespace schedsynth {

namespace {

template <typename T>
void read_field(const Json& obj, const char* key, T& out) {
    if (auto it = obj.find(key); it != obj.end()) {
        try {
            out = it->template get<T>();
        } catch (const nlohmann::json::exception&) {
            throw ConfigError(std::string("config field '") + key + "' has the wrong type");
        }
    }
}

void reject_unknown(const Json& obj, std::initializer_list<const char*> known, const std::string& where) {
    if (!obj.is_object()) throw ConfigError(where + " must be an object");
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool ok = false;
        for (const char* k : known) ok = ok || it.key() == k;
        if (!ok) throw ConfigError("unknown config key '" + it.key() + "' in " + where);
    }
}

}  // namespace

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

Json to_json(const ModelConfig& c) {
    Json j;
    j["encoder"] = {{"layers", c.encoder.layers},
                    {"d_model", c.encoder.d_model},
                    {"heads", c.encoder.heads},
                    {"d_ff", c.encoder.d_ff},
                    {"dropout", c.encoder.dropout},
                    {"max_len", c.encoder.max_len},
                    {"norm", to_string(c.encoder.norm)},
                    {"layer_norm_eps", c.encoder.layer_norm_eps}};
    j["features"] = {{"state_embed_dim", c.features.state_embed_dim},
                     {"weekday_embed_dim", c.features.weekday_embed_dim},
                     {"age_embed_dim", c.features.age_embed_dim},
                     {"occupation_embed_dim", c.features.occupation_embed_dim}};
    j["training"] = {{"learning_rate", c.learning_rate},
                     {"batch_size", c.batch_size},
                     {"max_epochs", c.max_epochs},
                     {"patience", c.patience},
                     {"head_init_std", c.head_init_std}};
    j["position_index"] = to_string(c.position_index);
    return j;
}

ModelConfig model_config_from_json(const Json& j, ModelConfig c) {
    reject_unknown(j, {"encoder", "features", "training", "position_index"}, "model config");
    if (auto it = j.find("encoder"); it != j.end()) {
        const Json& e = *it;
        reject_unknown(e, {"layers", "d_model", "heads", "d_ff", "dropout", "max_len", "norm", "layer_norm_eps"},
                       "encoder");
        read_field(e, "layers", c.encoder.layers);
        read_field(e, "d_model", c.encoder.d_model);
        read_field(e, "heads", c.encoder.heads);
        read_field(e, "d_ff", c.encoder.d_ff);
        read_field(e, "dropout", c.encoder.dropout);
        read_field(e, "max_len", c.encoder.max_len);
        read_field(e, "layer_norm_eps", c.encoder.layer_norm_eps);
        std::string norm = to_string(c.encoder.norm);
        read_field(e, "norm", norm);
        c.encoder.norm = norm_placement_from_string(norm);
    }
    if (auto it = j.find("features"); it != j.end()) {
        const Json& f = *it;
        reject_unknown(f, {"state_embed_dim", "weekday_embed_dim", "age_embed_dim", "occupation_embed_dim"}, "features");
        read_field(f, "state_embed_dim", c.features.state_embed_dim);
        read_field(f, "weekday_embed_dim", c.features.weekday_embed_dim);
        read_field(f, "age_embed_dim", c.features.age_embed_dim);
        read_field(f, "occupation_embed_dim", c.features.occupation_embed_dim);
    }
    if (auto it = j.find("training"); it != j.end()) {
        const Json& t = *it;
        reject_unknown(t, {"learning_rate", "batch_size", "max_epochs", "patience", "head_init_std"}, "training");
        read_field(t, "learning_rate", c.learning_rate);
        read_field(t, "batch_size", c.batch_size);
        read_field(t, "max_epochs", c.max_epochs);
        read_field(t, "patience", c.patience);
        read_field(t, "head_init_std", c.head_init_std);
    }
    std::string pos = to_string(c.position_index);
    read_field(j, "position_index", pos);
    c.position_index = position_index_from_string(pos);
    c.validate();
    return c;
}

Json to_json(const StateAlphabet& a) {
    Json labels = Json::array();
    for (const auto& s : a.states()) labels.push_back(s.label);
    return {{"name", a.name()}, {"kind", to_string(a.kind())}, {"labels", labels}};
}

StateAlphabet alphabet_from_json(const Json& j) {
    try {
        return StateAlphabet(j.at("name").get<std::string>(), alphabet_kind_from_string(j.at("kind").get<std::string>()),
                             j.at("labels").get<std::vector<std::string>>());
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed alphabet: ") + e.what());
    }
}

Json to_json(const MetricsReport& r) {
    Json j;
    j["sp_rmse"] = r.sp_rmse;
    j["sd_rmse"] = r.sd_rmse;
    j["ac_rmse"] = r.ac_rmse;
    j["na_mae"] = r.na_mae;
    j["hd_mae"] = r.hd_mae ? Json(*r.hd_mae) : Json(nullptr);
    j["generated_count"] = r.generated_count;
    j["reference_count"] = r.reference_count;
    j["sequence_length"] = r.sequence_length;
    j["ac_max_lag"] = r.ac_max_lag;
    j["duration_cap"] = r.duration_cap;
    Json states = Json::array();
    for (const auto& s : r.per_state) {
        states.push_back({{"label", s.label},
                          {"sp_rmse", s.sp_rmse},
                          {"sd_rmse", s.sd_rmse},
                          {"ac_rmse", s.ac_rmse ? Json(*s.ac_rmse) : Json(nullptr)},
                          {"na_abs_diff", s.na_abs_diff}});
    }
    j["per_state"] = states;
    return j;
}

Json to_json(const TrainReport& r) {
    Json epochs = Json::array();
    for (const auto& e : r.epochs) {
        epochs.push_back({{"epoch", e.epoch},
                          {"train_loss", e.train_loss},
                          {"val_loss", e.val_loss},
                          {"val_accuracy", e.val_accuracy}});
    }
    return {{"initial_val_loss", r.initial_val_loss},
            {"initial_val_accuracy", r.initial_val_accuracy},
            {"best_epoch", r.best_epoch},
            {"stopped_early", r.stopped_early},
            {"epochs", epochs}};
}

Json to_json(const SplitPlan& p) {
    Json folds = Json::object();
    for (const auto& [id, f] : p.fold_of) folds[id] = f;
    return {{"seed", p.seed}, {"test_ids", p.test_ids}, {"folds", folds}};
}

void write_json(const std::filesystem::path& path, const Json& j) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out << j.dump(2) << '\n';
    if (!out) throw DataError("write failed: " + path.string());
}

Json read_json(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    try {
        return Json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

void write_columns(const std::filesystem::path& path, const std::vector<Column>& columns) {
    if (columns.empty()) throw ShapeError("no columns to write");
    const std::size_t n = columns.front().values.size();
    for (const auto& c : columns) {
        if (c.values.size() != n) throw ShapeError("column '" + c.name + "' has a different length");
    }
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    for (std::size_t c = 0; c < columns.size(); ++c) out << (c ? "," : "") << columns[c].name;
    out << '\n';
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < columns.size(); ++c) out << (c ? "," : "") << format_double(columns[c].values[i]);
        out << '\n';
    }
    if (!out) throw DataError("write failed: " + path.string());
}

}  // namespace schedsynth
