#include "schedsynth/checkpoint.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "schedsynth/errors.hpp"
#include "schedsynth/report_io.hpp"

namespace schedsynth {

namespace {

constexpr char kMagic[8] = {'S', 'S', 'Y', 'N', 'C', 'K', 'P', 'T'};
static_assert(std::endian::native == std::endian::little, "checkpoint IO assumes a little-endian host");

struct Block {
    std::string name;
    Shape shape;
    std::vector<double> values;
};

std::uint32_t crc_of(const std::vector<double>& values) {
    const auto* bytes = reinterpret_cast<const Bytef*>(values.data());
    uLong crc = crc32(0L, Z_NULL, 0);
    std::size_t left = values.size() * sizeof(double);
    while (left > 0) {
        const auto chunk = static_cast<uInt>(std::min<std::size_t>(left, 1u << 30));
        crc = crc32(crc, bytes, chunk);
        bytes += chunk;
        left -= chunk;
    }
    return static_cast<std::uint32_t>(crc);
}

void write_container(std::ostream& out, Json header, const std::vector<Block>& blocks) {
    Json entries = Json::array();
    for (const auto& b : blocks) {
        if (shape_size(b.shape) != b.values.size()) throw ShapeError("block '" + b.name + "' size does not match shape");
        entries.push_back({{"name", b.name}, {"shape", b.shape}, {"crc32", crc_of(b.values)}});
    }
    header["format_version"] = kCheckpointFormatVersion;
    header["blocks"] = entries;
    const std::string text = header.dump();
    const auto len = static_cast<std::uint64_t>(text.size());
    out.write(kMagic, sizeof kMagic);
    out.write(reinterpret_cast<const char*>(&len), sizeof len);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const auto& b : blocks) {
        out.write(reinterpret_cast<const char*>(b.values.data()), static_cast<std::streamsize>(b.values.size() * sizeof(double)));
    }
    if (!out) throw DataError("checkpoint write failed");
}

struct Container {
    Json header;
    std::vector<Block> blocks;

    const Block& block(const std::string& name) const {
        for (const auto& b : blocks) {
            if (b.name == name) return b;
        }
        throw DataError("checkpoint has no block '" + name + "'");
    }
};

Json read_header(std::istream& in) {
    char magic[sizeof kMagic];
    if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
        throw DataError("not a checkpoint file (bad magic)");
    }
    std::uint64_t len = 0;
    if (!in.read(reinterpret_cast<char*>(&len), sizeof len) || len > (1u << 30)) {
        throw DataError("checkpoint header length is corrupt");
    }
    std::string text(len, '\0');
    if (!in.read(text.data(), static_cast<std::streamsize>(len))) throw DataError("checkpoint header is truncated");
    Json header;
    try {
        header = Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw DataError(std::string("checkpoint header is corrupt: ") + e.what());
    }
    const int version = header.value("format_version", -1);
    if (version != kCheckpointFormatVersion) {
        throw DataError("unsupported checkpoint format version " + std::to_string(version) + " (expected " +
                        std::to_string(kCheckpointFormatVersion) + ")");
    }
    return header;
}

Container read_container(std::istream& in, CheckpointKind want) {
    Container c;
    c.header = read_header(in);
    const std::string kind = c.header.value("kind", "");
    if (kind != to_string(want)) {
        throw DataError("checkpoint kind mismatch: file holds a '" + kind + "' model, expected '" + to_string(want) + "'");
    }
    try {
        for (const auto& e : c.header.at("blocks")) {
            Block b;
            b.name = e.at("name").get<std::string>();
            b.shape = e.at("shape").get<Shape>();
            b.values.resize(shape_size(b.shape));
            if (!in.read(reinterpret_cast<char*>(b.values.data()), static_cast<std::streamsize>(b.values.size() * sizeof(double)))) {
                throw DataError("checkpoint block '" + b.name + "' is truncated");
            }
            if (crc_of(b.values) != e.at("crc32").get<std::uint32_t>()) {
                throw DataError("checksum mismatch in checkpoint block '" + b.name + "'");
            }
            c.blocks.push_back(std::move(b));
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("checkpoint header is malformed: ") + e.what());
    }
    if (in.peek() != std::char_traits<char>::eof()) throw DataError("trailing bytes after the last checkpoint block");
    return c;
}

std::vector<Block> parameter_blocks(const SequenceModel& network) {
    std::vector<Block> out;
    for (const auto& [name, t] : network.params().items()) {
        out.push_back({name, t.shape(), std::vector<double>(t.data().begin(), t.data().end())});
    }
    return out;
}

Json network_header(const SequenceModel& network) {
    return {{"config", to_json(network.config())},
            {"vocab", network.vocab()},
            {"outputs", network.outputs()},
            {"init_seed", network.init_seed()}};
}

SequenceModel network_from(const Container& c) {
    const Json& h = c.header;
    SequenceModel net;
    try {
        net = SequenceModel(model_config_from_json(h.at("config")), h.at("vocab").get<int>(), h.at("outputs").get<int>(),
                            h.at("init_seed").get<std::uint64_t>());
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("checkpoint header is malformed: ") + e.what());
    }
    auto& params = net.params();
    if (c.blocks.size() != params.count()) throw ShapeError("checkpoint parameter count does not match its config");
    for (std::size_t i = 0; i < params.count(); ++i) {
        const auto& [name, tensor] = params.items()[i];
        const Block& b = c.blocks[i];
        if (b.name != name) throw ShapeError("checkpoint block '" + b.name + "' where '" + name + "' was expected");
        if (b.shape != tensor.shape()) {
            throw ShapeError("checkpoint block '" + name + "' has shape " + shape_string(b.shape) + ", config implies " +
                             shape_string(tensor.shape()));
        }
        Tensor t = tensor;
        std::copy(b.values.begin(), b.values.end(), t.mutable_data().begin());
    }
    return net;
}

std::ofstream open_out(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write checkpoint " + path.string());
    return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open checkpoint " + path.string());
    return in;
}

void put_chain(std::vector<Block>& blocks, const std::string& prefix, const MarkovChain& chain) {
    const auto k = static_cast<std::size_t>(chain.states);
    blocks.push_back({prefix + ".initial", {k}, chain.initial});
    blocks.push_back({prefix + ".transitions", {static_cast<std::size_t>(kStepsPerWeek) * k, k}, chain.transitions});
}

MarkovChain get_chain(const Container& c, const std::string& prefix, int states, std::size_t persons) {
    MarkovChain chain;
    chain.states = states;
    chain.persons = persons;
    chain.initial = c.block(prefix + ".initial").values;
    chain.transitions = c.block(prefix + ".transitions").values;
    const auto k = static_cast<std::size_t>(states);
    if (chain.initial.size() != k || chain.transitions.size() != static_cast<std::size_t>(kStepsPerWeek) * k * k) {
        throw ShapeError("markov block '" + prefix + "' does not match the alphabet size");
    }
    return chain;
}

}  // namespace

std::string to_string(CheckpointKind kind) {
    switch (kind) {
        case CheckpointKind::generator: return "generator";
        case CheckpointKind::imputer: return "imputer";
        case CheckpointKind::markov: return "markov";
    }
    return "unknown";
}

void save_checkpoint(std::ostream& out, const GeneratorModel& model) {
    Json h = {{"kind", "generator"}};
    h.update(network_header(model.network));
    h["alphabets"] = {{"mobility", to_json(model.alphabet)}};
    h["training_seed"] = model.training_seed;
    h["trained"] = model.trained;
    write_container(out, std::move(h), parameter_blocks(model.network));
}

void save_checkpoint(std::ostream& out, const ImputerModel& model) {
    Json h = {{"kind", "imputer"}};
    h.update(network_header(model.network));
    h["alphabets"] = {{"mobility", to_json(model.mobility)}, {"activity", to_json(model.activities)}};
    h["training_seed"] = model.training_seed;
    h["trained"] = model.trained;
    write_container(out, std::move(h), parameter_blocks(model.network));
}

void save_checkpoint(std::ostream& out, const MarkovModel& model) {
    if (!model.fitted) throw ConfigError("markov model is not fitted");
    Json h = {{"kind", "markov"}};
    h["alphabets"] = {{"mobility", to_json(model.alphabet)}};
    h["options"] = {{"alpha", model.options.alpha},
                    {"stratify", model.options.stratify},
                    {"min_cell_persons", model.options.min_cell_persons}};
    h["pooled_persons"] = model.pooled.persons;
    Json cells = Json::array();
    std::vector<Block> blocks;
    blocks.push_back({"attribute_counts",
                      {model.attribute_counts.size()},
                      std::vector<double>(model.attribute_counts.begin(), model.attribute_counts.end())});
    put_chain(blocks, "pooled", model.pooled);
    for (const auto& [cell, chain] : model.cells) {
        cells.push_back({{"age_class", cell.first}, {"occupation_class", cell.second}, {"persons", chain.persons}});
        put_chain(blocks, "cell." + std::to_string(cell.first) + "." + std::to_string(cell.second), chain);
    }
    h["cells"] = cells;
    write_container(out, std::move(h), blocks);
}

void save_checkpoint(const std::filesystem::path& path, const GeneratorModel& model) {
    auto out = open_out(path);
    save_checkpoint(out, model);
}

void save_checkpoint(const std::filesystem::path& path, const ImputerModel& model) {
    auto out = open_out(path);
    save_checkpoint(out, model);
}

void save_checkpoint(const std::filesystem::path& path, const MarkovModel& model) {
    auto out = open_out(path);
    save_checkpoint(out, model);
}

GeneratorModel load_generator(std::istream& in) {
    const Container c = read_container(in, CheckpointKind::generator);
    GeneratorModel model;
    model.network = network_from(c);
    try {
        model.alphabet = alphabet_from_json(c.header.at("alphabets").at("mobility"));
        model.training_seed = c.header.at("training_seed").get<std::uint64_t>();
        model.trained = c.header.at("trained").get<bool>();
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("checkpoint header is malformed: ") + e.what());
    }
    if (model.network.vocab() != kMobilityStates + 1 || model.network.outputs() != model.alphabet.size()) {
        throw ShapeError("generator checkpoint has inconsistent vocabulary or head width");
    }
    return model;
}

ImputerModel load_imputer(std::istream& in) {
    const Container c = read_container(in, CheckpointKind::imputer);
    ImputerModel model;
    model.network = network_from(c);
    try {
        model.mobility = alphabet_from_json(c.header.at("alphabets").at("mobility"));
        model.activities = alphabet_from_json(c.header.at("alphabets").at("activity"));
        model.training_seed = c.header.at("training_seed").get<std::uint64_t>();
        model.trained = c.header.at("trained").get<bool>();
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("checkpoint header is malformed: ") + e.what());
    }
    if (model.network.vocab() != kImputerVocab || model.network.outputs() != kActivityStates) {
        throw ShapeError("imputer checkpoint has inconsistent vocabulary or head width");
    }
    return model;
}

MarkovModel load_markov(std::istream& in) {
    const Container c = read_container(in, CheckpointKind::markov);
    MarkovModel model;
    try {
        const Json& h = c.header;
        model.alphabet = alphabet_from_json(h.at("alphabets").at("mobility"));
        model.options.alpha = h.at("options").at("alpha").get<double>();
        model.options.stratify = h.at("options").at("stratify").get<bool>();
        model.options.min_cell_persons = h.at("options").at("min_cell_persons").get<std::size_t>();
        const int k = model.alphabet.size();
        model.pooled = get_chain(c, "pooled", k, h.at("pooled_persons").get<std::size_t>());
        for (const auto& cell : h.at("cells")) {
            const int age = cell.at("age_class").get<int>(), occ = cell.at("occupation_class").get<int>();
            model.cells.emplace(AttributeCell{age, occ},
                                get_chain(c, "cell." + std::to_string(age) + "." + std::to_string(occ), k,
                                          cell.at("persons").get<std::size_t>()));
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("checkpoint header is malformed: ") + e.what());
    }
    const auto& counts = c.block("attribute_counts").values;
    if (counts.size() != static_cast<std::size_t>(kAttributeClasses * kAttributeClasses)) {
        throw ShapeError("attribute histogram has the wrong size");
    }
    model.attribute_counts.assign(counts.begin(), counts.end());
    model.fitted = true;
    return model;
}

GeneratorModel load_generator(const std::filesystem::path& path) {
    auto in = open_in(path);
    return load_generator(in);
}

ImputerModel load_imputer(const std::filesystem::path& path) {
    auto in = open_in(path);
    return load_imputer(in);
}

MarkovModel load_markov(const std::filesystem::path& path) {
    auto in = open_in(path);
    return load_markov(in);
}

CheckpointKind checkpoint_kind(const std::filesystem::path& path) {
    auto in = open_in(path);
    const std::string kind = read_header(in).value("kind", "");
    for (auto k : {CheckpointKind::generator, CheckpointKind::imputer, CheckpointKind::markov}) {
        if (kind == to_string(k)) return k;
    }
    throw DataError("checkpoint " + path.string() + " has unknown kind '" + kind + "'");
}

}  // namespace schedsynth
