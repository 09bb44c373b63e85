#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "cli.hpp"
#include "schedsynth/corpus_io.hpp"
#include "schedsynth/report_io.hpp"

using namespace schedsynth;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out, err;
};

Result run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// One synthetic corpus shared by the cases below.
struct Workspace {
    fs::path root = fs::temp_directory_path() / ("schedsynth_cli_" + std::to_string(::getpid()));
    Workspace() {
        fs::remove_all(root);
        const auto r = run({"make-corpus", "--persons", "40", "--seed", "3", "--out", (root / "corpus").string()});
        REQUIRE(r.code == 0);
    }
    ~Workspace() { fs::remove_all(root); }
    std::string weeks() const { return (root / "corpus" / "weeks.csv").string(); }
    std::string diaries() const { return (root / "corpus" / "diaries.csv").string(); }
    std::string dir(const std::string& name) const { return (root / name).string(); }
};

Workspace& workspace() {
    static Workspace w;
    return w;
}

}  // namespace

TEST_CASE("usage errors") {
    CHECK(run({}).code == cli::kUsage);
    CHECK(run({"frobnicate"}).code == cli::kUsage);
    CHECK(run({"generate"}).code == cli::kUsage);  // --model is required
    CHECK(run({"generate", "--model", "x", "--n", "many"}).code == cli::kUsage);
    const auto help = run({"--help"});
    CHECK(help.code == cli::kOk);
    CHECK(help.out.find("train-gen") != std::string::npos);
}

TEST_CASE("make-corpus writes a manifest and both corpora") {
    auto& w = workspace();
    CHECK(read_week_corpus(fs::path(w.weeks())).schedules.size() == 40);
    CHECK(read_diary_corpus(fs::path(w.diaries())).samples.size() == 40);
    const auto manifest = read_json(w.root / "corpus" / "manifest.json");
    CHECK(manifest["command"] == "make-corpus");
    CHECK(manifest["seeds"]["seed"] == 3);
}

TEST_CASE("missing inputs exit with the data code") {
    auto& w = workspace();
    const auto r = run({"fit-markov", "--corpus", w.dir("nope.csv"), "--out", w.dir("m0")});
    CHECK(r.code == cli::kData);
    CHECK(r.err.find("nope.csv") != std::string::npos);
    CHECK(run({"generate", "--model", w.dir("nope.ckpt"), "--out", w.dir("g0")}).code == cli::kData);
    // a diary corpus where weeks are expected
    CHECK(run({"fit-markov", "--corpus", w.diaries(), "--out", w.dir("m1")}).code == cli::kData);
}

TEST_CASE("markov fit, generate and evaluate") {
    auto& w = workspace();
    REQUIRE(run({"fit-markov", "--corpus", w.weeks(), "--out", w.dir("markov")}).code == 0);
    const std::string ckpt = w.dir("markov") + "/markov.ckpt";
    const auto g = run({"generate", "--model", ckpt, "--n", "2000", "--seed", "5", "--out", w.dir("gen")});
    REQUIRE(g.code == 0);
    const auto generated = read_week_corpus(fs::path(w.dir("gen")) / "generated.csv");
    CHECK(generated.schedules.size() == 2000);

    REQUIRE(run({"generate", "--model", ckpt, "--n", "2000", "--seed", "5", "--out", w.dir("gen2")}).code == 0);
    CHECK(slurp(fs::path(w.dir("gen")) / "generated.csv") == slurp(fs::path(w.dir("gen2")) / "generated.csv"));

    CHECK(run({"generate", "--model", ckpt, "--n", "0", "--out", w.dir("gen3")}).code == cli::kUsage);

    const auto e = run({"evaluate", "--reference", w.weeks(), "--generated", w.dir("gen") + "/generated.csv", "--out",
                        w.dir("eval")});
    REQUIRE(e.code == 0);
    const auto report = read_json(fs::path(w.dir("eval")) / "report.json");
    CHECK(report.contains("sp_rmse"));
    CHECK(report.contains("hd_mae"));
}

TEST_CASE("train a tiny generator and sample from it") {
    auto& w = workspace();
    const auto t = run({"train-gen", "--corpus", w.weeks(), "--layers", "1", "--d-model", "8", "--heads", "2", "--d-ff", "16",
                        "--max-epochs", "1", "--batch-size", "16", "--out", w.dir("tg")});
    REQUIRE(t.code == 0);
    CHECK(t.err.find("epoch 1") != std::string::npos);
    CHECK(fs::exists(fs::path(w.dir("tg")) / "generator.ckpt"));
    CHECK(fs::exists(fs::path(w.dir("tg")) / "train_report.json"));
    const auto g = run({"generate", "--model", w.dir("tg") + "/generator.ckpt", "--n", "3", "--attributes-from", w.weeks(),
                        "--out", w.dir("tgg")});
    REQUIRE(g.code == 0);
    CHECK(read_week_corpus(fs::path(w.dir("tgg")) / "generated.csv").schedules.size() == 3);

    CHECK(run({"train-gen", "--corpus", w.weeks(), "--heads", "3", "--out", w.dir("bad")}).code != cli::kOk);
}

TEST_CASE("train a tiny imputer and impute weeks") {
    auto& w = workspace();
    const auto t = run({"train-imp", "--corpus", w.diaries(), "--layers", "1", "--d-model", "8", "--heads", "2", "--d-ff",
                        "16", "--max-epochs", "1", "--batch-size", "16", "--out", w.dir("ti")});
    REQUIRE(t.code == 0);
    const auto i = run({"impute", "--model", w.dir("ti") + "/imputer.ckpt", "--input", w.weeks(), "--out", w.dir("imp")});
    REQUIRE(i.code == 0);
    const auto filled = read_week_corpus(fs::path(w.dir("imp")) / "imputed.csv", StateAlphabet::activity_default());
    CHECK(filled.schedules.size() == 40);
    // sampling from an imputer checkpoint is a usage mistake
    CHECK(run({"generate", "--model", w.dir("ti") + "/imputer.ckpt", "--out", w.dir("x")}).code == cli::kUsage);
}
