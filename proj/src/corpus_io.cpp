#include "schedsynth/corpus_io.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

#include "schedsynth/errors.hpp"

namespace schedsynth {

namespace {

const char* kFormatTag = "schedsynth-corpus";

void check_person_id(const std::string& id) {
    if (id.empty() || id.front() == '#' || id.find_first_of(",\n\r") != std::string::npos) {
        throw DataError("person id '" + id + "' is empty, starts with '#' or contains a separator");
    }
}

void write_header(std::ostream& out, CorpusKind kind, const StateAlphabet& a) {
    out << "#format " << kFormatTag << ' ' << kCorpusFormatVersion << '\n';
    out << "#kind " << (kind == CorpusKind::week ? "week" : "day") << '\n';
    out << "#resolution_minutes 10\n";
    out << "#alphabet_name " << a.name() << '\n';
    out << "#alphabet_kind " << to_string(a.kind()) << '\n';
    out << "#alphabet ";
    for (const auto& s : a.states()) out << (s.code ? ";" : "") << static_cast<int>(s.code) << '=' << s.label;
    out << '\n';
}

void write_codes(std::ostream& out, const std::vector<StateCode>& codes) {
    for (StateCode c : codes) out << ',' << static_cast<int>(c);
    out << '\n';
}

void finish(std::ostream& out, std::size_t rows) {
    out << "#end " << rows << '\n';
    if (!out) throw DataError("corpus write failed");
}

struct Header {
    CorpusKind kind = CorpusKind::week;
    StateAlphabet alphabet = StateAlphabet::mobility_default();
};

class Reader {
public:
    Reader(std::istream& in, std::string source) : in_(in), source_(std::move(source)) {}

    [[noreturn]] void fail(const std::string& message) const {
        throw DataError(source_ + ":" + std::to_string(line_no_) + ": " + message);
    }

    bool next(std::string& line) {
        if (!std::getline(in_, line)) return false;
        ++line_no_;
        if (!line.empty() && line.back() == '\r') fail("CR line endings are not supported");
        return true;
    }

    std::string header_value(const std::string& key) {
        std::string line;
        if (!next(line)) fail("unexpected end of file in header (expected #" + key + ")");
        const std::string prefix = "#" + key + " ";
        if (line.rfind(prefix, 0) != 0) fail("expected header line '#" + key + " ...'");
        return line.substr(prefix.size());
    }

    Header header() {
        Header h;
        const std::string format = header_value("format");
        const std::string expected = std::string(kFormatTag) + " " + std::to_string(kCorpusFormatVersion);
        if (format.rfind(kFormatTag, 0) != 0) fail("not a corpus file");
        if (format != expected) fail("unsupported corpus format version '" + format + "' (expected '" + expected + "')");
        const std::string kind = header_value("kind");
        if (kind == "week") {
            h.kind = CorpusKind::week;
        } else if (kind == "day") {
            h.kind = CorpusKind::day;
        } else {
            fail("unknown sequence kind '" + kind + "'");
        }
        if (header_value("resolution_minutes") != "10") fail("only 10-minute resolution is supported");
        const std::string name = header_value("alphabet_name");
        const std::string akind = header_value("alphabet_kind");
        const std::string list = header_value("alphabet");
        std::vector<std::string> labels;
        std::stringstream ss(list);
        std::string item;
        while (std::getline(ss, item, ';')) {
            const auto eq = item.find('=');
            if (eq == std::string::npos) fail("alphabet entry without '='");
            if (item.substr(0, eq) != std::to_string(labels.size())) fail("alphabet codes must be dense from 0");
            labels.push_back(item.substr(eq + 1));
        }
        try {
            h.alphabet = StateAlphabet(name, alphabet_kind_from_string(akind), labels);
        } catch (const Error& e) {
            fail(std::string("invalid alphabet: ") + e.what());
        }
        return h;
    }

    int parse_int(std::string_view field, const char* what) const {
        int v = 0;
        auto [p, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
        if (ec != std::errc() || p != field.data() + field.size()) {
            fail(std::string("malformed ") + what + " '" + std::string(field) + "'");
        }
        return v;
    }

    std::size_t line_no() const { return line_no_; }

private:
    std::istream& in_;
    std::string source_;
    std::size_t line_no_ = 0;
};

struct Row {
    PersonAttributes attrs;
    int weekday = 0;
    std::vector<StateCode> codes;
};

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

// Reads rows until the #end footer; calls on_row for each.
template <typename F>
void read_rows(Reader& r, const Header& h, F&& on_row) {
    const std::size_t leading = h.kind == CorpusKind::week ? 3 : 4;
    const std::size_t steps = h.kind == CorpusKind::week ? kStepsPerWeek : kStepsPerDay;
    std::string line;
    std::size_t rows = 0;
    while (true) {
        if (!r.next(line)) {
            r.fail("unexpected end of file after " + std::to_string(rows) + " rows (missing #end footer; truncated?)");
        }
        if (line.rfind("#end ", 0) == 0) {
            if (r.parse_int(std::string_view(line).substr(5), "row count") != static_cast<int>(rows)) {
                r.fail("footer row count does not match " + std::to_string(rows) + " rows read");
            }
            break;
        }
        if (line.empty() || line.front() == '#') r.fail("unexpected line inside the data section");
        const auto fields = split_fields(line);
        if (fields.size() != leading + steps) {
            r.fail("expected " + std::to_string(steps) + " state codes, found " +
                   std::to_string(fields.size() < leading ? 0 : fields.size() - leading));
        }
        Row row;
        row.attrs.person_id = std::string(fields[0]);
        if (row.attrs.person_id.empty()) r.fail("empty person id");
        row.attrs.age_class = r.parse_int(fields[1], "age class");
        row.attrs.occupation_class = r.parse_int(fields[2], "occupation class");
        if (!validate_attributes(row.attrs).empty()) r.fail("attribute class outside 0..6");
        if (h.kind == CorpusKind::day) {
            row.weekday = r.parse_int(fields[3], "weekday");
            if (row.weekday < 0 || row.weekday >= kDaysPerWeek) r.fail("weekday outside 0..6");
        }
        row.codes.resize(steps);
        for (std::size_t i = 0; i < steps; ++i) {
            const int c = r.parse_int(fields[leading + i], "state code");
            if (!h.alphabet.contains(c)) r.fail("state code " + std::to_string(c) + " outside the alphabet");
            row.codes[i] = static_cast<StateCode>(c);
        }
        on_row(std::move(row));
        ++rows;
    }
    if (r.next(line)) r.fail("content after the #end footer");
}

Header read_header_checked(Reader& r, CorpusKind want, const std::optional<StateAlphabet>& expected) {
    Header h = r.header();
    if (h.kind != want) r.fail(want == CorpusKind::week ? "expected a week corpus, found a day corpus"
                                                        : "expected a day corpus, found a week corpus");
    if (expected && !(h.alphabet == *expected)) r.fail("alphabet does not match the expected '" + expected->name() + "'");
    return h;
}

std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open corpus " + path.string());
    return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write corpus " + path.string());
    return out;
}

}  // namespace

void write_corpus(std::ostream& out, const WeekCorpus& corpus) {
    for (const auto& s : corpus.schedules) {
        check_person_id(s.attributes.person_id);
        const auto v = validate_schedule(s, corpus.alphabet);
        if (!v.empty()) throw DataError("person " + s.attributes.person_id + ": " + v.front().message);
    }
    write_header(out, CorpusKind::week, corpus.alphabet);
    for (const auto& s : corpus.schedules) {
        out << s.attributes.person_id << ',' << s.attributes.age_class << ',' << s.attributes.occupation_class;
        write_codes(out, s.states);
    }
    finish(out, corpus.schedules.size());
}

void write_corpus(std::ostream& out, const DiaryCorpus& corpus) {
    std::size_t rows = 0;
    for (const auto& s : corpus.samples) {
        check_person_id(s.attributes.person_id);
        const auto v = validate_diary(s, corpus.alphabet);
        if (!v.empty()) throw DataError("person " + s.attributes.person_id + ": " + v.front().message);
        rows += s.days.size();
    }
    write_header(out, CorpusKind::day, corpus.alphabet);
    for (const auto& s : corpus.samples) {
        for (const auto& d : s.days) {
            out << s.attributes.person_id << ',' << s.attributes.age_class << ',' << s.attributes.occupation_class << ','
                << d.weekday;
            write_codes(out, d.states);
        }
    }
    finish(out, rows);
}

void write_corpus(const std::filesystem::path& path, const WeekCorpus& corpus) {
    auto out = open_out(path);
    write_corpus(out, corpus);
}

void write_corpus(const std::filesystem::path& path, const DiaryCorpus& corpus) {
    auto out = open_out(path);
    write_corpus(out, corpus);
}

WeekCorpus read_week_corpus(std::istream& in, const std::string& source, const std::optional<StateAlphabet>& expected) {
    Reader r(in, source);
    const Header h = read_header_checked(r, CorpusKind::week, expected);
    WeekCorpus corpus{h.alphabet, {}};
    read_rows(r, h, [&](Row row) { corpus.schedules.push_back({std::move(row.codes), std::move(row.attrs)}); });
    return corpus;
}

DiaryCorpus read_diary_corpus(std::istream& in, const std::string& source, const std::optional<StateAlphabet>& expected) {
    Reader r(in, source);
    const Header h = read_header_checked(r, CorpusKind::day, expected);
    DiaryCorpus corpus{h.alphabet, {}};
    read_rows(r, h, [&](Row row) {
        if (corpus.samples.empty() || corpus.samples.back().attributes.person_id != row.attrs.person_id) {
            corpus.samples.push_back({{}, row.attrs});
        } else if (!(corpus.samples.back().attributes == row.attrs)) {
            r.fail("attributes of person " + row.attrs.person_id + " differ between rows");
        }
        auto& sample = corpus.samples.back();
        for (const auto& d : sample.days) {
            if (d.weekday == row.weekday) r.fail("duplicate weekday for person " + row.attrs.person_id);
        }
        if (sample.days.size() == 3) r.fail("more than three days for person " + row.attrs.person_id);
        sample.days.push_back({row.weekday, std::move(row.codes)});
    });
    return corpus;
}

WeekCorpus read_week_corpus(const std::filesystem::path& path, const std::optional<StateAlphabet>& expected) {
    auto in = open_in(path);
    return read_week_corpus(in, path.string(), expected);
}

DiaryCorpus read_diary_corpus(const std::filesystem::path& path, const std::optional<StateAlphabet>& expected) {
    auto in = open_in(path);
    return read_diary_corpus(in, path.string(), expected);
}

CorpusKind corpus_kind(const std::filesystem::path& path) {
    auto in = open_in(path);
    Reader r(in, path.string());
    return r.header().kind;
}

}  // namespace schedsynth
