#include "typoattack/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "json.hpp"

#include "typoattack/errors.hpp"

namespace typoattack {

using nlohmann::json;

namespace {

bool is_ascii_alnum(unsigned char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9');
}

bool is_ascii_alpha(unsigned char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

long parse_count(const std::string& text, const std::string& context) {
    try {
        std::size_t used = 0;
        long value = std::stol(text, &used);
        if (used != text.size()) throw std::invalid_argument(text);
        return value;
    } catch (const std::exception&) {
        throw DataError(context + ": bad count '" + text + "'");
    }
}

}  // namespace

std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> tokens;
    std::string current;
    bool has_alpha = false;
    auto flush = [&] {
        if (!current.empty() && has_alpha) tokens.push_back(current);
        current.clear();
        has_alpha = false;
    };
    for (unsigned char c : text) {
        if (is_ascii_alnum(c)) {
            if (is_ascii_alpha(c)) has_alpha = true;
            current.push_back(static_cast<char>(std::tolower(c)));
        } else {
            flush();
        }
    }
    flush();
    return tokens;
}

std::vector<RawRecord> merge_by_patient(const std::vector<RawRecord>& records) {
    std::vector<RawRecord> merged;
    std::unordered_map<std::string, std::size_t> slot;  // patient_id -> index
    for (const RawRecord& record : records) {
        auto it = slot.find(record.patient_id);
        if (it == slot.end()) {
            slot.emplace(record.patient_id, merged.size());
            merged.push_back(record);
        } else {
            RawRecord& target = merged[it->second];
            target.text += ' ';
            target.text += record.text;
            target.labels.insert(record.labels.begin(), record.labels.end());
        }
    }
    return merged;
}

LabelSpace build_label_space(const std::vector<RawRecord>& records, int num_labels) {
    std::map<std::string, long> counts;  // one count per record containing the code
    for (const RawRecord& record : records)
        for (const std::string& code : record.labels) ++counts[code];
    if (static_cast<int>(counts.size()) < num_labels)
        throw DataError("label space needs " + std::to_string(num_labels) +
                        " distinct codes, corpus has " + std::to_string(counts.size()));

    std::vector<std::pair<std::string, long>> ordered(counts.begin(), counts.end());
    std::sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });

    LabelSpace space;
    for (int i = 0; i < num_labels; ++i) {
        space.index_to_code.push_back(ordered[i].first);
        space.counts.push_back(ordered[i].second);
        space.code_to_index.emplace(ordered[i].first, i);
    }
    return space;
}

std::optional<int> LabelSpace::index_of(const std::string& code) const {
    auto it = code_to_index.find(code);
    if (it == code_to_index.end()) return std::nullopt;
    return it->second;
}

std::set<int> LabelSpace::project(const std::set<std::string>& codes) const {
    std::set<int> indices;
    for (const std::string& code : codes)
        if (auto idx = index_of(code)) indices.insert(*idx);
    return indices;
}

std::string LabelSpace::serialize() const {
    std::string out;
    for (int i = 0; i < size(); ++i) {
        out += index_to_code[i];
        out += '\t';
        out += std::to_string(counts[i]);
        out += '\n';
    }
    return out;
}

LabelSpace LabelSpace::deserialize(const std::string& content) {
    LabelSpace space;
    std::istringstream in(content);
    std::string line;
    int index = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos)
            throw DataError("label space line " + std::to_string(index + 1) +
                            ": expected 'code<TAB>count'");
        std::string code = line.substr(0, tab);
        long count = parse_count(line.substr(tab + 1),
                                 "label space line " + std::to_string(index + 1));
        space.index_to_code.push_back(code);
        space.counts.push_back(count);
        if (!space.code_to_index.emplace(code, index).second)
            throw DataError("label space: duplicate code '" + code + "'");
        ++index;
    }
    return space;
}

Vocabulary::Vocabulary() {
    id_to_token_ = {kPadToken, kUnkToken};
    counts_ = {0, 0};
    token_to_id_.emplace(kPadToken, kPadId);
    token_to_id_.emplace(kUnkToken, kUnkId);
}

Vocabulary Vocabulary::from_counts(const std::map<std::string, long>& counts,
                                   int min_count) {
    std::vector<std::pair<std::string, long>> kept;
    for (const auto& [token, count] : counts)
        if (count >= min_count) kept.emplace_back(token, count);
    std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });

    Vocabulary vocab;
    vocab.min_count_ = min_count;
    for (const auto& [token, count] : kept) {
        vocab.token_to_id_.emplace(token, static_cast<int>(vocab.id_to_token_.size()));
        vocab.id_to_token_.push_back(token);
        vocab.counts_.push_back(count);
    }
    return vocab;
}

std::string Vocabulary::serialize() const {
    std::string out;
    for (int id = 0; id < size(); ++id) {
        out += id_to_token_[id];
        out += '\t';
        out += std::to_string(counts_[id]);
        out += '\n';
    }
    return out;
}

Vocabulary Vocabulary::deserialize(const std::string& content) {
    std::istringstream in(content);
    std::string line;
    std::vector<std::pair<std::string, long>> entries;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos)
            throw DataError("vocabulary line " + std::to_string(line_no) +
                            ": expected 'token<TAB>count'");
        entries.emplace_back(line.substr(0, tab),
                             parse_count(line.substr(tab + 1),
                                         "vocabulary line " + std::to_string(line_no)));
    }
    if (entries.size() < 2 || entries[0].first != kPadToken || entries[1].first != kUnkToken)
        throw DataError("vocabulary: first two entries must be " +
                        std::string(kPadToken) + " and " + std::string(kUnkToken));

    Vocabulary vocab;
    vocab.counts_[kPadId] = entries[0].second;
    vocab.counts_[kUnkId] = entries[1].second;
    for (std::size_t i = 2; i < entries.size(); ++i) {
        const auto& [token, count] = entries[i];
        if (!vocab.token_to_id_.emplace(token, static_cast<int>(i)).second)
            throw DataError("vocabulary: duplicate token '" + token + "'");
        vocab.id_to_token_.push_back(token);
        vocab.counts_.push_back(count);
    }
    return vocab;
}

Vocabulary build_vocabulary(const std::vector<std::vector<std::string>>& train_token_lists,
                            int min_count) {
    std::map<std::string, long> counts;
    for (const auto& tokens : train_token_lists)
        for (const std::string& token : tokens) ++counts[token];
    return Vocabulary::from_counts(counts, min_count);
}

std::vector<Document> filter_and_encode(const std::vector<RawRecord>& records,
                                        const LabelSpace& labels) {
    std::vector<Document> docs;
    for (const RawRecord& record : records) {
        std::set<int> projected = labels.project(record.labels);
        if (projected.empty()) continue;
        std::vector<std::string> tokens = tokenize(record.text);
        if (tokens.empty()) continue;
        docs.push_back(Document{record.doc_id, record.patient_id, std::move(tokens),
                                std::move(projected)});
    }
    return docs;
}

void SplitSpec::validate() const {
    if (train_frac < 0 || val_frac < 0 || test_frac < 0)
        throw DataError("split fractions must be non-negative");
    double sum = train_frac + val_frac + test_frac;
    if (std::abs(sum - 1.0) > 1e-9)
        throw std::invalid_argument("split fractions must sum to 1, got " +
                                    std::to_string(sum));
}

SplitResult split(const std::vector<RawRecord>& records, const SplitSpec& spec) {
    spec.validate();
    SplitResult result;
    for (const RawRecord& record : records) {
        double u = unit_hash(spec.salt, record.patient_id);
        if (u < spec.train_frac)
            result.train.push_back(record);
        else if (u < spec.train_frac + spec.val_frac)
            result.val.push_back(record);
        else
            result.test.push_back(record);
    }
    return result;
}

namespace {

json parse_jsonl_line(const std::string& path, int line_no, const std::string& line) {
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object())
        throw DataError(path + " line " + std::to_string(line_no) +
                        ": not a JSON object");
    return j;
}

std::string get_string_field(const json& j, const std::string& path, int line_no,
                             const char* field) {
    if (!j.contains(field) || !j[field].is_string())
        throw DataError(path + " line " + std::to_string(line_no) +
                        ": missing or non-string field '" + field + "'");
    return j[field].get<std::string>();
}

}  // namespace

std::vector<RawRecord> read_raw_jsonl(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path);
    std::vector<RawRecord> records;
    std::unordered_set<std::string> seen_ids;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j = parse_jsonl_line(path, line_no, line);
        RawRecord record;
        record.doc_id = get_string_field(j, path, line_no, "doc_id");
        record.patient_id = get_string_field(j, path, line_no, "patient_id");
        record.text = get_string_field(j, path, line_no, "text");
        if (!j.contains("labels") || !j["labels"].is_array())
            throw DataError(path + " line " + std::to_string(line_no) +
                            ": missing or non-array field 'labels'");
        for (const auto& item : j["labels"]) {
            if (!item.is_string())
                throw DataError(path + " line " + std::to_string(line_no) +
                                ": labels must be strings");
            record.labels.insert(item.get<std::string>());
        }
        if (!seen_ids.insert(record.doc_id).second)
            throw DataError(path + " line " + std::to_string(line_no) +
                            ": duplicate doc_id '" + record.doc_id + "'");
        records.push_back(std::move(record));
    }
    return records;
}

void write_raw_jsonl(const std::string& path, const std::vector<RawRecord>& records) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path);
    for (const RawRecord& record : records) {
        json j;
        j["doc_id"] = record.doc_id;
        j["patient_id"] = record.patient_id;
        j["text"] = record.text;
        j["labels"] = record.labels;
        out << j.dump() << '\n';
    }
}

std::vector<Document> read_documents_jsonl(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path);
    std::vector<Document> docs;
    std::unordered_set<std::string> seen_ids;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j = parse_jsonl_line(path, line_no, line);
        Document doc;
        doc.doc_id = get_string_field(j, path, line_no, "doc_id");
        doc.patient_id = get_string_field(j, path, line_no, "patient_id");
        if (!j.contains("tokens") || !j["tokens"].is_array())
            throw DataError(path + " line " + std::to_string(line_no) +
                            ": missing or non-array field 'tokens'");
        for (const auto& item : j["tokens"]) doc.tokens.push_back(item.get<std::string>());
        if (!j.contains("labels") || !j["labels"].is_array())
            throw DataError(path + " line " + std::to_string(line_no) +
                            ": missing or non-array field 'labels'");
        for (const auto& item : j["labels"]) {
            if (!item.is_number_integer())
                throw DataError(path + " line " + std::to_string(line_no) +
                                ": labels must be integer indices");
            doc.labels.insert(item.get<int>());
        }
        if (!seen_ids.insert(doc.doc_id).second)
            throw DataError(path + " line " + std::to_string(line_no) +
                            ": duplicate doc_id '" + doc.doc_id + "'");
        docs.push_back(std::move(doc));
    }
    return docs;
}

void write_documents_jsonl(const std::string& path, const std::vector<Document>& docs) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path);
    for (const Document& doc : docs) {
        json j;
        j["doc_id"] = doc.doc_id;
        j["patient_id"] = doc.patient_id;
        j["tokens"] = doc.tokens;
        j["labels"] = doc.labels;
        out << j.dump() << '\n';
    }
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path);
    out << content;
}

}  // namespace typoattack
