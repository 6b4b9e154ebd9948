#include "evalm/lm/tokenizer.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include <json.hpp>

namespace evalm::lm {

namespace {

std::vector<std::string> split_ws(std::string_view text) {
    std::vector<std::string> out;
    size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        size_t j = i;
        while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
        if (j > i) out.emplace_back(text.substr(i, j - i));
        i = j;
    }
    return out;
}

}  // namespace

Tokenizer Tokenizer::byte_level() {
    Tokenizer t;
    t.mode_ = Mode::kByte;
    t.bos_id_ = 256;
    t.vocab_size_ = 257;
    return t;
}

Tokenizer Tokenizer::word_level(std::span<const std::string> corpus, int64_t max_vocab) {
    if (max_vocab < 3) throw std::invalid_argument("word_level: max_vocab too small");
    std::unordered_map<std::string, int64_t> counts;
    for (const auto& text : corpus) {
        for (auto& w : split_ws(text)) ++counts[w];
    }
    std::vector<std::pair<std::string, int64_t>> ranked(counts.begin(), counts.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });

    Tokenizer t;
    t.mode_ = Mode::kWord;
    t.bos_id_ = 1;
    t.id_to_word_ = {"<unk>", "<bos>"};
    for (const auto& [word, cnt] : ranked) {
        if (static_cast<int64_t>(t.id_to_word_.size()) >= max_vocab) break;
        t.word_to_id_[word] = static_cast<int32_t>(t.id_to_word_.size());
        t.id_to_word_.push_back(word);
    }
    t.vocab_size_ = static_cast<int64_t>(t.id_to_word_.size());
    return t;
}

std::vector<int32_t> Tokenizer::encode(std::string_view text, bool add_bos) const {
    std::vector<int32_t> ids;
    if (add_bos) ids.push_back(bos_id_);
    if (mode_ == Mode::kByte) {
        ids.reserve(ids.size() + text.size());
        for (unsigned char ch : text) ids.push_back(static_cast<int32_t>(ch));
        return ids;
    }
    for (auto& w : split_ws(text)) {
        auto it = word_to_id_.find(w);
        ids.push_back(it != word_to_id_.end() ? it->second : 0);
    }
    return ids;
}

std::string Tokenizer::decode(std::span<const int32_t> ids) const {
    std::string out;
    if (mode_ == Mode::kByte) {
        for (int32_t id : ids) {
            if (id == bos_id_) continue;
            if (id < 0 || id > 255) throw std::invalid_argument("decode: byte id out of range");
            out.push_back(static_cast<char>(id));
        }
        return out;
    }
    for (size_t i = 0; i < ids.size(); ++i) {
        const int32_t id = ids[i];
        if (id == bos_id_) continue;
        if (id < 0 || id >= static_cast<int32_t>(id_to_word_.size()))
            throw std::invalid_argument("decode: word id out of range");
        if (!out.empty()) out.push_back(' ');
        out += id_to_word_[static_cast<size_t>(id)];
    }
    return out;
}

void Tokenizer::save(const std::string& path) const {
    nlohmann::json j;
    j["mode"] = mode_ == Mode::kByte ? "byte" : "word";
    if (mode_ == Mode::kWord) j["vocab"] = id_to_word_;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write tokenizer file: " + path);
    out << j.dump(2) << "\n";
}

Tokenizer Tokenizer::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read tokenizer file: " + path);
    nlohmann::json j;
    in >> j;
    if (j.at("mode") == "byte") return byte_level();
    Tokenizer t;
    t.mode_ = Mode::kWord;
    t.bos_id_ = 1;
    t.id_to_word_ = j.at("vocab").get<std::vector<std::string>>();
    for (size_t i = 2; i < t.id_to_word_.size(); ++i)
        t.word_to_id_[t.id_to_word_[i]] = static_cast<int32_t>(i);
    t.vocab_size_ = static_cast<int64_t>(t.id_to_word_.size());
    return t;
}

}  // namespace evalm::lm
