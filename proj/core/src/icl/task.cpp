#include "evalm/icl/task.hpp"

#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace evalm::icl {

int64_t TaskSpec::label_index(const std::string& label) const {
    for (size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] == label) return static_cast<int64_t>(i);
    }
    return -1;
}

std::string render_template(const TaskSpec& task, const util::JsonRecord& input,
                            const std::optional<std::string>& label) {
    if (label.has_value() && task.label_index(*label) < 0)
        throw std::invalid_argument("render_template: label '" + *label +
                                    "' not in label space of " + task.name);
    std::string out;
    const std::string& t = task.template_str;
    size_t i = 0;
    while (i < t.size()) {
        if (t[i] != '{') {
            out.push_back(t[i++]);
            continue;
        }
        const size_t close = t.find('}', i);
        if (close == std::string::npos)
            throw std::invalid_argument("render_template: unbalanced '{' in template of " +
                                        task.name);
        const std::string slot = t.substr(i + 1, close - i - 1);
        i = close + 1;
        if (slot == "Label") {
            if (label.has_value()) out += *label;
            continue;
        }
        if (!task.label_slot.empty() && slot == task.label_slot) {
            if (label.has_value()) {
                const std::string& field = task.label_fields.at(*label);
                if (!input.has(field))
                    throw std::invalid_argument("render_template: input missing field " + field);
                out += input.at(field);
            }
            continue;
        }
        if (!input.has(slot))
            throw std::invalid_argument("render_template: input missing field " + slot);
        out += input.at(slot);
    }
    return out;
}

TaskRegistry TaskRegistry::builtin() {
    TaskRegistry reg;
    reg.add({"SST-2", "{Label} Movie Review: {Sentence}", {"Negative", "Positive"}, {"Sentence"},
             "", {}});
    reg.add({"SST-5",
             "{Sentence} It is {Label}",
             {"terrible", "bad", "okay", "good", "great"},
             {"Sentence"},
             "",
             {}});
    reg.add({"MNLI",
             "{Premise}?{Label}, {Hypothesis}",
             {"No", "Maybe", "Yes"},
             {"Premise", "Hypothesis"},
             "",
             {}});
    reg.add({"Trec",
             "{Sentence} It is about {Label}",
             {"abbreviation", "entity", "description and abstract concept", "human being",
              "location", "numeric value"},
             {"Sentence"},
             "",
             {}});
    reg.add({"WiC",
             "{Sentence1}\n{Sentence2}\nquestion: Is the word {Word} used in the same way in the "
             "two sentences above?\nanswer: {Label}",
             {"no", "yes"},
             {"Sentence1", "Sentence2", "Word"},
             "",
             {}});
    reg.add({"MultiRC",
             "Context: {Paragraph}\n\n{Questions}\n{Label} answer: {Answer}",
             {"incorrect", "correct"},
             {"Paragraph", "Questions", "Answer"},
             "",
             {}});
    reg.add({"BoolQ",
             "Context:{Passage}\nQuestion: {Question}?\nanswer: {Label}",
             {"no", "yes"},
             {"Passage", "Question"},
             "",
             {}});
    reg.add({"AgNews",
             "{Sentence} It is about {Label}",
             {"world", "sports", "business", "technology"},
             {"Sentence"},
             "",
             {}});
    reg.add({"WSC",
             "{Paragraph}\nQuestion: In the passage above, what does the pronoun {Span2} refer "
             "to?\nAnswer:{Span1} This is a {Label} answer.",
             {"false", "true"},
             {"Paragraph", "Span1", "Span2"},
             "",
             {}});
    reg.add({"COPA",
             "Context: {Premise}\nCorrect Answer: {Choices}",
             {"false", "true"},
             {"Premise", "Choice1", "Choice2"},
             "Choices",
             {{"false", "Choice1"}, {"true", "Choice2"}}});
    return reg;
}

void TaskRegistry::add(TaskSpec spec) {
    if (spec.labels.empty()) throw std::invalid_argument("task has empty label space");
    for (const auto& l : spec.labels) {
        if (l.empty()) throw std::invalid_argument("task " + spec.name + " has an empty label");
    }
    tasks_[spec.name] = std::move(spec);
}

const TaskSpec& TaskRegistry::get(const std::string& name) const {
    auto it = tasks_.find(name);
    if (it == tasks_.end()) throw std::invalid_argument("unknown task: " + name);
    return it->second;
}

std::vector<std::string> TaskRegistry::names() const {
    std::vector<std::string> out;
    for (const auto& [k, v] : tasks_) out.push_back(k);
    return out;
}

TaskRegistry TaskRegistry::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read template registry: " + path);
    nlohmann::json j;
    in >> j;
    TaskRegistry reg;
    reg.version = j.at("version").get<int>();
    for (const auto& [name, tj] : j.at("tasks").items()) {
        TaskSpec spec;
        spec.name = name;
        spec.template_str = tj.at("template").get<std::string>();
        spec.labels = tj.at("labels").get<std::vector<std::string>>();
        spec.fields = tj.at("fields").get<std::vector<std::string>>();
        if (tj.contains("label_slot")) spec.label_slot = tj.at("label_slot").get<std::string>();
        if (tj.contains("label_fields"))
            spec.label_fields =
                tj.at("label_fields").get<std::map<std::string, std::string>>();
        reg.add(std::move(spec));
    }
    return reg;
}

void TaskRegistry::to_file(const std::string& path) const {
    nlohmann::json tasks;
    for (const auto& [name, spec] : tasks_) {
        nlohmann::json tj;
        tj["template"] = spec.template_str;
        tj["labels"] = spec.labels;
        tj["fields"] = spec.fields;
        if (!spec.label_slot.empty()) {
            tj["label_slot"] = spec.label_slot;
            tj["label_fields"] = spec.label_fields;
        }
        tasks[name] = tj;
    }
    nlohmann::json j{{"version", version}, {"tasks", tasks}};
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write template registry: " + path);
    out << j.dump(2) << "\n";
}

TaskData load_task_data(const std::string& dir, int64_t holdout) {
    namespace fs = std::filesystem;
    const fs::path base(dir);
    const fs::path train_path = base / "train.jsonl";
    const fs::path val_path = base / "validation.jsonl";
    const fs::path test_path = base / "test.jsonl";
    if (!fs::exists(train_path))
        throw std::runtime_error("missing split file: " + train_path.string());
    if (!fs::exists(test_path))
        throw std::runtime_error("missing split file: " + test_path.string());

    TaskData data;
    data.train = util::read_jsonl(train_path.string());
    data.test = util::read_jsonl(test_path.string());
    if (fs::exists(val_path)) {
        data.validation = util::read_jsonl(val_path.string());
    } else {
        // Hold out the head of train as validation.
        const int64_t n = std::min<int64_t>(holdout, static_cast<int64_t>(data.train.size()) / 2);
        data.validation.assign(data.train.begin(), data.train.begin() + n);
        data.train.erase(data.train.begin(), data.train.begin() + n);
    }
    return data;
}

}  // namespace evalm::icl
