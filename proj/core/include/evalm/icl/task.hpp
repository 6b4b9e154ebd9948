#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "evalm/util/jsonl.hpp"

namespace evalm::icl {

// A classification task: a prompt template with {Slot} placeholders, the
// ordered label space, and the input field schema. `label_fields`, when
// non-empty, routes one slot through the label instead (COPA-style tasks
// where the candidate answer text lives in a per-label input field).
struct TaskSpec {
    std::string name;
    std::string template_str;
    std::vector<std::string> labels;
    std::vector<std::string> fields;
    std::string label_slot;                          // slot filled via label_fields
    std::map<std::string, std::string> label_fields; // label -> input field name

    int64_t label_index(const std::string& label) const;
};

// Fills the template from an input record; the {Label} slot takes the given
// label (or is left empty when scoring will supply candidates).
std::string render_template(const TaskSpec& task, const util::JsonRecord& input,
                            const std::optional<std::string>& label);

// The shipped prompt-template table (versioned default), plus optional
// overrides from a registry JSON file.
class TaskRegistry {
public:
    static TaskRegistry builtin();
    static TaskRegistry from_file(const std::string& path);
    void to_file(const std::string& path) const;

    const TaskSpec& get(const std::string& name) const;
    bool has(const std::string& name) const { return tasks_.count(name) != 0; }
    void add(TaskSpec spec);
    std::vector<std::string> names() const;

    int version = 1;

private:
    std::map<std::string, TaskSpec> tasks_;
};

// Train/validation/test splits loaded from <dir>/{train,validation,test}.jsonl.
// A missing validation split is carved from the head of train (the harness
// convention: first 500 records, capped at half the split).
struct TaskData {
    std::vector<util::JsonRecord> train;
    std::vector<util::JsonRecord> validation;
    std::vector<util::JsonRecord> test;
};

TaskData load_task_data(const std::string& dir, int64_t holdout = 500);

}  // namespace evalm::icl
