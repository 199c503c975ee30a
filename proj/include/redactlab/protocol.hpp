// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 redactlab contributors

#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "redactlab/sha256.hpp"

namespace redactlab::protocol {

class ProtocolError : public std::runtime_error {
public:
    explicit ProtocolError(const std::string& what) : std::runtime_error(what) {}
};

/// The five pipeline steps plus the auxiliary abstractive-summary step.
enum class StepId {
    redact = 1,
    assess_redaction = 2,
    predict = 3,
    assess_prediction = 4,
    score = 5,
    summarize = 6,  // auxiliary; outside the per-article chain
};

inline constexpr StepId kPipelineSteps[] = {StepId::redact, StepId::assess_redaction,
                                            StepId::predict, StepId::assess_prediction,
                                            StepId::score};

inline std::string to_string(StepId s) {
    switch (s) {
        case StepId::redact: return "redact";
        case StepId::assess_redaction: return "assess_redaction";
        case StepId::predict: return "predict";
        case StepId::assess_prediction: return "assess_prediction";
        case StepId::score: return "score";
        case StepId::summarize: return "summarize";
    }
    throw ProtocolError("unknown step id");
}

inline StepId step_from_string(std::string_view s) {
    if (s == "redact") return StepId::redact;
    if (s == "assess_redaction") return StepId::assess_redaction;
    if (s == "predict") return StepId::predict;
    if (s == "assess_prediction") return StepId::assess_prediction;
    if (s == "score") return StepId::score;
    if (s == "summarize") return StepId::summarize;
    throw ProtocolError("unknown step id \"" + std::string(s) + "\"");
}

/// 1..5 for pipeline steps; summarize is not part of the numbered chain.
inline int step_number(StepId s) { return static_cast<int>(s); }

enum class OutputKind { free_text, single_rating, dual_rating };

/// Artifact kinds flowing between steps. The per-step permitted sets below
/// are the isolation contract: a step request may carry these and nothing else.
enum class ArtifactKind {
    original_abstract,
    redacted_abstract,
    prediction,
    holistic_assessment,
    sampled_assessments,
};

inline std::string to_string(ArtifactKind k) {
    switch (k) {
        case ArtifactKind::original_abstract: return "original_abstract";
        case ArtifactKind::redacted_abstract: return "redacted_abstract";
        case ArtifactKind::prediction: return "prediction";
        case ArtifactKind::holistic_assessment: return "holistic_assessment";
        case ArtifactKind::sampled_assessments: return "sampled_assessments";
    }
    throw ProtocolError("unknown artifact kind");
}

/// Total over all six steps. Step 3 (predict) sees the redacted text only;
/// step 2 sees the abstract pair and nothing of step 1's reasoning.
inline const std::set<ArtifactKind>& permitted_inputs(StepId step) {
    static const std::map<StepId, std::set<ArtifactKind>> graph = {
        {StepId::redact, {ArtifactKind::original_abstract}},
        {StepId::assess_redaction,
         {ArtifactKind::original_abstract, ArtifactKind::redacted_abstract}},
        {StepId::predict, {ArtifactKind::redacted_abstract}},
        {StepId::assess_prediction,
         {ArtifactKind::original_abstract, ArtifactKind::prediction}},
        {StepId::score,
         {ArtifactKind::original_abstract, ArtifactKind::holistic_assessment}},
        {StepId::summarize, {ArtifactKind::sampled_assessments}},
    };
    auto it = graph.find(step);
    if (it == graph.end()) throw ProtocolError("unknown step id");
    return it->second;
}

/// Input slots (template placeholders) per step, in user-message order.
inline const std::vector<std::string>& input_slots(StepId step) {
    static const std::map<StepId, std::vector<std::string>> slots = {
        {StepId::redact, {"original_abstract"}},
        {StepId::assess_redaction, {"original_abstract", "redacted_abstract"}},
        {StepId::predict, {"redacted_abstract"}},
        {StepId::assess_prediction, {"original_abstract", "prediction"}},
        {StepId::score, {"original_abstract", "assessment"}},
        {StepId::summarize, {"assessment_count", "assessments"}},
    };
    return slots.at(step);
}

/// Artifact kind carried by a slot; assessment_count is a scalar, not an
/// artifact, and maps to nothing.
inline std::map<std::string, ArtifactKind> slot_artifacts() {
    return {
        {"original_abstract", ArtifactKind::original_abstract},
        {"redacted_abstract", ArtifactKind::redacted_abstract},
        {"prediction", ArtifactKind::prediction},
        {"assessment", ArtifactKind::holistic_assessment},
        {"assessments", ArtifactKind::sampled_assessments},
    };
}

inline OutputKind output_kind(StepId step) {
    switch (step) {
        case StepId::assess_redaction: return OutputKind::single_rating;
        case StepId::score: return OutputKind::dual_rating;
        default: return OutputKind::free_text;
    }
}

struct Message {
    std::string role;  // "system" | "user"
    std::string content;

    bool operator==(const Message&) const = default;
};

using MessageSequence = std::vector<Message>;

/// One step's template, loaded from its versioned data file. `instruction`
/// is the [[system]] section (the verbatim prompt); `user_template` carries
/// the {{slot}} placeholders laid out under labeled delimiters.
struct StepSpec {
    StepId step = StepId::redact;
    std::string instruction;
    std::string user_template;
    std::vector<std::string> slots;     // == input_slots(step)
    OutputKind output = OutputKind::free_text;
    std::string template_hash;          // sha256 of the raw template file
    std::string template_file;
};

namespace detail {

inline std::vector<std::string> placeholders_in(std::string_view text) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (true) {
        auto open = text.find("{{", pos);
        if (open == std::string_view::npos) break;
        auto close = text.find("}}", open + 2);
        if (close == std::string_view::npos)
            throw ProtocolError("unterminated placeholder in template");
        out.emplace_back(text.substr(open + 2, close - open - 2));
        pos = close + 2;
    }
    return out;
}

inline std::string substitute(std::string_view tmpl,
                              const std::map<std::string, std::string>& values) {
    std::string out;
    out.reserve(tmpl.size());
    std::size_t pos = 0;
    while (true) {
        auto open = tmpl.find("{{", pos);
        if (open == std::string_view::npos) {
            out.append(tmpl.substr(pos));
            break;
        }
        out.append(tmpl.substr(pos, open - pos));
        auto close = tmpl.find("}}", open + 2);
        std::string name(tmpl.substr(open + 2, close - open - 2));
        out.append(values.at(name));
        pos = close + 2;
    }
    return out;
}

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw ProtocolError("cannot open template file: " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace detail

/// Parses the on-disk template format:
///   [[system]]\n<instruction>\n[[user]]\n<user template>\n
inline StepSpec parse_template(StepId step, const std::string& raw,
                               const std::string& file_name = "") {
    constexpr std::string_view sys_marker = "[[system]]\n";
    constexpr std::string_view user_marker = "\n[[user]]\n";
    if (raw.rfind(sys_marker, 0) != 0)
        throw ProtocolError("template " + file_name + " must start with [[system]]");
    auto split = raw.find(user_marker);
    if (split == std::string::npos)
        throw ProtocolError("template " + file_name + " has no [[user]] section");
    StepSpec spec;
    spec.step = step;
    spec.instruction = raw.substr(sys_marker.size(), split - sys_marker.size());
    spec.user_template = raw.substr(split + user_marker.size());
    if (!spec.user_template.empty() && spec.user_template.back() == '\n')
        spec.user_template.pop_back();
    spec.slots = input_slots(step);
    spec.output = output_kind(step);
    spec.template_hash = sha256_hex(raw);
    spec.template_file = file_name;

    // every placeholder declared, every declared slot present
    auto found = detail::placeholders_in(spec.instruction + spec.user_template);
    std::set<std::string> found_set(found.begin(), found.end());
    std::set<std::string> slot_set(spec.slots.begin(), spec.slots.end());
    if (found_set != slot_set)
        throw ProtocolError("template " + file_name +
                            " placeholders do not match declared slots for step " +
                            to_string(step));
    return spec;
}

/// The full prompt set, loaded and integrity-checked against the manifest.
class Protocol {
public:
    static Protocol load(const std::filesystem::path& prompts_dir) {
        Protocol p;
        auto manifest_path = prompts_dir / "manifest.json";
        nlohmann::json manifest;
        try {
            manifest = nlohmann::json::parse(detail::read_file(manifest_path));
        } catch (const nlohmann::json::exception& e) {
            throw ProtocolError("invalid prompt manifest: " + std::string(e.what()));
        }
        for (const auto& entry : manifest.at("steps")) {
            StepId step = step_from_string(entry.at("step_id").get<std::string>());
            std::string file = entry.at("file").get<std::string>();
            std::string raw = detail::read_file(prompts_dir / file);
            std::string expected = entry.at("sha256").get<std::string>();
            if (sha256_hex(raw) != expected)
                throw ProtocolError("template file " + file +
                                    " does not match its manifest hash; refusing to run "
                                    "with drifted prompts");
            p.specs_[step] = parse_template(step, raw, file);
        }
        for (StepId s : kPipelineSteps)
            if (!p.specs_.count(s))
                throw ProtocolError("prompt manifest is missing step " + to_string(s));
        if (!p.specs_.count(StepId::summarize))
            throw ProtocolError("prompt manifest is missing step summarize");
        return p;
    }

    const StepSpec& spec(StepId step) const {
        auto it = specs_.find(step);
        if (it == specs_.end())
            throw ProtocolError("no template loaded for step " + to_string(step));
        return it->second;
    }

    std::map<std::string, std::string> template_hashes() const {
        std::map<std::string, std::string> out;
        for (const auto& [step, spec] : specs_) out[to_string(step)] = spec.template_hash;
        return out;
    }

private:
    std::map<StepId, StepSpec> specs_;
};

/// Renders a step into the fixed two-message shape: the verbatim instruction
/// as the system message, slotted inputs under labeled delimiters as the user
/// message. Inputs must cover the spec's slots exactly.
inline MessageSequence render_prompt(const StepSpec& spec,
                                     const std::map<std::string, std::string>& inputs) {
    std::set<std::string> slot_set(spec.slots.begin(), spec.slots.end());
    for (const auto& [name, value] : inputs) {
        if (!slot_set.count(name))
            throw ProtocolError("slot \"" + name + "\" not permitted for step " +
                                to_string(spec.step));
        if (value.empty())
            throw ProtocolError("slot \"" + name + "\" is empty for step " +
                                to_string(spec.step));
    }
    for (const auto& name : spec.slots)
        if (!inputs.count(name))
            throw ProtocolError("missing slot \"" + name + "\" for step " +
                                to_string(spec.step));
    return {Message{"system", detail::substitute(spec.instruction, inputs)},
            Message{"user", detail::substitute(spec.user_template, inputs)}};
}

/// Renders the auxiliary summary request: the instruction parameterized by
/// the sample size, the sampled assessments concatenated under numbered
/// delimiters, in the order given.
inline MessageSequence summarize_prompt(const Protocol& protocol,
                                        const std::vector<std::string>& assessments,
                                        std::size_t n_expected = 100) {
    if (assessments.size() != n_expected)
        throw ProtocolError("summarize_prompt: got " + std::to_string(assessments.size()) +
                            " assessments, expected " + std::to_string(n_expected));
    std::string numbered;
    for (std::size_t i = 0; i < assessments.size(); ++i) {
        if (i) numbered += "\n\n";
        numbered += "=== ASSESSMENT " + std::to_string(i + 1) + " ===\n";
        numbered += assessments[i];
    }
    return render_prompt(protocol.spec(StepId::summarize),
                         {{"assessment_count", std::to_string(n_expected)},
                          {"assessments", numbered}});
}

}  // namespace redactlab::protocol
