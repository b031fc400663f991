#include "privreport/agents.hpp"

namespace privreport {

PromptTemplate dfd_summary_template() {
    PromptTemplate tmpl;
    tmpl.role =
        "You are a systems analyst who explains technical data flow diagrams to "
        "non-technical readers.";
    tmpl.instructions =
        "Your task is to turn the Mermaid data flow diagram and its structural "
        "summary below into a short textual summary describing the system's "
        "components, its data flows, and its trust boundaries, so that a human "
        "reviewer can validate the interpretation of the diagram.";
    tmpl.context_slots = {"mermaid", "structure"};
    tmpl.constraints =
        "Keep the summary factual and concise. Mention every component, every "
        "data flow, and every trust boundary exactly once. Point out each flow "
        "that crosses a trust boundary. Do not invent elements that are not in "
        "the diagram. Answer with the summary text only, without headings or "
        "markup.";
    tmpl.scratchpad_steps = {
        "List every component in the diagram and classify it as external entity, process, or "
        "data store",
        "Trace each data flow from its source to its target and note what data it carries",
        "Identify which components lie inside which trust boundary",
        "Check which flows cross a trust boundary, since those are the exposure points",
    };
    return tmpl;
}

PromptTemplate easyreq_template() {
    PromptTemplate tmpl;
    tmpl.role =
        "You are a security engineer with expertise in translating technical "
        "security information for non-technical stakeholders.";
    tmpl.instructions =
        "Your task is to take the monitoring use case and its technical "
        "requirements below, then rewrite each requirement in clear, accessible "
        "language that non-technical stakeholders, especially worker unions, can "
        "understand. You should also explain why each requirement is important "
        "and planned.\n"
        "\n"
        "Your goal is to:\n"
        "1. Describe what the system does and why it is being built, focusing on "
        "the what and the why rather than the how\n"
        "2. Rewrite every requirement in plain, non-technical language that "
        "avoids jargon, acronyms, and technical terminology\n"
        "3. Explain the value and rationale for why each requirement is planned";
    tmpl.context_slots = {"use_case", "requirements"};
    tmpl.constraints =
        "Avoid technical terminology; explain concepts in simple terms and keep "
        "the output concise. Produce exactly one <requirement_item> per input "
        "requirement, in the input order. Use this exact output structure:\n"
        "<system_description>one short paragraph about what the system does</system_description>\n"
        "<purpose>one short paragraph about why it is being built</purpose>\n"
        "<requirement_item>\n"
        "<requirement_id>the requirement's id</requirement_id>\n"
        "<plain_text>the requirement in plain language</plain_text>\n"
        "<rationale>why this requirement is planned</rationale>\n"
        "</requirement_item>";
    tmpl.scratchpad_steps = {
        "Identify the core purpose of the technical requirement",
        "Note any technical terms that need to be simplified or explained",
        "Think about what business risks this requirement mitigates",
        "Consider what stakeholders care about most",
    };
    tmpl.examples = {
        {"Requirement r7: \"The system shall store access logs for 90 days.\"",
         "<requirement_item>\n"
         "<requirement_id>r7</requirement_id>\n"
         "<plain_text>The system will: keep a record of who accessed it for ninety days.</plain_text>\n"
         "<rationale>This supports the goal: knowing who looked at the data makes misuse "
         "visible and accountable.</rationale>\n"
         "</requirement_item>"},
    };
    return tmpl;
}

PromptTemplate stride_handler_template() {
    PromptTemplate tmpl;
    tmpl.role =
        "You are a privacy engineer who explains identified security and privacy "
        "threats to the people affected by them, such as shop-floor workers and "
        "their representatives.";
    tmpl.instructions =
        "Below you find a system's data flow diagram (as a Mermaid document and "
        "as a textual summary), the system's requirements, and one analyzed "
        "threat from a structured threat analysis. Summarize the threat in "
        "language comprehensible to non-technical stakeholders: describe what "
        "could happen with a concrete example relevant to this system, why it "
        "matters to the monitored people, and how the planned mitigation "
        "protects them.";
    tmpl.context_slots = {"mermaid", "summary", "requirements", "stride_entry"};
    tmpl.constraints =
        "Avoid technical terminology; use concrete examples tied to this use "
        "case; address privacy and surveillance concerns directly; keep each "
        "part short. Reason as much as you need before answering, but the final "
        "answer must contain exactly these three parts and nothing else:\n"
        "<what>plain-language description of the threat</what>\n"
        "<why>impact from the monitored stakeholders' perspective</why>\n"
        "<how>how the planned mitigation protects against it</how>";
    tmpl.scratchpad_steps = {
        "Restate the threat in everyday words and find a concrete example in this system",
        "Work out who is affected and what it would mean for them",
        "Explain how the planned mitigation blocks or limits the threat",
    };
    tmpl.examples = {
        {"Threat: unauthorized reading of a badge-scan event stream.",
         "<what>Someone without permission could read the records of when each badge was "
         "scanned, for example while the records travel to the server.</what>\n"
         "<why>Those records show when individual employees arrive and leave, which is "
         "personal information that could be used to watch people beyond its purpose.</why>\n"
         "<how>The records are scrambled during transport, so anyone intercepting them "
         "sees only unreadable data.</how>"},
    };
    return tmpl;
}

}  // namespace privreport
