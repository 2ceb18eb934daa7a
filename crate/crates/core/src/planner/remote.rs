use std::time::Duration;

use serde_json::{json, Value};

use crate::model::{caption, Family, Instruction, Plan, PlanSource, Scene};
use crate::provider::{HttpClient, ProviderError};
use crate::sim::gen_scene;

use super::text::{plan_from_text, render_plan};
use super::{OraclePlanner, PlanError, Planner};

pub const DEFAULT_TEMPLATE: &str = include_str!("../../data/prompts/default.txt");

const SYSTEM_PROMPT: &str = "You are a careful robot task planner. Reply with numbered steps only.";

/// A prompt with `{caption}`, `{instruction}` and `{exemplars}` placeholders.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PromptTemplate {
    text: String,
}

impl PromptTemplate {
    pub fn new(text: impl Into<String>) -> Result<Self, String> {
        let text = text.into();
        for p in ["{caption}", "{instruction}"] {
            if !text.contains(p) {
                return Err(format!("missing placeholder {p}"));
            }
        }
        Ok(PromptTemplate { text })
    }

    pub fn bundled() -> Self {
        PromptTemplate::new(DEFAULT_TEMPLATE).expect("bundled template has its placeholders")
    }

    pub fn fill(&self, caption: &str, instruction: &str, exemplars: &str) -> String {
        self.text.replace("{exemplars}", exemplars).replace("{caption}", caption).replace("{instruction}", instruction)
    }
}

/// Few-shot examples rendered from oracle plans on fixed seeds.
pub fn default_exemplars() -> String {
    let oracle = OraclePlanner::default();
    let mut out = String::new();
    for family in [Family::WordCorrection, Family::ColorSort] {
        let (scene, spec) = gen_scene(1, family);
        let ins = Instruction::new("exemplar", &spec.instruction_text).expect("non-empty");
        let plan = oracle.plan(&ins, &scene).expect("oracle solves its own scenes");
        out.push_str(&format!("Scene: {}\nInstruction: {}\nPlan:\n{}\n", caption(&scene), ins.text, render_plan(&plan)));
    }
    out
}

/// Chat-completions request body.
pub fn chat_request(model: &str, prompt: &str) -> Value {
    json!({
        "model": model,
        "messages": [
            {"role": "system", "content": SYSTEM_PROMPT},
            {"role": "user", "content": prompt},
        ],
        "temperature": 0,
    })
}

/// Extracts `choices[0].message.content`.
pub fn decode_chat_reply(reply: &Value) -> Result<String, ProviderError> {
    reply
        .pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .map(str::to_string)
        .ok_or_else(|| ProviderError::Shape("missing choices[0].message.content".into()))
}

/// Asks a chat model for numbered steps. Step texts are trusted; predicates come from the step grammar.
pub struct RemotePlanner {
    client: HttpClient,
    endpoint: String,
    model: String,
    template: PromptTemplate,
    exemplars: String,
}

impl RemotePlanner {
    pub fn new(endpoint: impl Into<String>, model: impl Into<String>, template: PromptTemplate, timeout: Duration) -> Self {
        RemotePlanner {
            client: HttpClient::new(timeout),
            endpoint: endpoint.into(),
            model: model.into(),
            template,
            exemplars: default_exemplars(),
        }
    }

    pub fn prompt(&self, instruction: &Instruction, scene: &Scene) -> String {
        self.template.fill(&caption(scene), &instruction.text, &self.exemplars)
    }
}

impl Planner for RemotePlanner {
    fn plan(&self, instruction: &Instruction, scene: &Scene) -> Result<Plan, PlanError> {
        let body = chat_request(&self.model, &self.prompt(instruction, scene));
        let reply = self.client.post_json(&self.endpoint, &body)?;
        let text = decode_chat_reply(&reply)?;
        plan_from_text(&text, scene, PlanSource::Remote)
    }
}
