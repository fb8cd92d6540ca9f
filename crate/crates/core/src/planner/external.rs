use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{render_planner_prompt, Planner, PlannerError, PlannerRequest, PromptTemplates};
use crate::model::{validate_plan, PlanSpec, SchemaError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExternalPlannerConfig {
    /// Chat-completions endpoint.
    pub endpoint: String,
    pub model: String,
    /// Environment variable holding the bearer token.
    pub token_env: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub timeout_s: u64,
    /// Extra attempts after a reply fails validation.
    pub repair_retries: u32,
}

impl Default for ExternalPlannerConfig {
    fn default() -> Self {
        ExternalPlannerConfig {
            endpoint: "https://api.openai.com/v1/chat/completions".into(),
            model: "gpt-4o-mini".into(),
            token_env: "VOXMEM_PLANNER_TOKEN".into(),
            temperature: 0.0,
            max_tokens: 1200,
            timeout_s: 60,
            repair_retries: 2,
        }
    }
}

/// Every top-level balanced `{...}` in `text` that parses as JSON, in order.
/// Braces inside JSON strings are skipped.
pub fn json_objects(text: &str) -> Vec<&str> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut start = 0;
    while let Some(off) = text[start..].find('{') {
        let open = start + off;
        let mut depth = 0usize;
        let mut in_str = false;
        let mut escaped = false;
        let mut next = open + 1;
        for (i, &b) in bytes.iter().enumerate().skip(open) {
            if in_str {
                match b {
                    _ if escaped => escaped = false,
                    b'\\' => escaped = true,
                    b'"' => in_str = false,
                    _ => {}
                }
                continue;
            }
            match b {
                b'"' => in_str = true,
                b'{' => depth += 1,
                b'}' => {
                    depth -= 1;
                    if depth == 0 {
                        let cand = &text[open..=i];
                        if serde_json::from_str::<Value>(cand).is_ok() {
                            out.push(cand);
                            next = i + 1;
                        }
                        break;
                    }
                }
                _ => {}
            }
        }
        start = next;
    }
    out
}

/// First balanced `{...}` in `text` that parses as JSON.
pub fn extract_json_object(text: &str) -> Option<&str> {
    json_objects(text).into_iter().next()
}

/// Validate a free-form model reply as a plan. The first object that
/// validates wins; otherwise the error names the first object carrying
/// `subgoals`, or the first object at all.
pub fn plan_from_reply(reply: &str) -> Result<PlanSpec, SchemaError> {
    let objects = json_objects(reply);
    let mut first_err = None;
    let mut plan_err = None;
    for body in &objects {
        let v: Value = serde_json::from_str(body).map_err(|e| SchemaError::new("$", e.to_string()))?;
        match validate_plan(&v) {
            Ok(plan) => return Ok(plan),
            Err(e) => {
                if plan_err.is_none() && v.get("subgoals").is_some() {
                    plan_err = Some(e.clone());
                }
                first_err.get_or_insert(e);
            }
        }
    }
    Err(plan_err.or(first_err).unwrap_or_else(|| SchemaError::new("$", "no JSON object in reply")))
}

pub struct ExternalPlanner {
    cfg: ExternalPlannerConfig,
    templates: PromptTemplates,
    token: String,
    client: reqwest::blocking::Client,
}

impl ExternalPlanner {
    /// Reads the bearer token from the configured environment variable.
    pub fn new(cfg: ExternalPlannerConfig, templates: PromptTemplates) -> Result<Self, PlannerError> {
        let token = std::env::var(&cfg.token_env)
            .map_err(|_| PlannerError::Config(format!("environment variable {} is not set", cfg.token_env)))?;
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(cfg.timeout_s))
            .build()
            .map_err(|e| PlannerError::Config(e.to_string()))?;
        Ok(ExternalPlanner { cfg, templates, token, client })
    }

    fn complete(&self, messages: &[Value]) -> Result<String, PlannerError> {
        let body = json!({
            "model": self.cfg.model,
            "messages": messages,
            "temperature": self.cfg.temperature,
            "max_tokens": self.cfg.max_tokens,
        });
        let resp = self
            .client
            .post(&self.cfg.endpoint)
            .bearer_auth(&self.token)
            .json(&body)
            .send()
            .map_err(|e| PlannerError::Transport(e.to_string()))?;
        let status = resp.status();
        let v: Value = resp.json().map_err(|e| PlannerError::Transport(e.to_string()))?;
        if !status.is_success() {
            return Err(PlannerError::Transport(format!("HTTP {status}: {v}")));
        }
        v.pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(|| PlannerError::Transport("reply has no message content".into()))
    }
}

impl Planner for ExternalPlanner {
    fn plan(&mut self, req: &PlannerRequest) -> Result<PlanSpec, PlannerError> {
        let prompt = render_planner_prompt(req, &self.templates);
        let mut messages =
            vec![json!({"role": "system", "content": prompt.system}), json!({"role": "user", "content": prompt.user})];
        let attempts = self.cfg.repair_retries + 1;
        let mut last = None;
        for _ in 0..attempts {
            let reply = self.complete(&messages)?;
            match plan_from_reply(&reply) {
                Ok(plan) => return Ok(plan),
                Err(e) => {
                    messages.push(json!({"role": "assistant", "content": reply}));
                    messages.push(json!({"role": "user", "content": self.templates.repair(&e.to_string())}));
                    last = Some((e, reply));
                }
            }
        }
        let (error, raw) = last.expect("at least one attempt");
        Err(PlannerError::Schema { attempts, error, raw })
    }
}
