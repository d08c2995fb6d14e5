//! Chat-completion backed provider.
//!
//! Each operation sends one system instruction naming the taxonomies and a
//! JSON user message; the reply's `choices[0].message.content` must be a
//! JSON object of the documented shape. Anything else is a contract
//! violation.

use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{json, Value};

use crate::model::{DataInsightKind, NarrativeRelationKind, StoryPiece, StoryUnit, Stylization, TextSpan};

use super::{
    check_extraction, check_highlights, check_units, placeholder_icon, ExtractionResult, Highlights, IconAsset,
    Provider, ProviderConfig, ProviderError,
};

struct Gate {
    cap: usize,
    busy: Mutex<usize>,
    freed: Condvar,
}

struct Permit<'a>(&'a Gate);

impl Gate {
    fn acquire(&self) -> Permit<'_> {
        let mut busy = self.busy.lock().unwrap_or_else(|e| e.into_inner());
        while *busy >= self.cap {
            busy = self.freed.wait(busy).unwrap_or_else(|e| e.into_inner());
        }
        *busy += 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        let mut busy = self.0.busy.lock().unwrap_or_else(|e| e.into_inner());
        *busy -= 1;
        self.0.freed.notify_one();
    }
}

pub struct HttpProvider {
    config: ProviderConfig,
    client: reqwest::blocking::Client,
    gate: Gate,
}

fn names<T: std::fmt::Display>(all: &[T]) -> String {
    all.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ")
}

fn instruction(op: &str, shape: &str) -> String {
    format!(
        "You build storytelling infographics. Operation: {op}. Narrative relations: {}. Data insights: {}. \
         Reply with a single JSON object of the form {shape} and nothing else.",
        names(&NarrativeRelationKind::ALL),
        names(&DataInsightKind::ALL),
    )
}

#[derive(Deserialize)]
struct UnitsReply {
    units: Vec<UnitReply>,
}

#[derive(Deserialize)]
struct UnitReply {
    text: String,
    insight: DataInsightKind,
}

#[derive(Deserialize)]
struct HighlightsReply {
    primary: Option<TextSpan>,
    #[serde(default)]
    secondary: Vec<TextSpan>,
}

#[derive(Deserialize)]
struct KeywordReply {
    keyword: Option<String>,
}

impl HttpProvider {
    pub fn new(config: ProviderConfig) -> Result<Self, ProviderError> {
        config.validate()?;
        let client = reqwest::blocking::Client::builder()
            .timeout(config.timeout())
            .build()
            .map_err(|e| ProviderError::Config(e.to_string()))?;
        let gate = Gate { cap: config.max_in_flight, busy: Mutex::new(0), freed: Condvar::new() };
        Ok(HttpProvider { config, client, gate })
    }

    fn endpoint(&self) -> &str {
        self.config.endpoint.as_deref().expect("validated")
    }

    /// Posts with retries; retries transport errors, timeouts, 429 and 5xx.
    fn post(&self, body: &Value) -> Result<Value, ProviderError> {
        let _permit = self.gate.acquire();
        let attempts_allowed = self.config.max_retries + 1;
        let mut last = ProviderError::Timeout { attempts: 0 };
        for attempt in 1..=attempts_allowed {
            let mut req = self.client.post(self.endpoint()).json(body);
            if let Some(key) = &self.config.api_key {
                req = req.bearer_auth(key);
            }
            match req.send() {
                Ok(resp) => {
                    let status = resp.status();
                    if status.is_success() {
                        return resp.json::<Value>().map_err(|e| {
                            if e.is_timeout() {
                                ProviderError::Timeout { attempts: attempt }
                            } else {
                                ProviderError::ContractViolation(vec![format!("reply is not JSON: {e}")])
                            }
                        });
                    }
                    last = ProviderError::Transport { attempts: attempt, cause: format!("HTTP {status}") };
                    if !(status.is_server_error() || status.as_u16() == 429) {
                        return Err(last);
                    }
                }
                Err(e) if e.is_timeout() => last = ProviderError::Timeout { attempts: attempt },
                Err(e) => last = ProviderError::Transport { attempts: attempt, cause: e.to_string() },
            }
        }
        Err(last)
    }

    fn call<T: DeserializeOwned>(&self, op: &str, shape: &str, payload: Value) -> Result<T, ProviderError> {
        let body = json!({
            "model": self.config.model_name.clone().unwrap_or_else(|| "default".into()),
            "messages": [
                {"role": "system", "content": instruction(op, shape)},
                {"role": "user", "content": payload.to_string()},
            ],
            "response_format": {"type": "json_object"},
            "temperature": 0,
        });
        let reply = self.post(&body)?;
        let content = reply
            .pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .ok_or_else(|| ProviderError::ContractViolation(vec!["missing choices[0].message.content".into()]))?;
        serde_json::from_str(content)
            .map_err(|e| ProviderError::ContractViolation(vec![format!("{op}: malformed reply: {e}")]))
    }

    fn fetch_icon_remote(&self, base: &str, keyword: &str, stylization: &Stylization) -> Result<String, String> {
        let _permit = self.gate.acquire();
        let color = stylization.theme(0).to_string();
        let resp = self
            .client
            .get(base)
            .query(&[("q", keyword), ("color", color.as_str())])
            .timeout(Duration::from_secs_f64(self.config.timeout_secs))
            .send()
            .map_err(|e| e.to_string())?;
        if !resp.status().is_success() {
            return Err(format!("HTTP {}", resp.status()));
        }
        let body = resp.text().map_err(|e| e.to_string())?;
        if !body.trim_start().starts_with('<') {
            return Err("icon service returned non-SVG content".into());
        }
        Ok(body)
    }
}

impl Provider for HttpProvider {
    fn segment_story(&self, text: &str, goal: &str) -> Result<ExtractionResult, ProviderError> {
        if text.trim().is_empty() || goal.trim().is_empty() {
            return Err(ProviderError::Input("text and goal must be non-empty".into()));
        }
        let result: ExtractionResult = self.call(
            "segment_story",
            r#"{"pieces":[{"id":str,"subtitle":str,"content":str,"relation_to_goal":relation}],"relations":[{"from_id":str,"to_id":str,"kind":relation}]}"#,
            json!({"text": text, "goal": goal}),
        )?;
        check_extraction(&result)?;
        Ok(result)
    }

    fn extract_units(&self, piece: &StoryPiece) -> Result<Vec<StoryUnit>, ProviderError> {
        let reply: UnitsReply = self.call(
            "extract_units",
            r#"{"units":[{"text":str,"insight":insight}]}"#,
            json!({"subtitle": piece.subtitle, "content": piece.content}),
        )?;
        let units: Vec<StoryUnit> = reply
            .units
            .into_iter()
            .enumerate()
            .map(|(k, u)| StoryUnit::new(format!("{}u{}", piece.id, k + 1), u.text, u.insight))
            .collect();
        check_units(piece, &units)?;
        Ok(units)
    }

    fn suggest_highlights(&self, unit: &StoryUnit) -> Result<Highlights, ProviderError> {
        let reply: HighlightsReply = self.call(
            "suggest_highlights",
            r#"{"primary":{"start":int,"end":int}|null,"secondary":[{"start":int,"end":int}]}"#,
            json!({"text": unit.text, "insight": unit.insight}),
        )?;
        let h = Highlights { primary: reply.primary, secondary: reply.secondary };
        check_highlights(unit, &h)?;
        Ok(h)
    }

    fn suggest_icon_keyword(&self, unit: &StoryUnit) -> Result<Option<String>, ProviderError> {
        let reply: KeywordReply =
            self.call("suggest_icon_keyword", r#"{"keyword":str|null}"#, json!({"text": unit.text}))?;
        match reply.keyword.map(|k| k.trim().to_lowercase()) {
            Some(k) if k.is_empty() => Ok(None),
            Some(k) if k.contains('\n') => Err(ProviderError::ContractViolation(vec!["keyword spans lines".into()])),
            other => Ok(other),
        }
    }

    fn suggest_stylization(&self, summary: &str, seed: u64) -> Result<Stylization, ProviderError> {
        let s: Stylization = self.call(
            "suggest_stylization",
            r##"{"theme_colors":["#RRGGBB"],"background":"#RRGGBB","fonts":{"title":str,"subtitle":str,"highlight":str,"regular":str},"text_colors":{"primary_highlight":"#RRGGBB","secondary_highlight":"#RRGGBB","regular":"#RRGGBB"}}"##,
            json!({"summary": summary, "variant": seed}),
        )?;
        if !(3..=5).contains(&s.theme_colors.len()) {
            return Err(ProviderError::ContractViolation(vec![format!(
                "theme colors must number 3 to 5 (got {})",
                s.theme_colors.len()
            )]));
        }
        Ok(s)
    }

    fn fetch_icon(&self, keyword: &str, stylization: &Stylization) -> (IconAsset, Option<String>) {
        let Some(base) = self.config.icon_endpoint.as_deref() else {
            return (
                placeholder_icon(keyword, stylization),
                Some(format!("icon `{keyword}`: no icon service configured, placeholder used")),
            );
        };
        match self.fetch_icon_remote(base, keyword, stylization) {
            Ok(svg) => (IconAsset { keyword: keyword.to_string(), svg, placeholder: false }, None),
            Err(e) => (placeholder_icon(keyword, stylization), Some(format!("icon `{keyword}`: {e}, placeholder used"))),
        }
    }
}
