//! Extraction of formulas and answers from model output.

use serde::{Deserialize, Serialize};

use crate::answer::Variant;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PayloadKind {
    Formula,
    Answer,
}

impl PayloadKind {
    fn tag(self) -> &'static str {
        match self {
            PayloadKind::Formula => "formula",
            PayloadKind::Answer => "answer",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedResponse {
    pub think: Option<String>,
    pub payload: String,
    pub payload_kind: PayloadKind,
    pub format_ok: bool,
}

/// Drop a surrounding markdown code fence, if the whole reply is one.
fn strip_fence(s: &str) -> &str {
    let t = s.trim();
    if let Some(body) = t.strip_prefix("```").and_then(|b| b.strip_suffix("```")) {
        let body =
            body.split_once('\n').map_or(body, |(lang, rest)| if lang.trim().contains(' ') { body } else { rest });
        return body.trim();
    }
    t.trim_matches('`').trim()
}

pub fn parse_response(raw: &str, variant: Variant, kind: PayloadKind) -> ParsedResponse {
    if variant == Variant::Direct {
        return ParsedResponse {
            think: None,
            payload: strip_fence(raw).to_string(),
            payload_kind: kind,
            format_ok: true,
        };
    }
    let open = format!("<{}>", kind.tag());
    let close = format!("</{}>", kind.tag());
    let other = match kind {
        PayloadKind::Formula => PayloadKind::Answer,
        PayloadKind::Answer => PayloadKind::Formula,
    };
    let text = raw.trim();

    let think = text
        .strip_prefix("<think>")
        .and_then(|rest| rest.split_once("</think>"))
        .map(|(t, after)| (t.trim().to_string(), after));
    let well_formed = think.as_ref().is_some_and(|(t, after)| {
        let after = after.trim();
        !t.contains("<think>")
            && after.starts_with(&open)
            && after.ends_with(&close)
            && after.matches(&open).count() == 1
            && after.matches(&close).count() == 1
            && !after.contains(&format!("<{}>", other.tag()))
    });

    let payload = if well_formed {
        let after = think.as_ref().map(|(_, a)| a.trim()).unwrap_or_default();
        after[open.len()..after.len() - close.len()].trim().to_string()
    } else {
        best_effort(text, &open, &close)
    };
    ParsedResponse { think: think.map(|(t, _)| t), payload, payload_kind: kind, format_ok: well_formed }
}

/// Last tagged block if any, else whatever follows the reasoning segment.
fn best_effort(text: &str, open: &str, close: &str) -> String {
    if let Some(start) = text.rfind(open) {
        let body = &text[start + open.len()..];
        return body.split(close).next().unwrap_or(body).trim().to_string();
    }
    match text.rsplit_once("</think>") {
        Some((_, after)) => after.trim().to_string(),
        None => String::new(),
    }
}
