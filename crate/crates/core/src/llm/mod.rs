//! Prompting, sampling, response parsing and annotation against a
//! chat-completions endpoint.

mod annotate;
mod infer;
mod prompt;
mod response;
mod transport;

pub use annotate::{
    annotate_cot, annotate_direct, verify_formula, AnnotateConfig, AnnotationRecord, AnnotationStatus, AnnotationTask,
    CharTokenizer, FormulaTokenizer, Tokenizer,
};
pub use infer::{infer_one, InferConfig, InferenceResult};
pub use prompt::{
    build_annotation_prompt, build_cot_annotation_prompt, build_prompt, table_view, PromptSpec, WrongFormula,
};
pub use response::{parse_response, ParsedResponse, PayloadKind};
pub use transport::{
    ChatMessage, ChatRequest, EndpointConfig, HttpTransport, MockRule, RuleTransport, Sampler, ScriptedTransport,
    Transport, TransportError,
};
