use std::collections::{HashMap, VecDeque};
use std::sync::{Arc, Mutex};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use tracing::{debug, warn};

use crate::error::ProviderError;

use super::signature::Signature;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub signature: String,
    pub system: String,
    pub user: String,
    /// Raw input values, for providers that answer from structure rather than text.
    pub inputs: IndexMap<String, String>,
}

pub trait ChatProvider: Send + Sync {
    fn complete(&self, request: &ChatRequest) -> Result<String, ProviderError>;
}

impl<P: ChatProvider + ?Sized> ChatProvider for Arc<P> {
    fn complete(&self, request: &ChatRequest) -> Result<String, ProviderError> {
        (**self).complete(request)
    }
}

impl<P: ChatProvider + ?Sized> ChatProvider for Box<P> {
    fn complete(&self, request: &ChatRequest) -> Result<String, ProviderError> {
        (**self).complete(request)
    }
}

/// Renders, sends and parses one signature call.
///
/// Transport errors and malformed replies are retried up to `retries` times.
/// A malformed reply is re-prompted with the list of missing fields.
pub fn call_signature(
    llm: &dyn ChatProvider,
    sig: &Signature,
    inputs: &IndexMap<String, String>,
    retries: usize,
) -> Result<IndexMap<String, String>, ProviderError> {
    let prompt = sig.render(inputs)?;
    let mut request = ChatRequest {
        signature: sig.name.clone(),
        system: prompt.system,
        user: prompt.user.clone(),
        inputs: inputs.clone(),
    };
    let mut last = ProviderError::Transport("no attempt made".into());
    for attempt in 0..=retries {
        match llm.complete(&request).and_then(|text| sig.parse(&text)) {
            Ok(fields) => return Ok(fields),
            Err(e @ ProviderError::MissingOutputFields { .. }) => {
                if let ProviderError::MissingOutputFields { missing } = &e {
                    debug!(signature = %sig.name, attempt, ?missing, "re-prompting for missing fields");
                    request.user = format!(
                        "{}\n\nThe previous reply was missing: {}. Answer again using every output marker.",
                        prompt.user,
                        missing.join(", ")
                    );
                }
                last = e;
            }
            Err(e) if e.is_retryable() || e.is_parse_failure() => {
                warn!(signature = %sig.name, attempt, error = %e, "provider call failed");
                last = e;
            }
            Err(e) => return Err(e),
        }
    }
    Err(last)
}

/// Builds an input map from `(name, value)` pairs.
pub fn fields<K: Into<String>, V: Into<String>>(pairs: impl IntoIterator<Item = (K, V)>) -> IndexMap<String, String> {
    pairs.into_iter().map(|(k, v)| (k.into(), v.into())).collect()
}

/// Reads a YES/NO field. Anything starting with "yes" counts as YES.
pub fn parse_yes_no(value: &str) -> Result<bool, ProviderError> {
    let v = value.trim().trim_matches(|c: char| c == '\'' || c == '"' || c == '*').to_ascii_lowercase();
    if v.starts_with("yes") {
        Ok(true)
    } else if v.starts_with("no") {
        Ok(false)
    } else {
        Err(ProviderError::Malformed(format!("expected YES or NO, got {value:?}")))
    }
}

/// Runs a YES/NO signature. A reply that stays unparseable after retries is
/// read as NO with reasoning "parse failure"; transport and scripting errors
/// propagate.
pub fn ask_yes_no(
    llm: &dyn ChatProvider,
    sig: &Signature,
    inputs: &IndexMap<String, String>,
    verdict_field: &str,
    retries: usize,
) -> Result<(bool, String), ProviderError> {
    let parse_failure = || Ok((false, "parse failure".to_string()));
    match call_signature(llm, sig, inputs, retries) {
        Ok(out) => match parse_yes_no(&out[verdict_field]) {
            Ok(v) => Ok((v, out.get("reasoning").cloned().unwrap_or_default())),
            Err(_) => parse_failure(),
        },
        Err(e) if e.is_parse_failure() => parse_failure(),
        Err(e) => Err(e),
    }
}

type Handler = dyn Fn(&ChatRequest) -> Result<String, ProviderError> + Send + Sync;

#[derive(Default)]
struct Script {
    queues: HashMap<String, VecDeque<Result<String, ProviderError>>>,
    handlers: HashMap<String, Arc<Handler>>,
    fallback: Option<Arc<dyn ChatProvider>>,
    log: Vec<ChatRequest>,
}

/// Test double keyed by signature name. Queued replies are served first,
/// then a per-signature handler, then an optional fallback provider.
#[derive(Default)]
pub struct ScriptedLlm {
    script: Mutex<Script>,
}

impl ScriptedLlm {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&self, signature: &str, reply: impl Into<String>) -> &Self {
        self.push_result(signature, Ok(reply.into()))
    }

    pub fn push_error(&self, signature: &str, err: ProviderError) -> &Self {
        self.push_result(signature, Err(err))
    }

    fn push_result(&self, signature: &str, r: Result<String, ProviderError>) -> &Self {
        self.script
            .lock()
            .unwrap()
            .queues
            .entry(signature.to_string())
            .or_default()
            .push_back(r);
        self
    }

    /// Queues a well-formed reply for `sig` built from `(field, value)` pairs.
    pub fn push_fields(&self, sig: &Signature, pairs: &[(&str, &str)]) -> &Self {
        self.push(&sig.name, sig.format_output(&fields(pairs.iter().copied())))
    }

    pub fn on<F>(&self, signature: &str, handler: F) -> &Self
    where
        F: Fn(&ChatRequest) -> Result<String, ProviderError> + Send + Sync + 'static,
    {
        self.script
            .lock()
            .unwrap()
            .handlers
            .insert(signature.to_string(), Arc::new(handler));
        self
    }

    pub fn with_fallback(self, provider: Arc<dyn ChatProvider>) -> Self {
        self.script.lock().unwrap().fallback = Some(provider);
        self
    }

    pub fn calls(&self) -> Vec<ChatRequest> {
        self.script.lock().unwrap().log.clone()
    }

    pub fn call_count(&self, signature: &str) -> usize {
        self.script
            .lock()
            .unwrap()
            .log
            .iter()
            .filter(|r| r.signature == signature)
            .count()
    }

    pub fn pending(&self, signature: &str) -> usize {
        self.script.lock().unwrap().queues.get(signature).map_or(0, VecDeque::len)
    }
}

impl ChatProvider for ScriptedLlm {
    fn complete(&self, request: &ChatRequest) -> Result<String, ProviderError> {
        let (queued, handler, fallback) = {
            let mut s = self.script.lock().unwrap();
            s.log.push(request.clone());
            let queued = s.queues.get_mut(&request.signature).and_then(VecDeque::pop_front);
            (queued, s.handlers.get(&request.signature).cloned(), s.fallback.clone())
        };
        if let Some(r) = queued {
            return r;
        }
        if let Some(h) = handler {
            return h(request);
        }
        if let Some(f) = fallback {
            return f.complete(request);
        }
        Err(ProviderError::Unscripted(request.signature.clone()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::providers::catalog;

    fn judge_inputs() -> IndexMap<String, String> {
        fields([("query", "q"), ("api_schema", "{}"), ("target_parameters", "{}")])
    }

    #[test]
    fn scripted_reply_is_verbatim() {
        let llm = ScriptedLlm::new();
        llm.push("APIQueryJudge", "exact text");
        let req = ChatRequest {
            signature: "APIQueryJudge".into(),
            system: String::new(),
            user: String::new(),
            inputs: IndexMap::new(),
        };
        assert_eq!(llm.complete(&req).unwrap(), "exact text");
        assert_eq!(llm.complete(&req), Err(ProviderError::Unscripted("APIQueryJudge".into())));
    }

    #[test]
    fn reprompts_after_missing_marker() {
        let sig = &*catalog::API_QUERY_JUDGE;
        let llm = ScriptedLlm::new();
        llm.push(&sig.name, "[[ ## is_reasonable ## ]]\nYES\n[[ ## completed ## ]]");
        llm.push_fields(sig, &[("reasoning", "ok"), ("is_reasonable", "YES")]);
        let out = call_signature(&llm, sig, &judge_inputs(), 3).unwrap();
        assert_eq!(out["is_reasonable"], "YES");
        let calls = llm.calls();
        assert_eq!(calls.len(), 2);
        assert!(calls[1].user.contains("missing: reasoning"));
    }

    #[test]
    fn transport_errors_retry_then_surface() {
        let sig = &*catalog::API_QUERY_JUDGE;
        let llm = ScriptedLlm::new();
        llm.push_error(&sig.name, ProviderError::RateLimited);
        llm.push_fields(sig, &[("reasoning", "ok"), ("is_reasonable", "NO")]);
        assert_eq!(call_signature(&llm, sig, &judge_inputs(), 3).unwrap()["is_reasonable"], "NO");

        for _ in 0..4 {
            llm.push_error(&sig.name, ProviderError::Timeout);
        }
        assert_eq!(call_signature(&llm, sig, &judge_inputs(), 3), Err(ProviderError::Timeout));
    }

    #[test]
    fn unscripted_is_not_retried() {
        let sig = &*catalog::API_QUERY_JUDGE;
        let llm = ScriptedLlm::new();
        assert!(matches!(
            call_signature(&llm, sig, &judge_inputs(), 3),
            Err(ProviderError::Unscripted(_))
        ));
        assert_eq!(llm.calls().len(), 1);
    }

    #[test]
    fn yes_no_parsing() {
        assert!(parse_yes_no("YES").unwrap());
        assert!(parse_yes_no(" 'yes' ").unwrap());
        assert!(!parse_yes_no("No.").unwrap());
        assert!(parse_yes_no("maybe").is_err());
    }
}
