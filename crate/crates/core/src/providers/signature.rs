//! Field-structured prompt signatures and their marker wire format.
//!
//! A prompt is a system message documenting the fields plus a user message
//! carrying one `[[ ## name ## ]]` block per input. Model output is read back
//! by locating the output markers and slicing between consecutive markers.

use indexmap::IndexMap;

use crate::error::ProviderError;

pub const COMPLETED: &str = "completed";

pub fn marker(name: &str) -> String {
    format!("[[ ## {name} ## ]]")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldSpec {
    pub name: String,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Signature {
    pub name: String,
    pub objective: String,
    pub inputs: Vec<FieldSpec>,
    pub outputs: Vec<FieldSpec>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prompt {
    pub system: String,
    pub user: String,
}

impl Prompt {
    /// System and user parts as one document.
    pub fn text(&self) -> String {
        format!("{}\n\n{}", self.system, self.user)
    }
}

fn valid_field_name(name: &str) -> bool {
    !name.is_empty() && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') && name != COMPLETED
}

impl Signature {
    pub fn new(
        name: &str,
        objective: &str,
        inputs: &[(&str, &str)],
        outputs: &[(&str, &str)],
    ) -> Result<Self, String> {
        if outputs.is_empty() {
            return Err(format!("signature {name} declares no output fields"));
        }
        let mut seen = std::collections::HashSet::new();
        for (f, _) in inputs.iter().chain(outputs) {
            if !valid_field_name(f) {
                return Err(format!("signature {name}: invalid field name {f:?}"));
            }
            if !seen.insert(*f) {
                return Err(format!("signature {name}: duplicate field {f}"));
            }
        }
        let spec = |fs: &[(&str, &str)]| {
            fs.iter()
                .map(|(n, d)| FieldSpec {
                    name: n.to_string(),
                    description: d.to_string(),
                })
                .collect()
        };
        Ok(Signature {
            name: name.into(),
            objective: objective.into(),
            inputs: spec(inputs),
            outputs: spec(outputs),
        })
    }

    pub fn input_names(&self) -> impl Iterator<Item = &str> {
        self.inputs.iter().map(|f| f.name.as_str())
    }

    pub fn output_names(&self) -> impl Iterator<Item = &str> {
        self.outputs.iter().map(|f| f.name.as_str())
    }

    pub fn system_prompt(&self) -> String {
        let mut s = String::from("Your input fields are:\n");
        for (i, f) in self.inputs.iter().enumerate() {
            s.push_str(&format!("{}. `{}` (str): {}\n", i + 1, f.name, f.description));
        }
        s.push_str("\nYour output fields are:\n");
        for (i, f) in self.outputs.iter().enumerate() {
            s.push_str(&format!("{}. `{}` (str): {}\n", i + 1, f.name, f.description));
        }
        s.push_str("\nAll interactions will be structured in the following way, with the appropriate values filled in.\n\n");
        for f in self.inputs.iter().chain(&self.outputs) {
            s.push_str(&format!("{}\n{{{}}}\n\n", marker(&f.name), f.name));
        }
        s.push_str(&marker(COMPLETED));
        s.push_str("\n\nIn adhering to this structure, your objective is: ");
        s.push_str(&self.objective);
        s
    }

    /// Renders the prompt. Every input field must be supplied.
    pub fn render(&self, inputs: &IndexMap<String, String>) -> Result<Prompt, ProviderError> {
        let mut user = String::new();
        for f in &self.inputs {
            let value = inputs.get(&f.name).ok_or_else(|| ProviderError::MissingInput {
                field: f.name.clone(),
            })?;
            user.push_str(&marker(&f.name));
            user.push('\n');
            user.push_str(value);
            user.push_str("\n\n");
        }
        user.push_str("Respond with the output fields in this order, then the terminator:\n");
        for f in &self.outputs {
            user.push_str(&marker(&f.name));
            user.push('\n');
        }
        user.push_str(&marker(COMPLETED));
        Ok(Prompt {
            system: self.system_prompt(),
            user,
        })
    }

    /// Formats output values the way a compliant model would answer.
    pub fn format_output(&self, values: &IndexMap<String, String>) -> String {
        let mut s = String::new();
        for f in &self.outputs {
            s.push_str(&marker(&f.name));
            s.push('\n');
            s.push_str(values.get(&f.name).map(String::as_str).unwrap_or(""));
            s.push_str("\n\n");
        }
        s.push_str(&marker(COMPLETED));
        s
    }

    pub fn parse(&self, text: &str) -> Result<IndexMap<String, String>, ProviderError> {
        let found = find_markers(text);
        let mut out = IndexMap::new();
        let mut missing = Vec::new();
        for f in &self.outputs {
            match found.iter().position(|m| m.name == f.name) {
                Some(i) => {
                    let start = found[i].end;
                    let end = found.get(i + 1).map_or(text.len(), |m| m.start);
                    out.insert(f.name.clone(), text[start..end].trim().to_string());
                }
                None => missing.push(f.name.clone()),
            }
        }
        if missing.is_empty() {
            Ok(out)
        } else {
            Err(ProviderError::MissingOutputFields { missing })
        }
    }
}

pub fn render_signature(sig: &Signature, inputs: &IndexMap<String, String>) -> Result<String, ProviderError> {
    sig.render(inputs).map(|p| p.text())
}

pub fn parse_signature_output(text: &str, sig: &Signature) -> Result<IndexMap<String, String>, ProviderError> {
    sig.parse(text)
}

struct Found<'a> {
    name: &'a str,
    start: usize,
    end: usize,
}

/// Every `[[ ## name ## ]]` occurrence, in text order.
fn find_markers(text: &str) -> Vec<Found<'_>> {
    const OPEN: &str = "[[ ## ";
    const CLOSE: &str = " ## ]]";
    let mut out = Vec::new();
    let mut pos = 0;
    while let Some(off) = text[pos..].find(OPEN) {
        let start = pos + off;
        let name_start = start + OPEN.len();
        match text[name_start..].find(CLOSE) {
            Some(len) if len > 0 && !text[name_start..name_start + len].contains(['\n', '[', ']']) => {
                let end = name_start + len + CLOSE.len();
                out.push(Found {
                    name: &text[name_start..name_start + len],
                    start,
                    end,
                });
                pos = end;
            }
            _ => pos = name_start,
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn judge() -> Signature {
        Signature::new(
            "Echo",
            "Answer the query.",
            &[("query", "user text")],
            &[("reasoning", "why"), ("is_valid", "YES or NO")],
        )
        .unwrap()
    }

    fn inputs(pairs: &[(&str, &str)]) -> IndexMap<String, String> {
        pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    #[test]
    fn render_contains_input_block() {
        let text = render_signature(&judge(), &inputs(&[("query", "hi")])).unwrap();
        assert!(text.contains("[[ ## query ## ]]\nhi"));
        assert!(text.ends_with("[[ ## completed ## ]]"));
        let q = text.rfind("[[ ## query ## ]]").unwrap();
        let r = text.rfind("[[ ## reasoning ## ]]").unwrap();
        assert!(q < r);
    }

    #[test]
    fn empty_value_keeps_marker() {
        let text = render_signature(&judge(), &inputs(&[("query", "")])).unwrap();
        assert!(text.contains("[[ ## query ## ]]\n\n"));
    }

    #[test]
    fn missing_input_is_named() {
        let err = render_signature(&judge(), &IndexMap::new()).unwrap_err();
        assert_eq!(err.to_string(), "query not provided");
    }

    #[test]
    fn system_prompt_layout() {
        let s = judge().system_prompt();
        assert!(s.starts_with("Your input fields are:\n1. `query` (str): user text\n"));
        assert!(s.contains("Your output fields are:\n1. `reasoning` (str): why\n2. `is_valid` (str): YES or NO\n"));
        assert!(s.contains("[[ ## is_valid ## ]]\n{is_valid}\n\n[[ ## completed ## ]]"));
    }

    #[test]
    fn parses_by_position() {
        let sig = judge();
        let out = sig.parse("[[ ## is_valid ## ]]\nYES\n[[ ## reasoning ## ]]\nfine\n[[ ## completed ## ]]").unwrap();
        assert_eq!(out["is_valid"], "YES");
        assert_eq!(out["reasoning"], "fine");
        assert_eq!(out.keys().collect::<Vec<_>>(), ["reasoning", "is_valid"]);
    }

    #[test]
    fn missing_marker_is_reported() {
        let err = judge().parse("[[ ## is_valid ## ]]\nYES\n[[ ## completed ## ]]").unwrap_err();
        assert_eq!(
            err,
            ProviderError::MissingOutputFields {
                missing: vec!["reasoning".into()]
            }
        );
    }

    #[test]
    fn content_without_terminator_runs_to_end() {
        let out = judge().parse("[[ ## reasoning ## ]] a \n[[ ## is_valid ## ]]\n NO ").unwrap();
        assert_eq!(out["is_valid"], "NO");
        assert_eq!(out["reasoning"], "a");
    }

    #[test]
    fn rejects_bad_signatures() {
        assert!(Signature::new("x", "", &[("a", "")], &[]).is_err());
        assert!(Signature::new("x", "", &[("a", "")], &[("a", "")]).is_err());
        assert!(Signature::new("x", "", &[], &[("completed", "")]).is_err());
    }
}
