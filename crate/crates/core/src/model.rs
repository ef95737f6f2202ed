//! Function libraries, generated examples, and their on-disk formats.
//!
//! A function library is a JSON array of tool definitions in the usual
//! `name` / `description` / `parameters` (JSON-schema object) shape, with an
//! optional `returns` schema. Datasets are newline-delimited JSON, one
//! [`GeneratedExample`] per line.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};

/// Marks a required parameter that was left out on purpose.
pub const MISSING_SENTINEL: &str = "__MISSING__";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ParamCategory {
    Numerical,
    String,
    Enum,
    Other,
}

impl ParamCategory {
    pub const ALL: [ParamCategory; 4] = [
        ParamCategory::Numerical,
        ParamCategory::String,
        ParamCategory::Enum,
        ParamCategory::Other,
    ];
}

impl fmt::Display for ParamCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ParamCategory::Numerical => "NUMERICAL",
            ParamCategory::String => "STRING",
            ParamCategory::Enum => "ENUM",
            ParamCategory::Other => "OTHER",
        };
        f.write_str(s)
    }
}

/// Maps a declared schema type (and enum presence) onto a parameter category.
///
/// Enum literals dominate; integer/float/number types are numerical; string
/// types are strings; everything else, booleans included, is `OTHER`.
pub fn classify_parameter_type(declared_type: &str, enum_values: &[String]) -> ParamCategory {
    if !enum_values.is_empty() {
        return ParamCategory::Enum;
    }
    let t = declared_type.trim().to_ascii_lowercase();
    match t.as_str() {
        "integer" | "int" | "float" | "number" | "double" | "long" | "int32" | "int64"
        | "float32" | "float64" | "decimal" => ParamCategory::Numerical,
        "string" | "str" | "text" => ParamCategory::String,
        _ => ParamCategory::Other,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterSpec {
    pub name: String,
    pub description: String,
    pub declared_type: String,
    pub category: ParamCategory,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub enum_values: Vec<String>,
    pub required: bool,
}

/// A named, typed field in a return schema. Object fields nest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnField {
    pub name: String,
    pub field_type: String,
    #[serde(default)]
    pub description: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub fields: Vec<ReturnField>,
}

impl ReturnField {
    fn collect<'a>(&'a self, out: &mut Vec<&'a ReturnField>) {
        out.push(self);
        for f in &self.fields {
            f.collect(out);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnSchema {
    pub fields: Vec<ReturnField>,
}

impl ReturnSchema {
    /// Every field of the tree in pre-order.
    pub fn all_fields(&self) -> Vec<&ReturnField> {
        let mut out = Vec::new();
        for f in &self.fields {
            f.collect(&mut out);
        }
        out
    }

    /// JSON-schema rendering used in prompts.
    pub fn to_json_schema(&self) -> Value {
        fn field_schema(f: &ReturnField) -> Value {
            let mut m = Map::new();
            m.insert("type".into(), Value::String(f.field_type.clone()));
            if !f.description.is_empty() {
                m.insert("description".into(), Value::String(f.description.clone()));
            }
            if !f.fields.is_empty() {
                m.insert("properties".into(), props(&f.fields));
            }
            Value::Object(m)
        }
        fn props(fields: &[ReturnField]) -> Value {
            let mut m = Map::new();
            for f in fields {
                m.insert(f.name.clone(), field_schema(f));
            }
            Value::Object(m)
        }
        serde_json::json!({ "type": "object", "properties": props(&self.fields) })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionSchema {
    pub name: String,
    pub description: String,
    pub parameters: Vec<ParameterSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub return_schema: Option<ReturnSchema>,
}

impl FunctionSchema {
    pub fn parameter(&self, name: &str) -> Option<&ParameterSpec> {
        self.parameters.iter().find(|p| p.name == name)
    }

    pub fn required_parameters(&self) -> impl Iterator<Item = &ParameterSpec> {
        self.parameters.iter().filter(|p| p.required)
    }

    /// JSON-schema style rendering of the parameters, as prompts expect.
    pub fn parameters_json(&self) -> Value {
        let mut props = Map::new();
        for p in &self.parameters {
            let mut m = Map::new();
            m.insert("type".into(), Value::String(p.declared_type.clone()));
            m.insert("description".into(), Value::String(p.description.clone()));
            if !p.enum_values.is_empty() {
                m.insert(
                    "enum".into(),
                    Value::Array(p.enum_values.iter().cloned().map(Value::String).collect()),
                );
            }
            props.insert(p.name.clone(), Value::Object(m));
        }
        let required: Vec<Value> = self
            .required_parameters()
            .map(|p| Value::String(p.name.clone()))
            .collect();
        serde_json::json!({ "type": "object", "properties": props, "required": required })
    }

    /// Full schema (name, description, parameters, returns) as one JSON value.
    pub fn to_json(&self) -> Value {
        let mut m = Map::new();
        m.insert("name".into(), Value::String(self.name.clone()));
        m.insert("description".into(), Value::String(self.description.clone()));
        m.insert("parameters".into(), self.parameters_json());
        if let Some(r) = &self.return_schema {
            m.insert("returns".into(), r.to_json_schema());
        }
        Value::Object(m)
    }
}

/// An ordered function library with lookup by (verbatim) name.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<FunctionSchema>", into = "Vec<FunctionSchema>")]
pub struct FunctionLibrary {
    functions: Vec<FunctionSchema>,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

impl From<Vec<FunctionSchema>> for FunctionLibrary {
    fn from(functions: Vec<FunctionSchema>) -> Self {
        let index = functions
            .iter()
            .enumerate()
            .map(|(i, f)| (f.name.clone(), i))
            .collect();
        FunctionLibrary { functions, index }
    }
}

impl From<FunctionLibrary> for Vec<FunctionSchema> {
    fn from(lib: FunctionLibrary) -> Self {
        lib.functions
    }
}

impl FunctionLibrary {
    pub fn new(functions: Vec<FunctionSchema>) -> Result<Self> {
        let mut seen = HashSet::new();
        for f in &functions {
            if !seen.insert(f.name.as_str()) {
                return Err(Error::DuplicateFunction(f.name.clone()));
            }
        }
        Ok(functions.into())
    }

    pub fn functions(&self) -> &[FunctionSchema] {
        &self.functions
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<&FunctionSchema> {
        self.index.get(name).map(|&i| &self.functions[i])
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, FunctionSchema> {
        self.functions.iter()
    }

    /// Counts parameters per category across the whole library.
    pub fn category_counts(&self) -> IndexMap<ParamCategory, usize> {
        let mut counts: IndexMap<ParamCategory, usize> =
            ParamCategory::ALL.iter().map(|c| (*c, 0)).collect();
        for p in self.functions.iter().flat_map(|f| &f.parameters) {
            *counts.entry(p.category).or_default() += 1;
        }
        counts
    }
}

// ---------------------------------------------------------------------------
// Library loading

#[derive(Deserialize)]
struct RawFunction {
    name: Option<String>,
    #[serde(default)]
    description: String,
    #[serde(default)]
    parameters: Option<Value>,
    #[serde(default, alias = "return_schema", alias = "response")]
    returns: Option<Value>,
}

fn declared_type_of(prop: &Value) -> Option<String> {
    let ty = prop.get("type")?;
    let base = match ty {
        Value::String(s) => s.clone(),
        Value::Array(types) => types
            .iter()
            .filter_map(Value::as_str)
            .find(|t| *t != "null")
            .unwrap_or("null")
            .to_string(),
        _ => return None,
    };
    if base == "array" {
        if let Some(items) = prop.get("items").and_then(declared_type_of) {
            return Some(format!("array of {items}"));
        }
    }
    Some(base)
}

fn literal_text(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn parse_return_fields(props: &Map<String, Value>) -> Vec<ReturnField> {
    props
        .iter()
        .map(|(name, prop)| {
            let nested = prop
                .get("properties")
                .and_then(Value::as_object)
                .or_else(|| {
                    prop.get("items")
                        .and_then(|i| i.get("properties"))
                        .and_then(Value::as_object)
                });
            ReturnField {
                name: name.clone(),
                field_type: declared_type_of(prop).unwrap_or_else(|| "object".into()),
                description: prop
                    .get("description")
                    .and_then(Value::as_str)
                    .unwrap_or_default()
                    .to_string(),
                fields: nested.map(parse_return_fields).unwrap_or_default(),
            }
        })
        .collect()
}

fn parse_function(idx: usize, raw: RawFunction) -> Result<FunctionSchema> {
    let entry = |reason: String| Error::Library {
        entry: raw_label(idx, raw.name.as_deref()),
        reason,
    };
    let name = raw
        .name
        .clone()
        .filter(|n| !n.is_empty())
        .ok_or_else(|| entry("missing function name".into()))?;

    let mut parameters = Vec::new();
    if let Some(params) = &raw.parameters {
        let props = params
            .get("properties")
            .and_then(Value::as_object)
            .ok_or_else(|| entry("parameters must be an object schema with `properties`".into()))?;
        let required: HashSet<&str> = params
            .get("required")
            .and_then(Value::as_array)
            .map(|r| r.iter().filter_map(Value::as_str).collect())
            .unwrap_or_default();
        for (pname, prop) in props {
            if pname.is_empty() {
                return Err(entry("empty parameter name".into()));
            }
            let declared_type = declared_type_of(prop)
                .filter(|t| !t.is_empty())
                .ok_or_else(|| entry(format!("parameter {pname:?} has no type")))?;
            let enum_values: Vec<String> = prop
                .get("enum")
                .and_then(Value::as_array)
                .map(|vs| vs.iter().map(literal_text).collect())
                .unwrap_or_default();
            let category = classify_parameter_type(&declared_type, &enum_values);
            parameters.push(ParameterSpec {
                name: pname.clone(),
                description: prop
                    .get("description")
                    .and_then(Value::as_str)
                    .unwrap_or_default()
                    .to_string(),
                declared_type,
                category,
                enum_values,
                required: required.contains(pname.as_str()),
            });
        }
    }

    let return_schema = raw.returns.as_ref().and_then(|r| {
        r.get("properties")
            .and_then(Value::as_object)
            .map(|props| ReturnSchema {
                fields: parse_return_fields(props),
            })
    });

    Ok(FunctionSchema {
        name,
        description: raw.description,
        parameters,
        return_schema,
    })
}

fn raw_label(idx: usize, name: Option<&str>) -> String {
    match name {
        Some(n) => format!("#{idx} ({n:?})"),
        None => format!("#{idx}"),
    }
}

/// Parses a function library from its JSON text.
pub fn parse_function_library(text: &str) -> Result<FunctionLibrary> {
    let raw: Vec<Value> = serde_json::from_str(text).map_err(|e| Error::Library {
        entry: "<document>".into(),
        reason: e.to_string(),
    })?;
    let mut functions = Vec::with_capacity(raw.len());
    for (idx, v) in raw.into_iter().enumerate() {
        let label = raw_label(idx, v.get("name").and_then(Value::as_str));
        let rf: RawFunction = serde_json::from_value(v).map_err(|e| Error::Library {
            entry: label,
            reason: e.to_string(),
        })?;
        functions.push(parse_function(idx, rf)?);
    }
    FunctionLibrary::new(functions)
}

pub fn load_function_library(path: impl AsRef<Path>) -> Result<FunctionLibrary> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_function_library(&text)
}

// ---------------------------------------------------------------------------
// Examples

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ExecutionType {
    Single,
    Parallel,
    Sequential,
    MissingParams,
    None,
}

impl ExecutionType {
    pub const ALL: [ExecutionType; 5] = [
        ExecutionType::Single,
        ExecutionType::Parallel,
        ExecutionType::Sequential,
        ExecutionType::MissingParams,
        ExecutionType::None,
    ];

    pub fn is_multi(self) -> bool {
        matches!(self, ExecutionType::Parallel | ExecutionType::Sequential)
    }
}

impl fmt::Display for ExecutionType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ExecutionType::Single => "SINGLE",
            ExecutionType::Parallel => "PARALLEL",
            ExecutionType::Sequential => "SEQUENTIAL",
            ExecutionType::MissingParams => "MISSING_PARAMS",
            ExecutionType::None => "NONE",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Invocation {
    pub function_name: String,
    pub arguments: Map<String, Value>,
    pub order_index: usize,
}

impl Invocation {
    /// `name(a=1, b="x")` form used by the invocation-construction prompts.
    pub fn call_string(&self) -> String {
        let args: Vec<String> = self
            .arguments
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect();
        format!("{}({})", self.function_name, args.join(", "))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgeRecord {
    pub stage: String,
    pub valid: bool,
    pub reasoning: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiversityRank {
    /// Round (1-based) in which the selected query was generated.
    pub round: usize,
    /// Position of the selected query in the fused ordering (1-based).
    pub fused_rank: usize,
    pub rrf_score: f64,
    pub metric_ranks: IndexMap<String, usize>,
    /// Number of judge-valid candidates the selection was made from.
    pub pool_size: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoneKind {
    Vague,
    NoApi,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExampleMetadata {
    /// Generation attempt counter at which this example was produced.
    pub generation_round: u64,
    /// Position in the serialized acceptance/commit order.
    pub commit_index: u64,
    pub rng_seed: u64,
    #[serde(default)]
    pub judge_verdicts: Vec<JudgeRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diversity_rank: Option<DiversityRank>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub missing_parameters: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diverse_function: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub none_kind: Option<NoneKind>,
    /// Set when distractor validation rewrote the execution type.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub original_execution_type: Option<ExecutionType>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedExample {
    pub id: String,
    pub execution_type: ExecutionType,
    pub query: String,
    pub target_invocations: Vec<Invocation>,
    pub return_values: Vec<Value>,
    pub candidate_functions: Vec<String>,
    pub metadata: ExampleMetadata,
}

impl GeneratedExample {
    fn violation(&self, reason: impl Into<String>) -> Error {
        Error::InvalidExample {
            id: self.id.clone(),
            reason: reason.into(),
        }
    }

    /// Structural invariants that hold without a library.
    pub fn validate(&self) -> Result<()> {
        if self.id.is_empty() {
            return Err(self.violation("empty id"));
        }
        if self.query.trim().is_empty() && self.execution_type != ExecutionType::None {
            return Err(self.violation("empty query"));
        }
        let n = self.target_invocations.len();
        match self.execution_type {
            ExecutionType::None => {
                if n != 0 {
                    return Err(self.violation("NONE example with target invocations"));
                }
            }
            ExecutionType::Single | ExecutionType::MissingParams => {
                if n != 1 {
                    return Err(self.violation(format!("expected 1 invocation, found {n}")));
                }
            }
            ExecutionType::Parallel => {
                if n < 2 {
                    return Err(self.violation("PARALLEL needs at least 2 invocations"));
                }
                if self.target_invocations.iter().any(|i| i.order_index != 0) {
                    return Err(self.violation("PARALLEL invocations must have order_index 0"));
                }
            }
            ExecutionType::Sequential => {
                if n < 2 {
                    return Err(self.violation("SEQUENTIAL needs at least 2 invocations"));
                }
                for (i, inv) in self.target_invocations.iter().enumerate() {
                    if inv.order_index != i {
                        return Err(self.violation("SEQUENTIAL order_index must be consecutive from 0"));
                    }
                }
            }
        }
        if self.execution_type != ExecutionType::Parallel
            && self.execution_type != ExecutionType::Sequential
            && n == 1
            && self.target_invocations[0].order_index != 0
        {
            return Err(self.violation("single invocation must have order_index 0"));
        }
        let expected_returns = if self.execution_type == ExecutionType::Sequential {
            n - 1
        } else {
            0
        };
        if self.return_values.len() != expected_returns {
            return Err(self.violation(format!(
                "expected {expected_returns} return values, found {}",
                self.return_values.len()
            )));
        }
        let candidates: HashSet<&str> = self.candidate_functions.iter().map(String::as_str).collect();
        if candidates.len() != self.candidate_functions.len() {
            return Err(self.violation("duplicate candidate function"));
        }
        for inv in &self.target_invocations {
            if !candidates.contains(inv.function_name.as_str()) {
                return Err(self.violation(format!(
                    "target {:?} missing from candidate_functions",
                    inv.function_name
                )));
            }
        }
        let has_sentinel = self
            .target_invocations
            .iter()
            .flat_map(|i| i.arguments.values())
            .any(|v| v.as_str() == Some(MISSING_SENTINEL));
        if has_sentinel && self.execution_type != ExecutionType::MissingParams {
            return Err(self.violation("missing-parameter sentinel outside MISSING_PARAMS"));
        }
        Ok(())
    }

    /// Invariants that need the function library: argument names and candidates resolve.
    pub fn validate_against(&self, library: &FunctionLibrary) -> Result<()> {
        self.validate()?;
        for name in &self.candidate_functions {
            if library.get(name).is_none() {
                return Err(self.violation(format!("unknown candidate function {name:?}")));
            }
        }
        for inv in &self.target_invocations {
            let schema = library
                .get(&inv.function_name)
                .ok_or_else(|| self.violation(format!("unknown function {:?}", inv.function_name)))?;
            for arg in inv.arguments.keys() {
                if schema.parameter(arg).is_none() {
                    return Err(self.violation(format!(
                        "argument {arg:?} not in schema of {:?}",
                        inv.function_name
                    )));
                }
            }
            if self.execution_type == ExecutionType::MissingParams {
                let omitted = inv
                    .arguments
                    .values()
                    .filter(|v| v.as_str() == Some(MISSING_SENTINEL))
                    .count();
                if omitted == 0 {
                    return Err(self.violation("MISSING_PARAMS without an omitted parameter"));
                }
            }
        }
        Ok(())
    }
}

/// Serializes one example to its canonical single-line form.
pub fn example_to_line(example: &GeneratedExample) -> Result<String> {
    Ok(serde_json::to_string(example)?)
}

/// Writes examples as JSONL; each example is validated first.
pub fn write_dataset(examples: &[GeneratedExample], path: impl AsRef<Path>) -> Result<usize> {
    let path = path.as_ref();
    let mut buf = String::new();
    for ex in examples {
        ex.validate()?;
        buf.push_str(&example_to_line(ex)?);
        buf.push('\n');
    }
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(buf.as_bytes()).map_err(|e| Error::io(path, e))?;
    Ok(examples.len())
}

pub fn parse_dataset_line(line_no: usize, line: &str) -> Result<GeneratedExample> {
    let ex: GeneratedExample = serde_json::from_str(line).map_err(|e| Error::DatasetLine {
        line: line_no,
        reason: e.to_string(),
    })?;
    ex.validate().map_err(|e| Error::DatasetLine {
        line: line_no,
        reason: e.to_string(),
    })?;
    Ok(ex)
}

pub fn read_dataset(path: impl AsRef<Path>) -> Result<Vec<GeneratedExample>> {
    read_dataset_prefix(path, usize::MAX)
}

/// Reads at most `limit` examples and ignores whatever follows, such as a
/// line torn by an interrupted write.
pub fn read_dataset_prefix(path: impl AsRef<Path>, limit: usize) -> Result<Vec<GeneratedExample>> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        if out.len() >= limit {
            break;
        }
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(parse_dataset_line(i + 1, &line)?);
    }
    Ok(out)
}
