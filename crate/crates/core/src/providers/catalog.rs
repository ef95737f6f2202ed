//! Every signature the generation engine sends to a chat model.
//!
//! Field names and their order are part of the wire contract; descriptions
//! and objectives are free to change.

use std::sync::LazyLock;

use super::signature::Signature;

fn sig(name: &str, objective: &str, inputs: &[(&str, &str)], outputs: &[(&str, &str)]) -> Signature {
    Signature::new(name, objective, inputs, outputs).expect("catalog signatures are well formed")
}

const REASONING: (&str, &str) = ("reasoning", "Brief analysis supporting the answer.");
const VERDICT_VALID: (&str, &str) = ("is_valid", "YES or NO.");

const GEN_INPUTS: [(&str, &str); 6] = [
    ("parameter_name", "Parameter to fill."),
    ("parameter_description", "What the parameter means."),
    ("parameter_type", "Declared type."),
    ("function_name", "Function that owns the parameter."),
    ("function_description", "What the function does."),
    ("other_parameter_values", "JSON object of values already chosen for this call."),
];
const EXISTING: (&str, &str) = ("existing_values", "Values already used for this kind of parameter.");
const GROUP_CONTEXT: (&str, &str) = ("parameter_group_context", "Other parameters sharing this meaning.");
const FAILURES: (&str, &str) = ("previous_failures", "Why earlier attempts were rejected, or None.");
const GUIDANCE: (&str, &str) = ("dataset_guidance", "Current advice for steering away from repetitive phrasing.");
const ATTEMPTS: (&str, &str) = ("previous_attempts", "Earlier candidates with their verdicts and diversity ranks.");

fn with(base: &[(&'static str, &'static str)], extra: &[(&'static str, &'static str)]) -> Vec<(&'static str, &'static str)> {
    base.iter().chain(extra).copied().collect()
}

fn queries_out() -> Vec<(&'static str, &'static str)> {
    vec![
        REASONING,
        ("query_1", "First candidate request."),
        ("query_2", "Second candidate request."),
        ("query_3", "Third candidate request."),
        ("query_4", "Fourth candidate request."),
        ("query_5", "Fifth candidate request."),
    ]
}

pub static VALIDATE_SEQUENTIAL_SCHEMA_COMPATIBILITY: LazyLock<Signature> = LazyLock::new(|| {
    sig(
        "ValidateSequentialSchemaCompatibility",
        "Decide from the schemas alone whether each function can consume what the previous one returns.",
        &[("api_schemas", "JSON array of schemas in chain order.")],
        &[REASONING, ("is_compatible", "YES or NO.")],
    )
});

pub static GENERATE_MULTIPLE_STRING_PARAMETERS: LazyLock<Signature> = LazyLock::new(|| {
    sig(
        "GenerateMultipleStringParameters",
        "Propose many realistic, mutually different string values for the parameter.",
        &with(&GEN_INPUTS, &[EXISTING, GROUP_CONTEXT, ("num_candidates", "How many values to return."), FAILURES]),
        &[REASONING, ("generated_values", "JSON list of strings.")],
    )
});

pub static GENERATE_MULTIPLE_NUMERICAL_PARAMETERS: LazyLock<Signature> = LazyLock::new(|| {
    sig(
        "GenerateMultipleNumericalParameters",
        "Propose many realistic, mutually different numeric values for the parameter.",
        &with(&GEN_INPUTS, &[EXISTING, GROUP_CONTEXT, ("num_candidates", "How many values to return."), FAILURES]),
        &[REASONING, ("generated_values", "JSON list of numbers.")],
    )
});

fn sequential_cohesive_inputs() -> Vec<(&'static str, &'static str)> {
    with(
        &GEN_INPUTS,
        &[
            ("return_value", "JSON value this call is expected to return."),
            ("next_api_parameters", "JSON arguments of the following call."),
            ("later_api_parameters", "JSON arguments of every later call."),
            EXISTING,
            GROUP_CONTEXT,
            FAILURES,
        ],
    )
}

pub static GENERATE_SEQUENTIAL_COHESIVE_STRING_PARAMETER: LazyLock<Signature> = LazyLock::new(|| {
    sig(
        "GenerateSequentialCohesiveStringParameter",
        "Pick a string value consistent with this call's return value and the calls after it.",
        &sequential_cohesive_inputs(),
        &[REASONING, ("generated_value", "The value only.")],
    )
});

pub static GENERATE_SEQUENTIAL_COHESIVE_NUMERICAL_PARAMETER: LazyLock<Signature> = LazyLock::new(|| {
    sig(
        "GenerateSequentialCohesiveNumericalParameter",
        "Pick a numeric value consistent with this call's return value and the calls after it.",
        &sequential_cohesive_inputs(),
        &[REASONING, ("generated_value", "The number only.")],
    )
});

pub static GENERATE_SEQUENTIAL_COHESIVE_OTHER_PARAMETER: LazyLock<Signature> = LazyLock::new(|| {
    sig(
        "GenerateSequentialCohesiveOtherParameter",
        "Pick a structured value consistent with this call's return value and the calls after it.",
        &sequential_cohesive_inputs(),
        &[("generated_value", "JSON value.")],
    )
});

pub static GENERATE_RETURN_VALUE: LazyLock<Signature> = LazyLock::new(|| {
    sig(
        "GenerateReturnValue",
        "Invent a plausible return value that the next call in the chain can use.",
        &[
            ("api_name", "Function producing the value."),
            ("api_description", "What it does."),
            ("return_type_schema", "JSON schema of the result."),
            ("next_api_name", "Function that consumes the result."),
            ("next_api_description", "What that function does."),
            ("next_api_parameters_schema", "Its parameter schema."),
            ("next_api_parameters_values", "Its chosen arguments."),
            FAILURES,
        ],
        &[REASONING, ("return_value", "JSON value matching the schema.")],
    )
});

fn parallel_cohesive_inputs() -> Vec<(&'static str, &'static str)> {
    with(
        &GEN_INPUTS,
        &[
            ("parallel_context_parameters", "JSON arguments of the other calls issued together with this one."),
            EXISTING,
            GROUP_CONTEXT,
            FAILURES,
        ],
    )
}

pub static GENERATE_COHESIVE_STRING_PARAMETER: LazyLock<Signature> = LazyLock::new(|| {
    sig(
        "GenerateCohesiveStringParameter",
        "Pick a string value that fits alongside the other calls made together with this one.",
        &parallel_cohesive_inputs(),
        &[REASONING, ("generated_value", "The value only.")],
    )
});

pub static GENERATE_COHESIVE_NUMERICAL_PARAMETER: LazyLock<Signature> = LazyLock::new(|| {
    sig(
        "GenerateCohesiveNumericalParameter",
        "Pick a numeric value that fits alongside the other calls made together with this one.",
        &parallel_cohesive_inputs(),
        &[REASONING, ("generated_value", "The number only.")],
    )
});

pub static GENERATE_COHESIVE_OTHER_PARAMETER: LazyLock<Signature> = LazyLock::new(|| {
    sig(
        "GenerateCohesiveOtherParameter",
        "Pick a structured value that fits alongside the other calls made together with this one.",
        &parallel_cohesive_inputs(),
        &[("generated_value", "JSON value.")],
    )
});

pub static GENERATE_OTHER_PARAMETER: LazyLock<Signature> = LazyLock::new(|| {
    sig(
        "GenerateOtherParameter",
        "Produce one realistic structured value for the parameter.",
        &with(&GEN_INPUTS, &[EXISTING, GROUP_CONTEXT, FAILURES]),
        &[("generated_value", "JSON value.")],
    )
});

pub static PARAMETER_SET_VALIDATOR: LazyLock<Signature> = LazyLock::new(|| {
    sig(
        "ParameterSetValidator",
        "Check that the chosen arguments are type-correct and do not contradict each other.",
        &[
            ("api_name", "Function name."),
            ("api_description", "What it does."),
            ("full_parameter_schema", "JSON parameter schema."),
            ("selected_parameters", "JSON object of chosen arguments."),
        ],
        &[REASONING, VERDICT_VALID],
    )
});

pub static PARTIAL_PARAMETER_SET_VALIDATOR: LazyLock<Signature> = LazyLock::new(|| {
    sig(
        "PartialParameterSetValidator",
        "Check the supplied arguments for consistency; absent required arguments are expected and fine.",
        &[
            ("api_name", "Function name."),
            ("api_description", "What it does."),
            ("full_parameter_schema", "JSON parameter schema."),
            ("provided_parameters", "JSON object of the arguments that are present."),
        ],
        &[REASONING, VERDICT_VALID],
    )
});

pub static VALIDATE_RETURN_VALUE: LazyLock<Signature> = LazyLock::new(|| {
    sig(
        "ValidateReturnValue",
        "Check that the return value fits its schema, its call, and the next call's needs.",
        &[
            ("api_name", "Function name."),
            ("api_description", "What it does."),
            ("return_type_schema", "JSON schema of the result."),
            ("return_value", "Proposed JSON result."),
            ("api_parameters", "Arguments of this call."),
            ("next_api_name", "Consuming function."),
            ("next_api_description", "What it does."),
            ("next_api_parameters", "Its arguments."),
        ],
        &[REASONING, VERDICT_VALID],
    )
});

pub static VALIDATE_SEQUENTIAL_CHAIN: LazyLock<Signature> = LazyLock::new(|| {
    sig(
        "ValidateSequentialChain",
        "Accept the chain only if every later call genuinely depends on an earlier result.",
        &[
            ("api_schemas", "JSON array of schemas in order."),
            ("parameters_list", "JSON array of argument objects in order."),
            ("return_values_list", "JSON array of intermediate results."),
        ],
        &[REASONING, VERDICT_VALID],
    )
});

pub static NO_API_QUERY_GENERATOR: LazyLock<Signature> = LazyLock::new(|| {
    sig(
        "NoAPIQueryGenerator",
        "Write varied user requests that need no tool at all.",
        &[GUIDANCE, ATTEMPTS],
        &queries_out(),
    )
});

pub static SEQUENTIAL_QUERY_GENERATOR: LazyLock<Signature> = LazyLock::new(|| {
    sig(
        "SequentialQueryGenerator",
        "Write varied user requests whose answer requires the given calls in order, stated as a goal.",
        &[
            ("api_schemas", "JSON array of schemas in order."),
            ("target_parameters_list", "JSON array of argument objects."),
            ("return_values_list", "JSON array of intermediate results."),
            GUIDANCE,
            ATTEMPTS,
        ],
        &queries_out(),
    )
});

pub static PARALLEL_QUERY_GENERATOR: LazyLock<Signature> = LazyLock::new(|| {
    sig(
        "ParallelQueryGenerator",
        "Write varied user requests that call for all of the given calls at once.",
        &[
            ("api_schemas", "JSON array of schemas."),
            ("target_parameters_list", "JSON array of argument objects."),
            GUIDANCE,
            ATTEMPTS,
        ],
        &queries_out(),
    )
});

pub static MULTI_QUERY_GENERATOR: LazyLock<Signature> = LazyLock::new(|| {
    sig(
        "MultiQueryGenerator",
        "Write varied user requests that are answered by exactly this call.",
        &[
            ("api_schema", "JSON schema of the function."),
            ("target_parameters", "JSON object of arguments the request must imply."),
            GUIDANCE,
            ATTEMPTS,
        ],
        &queries_out(),
    )
});

pub static MISSING_PARAMS_QUERY_GENERATOR: LazyLock<Signature> = LazyLock::new(|| {
    sig(
        "MissingParamsQueryGenerator",
        "Write varied user requests that clearly need this function but omit the listed arguments.",
        &[
            ("api_schema", "JSON schema of the function."),
            ("provided_parameters", "Arguments the request should convey."),
            ("missing_parameters", "Required arguments the request must not reveal."),
            GUIDANCE,
            ATTEMPTS,
        ],
        &queries_out(),
    )
});

pub static SEQUENTIAL_QUERY_JUDGE: LazyLock<Signature> = LazyLock::new(|| {
    sig(
        "SequentialQueryJudge",
        "Decide whether the request justifies exactly this ordered chain of calls.",
        &[
            ("query", "Candidate request."),
            ("api_schemas", "JSON array of schemas in order."),
            ("target_parameters_list", "JSON array of argument objects."),
            ("return_values_list", "JSON array of intermediate results."),
        ],
        &[REASONING, ("is_reasonable", "YES or NO.")],
    )
});

pub static PARALLEL_QUERY_JUDGE: LazyLock<Signature> = LazyLock::new(|| {
    sig(
        "ParallelQueryJudge",
        "Decide whether the request alone justifies every one of these independent calls.",
        &[
            ("query", "Candidate request."),
            ("api_schemas", "JSON array of schemas."),
            ("target_parameters_list", "JSON array of argument objects."),
        ],
        &[REASONING, ("is_reasonable", "YES or NO.")],
    )
});

pub static API_QUERY_JUDGE: LazyLock<Signature> = LazyLock::new(|| {
    sig(
        "APIQueryJudge",
        "Decide whether the request is answered by this call with these arguments.",
        &[
            ("query", "Candidate request."),
            ("api_schema", "JSON schema."),
            ("target_parameters", "JSON object of arguments."),
        ],
        &[REASONING, ("is_reasonable", "YES or NO.")],
    )
});

pub static MISSING_PARAMS_QUERY_JUDGE: LazyLock<Signature> = LazyLock::new(|| {
    sig(
        "MissingParamsQueryJudge",
        "Decide whether the request needs this function while leaving the listed arguments undeterminable.",
        &[
            ("query", "Candidate request."),
            ("api_schema", "JSON schema."),
            ("provided_parameters", "Arguments the request conveys."),
            ("missing_parameters", "Required arguments that should be absent."),
        ],
        &[REASONING, ("is_reasonable", "YES or NO.")],
    )
});

const BATCH_QUERIES: (&str, &str) = ("queries", "JSON array of candidate requests.");
const BATCH_VERDICTS: (&str, &str) = ("is_reasonable", "JSON array of YES/NO strings, one per request, same order.");

pub static BATCH_SEQUENTIAL_QUERY_JUDGE: LazyLock<Signature> = LazyLock::new(|| {
    sig(
        "BatchSequentialQueryJudge",
        "Judge each request independently against the ordered chain of calls.",
        &[
            BATCH_QUERIES,
            ("api_schemas", "JSON array of schemas in order."),
            ("target_parameters_list", "JSON array of argument objects."),
            ("return_values_list", "JSON array of intermediate results."),
        ],
        &[REASONING, BATCH_VERDICTS],
    )
});

pub static BATCH_PARALLEL_QUERY_JUDGE: LazyLock<Signature> = LazyLock::new(|| {
    sig(
        "BatchParallelQueryJudge",
        "Judge each request independently against the set of simultaneous calls.",
        &[
            BATCH_QUERIES,
            ("api_schemas", "JSON array of schemas."),
            ("target_parameters_list", "JSON array of argument objects."),
        ],
        &[REASONING, BATCH_VERDICTS],
    )
});

pub static BATCH_API_QUERY_JUDGE: LazyLock<Signature> = LazyLock::new(|| {
    sig(
        "BatchAPIQueryJudge",
        "Judge each request independently against the single call.",
        &[BATCH_QUERIES, ("api_schema", "JSON schema."), ("target_parameters", "JSON object of arguments.")],
        &[REASONING, BATCH_VERDICTS],
    )
});

pub static BATCH_MISSING_PARAMS_QUERY_JUDGE: LazyLock<Signature> = LazyLock::new(|| {
    sig(
        "BatchMissingParamsQueryJudge",
        "Judge each request independently for needing the function while omitting the listed arguments.",
        &[
            BATCH_QUERIES,
            ("api_schema", "JSON schema."),
            ("provided_parameters", "Arguments the request conveys."),
            ("missing_parameters", "Required arguments that should be absent."),
        ],
        &[REASONING, BATCH_VERDICTS],
    )
});

pub static DATASET_PATTERN_ANALYSIS: LazyLock<Signature> = LazyLock::new(|| {
    sig(
        "DatasetPatternAnalysis",
        "Point out where the sampled requests repeat themselves in topic, tone, form or framing.",
        &[
            ("dataset_sample", "Newline-separated sample of requests."),
            ("diversity_context", "Current metric readings, if any."),
        ],
        &[REASONING, ("pattern_analysis", "Concise list of repetitive patterns.")],
    )
});

pub static DIVERSITY_GUIDANCE_GENERATION: LazyLock<Signature> = LazyLock::new(|| {
    sig(
        "DiversityGuidanceGeneration",
        "Turn the pattern report into short, concrete instructions for the next requests.",
        &[
            ("dataset_sample", "Newline-separated sample of requests."),
            ("pattern_analysis", "Report of repetitive patterns."),
        ],
        &[REASONING, ("diversity_guidance", "Actionable instructions.")],
    )
});

const SCORES_OUT: (&str, &str) = (
    "scores",
    "JSON array aligned with the input, each {\"api_name\": str, \"score\": 1-5, \"reasoning\": str}.",
);

pub static BATCH_API_RELEVANCE_SCORER: LazyLock<Signature> = LazyLock::new(|| {
    sig(
        "BatchAPIRelevanceScorer",
        "Rate how well each candidate function could serve the request, from 1 (unrelated) to 5 (exact fit).",
        &[
            ("query", "User request."),
            ("apis", "JSON array of candidate functions."),
            ("target_api", "Name of the intended function."),
        ],
        &[REASONING, SCORES_OUT],
    )
});

pub static PARALLEL_API_RELEVANCE_SCORER: LazyLock<Signature> = LazyLock::new(|| {
    sig(
        "ParallelAPIRelevanceScorer",
        "Rate how well each candidate could serve the request next to the intended functions, from 1 to 5.",
        &[
            ("query", "User request."),
            ("apis", "JSON array of candidate functions."),
            ("target_apis", "JSON array of intended function names."),
        ],
        &[REASONING, SCORES_OUT],
    )
});

pub static CONSTRUCT_SEQUENTIAL_INVOCATION: LazyLock<Signature> = LazyLock::new(|| {
    sig(
        "ConstructSequentialInvocation",
        "Write the next call needed to satisfy the request, or nothing if the request is already served.",
        &[
            ("query", "User request."),
            ("available_apis", "JSON array of schemas."),
            ("invocations_up_to_this_point", "Calls made so far."),
            ("return_values_up_to_this_point", "Their results."),
        ],
        &[REASONING, ("next_api", "One call as name(arg=value, ...), names copied exactly, or ''.")],
    )
});

pub static VALIDATE_SEQUENTIAL_INVOCATION: LazyLock<Signature> = LazyLock::new(|| {
    sig(
        "ValidateSequentialInvocation",
        "Check that the ordered calls answer the request with each argument traceable to it or an earlier result.",
        &[
            ("query", "User request."),
            ("invocation_apis", "Calls in order."),
            ("api_schemas", "Their schemas."),
            ("return_values_list", "Their results."),
        ],
        &[REASONING, VERDICT_VALID],
    )
});

pub static CONSTRUCT_PARALLEL_INVOCATION: LazyLock<Signature> = LazyLock::new(|| {
    sig(
        "ConstructParallelInvocation",
        "Write the set of simultaneous calls that satisfies the request.",
        &[("query", "User request."), ("available_apis", "JSON array of schemas.")],
        &[REASONING, ("invocation_apis", "[name(arg=value, ...), ...] with names copied exactly, or [].")],
    )
});

pub static VALIDATE_PARALLEL_INVOCATION: LazyLock<Signature> = LazyLock::new(|| {
    sig(
        "ValidateParallelInvocation",
        "Check that the simultaneous calls answer the request with every argument taken from the request.",
        &[
            ("query", "User request."),
            ("invocation_apis", "Calls."),
            ("api_schemas", "Their schemas."),
        ],
        &[REASONING, VERDICT_VALID],
    )
});

pub static TOOL_CALL_EQUIVALENCE: LazyLock<Signature> = LazyLock::new(|| {
    sig(
        "ToolCallEquivalence",
        "Decide whether the predicted call would have the same effect as the reference call.",
        &[
            ("user_query", "User request."),
            ("tool_schema", "JSON schema of the tool."),
            ("ground_truth_call", "Reference call as JSON."),
            ("predicted_call", "Predicted call as JSON."),
        ],
        &[REASONING, ("equivalent", "YES or NO.")],
    )
});

/// All catalogue entries.
pub fn all() -> Vec<&'static Signature> {
    vec![
        &*VALIDATE_SEQUENTIAL_SCHEMA_COMPATIBILITY,
        &*GENERATE_MULTIPLE_STRING_PARAMETERS,
        &*GENERATE_MULTIPLE_NUMERICAL_PARAMETERS,
        &*GENERATE_SEQUENTIAL_COHESIVE_STRING_PARAMETER,
        &*GENERATE_SEQUENTIAL_COHESIVE_NUMERICAL_PARAMETER,
        &*GENERATE_SEQUENTIAL_COHESIVE_OTHER_PARAMETER,
        &*GENERATE_RETURN_VALUE,
        &*GENERATE_COHESIVE_STRING_PARAMETER,
        &*GENERATE_COHESIVE_NUMERICAL_PARAMETER,
        &*GENERATE_COHESIVE_OTHER_PARAMETER,
        &*GENERATE_OTHER_PARAMETER,
        &*PARAMETER_SET_VALIDATOR,
        &*PARTIAL_PARAMETER_SET_VALIDATOR,
        &*VALIDATE_RETURN_VALUE,
        &*VALIDATE_SEQUENTIAL_CHAIN,
        &*NO_API_QUERY_GENERATOR,
        &*SEQUENTIAL_QUERY_GENERATOR,
        &*PARALLEL_QUERY_GENERATOR,
        &*MULTI_QUERY_GENERATOR,
        &*MISSING_PARAMS_QUERY_GENERATOR,
        &*SEQUENTIAL_QUERY_JUDGE,
        &*PARALLEL_QUERY_JUDGE,
        &*API_QUERY_JUDGE,
        &*MISSING_PARAMS_QUERY_JUDGE,
        &*BATCH_SEQUENTIAL_QUERY_JUDGE,
        &*BATCH_PARALLEL_QUERY_JUDGE,
        &*BATCH_API_QUERY_JUDGE,
        &*BATCH_MISSING_PARAMS_QUERY_JUDGE,
        &*DATASET_PATTERN_ANALYSIS,
        &*DIVERSITY_GUIDANCE_GENERATION,
        &*BATCH_API_RELEVANCE_SCORER,
        &*PARALLEL_API_RELEVANCE_SCORER,
        &*CONSTRUCT_SEQUENTIAL_INVOCATION,
        &*VALIDATE_SEQUENTIAL_INVOCATION,
        &*CONSTRUCT_PARALLEL_INVOCATION,
        &*VALIDATE_PARALLEL_INVOCATION,
        &*TOOL_CALL_EQUIVALENCE,
    ]
}

pub fn by_name(name: &str) -> Option<&'static Signature> {
    all().into_iter().find(|s| s.name == name)
}
