//! Deterministic inputs shared by the benchmarks.

const OPENERS: &[&str] = &["Find", "Show me", "Could you list", "I need", "Look up", "Please get"];
const THINGS: &[&str] = &[
    "hotels near the old harbour",
    "cheap flights to Lisbon",
    "the weather this weekend",
    "vegan restaurants that open late",
    "museums with free entry on Sundays",
    "the exchange rate for yen",
    "a table for four tonight",
    "ferry times to the islands",
];
const TAILS: &[&str] = &["", " please", " for next Friday", " if possible", " before noon", " with reviews"];

/// `n` query-like strings with moderate lexical overlap.
pub fn queries(n: usize) -> Vec<String> {
    (0..n)
        .map(|i| {
            format!(
                "{} {}{}.",
                OPENERS[i % OPENERS.len()],
                THINGS[(i * 7 + i / 3) % THINGS.len()],
                TAILS[(i * 5 + 1) % TAILS.len()]
            )
        })
        .collect()
}

/// `n` argument values spread over `regions` clusters of near-duplicates.
pub fn region_values(n: usize, regions: usize) -> Vec<String> {
    (0..n).map(|i| format!("region{} site{}", i % regions, i)).collect()
}
