//! Syntactic-shape metrics over a pluggable analyzer.
//!
//! The default [`ShallowChunker`] is rule based: it tags tokens from a small
//! lexicon plus suffix rules, then brackets the tags into noun, verb,
//! prepositional and wh- chunks under one `S` node per sentence.

use std::collections::HashMap;
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::text::{sentences, tokenize};

use super::cluster::entropy_bits;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Tree {
    pub label: String,
    pub children: Vec<Tree>,
}

impl Tree {
    pub fn leaf(label: impl Into<String>) -> Self {
        Tree {
            label: label.into(),
            children: Vec::new(),
        }
    }

    pub fn node(label: impl Into<String>, children: Vec<Tree>) -> Self {
        Tree {
            label: label.into(),
            children,
        }
    }

    pub fn size(&self) -> usize {
        1 + self.children.iter().map(Tree::size).sum::<usize>()
    }

    /// Bracketed form, e.g. `(S(NP(DET)(NOUN))(VP(VERB)))`.
    pub fn shape(&self) -> String {
        let mut s = String::new();
        self.write_shape(&mut s);
        s
    }

    fn write_shape(&self, out: &mut String) {
        let _ = write!(out, "({}", self.label);
        for c in &self.children {
            c.write_shape(out);
        }
        out.push(')');
    }
}

pub trait SyntaxAnalyzer: Send + Sync {
    /// One rooted tree per document.
    fn parse(&self, text: &str) -> Tree;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Tag {
    Det,
    Pron,
    Prep,
    Conj,
    Aux,
    Wh,
    Adv,
    Verb,
    Adj,
    Num,
    Noun,
}

impl Tag {
    fn symbol(self) -> &'static str {
        match self {
            Tag::Det => "DET",
            Tag::Pron => "PRON",
            Tag::Prep => "PREP",
            Tag::Conj => "CONJ",
            Tag::Aux => "AUX",
            Tag::Wh => "WH",
            Tag::Adv => "ADV",
            Tag::Verb => "VERB",
            Tag::Adj => "ADJ",
            Tag::Num => "NUM",
            Tag::Noun => "NOUN",
        }
    }

    fn nominal(self) -> bool {
        matches!(self, Tag::Det | Tag::Pron | Tag::Adj | Tag::Num | Tag::Noun)
    }

    fn verbal(self) -> bool {
        matches!(self, Tag::Aux | Tag::Verb | Tag::Adv)
    }
}

const DETERMINERS: &[&str] = &[
    "a", "an", "the", "this", "that", "these", "those", "my", "your", "our", "their", "his", "her",
    "its", "some", "any", "each", "every", "no", "all", "another", "both", "few", "several",
];
const PRONOUNS: &[&str] = &[
    "i", "you", "he", "she", "it", "we", "they", "me", "him", "us", "them", "myself", "yourself",
    "something", "anything", "everything", "someone", "anyone", "everyone", "one",
];
const PREPOSITIONS: &[&str] = &[
    "in", "on", "at", "for", "from", "to", "with", "by", "about", "of", "into", "over", "under",
    "near", "between", "during", "after", "before", "through", "without", "within", "across",
    "around", "per", "via", "than", "like",
];
const CONJUNCTIONS: &[&str] = &[
    "and", "or", "but", "so", "because", "if", "while", "although", "then", "also", "plus",
];
const AUXILIARIES: &[&str] = &[
    "is", "are", "was", "were", "be", "been", "being", "am", "do", "does", "did", "have", "has",
    "had", "can", "could", "would", "should", "will", "may", "might", "must", "shall", "s", "m",
    "re", "ll", "d", "t", "not",
];
const WH_WORDS: &[&str] = &["what", "which", "who", "whom", "whose", "where", "when", "why", "how"];
const VERBS: &[&str] = &[
    "find", "get", "show", "tell", "give", "book", "make", "check", "list", "send", "search",
    "look", "need", "want", "know", "help", "plan", "convert", "estimate", "fetch", "provide",
    "create", "compare", "recommend", "suggest", "calculate", "translate", "describe", "explain",
    "imagine", "let", "see", "pull", "grab", "retrieve", "set", "keep", "take", "bring", "go",
    "run", "use", "try", "play", "buy", "pay", "order", "reserve", "schedule", "track", "share",
    "write", "read", "say", "put", "add", "remove", "update", "think", "wonder", "mind", "hope",
    "like", "love", "wish", "visit", "travel", "cancel", "confirm", "summarize", "analyze", "ask",
];
const ADVERBS: &[&str] = &[
    "please", "now", "just", "also", "very", "really", "quickly", "maybe", "soon", "today",
    "tomorrow", "tonight", "here", "there", "again", "still", "even", "only", "too", "ever",
];

fn tag_token(tok: &str, first: bool) -> Tag {
    let has = |list: &[&str]| list.contains(&tok);
    if tok.chars().all(|c| c.is_ascii_digit()) {
        return Tag::Num;
    }
    if has(WH_WORDS) {
        return Tag::Wh;
    }
    if has(DETERMINERS) {
        return Tag::Det;
    }
    if has(PRONOUNS) {
        return Tag::Pron;
    }
    if has(AUXILIARIES) {
        return Tag::Aux;
    }
    if has(CONJUNCTIONS) {
        return Tag::Conj;
    }
    if has(PREPOSITIONS) {
        return Tag::Prep;
    }
    if has(ADVERBS) {
        return Tag::Adv;
    }
    if has(VERBS) {
        return Tag::Verb;
    }
    let n = tok.len();
    if n > 4 && tok.ends_with("ly") {
        return Tag::Adv;
    }
    if n > 4 && (tok.ends_with("ing") || tok.ends_with("ed")) {
        return Tag::Verb;
    }
    if n > 4
        && ["ous", "ful", "ive", "able", "ible", "al", "ic", "less", "est", "ish"]
            .iter()
            .any(|s| tok.ends_with(s))
    {
        return Tag::Adj;
    }
    // Sentence-initial unknown words in requests are usually imperatives.
    if first && n > 2 && !tok.ends_with('s') {
        return Tag::Verb;
    }
    Tag::Noun
}

/// Leaves of a noun phrase. A phrase ending in an adjective is headed by it,
/// so that word is read as the noun ("the capital").
fn np_leaves(tags: &[Tag]) -> Vec<Tree> {
    let mut v: Vec<Tree> = tags.iter().map(|t| Tree::leaf(t.symbol())).collect();
    if tags.last() == Some(&Tag::Adj) {
        *v.last_mut().unwrap() = Tree::leaf(Tag::Noun.symbol());
    }
    v
}

fn chunk(tags: &[Tag]) -> Vec<Tree> {
    let leaves = |ts: &[Tag]| ts.iter().map(|t| Tree::leaf(t.symbol())).collect::<Vec<_>>();
    let mut out = Vec::new();
    let mut i = 0;
    while i < tags.len() {
        let t = tags[i];
        if t.nominal() {
            let j = i + tags[i..].iter().take_while(|t| t.nominal()).count();
            out.push(Tree::node("NP", np_leaves(&tags[i..j])));
            i = j;
        } else if t.verbal() {
            let j = i + tags[i..].iter().take_while(|t| t.verbal()).count();
            out.push(Tree::node("VP", leaves(&tags[i..j])));
            i = j;
        } else if t == Tag::Prep {
            let j = i + 1 + tags[i + 1..].iter().take_while(|t| t.nominal()).count();
            let mut kids = vec![Tree::leaf("PREP")];
            if j > i + 1 {
                kids.push(Tree::node("NP", np_leaves(&tags[i + 1..j])));
            }
            out.push(Tree::node("PP", kids));
            i = j;
        } else if t == Tag::Wh {
            out.push(Tree::node("WHP", vec![Tree::leaf("WH")]));
            i += 1;
        } else {
            out.push(Tree::leaf("CC"));
            i += 1;
        }
    }
    out
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ShallowChunker;

impl ShallowChunker {
    fn sentence_tree(sentence: &str) -> Tree {
        let tags: Vec<Tag> = tokenize(sentence)
            .iter()
            .enumerate()
            .map(|(i, t)| tag_token(t, i == 0))
            .collect();
        Tree::node("S", chunk(&tags))
    }
}

impl SyntaxAnalyzer for ShallowChunker {
    fn parse(&self, text: &str) -> Tree {
        let mut parts: Vec<Tree> = sentences(text).into_iter().map(Self::sentence_tree).collect();
        match parts.len() {
            0 => Tree::leaf("S"),
            1 => parts.pop().unwrap(),
            _ => Tree::node("ROOT", parts),
        }
    }
}

/// Base-2 entropy of the distribution of tree shapes.
pub fn parse_tree_entropy<S: AsRef<str> + Sync>(corpus: &[S], analyzer: &dyn SyntaxAnalyzer) -> Result<f64> {
    if corpus.is_empty() {
        return Err(Error::invalid("parse_tree_entropy of an empty corpus"));
    }
    let mut freq: HashMap<String, usize> = HashMap::new();
    for doc in corpus {
        *freq.entry(analyzer.parse(doc.as_ref()).shape()).or_insert(0) += 1;
    }
    let mut sizes: Vec<usize> = freq.into_values().collect();
    sizes.sort_unstable();
    Ok(entropy_bits(&sizes))
}

/// Postorder view used by Zhang-Shasha.
struct Indexed<'a> {
    labels: Vec<&'a str>,
    /// Leftmost leaf descendant, postorder index.
    lml: Vec<usize>,
    keyroots: Vec<usize>,
}

impl<'a> Indexed<'a> {
    fn new(t: &'a Tree) -> Self {
        fn walk<'a>(t: &'a Tree, labels: &mut Vec<&'a str>, lml: &mut Vec<usize>) -> usize {
            let mut first_leaf = None;
            for c in &t.children {
                let l = walk(c, labels, lml);
                first_leaf.get_or_insert(l);
            }
            let me = labels.len();
            labels.push(&t.label);
            let l = first_leaf.unwrap_or(me);
            lml.push(l);
            l
        }
        let mut labels = Vec::new();
        let mut lml = Vec::new();
        walk(t, &mut labels, &mut lml);
        let n = labels.len();
        // A keyroot is the highest node with a given leftmost leaf.
        let mut keyroots: Vec<usize> = (0..n)
            .filter(|&i| !(i + 1..n).any(|j| lml[j] == lml[i]))
            .collect();
        keyroots.sort_unstable();
        Indexed { labels, lml, keyroots }
    }
}

/// Ordered tree edit distance with unit insert, delete and relabel costs.
pub fn tree_edit_distance(a: &Tree, b: &Tree) -> usize {
    let ta = Indexed::new(a);
    let tb = Indexed::new(b);
    let (na, nb) = (ta.labels.len(), tb.labels.len());
    let mut td = vec![vec![0usize; nb]; na];
    let mut fd = vec![vec![0usize; nb + 1]; na + 1];

    for &i in &ta.keyroots {
        for &j in &tb.keyroots {
            let (li, lj) = (ta.lml[i], tb.lml[j]);
            // fd[x][y] is the forest distance for ta[li..li+x) vs tb[lj..lj+y).
            fd[0][0] = 0;
            for x in 1..=i - li + 1 {
                fd[x][0] = fd[x - 1][0] + 1;
            }
            for y in 1..=j - lj + 1 {
                fd[0][y] = fd[0][y - 1] + 1;
            }
            for x in 1..=i - li + 1 {
                let ni = li + x - 1;
                for y in 1..=j - lj + 1 {
                    let nj = lj + y - 1;
                    let del = fd[x - 1][y] + 1;
                    let ins = fd[x][y - 1] + 1;
                    if ta.lml[ni] == li && tb.lml[nj] == lj {
                        let sub = fd[x - 1][y - 1] + usize::from(ta.labels[ni] != tb.labels[nj]);
                        fd[x][y] = del.min(ins).min(sub);
                        td[ni][nj] = fd[x][y];
                    } else {
                        let px = ta.lml[ni] - li;
                        let py = tb.lml[nj] - lj;
                        fd[x][y] = del.min(ins).min(fd[px][py] + td[ni][nj]);
                    }
                }
            }
        }
    }
    td[na - 1][nb - 1]
}

/// Mean tree edit distance over unordered document pairs.
pub fn avg_tree_edit_distance<S: AsRef<str> + Sync>(corpus: &[S], analyzer: &dyn SyntaxAnalyzer) -> Result<f64> {
    let trees: Vec<Tree> = corpus.iter().map(|d| analyzer.parse(d.as_ref())).collect();
    let n = trees.len();
    if n < 2 {
        return Ok(0.0);
    }
    let total: usize = (0..n)
        .into_par_iter()
        .map(|i| (i + 1..n).map(|j| tree_edit_distance(&trees[i], &trees[j])).sum::<usize>())
        .sum();
    Ok(total as f64 / (n * (n - 1) / 2) as f64)
}
