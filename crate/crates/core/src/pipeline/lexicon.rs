//! Keyword lexicons and phrase matching for the rule-based classifier.
//!
//! Patterns are lowercase phrases matched on whole tokens. ` ... ` inside a
//! pattern allows any number of tokens between its parts, in order.

use serde::{Deserialize, Serialize};

use crate::model::Rgb;

/// The 16 basic CSS colors.
pub const CSS_COLORS: [(&str, Rgb); 16] = [
    ("black", Rgb::new(0, 0, 0)),
    ("silver", Rgb::new(192, 192, 192)),
    ("gray", Rgb::new(128, 128, 128)),
    ("white", Rgb::new(255, 255, 255)),
    ("maroon", Rgb::new(128, 0, 0)),
    ("red", Rgb::new(255, 0, 0)),
    ("purple", Rgb::new(128, 0, 128)),
    ("fuchsia", Rgb::new(255, 0, 255)),
    ("green", Rgb::new(0, 128, 0)),
    ("lime", Rgb::new(0, 255, 0)),
    ("olive", Rgb::new(128, 128, 0)),
    ("yellow", Rgb::new(255, 255, 0)),
    ("navy", Rgb::new(0, 0, 128)),
    ("blue", Rgb::new(0, 0, 255)),
    ("teal", Rgb::new(0, 128, 128)),
    ("aqua", Rgb::new(0, 255, 255)),
];

/// Looks up a basic CSS color by name; "grey" is accepted for "gray".
pub fn css_color(name: &str) -> Option<Rgb> {
    let name = name.trim().to_ascii_lowercase();
    let name = if name == "grey" {
        "gray".to_string()
    } else {
        name
    };
    CSS_COLORS.iter().find(|(n, _)| *n == name).map(|(_, c)| *c)
}

/// Lowercase word tokens. Apostrophes and inner hyphens stay inside words.
pub fn words(text: &str) -> Vec<String> {
    let normalized = text.replace(['\u{2019}', '\u{2018}'], "'").to_lowercase();
    normalized
        .split(|c: char| !(c.is_alphanumeric() || c == '\'' || c == '-'))
        .map(|w| w.trim_matches(|c| c == '\'' || c == '-'))
        .filter(|w| !w.is_empty())
        .map(str::to_string)
        .collect()
}

/// Lowercase alphanumeric tokens, used for entity linking.
pub fn alnum_tokens(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_string)
        .collect()
}

fn find_phrase(tokens: &[String], phrase: &[&str], from: usize) -> Option<usize> {
    if phrase.is_empty() || tokens.len() < phrase.len() {
        return None;
    }
    (from..=tokens.len() - phrase.len())
        .find(|&i| phrase.iter().enumerate().all(|(j, p)| tokens[i + j] == *p))
}

/// Whether `pattern` occurs in `tokens`.
pub fn matches_pattern(tokens: &[String], pattern: &str) -> bool {
    let mut pos = 0;
    for part in pattern.split("...") {
        let phrase: Vec<&str> = part.split_whitespace().collect();
        if phrase.is_empty() {
            continue;
        }
        match find_phrase(tokens, &phrase, pos) {
            Some(i) => pos = i + phrase.len(),
            None => return false,
        }
    }
    true
}

/// First pattern of `patterns` found in `tokens`.
pub fn first_match<'a>(tokens: &[String], patterns: &'a [String]) -> Option<&'a str> {
    patterns
        .iter()
        .map(String::as_str)
        .find(|p| matches_pattern(tokens, p))
}

fn owned(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

/// Configurable keyword lists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lexicon {
    pub decision_markers: Vec<String>,
    /// Verbs that make a clause imperative when they open it.
    pub imperative_verbs: Vec<String>,
    /// Words skipped before testing for an imperative verb.
    pub clause_fillers: Vec<String>,
    pub comment_markers: Vec<String>,
    pub restriction_markers: Vec<String>,
    pub encouragement_markers: Vec<String>,
    /// Property words; any of these (or a color name) marks a style remark.
    pub style_markers: Vec<String>,
    pub agreement_markers: Vec<String>,
}

impl Default for Lexicon {
    fn default() -> Self {
        Self {
            decision_markers: owned(&[
                "should",
                "shouldn't",
                "must",
                "mustn't",
                "let's",
                "needs to",
                "need to",
                "have to",
                "don't",
                "do not",
                "avoid",
                "keep",
                "no ... here",
                "make sure",
            ]),
            imperative_verbs: owned(&[
                "move", "place", "put", "make", "set", "change", "turn", "add", "remove", "use",
                "keep", "avoid", "stay", "shift", "rotate", "bring", "push", "pull", "lower",
                "raise", "dim", "brighten", "paint",
            ]),
            clause_fillers: owned(&[
                "ok", "okay", "so", "please", "alright", "now", "then", "and", "also", "just",
                "um", "uh", "yeah", "oh",
            ]),
            comment_markers: owned(&[
                "i think", "maybe", "looks", "seems", "i feel", "perhaps", "might", "probably",
                "kind of", "i like", "i wonder", "feels",
            ]),
            restriction_markers: owned(&[
                "avoid",
                "don't",
                "do not",
                "stay away",
                "no-placement",
                "no placement",
                "restricted",
                "not ... here",
                "no ... here",
                "should not",
                "shouldn't",
                "must not",
                "mustn't",
                "never",
                "keep out",
                "keep away",
                "off-limits",
                "no-go",
                "prohibited",
            ]),
            encouragement_markers: owned(&[
                "should be here",
                "should be in",
                "should be near",
                "should go",
                "should stay",
                "place ... near",
                "place ... around",
                "place ... in",
                "put ... near",
                "put ... in",
                "put ... at",
                "move ... to",
                "move ... toward",
                "move ... towards",
                "move ... into",
                "bring ... to",
                "keep ... near",
                "keep ... inside",
                "keep ... within",
                "target zone",
                "over here",
                "around here",
            ]),
            style_markers: owned(&[
                "opacity",
                "opaque",
                "transparent",
                "translucent",
                "field of view",
                "fov",
                "wider",
                "narrower",
                "brighter",
                "darker",
                "dimmer",
                "brightness",
                "intensity",
                "color",
                "colour",
                "grey",
                "orange",
                "pink",
                "brown",
            ]),
            agreement_markers: owned(&[
                "let's do that",
                "sounds good",
                "agreed",
                "yes",
                "yeah",
                "okay",
                "ok",
                "sure",
            ]),
        }
    }
}
