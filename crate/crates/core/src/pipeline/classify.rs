use super::lexicon::{css_color, first_match, words};
use super::{DialogAct, PipelineConfig, Polarity, Utterance};

fn opens_imperative_clause(text: &str, cfg: &PipelineConfig) -> bool {
    let lex = &cfg.lexicon;
    text.split([',', '.', ';', '!', '?', ':'])
        .map(words)
        .any(|clause| {
            clause
                .iter()
                .find(|w| !lex.clause_fillers.contains(w))
                .is_some_and(|w| lex.imperative_verbs.contains(w))
        })
}

/// Whether `tokens` mention an appearance property.
pub(crate) fn mentions_style(tokens: &[String], cfg: &PipelineConfig) -> bool {
    tokens.iter().any(|t| css_color(t).is_some())
        || first_match(tokens, &cfg.lexicon.style_markers).is_some()
}

/// Rule-based dialog act and polarity. Case-insensitive; polarity rules are
/// tried in the order restriction, encouragement, style.
pub fn classify_utterance(u: &Utterance, cfg: &PipelineConfig) -> (DialogAct, Polarity) {
    let lex = &cfg.lexicon;
    let tokens = words(&u.text);
    let act = if first_match(&tokens, &lex.decision_markers).is_some()
        || opens_imperative_clause(&u.text, cfg)
    {
        DialogAct::Decision
    } else if first_match(&tokens, &lex.comment_markers).is_some() {
        DialogAct::Comment
    } else {
        DialogAct::None
    };
    let polarity = if first_match(&tokens, &lex.restriction_markers).is_some() {
        Polarity::Restriction
    } else if first_match(&tokens, &lex.encouragement_markers).is_some() {
        Polarity::Encouragement
    } else if mentions_style(&tokens, cfg) {
        Polarity::Style
    } else {
        Polarity::Neutral
    };
    (act, polarity)
}
