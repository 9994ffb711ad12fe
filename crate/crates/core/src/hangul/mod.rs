//! Hangul syllable arithmetic and sentence comparison.
//!
//! A precomposed syllable in `U+AC00..=U+D7A3` encodes a lead consonant, a
//! vowel and an optional tail consonant as
//! `0xAC00 + (lead * 21 + vowel) * 28 + tail`.

mod align;
mod highlight;

pub use align::{align, align_tokens, AlignOp, AlignmentScript};
pub use highlight::{highlight, HighlightedDiff, Span, SpanFlag};

use thiserror::Error;

pub const SYLLABLE_BASE: u32 = 0xAC00;
pub const SYLLABLE_LAST: u32 = 0xD7A3;
pub const LEAD_COUNT: u8 = 19;
pub const VOWEL_COUNT: u8 = 21;
pub const TAIL_COUNT: u8 = 28;
const PER_LEAD: u32 = VOWEL_COUNT as u32 * TAIL_COUNT as u32; // 588

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HangulError {
    #[error("{0:?} (U+{code:04X}) is not a precomposed Hangul syllable", code = *.0 as u32)]
    NotHangulSyllable(char),
    #[error("jamo index out of range: lead {lead}, vowel {vowel}, tail {tail}")]
    IndexOutOfRange { lead: u8, vowel: u8, tail: u8 },
    #[error("unsupported character {ch:?} at byte {offset}")]
    UnsupportedCharacter { ch: char, offset: usize },
    #[error("alignment script does not fit the texts: {0}")]
    ScriptMismatch(String),
}

/// A decomposed Hangul syllable. `tail == 0` means no final consonant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Syllable {
    pub codepoint: char,
    pub lead: u8,
    pub vowel: u8,
    pub tail: u8,
}

pub fn decompose(ch: char) -> Result<Syllable, HangulError> {
    let code = ch as u32;
    if !(SYLLABLE_BASE..=SYLLABLE_LAST).contains(&code) {
        return Err(HangulError::NotHangulSyllable(ch));
    }
    let index = code - SYLLABLE_BASE;
    Ok(Syllable {
        codepoint: ch,
        lead: (index / PER_LEAD) as u8,
        vowel: ((index % PER_LEAD) / TAIL_COUNT as u32) as u8,
        tail: (index % TAIL_COUNT as u32) as u8,
    })
}

pub fn compose(lead: u8, vowel: u8, tail: u8) -> Result<char, HangulError> {
    if lead >= LEAD_COUNT || vowel >= VOWEL_COUNT || tail >= TAIL_COUNT {
        return Err(HangulError::IndexOutOfRange { lead, vowel, tail });
    }
    let code = SYLLABLE_BASE + lead as u32 * PER_LEAD + vowel as u32 * TAIL_COUNT as u32 + tail as u32;
    // every in-range triple lands inside the syllable block
    Ok(char::from_u32(code).expect("valid Hangul syllable"))
}

/// Number of components among lead, vowel and tail that differ (0..=3).
pub fn differing_jamo(a: &Syllable, b: &Syllable) -> u32 {
    (a.lead != b.lead) as u32 + (a.vowel != b.vowel) as u32 + (a.tail != b.tail) as u32
}

/// Substitution cost: the fraction of differing jamo components.
pub fn jamo_distance(a: &Syllable, b: &Syllable) -> f64 {
    differing_jamo(a, b) as f64 / 3.0
}

/// One syllable of a sentence, with its byte range in the source text.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Token {
    pub syllable: Syllable,
    pub start: usize,
    pub end: usize,
}

/// A sentence split into alignment tokens. Whitespace and ASCII punctuation
/// are not tokens; they stay in `text` for display.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tokenized<'a> {
    pub text: &'a str,
    pub tokens: Vec<Token>,
    /// Indices of tokens that are directly followed by whitespace.
    pub spaces_after: Vec<usize>,
}

impl Tokenized<'_> {
    pub fn syllables(&self) -> impl Iterator<Item = &Syllable> + '_ {
        self.tokens.iter().map(|t| &t.syllable)
    }
}

pub fn tokenize(text: &str) -> Result<Tokenized<'_>, HangulError> {
    let mut tokens = Vec::new();
    let mut spaces_after = Vec::new();
    for (offset, ch) in text.char_indices() {
        if ch.is_whitespace() {
            if let Some(last) = tokens.len().checked_sub(1) {
                if spaces_after.last() != Some(&last) {
                    spaces_after.push(last);
                }
            }
        } else if ch.is_ascii_punctuation() {
            continue;
        } else {
            let syllable = decompose(ch).map_err(|_| HangulError::UnsupportedCharacter { ch, offset })?;
            tokens.push(Token {
                syllable,
                start: offset,
                end: offset + ch.len_utf8(),
            });
        }
    }
    Ok(Tokenized {
        text,
        tokens,
        spaces_after,
    })
}
