use serde::{Deserialize, Serialize};

use super::{tokenize, AlignOp, AlignmentScript, HangulError, Tokenized};

/// Display status of a span. Everything except `Ok` is shown in red.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpanFlag {
    Ok,
    Mispronounced,
    Missing,
    Extra,
}

impl SpanFlag {
    pub fn is_error(self) -> bool {
        self != SpanFlag::Ok
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Span {
    pub text: String,
    pub flag: SpanFlag,
}

/// The reference and hypothesis sentences cut into flagged spans. Joining
/// the span texts of either side gives back the original sentence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HighlightedDiff {
    pub reference_spans: Vec<Span>,
    pub hypothesis_spans: Vec<Span>,
}

impl HighlightedDiff {
    pub fn reference_text(&self) -> String {
        self.reference_spans.iter().map(|s| s.text.as_str()).collect()
    }

    pub fn hypothesis_text(&self) -> String {
        self.hypothesis_spans.iter().map(|s| s.text.as_str()).collect()
    }

    pub fn has_errors(&self) -> bool {
        self.reference_spans
            .iter()
            .chain(&self.hypothesis_spans)
            .any(|s| s.flag.is_error())
    }
}

/// Turns an alignment script into red-highlight spans.
///
/// Each syllable takes the flag of its edit operation; whitespace and
/// punctuation join the span of the syllable before them (text before the
/// first syllable joins the first span), and neighbouring syllables with the
/// same flag merge.
pub fn highlight(script: &AlignmentScript, reference: &str, hypothesis: &str) -> Result<HighlightedDiff, HangulError> {
    let r = tokenize(reference)?;
    let h = tokenize(hypothesis)?;
    let mut ref_flags = vec![None; r.tokens.len()];
    let mut hyp_flags = vec![None; h.tokens.len()];

    let set = |flags: &mut Vec<Option<SpanFlag>>, idx: usize, flag: SpanFlag, side: &str| match flags.get_mut(idx) {
        Some(slot @ None) => {
            *slot = Some(flag);
            Ok(())
        }
        Some(Some(_)) => Err(HangulError::ScriptMismatch(format!("{side} token {idx} appears twice"))),
        None => Err(HangulError::ScriptMismatch(format!(
            "{side} index {idx} out of range for {} tokens",
            flags.len()
        ))),
    };
    for op in &script.ops {
        match *op {
            AlignOp::Match { ref_idx, hyp_idx } => {
                set(&mut ref_flags, ref_idx, SpanFlag::Ok, "reference")?;
                set(&mut hyp_flags, hyp_idx, SpanFlag::Ok, "hypothesis")?;
            }
            AlignOp::Substitute { ref_idx, hyp_idx, .. } => {
                set(&mut ref_flags, ref_idx, SpanFlag::Mispronounced, "reference")?;
                set(&mut hyp_flags, hyp_idx, SpanFlag::Mispronounced, "hypothesis")?;
            }
            AlignOp::Delete { ref_idx } => set(&mut ref_flags, ref_idx, SpanFlag::Missing, "reference")?,
            AlignOp::Insert { hyp_idx } => set(&mut hyp_flags, hyp_idx, SpanFlag::Extra, "hypothesis")?,
        }
    }

    Ok(HighlightedDiff {
        reference_spans: spans(&r, &ref_flags, "reference")?,
        hypothesis_spans: spans(&h, &hyp_flags, "hypothesis")?,
    })
}

fn spans(tokens: &Tokenized<'_>, flags: &[Option<SpanFlag>], side: &str) -> Result<Vec<Span>, HangulError> {
    let text = tokens.text;
    if tokens.tokens.is_empty() {
        return Ok(if text.is_empty() {
            vec![]
        } else {
            vec![Span {
                text: text.to_string(),
                flag: SpanFlag::Ok,
            }]
        });
    }

    let mut out: Vec<Span> = Vec::new();
    for (k, (token, flag)) in tokens.tokens.iter().zip(flags).enumerate() {
        let flag = flag.ok_or_else(|| HangulError::ScriptMismatch(format!("{side} token {k} is not covered")))?;
        let start = if k == 0 { 0 } else { token.start };
        let end = tokens.tokens.get(k + 1).map_or(text.len(), |next| next.start);
        let piece = &text[start..end];
        match out.last_mut() {
            Some(last) if last.flag == flag => last.text.push_str(piece),
            _ => out.push(Span {
                text: piece.to_string(),
                flag,
            }),
        }
    }
    Ok(out)
}
