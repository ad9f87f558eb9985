//! Prompt text sent to provider-backed players and parsers for their replies.

use std::fmt::Write as _;

use super::view::ArchiveView;
use super::AugmentationStrategy;
use crate::config::GameConfig;
use crate::scoring::Presentation;

fn percent(p: f64) -> String {
    format!("{:.0}%", p * 100.0)
}


/// Setter prompt for `round` (1-based).
pub fn build_setter_prompt(view: &ArchiveView, round: usize, config: &GameConfig) -> String {
    let pass = percent(config.p_thresh);
    let mut s = String::new();
    s.push_str("Generate one novel and challenging Python output prediction puzzle.\n\n");
    s.push_str("Goal:\n");
    let _ = writeln!(
        s,
        "Create a Python code snippet with a single, deterministic output. The puzzle should be \
         maximally difficult for an opponent to predict, yet you must be able to predict its output \
         accurately at least {pass} of the time.\n"
    );

    s.push_str("Game Context:\n");
    let _ = writeln!(s, "- Round: {round} of {}", config.n_rounds);
    let _ = writeln!(
        s,
        "- Scoring: +1 point for a sufficiently novel question; +1 point for each question answered \
         correctly ({pass}+ accuracy)\n"
    );

    s.push_str("Strategic Imperatives:\n");
    s.push_str("- Originality and Variety: Each round requires a new and highly varied puzzle. Avoid repetition.\n");
    s.push_str("- Push the Limits: Design the hardest possible puzzle you believe you can reliably answer.\n");
    s.push_str(
        "- The way to win is if your competitor cannot answer your questions (and therefore earns no points).\n\n",
    );

    s.push_str("Instructions for Code Generation:\n");
    s.push_str("1. Single Python Program: Generate exactly one complete Python code snippet.\n");
    s.push_str(
        "2. Difficulty and Self-Solvability: The problem must be exceptionally difficult for a competitor \
         to solve, yet you must be confident in your ability to predict its output accurately.\n",
    );
    s.push_str(
        "3. Maximize Creativity and Subtlety: Avoid trivial syntax errors or basic variable tracking. \
         Focus on nuanced puzzles.\n",
    );
    s.push_str(
        "4. Targeted Reasoning Skill: Identify and explicitly state the specific Python concept(s) or \
         execution flow detail(s) your code exploits. This will form your \"Question Number\" explanation.\n",
    );
    s.push_str(
        "5. Deterministic Output: The code must produce a single, predictable output every time. Avoid \
         randomness, user input, or system-dependent behavior.\n",
    );
    s.push_str(
        "6. Built-In Functionality Only: Restrict code to standard Python 3 built-ins. No external libraries.\n",
    );
    s.push_str("7. Error-Free Execution: The generated Python 3 code must run without any errors.\n");
    s.push_str(
        "8. Value-Based Output: The final output should be a specific value (e.g., integer, string, list, \
         tuple, dictionary, or custom object), not a boolean (True/False).\n\n",
    );

    s.push_str("Uniqueness Constraint:\n");
    s.push_str("Your generated question must be significantly different from all questions you have asked before.\n\n");

    s.push_str("Failed Attempts\n");
    let left = view.attempts_remaining;
    let _ = writeln!(
        s,
        "You only have {left} attempt{} left in this round to generate a sufficiently unique, verifiable \
         question. Below are your previous failed attempts and why they failed. Learn from your mistakes, \
         and do not repeat them.",
        if left == 1 { "" } else { "s" }
    );
    if view.failed_attempts.is_empty() {
        s.push_str("(no failed attempts yet this round)\n");
    }
    for f in &view.failed_attempts {
        let _ = writeln!(s, "Attempt {} failed: {}: {}", f.attempt, f.reason, f.detail);
        let _ = writeln!(s, "{}\n", f.code);
    }
    s.push('\n');

    if view.strategy != AugmentationStrategy::NoInfo {
        s.push_str("Archive\n");
        s.push_str(&archive_block(view, config));
        s.push('\n');
    }

    s.push_str("Output Format (Strict Adherence Required):\n");
    s.push_str(
        "- Do not include any explanations, external text, or markdown formatting (e.g., triple backticks or quotes).\n",
    );
    s.push_str("- The output format must be exact:\n\n");
    s.push_str("# [short explanation of the specific Python behavior/reasoning skill this question tests]\n");
    s.push_str("<the actual Python 3 code here, no quotes, no markdown, just valid Python code>\n");
    s
}

fn archive_block(view: &ArchiveView, config: &GameConfig) -> String {
    use AugmentationStrategy::*;
    let pass = percent(config.p_thresh);
    let mut s = String::new();
    match view.strategy {
        NoInfo => return s,
        HistoricalTasks => {
            s.push_str(
                "Your generated question must be significantly different from all questions in the provided archive, \
                 which lists the questions you have asked so far.\n",
            );
        }
        HistoricalPerformance => {
            let _ = writeln!(
                s,
                "Your generated question must be significantly different from all questions in the provided archive. \
                 Furthermore, for each question you can see the score (as a percentage) that you achieved. Use this \
                 to calibrate your next question.\n{}",
                calibration_text(&pass)
            );
        }
        FullPersonalContext => {
            let _ = writeln!(
                s,
                "Your generated question must be significantly different from all questions in the provided archive. \
                 For each of your questions you can see the score (as a percentage) that every player achieved, \
                 including you. Use this to calibrate your next question.\n{}",
                calibration_text(&pass)
            );
        }
        FullContext => {
            let _ = writeln!(
                s,
                "Your generated question must be significantly different from all questions in the provided archive. \
                 The archive holds every question set so far by every player, with the score (as a percentage) that \
                 every player achieved on it. Use this to calibrate your next question.\n{}",
                calibration_text(&pass)
            );
        }
    }
    if view.entries.is_empty() {
        s.push_str("(the archive is empty)\n");
    }
    for e in &view.entries {
        let _ = write!(s, "Question {}", e.number);
        if view.strategy == FullContext {
            let tag = if e.setter == view.player { "you" } else { e.setter.as_str() };
            let _ = write!(s, " (set by {tag})");
        }
        match view.strategy {
            HistoricalPerformance => {
                if let Some((_, p)) = e.scores.first() {
                    let _ = write!(s, " - your score: {}", percent(*p));
                }
            }
            FullPersonalContext | FullContext => {
                let parts: Vec<String> = e
                    .scores
                    .iter()
                    .map(|(id, p)| {
                        let who = if *id == view.player { "you".to_string() } else { id.to_string() };
                        format!("{who} {}", percent(*p))
                    })
                    .collect();
                let _ = write!(s, " - scores: {}", parts.join(", "));
            }
            _ => {}
        }
        let _ = writeln!(s, ":\n{}\n", e.code);
    }
    s
}

fn calibration_text(pass: &str) -> String {
    format!(
        "If you got more than 80% on a question - it is probably too easy for your competitor too. Think carefully \
         and write a question which is harder than the examples you got high scores on.\nYou will only win the game \
         if you write questions which are so difficult that your competitor will get it wrong. If you got less than \
         {pass} on any questions, those types of question are too hard. Go step by step through the examples and \
         use them to guide how hard your next question should be. You should aim for questions which you will \
         score between 60 and 80% on."
    )
}

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
#[error("malformed setter output: {0}")]
pub struct MalformedOutput(pub String);

/// Splits setter output into `(rationale, code)`.
///
/// Markdown code fences are dropped. The first non-blank line, if it is a
/// comment, becomes the rationale; everything after it is the code, with
/// surrounding blank lines removed.
pub fn parse_setter_output(raw: &str) -> Result<(String, String), MalformedOutput> {
    let lines: Vec<&str> = raw
        .lines()
        .filter(|l| !l.trim_start().starts_with("```"))
        .collect();
    let first = lines.iter().position(|l| !l.trim().is_empty());
    let Some(first) = first else {
        return Err(MalformedOutput("no content".into()));
    };
    let (rationale, body) = if lines[first].trim_start().starts_with('#') {
        let r = lines[first].trim_start().trim_start_matches('#').trim().to_string();
        (r, &lines[first + 1..])
    } else {
        (String::new(), &lines[first..])
    };
    let start = body.iter().position(|l| !l.trim().is_empty());
    let end = body.iter().rposition(|l| !l.trim().is_empty());
    match (start, end) {
        (Some(s), Some(e)) => Ok((rationale, body[s..=e].join("\n"))),
        _ => Err(MalformedOutput("no code after the explanation line".into())),
    }
}

/// Letter label for option `i`.
pub fn option_letter(i: usize) -> char {
    (b'A' + i as u8) as char
}

pub fn build_answer_prompt(code: &str, presentation: &Presentation) -> String {
    let mut s = String::from(
        "What is the exact output of the following Python 3 code?\n\n",
    );
    let _ = writeln!(s, "{code}\n");
    s.push_str("Options:\n");
    for (i, o) in presentation.options.iter().enumerate() {
        let _ = writeln!(s, "{}) {}", option_letter(i), o);
    }
    let last = option_letter(presentation.options.len().saturating_sub(1));
    let _ = write!(s, "\nReply with a single letter (A-{last}) and nothing else.");
    s
}

/// Parses a single option letter such as `B`, `(b)`, `C.` or `Answer: D`.
pub fn parse_answer(reply: &str, n_options: usize) -> Option<usize> {
    let mut t = reply.trim();
    for prefix in ["Answer:", "answer:", "ANSWER:"] {
        if let Some(rest) = t.strip_prefix(prefix) {
            t = rest.trim();
        }
    }
    let t = t.trim_matches(|c: char| c.is_whitespace() || "()[].:*'\"`".contains(c));
    let mut chars = t.chars();
    let c = chars.next()?;
    if chars.next().is_some() || !c.is_ascii_alphabetic() {
        return None;
    }
    let idx = (c.to_ascii_uppercase() as u8 - b'A') as usize;
    (idx < n_options).then_some(idx)
}

pub fn build_distractor_prompt(code: &str, truth: &str, n: usize) -> String {
    format!(
        "The following Python 3 code has been executed and its exact output is known.\n\n{code}\n\n\
         Correct output:\n{truth}\n\n\
         Write {n} distinct, plausible but incorrect outputs that a careless reader might predict. \
         Each must differ from the correct output. Put each incorrect output on its own line, with no \
         numbering, bullets, quotes or commentary."
    )
}

/// Reply lines with list markers removed.
pub fn parse_distractor_reply(reply: &str) -> Vec<String> {
    reply
        .lines()
        .filter(|l| !l.trim_start().starts_with("```"))
        .map(|l| {
            let t = l.trim();
            let t = t.strip_prefix("- ").unwrap_or(t);
            // "3. foo" / "3) foo"
            match t.find(['.', ')']) {
                Some(i) if i > 0 && i <= 2 && t[..i].chars().all(|c| c.is_ascii_digit()) && t[i + 1..].starts_with(' ') => {
                    t[i + 2..].to_string()
                }
                _ => t.to_string(),
            }
        })
        .filter(|l| !l.is_empty())
        .collect()
}
