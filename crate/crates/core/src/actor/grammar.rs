use serde_json::Value;

use crate::env::Action;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseFailure {
    #[error("no action")]
    NoAction,
    #[error("bad args: {0}")]
    BadArgs(String),
}

#[derive(Clone, Copy)]
enum Keyword {
    Call,
    Finish,
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

/// Finds the first standalone `CALL` or `FINISH` keyword.
fn find_keyword(raw: &str) -> Option<(Keyword, usize)> {
    let mut prev: Option<char> = None;
    for (i, c) in raw.char_indices() {
        if prev.is_none_or(|p| !is_word_char(p)) {
            for (kw, word) in [(Keyword::Call, "CALL"), (Keyword::Finish, "FINISH")] {
                if raw[i..].starts_with(word) {
                    let end = i + word.len();
                    if raw[end..].chars().next().is_none_or(char::is_whitespace) {
                        return Some((kw, end));
                    }
                }
            }
        }
        prev = Some(c);
    }
    None
}

/// Parses actor output.
///
/// The first standalone keyword wins, wherever it appears:
/// `CALL <api_name> <json-object>` (trailing text after the object is
/// ignored, an absent object means `{}`) or `FINISH <answer to end of message>`.
pub fn parse_action(raw: &str) -> Result<Action, ParseFailure> {
    let (keyword, end) = find_keyword(raw).ok_or(ParseFailure::NoAction)?;
    let rest = &raw[end..];
    match keyword {
        Keyword::Finish => Ok(Action::finish(rest)),
        Keyword::Call => {
            let rest = rest.trim_start();
            let name_len = rest
                .find(|c: char| !(is_word_char(c) || c == '-' || c == '.'))
                .unwrap_or(rest.len());
            if name_len == 0 {
                return Err(ParseFailure::BadArgs("missing api name".into()));
            }
            let (name, after) = rest.split_at(name_len);
            let after = after.trim_start_matches([' ', '\t']);
            if after.is_empty() || after.starts_with(['\n', '\r']) {
                return Ok(Action::call(name, Default::default()));
            }
            if !after.starts_with('{') {
                return Err(ParseFailure::BadArgs(
                    "arguments must be a JSON object".into(),
                ));
            }
            let mut stream = serde_json::Deserializer::from_str(after).into_iter::<Value>();
            match stream.next() {
                Some(Ok(Value::Object(args))) => Ok(Action::call(name, args)),
                Some(Err(e)) => Err(ParseFailure::BadArgs(e.to_string())),
                _ => Err(ParseFailure::BadArgs(
                    "arguments must be a JSON object".into(),
                )),
            }
        }
    }
}
