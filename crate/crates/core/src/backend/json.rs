//! Pulling a JSON object out of chatty model output.

use serde_json::Value;

use crate::error::ExtractError;

const EXCERPT_CHARS: usize = 120;

/// Returns the first balanced top-level JSON object in `text`.
///
/// Fenced code blocks are searched before the surrounding prose. Within a
/// region, every `{` is tried as a start and the scan tracks brace depth
/// while skipping over string literals. A balanced candidate that also parses
/// (tolerating trailing commas) wins; failing that, the first balanced
/// candidate is returned so the caller can report the schema problem.
pub fn extract_json_block(text: &str) -> Result<&str, ExtractError> {
    let mut regions = fenced_blocks(text);
    regions.push(text);

    let mut first_balanced: Option<&str> = None;
    for region in regions {
        for (start, _) in region.match_indices('{') {
            if let Some(len) = balanced_len(&region[start..]) {
                let cand = &region[start..start + len];
                if parse_relaxed(cand).is_some_and(|v| v.is_object()) {
                    return Ok(cand);
                }
                first_balanced.get_or_insert(cand);
            }
        }
    }
    first_balanced.ok_or_else(|| ExtractError { excerpt: text.chars().take(EXCERPT_CHARS).collect() })
}

/// Parse JSON, retrying once with trailing commas removed.
pub fn parse_relaxed(text: &str) -> Option<Value> {
    serde_json::from_str(text).ok().or_else(|| serde_json::from_str(&strip_trailing_commas(text)).ok())
}

fn fenced_blocks(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut rest = text;
    while let Some(open) = rest.find("```") {
        let after = &rest[open + 3..];
        // skip the info string (e.g. `json`) up to the end of the line
        let body_start = after.find('\n').map_or(after.len(), |i| i + 1);
        let body = &after[body_start..];
        match body.find("```") {
            Some(close) => {
                out.push(&body[..close]);
                rest = &body[close + 3..];
            }
            None => {
                out.push(body);
                break;
            }
        }
    }
    out
}

/// Byte length of the balanced object starting at `s[0] == '{'`.
fn balanced_len(s: &str) -> Option<usize> {
    let mut depth = 0usize;
    let mut in_string = false;
    let mut escaped = false;
    for (i, b) in s.bytes().enumerate() {
        if in_string {
            match b {
                _ if escaped => escaped = false,
                b'\\' => escaped = true,
                b'"' => in_string = false,
                _ => {}
            }
            continue;
        }
        match b {
            b'"' => in_string = true,
            b'{' => depth += 1,
            b'}' => {
                depth = depth.checked_sub(1)?;
                if depth == 0 {
                    return Some(i + 1);
                }
            }
            _ => {}
        }
    }
    None
}

fn strip_trailing_commas(text: &str) -> String {
    let chars: Vec<char> = text.chars().collect();
    let mut out = String::with_capacity(text.len());
    let mut in_string = false;
    let mut escaped = false;
    for (i, &c) in chars.iter().enumerate() {
        if in_string {
            match c {
                _ if escaped => escaped = false,
                '\\' => escaped = true,
                '"' => in_string = false,
                _ => {}
            }
            out.push(c);
            continue;
        }
        if c == '"' {
            in_string = true;
        }
        if c == ',' {
            let next = chars[i + 1..].iter().find(|c| !c.is_whitespace());
            if matches!(next, Some('}') | Some(']')) {
                continue;
            }
        }
        out.push(c);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const OBJ: &str = r#"{"plan": [{"activity": "sleep", "start_time": "00:00", "description": "a } in text"}]}"#;

    #[test]
    fn bare_object_is_returned_unchanged() {
        assert_eq!(extract_json_block(OBJ).unwrap(), OBJ);
    }

    #[test]
    fn wrapping_styles() {
        let wrapped = [
            format!("```json\n{OBJ}\n```\nHope this helps!"),
            format!("```\n{OBJ}\n```"),
            format!("Sure! Here is the plan:\n{OBJ}"),
            format!("{OBJ}\n\nNote: times are approximate."),
            format!("Here you go: ```json {OBJ} ``` done"),
            format!("<think>let me use {{braces}} first</think>\n{OBJ}"),
            format!("```json\n{OBJ}"),
            format!("Some notes {{not json}} then ```json\n{OBJ}\n``` and {{\"other\": 1}}"),
            format!("   \n\t{OBJ}   "),
            format!("The answer is below.\n\n> {OBJ}\n"),
        ];
        for w in &wrapped {
            assert_eq!(extract_json_block(w).unwrap(), OBJ, "{w}");
        }
    }

    #[test]
    fn no_braces_is_an_error() {
        let err = extract_json_block("no braces here").unwrap_err();
        assert_eq!(err.excerpt, "no braces here");
        assert!(extract_json_block("{ unterminated").is_err());
        let long = "x".repeat(500);
        assert_eq!(extract_json_block(&long).unwrap_err().excerpt.len(), 120);
    }

    #[test]
    fn unparseable_balanced_object_still_extracted() {
        assert_eq!(extract_json_block("say {hello} please").unwrap(), "{hello}");
    }

    #[test]
    fn trailing_commas_are_tolerated() {
        let v = parse_relaxed(r#"{"a": [1, 2,], "b": "x,}",}"#).unwrap();
        assert_eq!(v["b"], "x,}");
        assert_eq!(v["a"].as_array().unwrap().len(), 2);
    }

    proptest::proptest! {
        #[test]
        fn extraction_is_idempotent(prefix in "[^{}]{0,40}", suffix in ".{0,40}", key in "[a-z]{1,8}", val in "[ -~]{0,20}") {
            let obj = serde_json::json!({ key: val }).to_string();
            let text = format!("{prefix}{obj}{suffix}");
            if let Ok(once) = extract_json_block(&text) {
                proptest::prop_assert_eq!(extract_json_block(once).unwrap(), once);
            }
        }
    }
}
