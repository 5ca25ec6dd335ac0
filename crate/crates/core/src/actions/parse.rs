//! Extraction of `Function: [...]` blocks from raw model text.
//!
//! Models write these blocks in single-quoted pseudo-JSON as often as in
//! real JSON, so the reader here accepts either quote style, bare words and
//! trailing commas. A block that still does not make sense is dropped with a
//! warning; the surrounding speech is always kept.

use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::FunctionCall;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseWarning {
    /// Byte offset of the offending block in the raw text.
    pub offset: usize,
    pub message: String,
    pub fragment: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParsedOutput {
    pub speech: String,
    pub calls: Vec<FunctionCall>,
    pub warnings: Vec<ParseWarning>,
}

fn marker() -> &'static Regex {
    static MARKER: OnceLock<Regex> = OnceLock::new();
    MARKER.get_or_init(|| Regex::new(r"(?i)\bfunction\s*:").expect("valid regex"))
}

/// Splits raw NPC output into speech and function calls.
pub fn parse_npc_output(raw: &str) -> ParsedOutput {
    let mut out = ParsedOutput::default();
    let mut segments: Vec<&str> = Vec::new();
    let mut cursor = 0;

    while let Some(m) = marker().find_at(raw, cursor) {
        segments.push(&raw[cursor..m.start()]);
        let after = m.end() + leading_ws(&raw[m.end()..]);
        let block_end = if raw[after..].starts_with('[') { matching_close(raw, after) } else { None };
        match block_end {
            Some(end) => {
                let body = &raw[after..end];
                match read_calls(body) {
                    Ok(calls) => out.calls.extend(calls),
                    Err(message) => out.warnings.push(ParseWarning {
                        offset: m.start(),
                        message,
                        fragment: raw[m.start()..end].to_string(),
                    }),
                }
                cursor = end;
            }
            None => {
                let end = raw[m.end()..].find('\n').map_or(raw.len(), |i| m.end() + i);
                out.warnings.push(ParseWarning {
                    offset: m.start(),
                    message: "function block is not a closed list".to_string(),
                    fragment: raw[m.start()..end].to_string(),
                });
                cursor = end;
            }
        }
    }
    segments.push(&raw[cursor..]);

    out.speech = segments
        .iter()
        .map(|s| s.trim())
        .filter(|s| !s.is_empty())
        .collect::<Vec<_>>()
        .join(" ");
    out
}

fn leading_ws(s: &str) -> usize {
    s.len() - s.trim_start().len()
}

/// Byte index just past the bracket closing the one at `open`.
fn matching_close(raw: &str, open: usize) -> Option<usize> {
    let mut depth = 0usize;
    let mut quote: Option<char> = None;
    let mut escaped = false;
    for (i, c) in raw[open..].char_indices() {
        if let Some(q) = quote {
            if escaped {
                escaped = false;
            } else if c == '\\' {
                escaped = true;
            } else if c == q {
                quote = None;
            }
            continue;
        }
        match c {
            '\'' | '"' => quote = Some(c),
            '[' | '{' => depth += 1,
            ']' | '}' => {
                depth = depth.checked_sub(1)?;
                if depth == 0 {
                    return Some(open + i + c.len_utf8());
                }
            }
            _ => {}
        }
    }
    None
}

#[derive(Debug, Clone, PartialEq)]
enum Value {
    Text(String),
    List(Vec<Value>),
    Object(Vec<(String, Value)>),
}

struct Reader<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
}

impl Reader<'_> {
    fn skip_ws(&mut self) {
        while self.chars.peek().is_some_and(|c| c.is_whitespace()) {
            self.chars.next();
        }
    }

    fn expect(&mut self, want: char) -> Result<(), String> {
        self.skip_ws();
        match self.chars.next() {
            Some(c) if c == want => Ok(()),
            Some(c) => Err(format!("expected `{want}`, found `{c}`")),
            None => Err(format!("expected `{want}`, found end of block")),
        }
    }

    fn value(&mut self) -> Result<Value, String> {
        self.skip_ws();
        match self.chars.peek().copied() {
            Some('[') => self.list(),
            Some('{') => self.object(),
            Some(q @ ('\'' | '"')) => {
                self.chars.next();
                self.quoted(q).map(Value::Text)
            }
            Some(_) => self.bare().map(Value::Text),
            None => Err("unexpected end of block".to_string()),
        }
    }

    fn quoted(&mut self, quote: char) -> Result<String, String> {
        let mut s = String::new();
        loop {
            match self.chars.next() {
                Some('\\') => match self.chars.next() {
                    Some('n') => s.push('\n'),
                    Some('t') => s.push('\t'),
                    Some(c) => s.push(c),
                    None => return Err("unterminated string".to_string()),
                },
                Some(c) if c == quote => return Ok(s),
                Some(c) => s.push(c),
                None => return Err("unterminated string".to_string()),
            }
        }
    }

    fn bare(&mut self) -> Result<String, String> {
        let mut s = String::new();
        while let Some(&c) = self.chars.peek() {
            if c.is_alphanumeric() || matches!(c, '_' | '-' | '.') {
                s.push(c);
                self.chars.next();
            } else {
                break;
            }
        }
        if s.is_empty() {
            let c = self.chars.peek().copied().unwrap_or(' ');
            return Err(format!("unexpected `{c}`"));
        }
        Ok(s)
    }

    fn list(&mut self) -> Result<Value, String> {
        self.expect('[')?;
        let mut items = Vec::new();
        loop {
            self.skip_ws();
            if self.chars.peek() == Some(&']') {
                self.chars.next();
                return Ok(Value::List(items));
            }
            items.push(self.value()?);
            self.skip_ws();
            match self.chars.next() {
                Some(',') => continue,
                Some(']') => return Ok(Value::List(items)),
                Some(c) => return Err(format!("expected `,` or `]`, found `{c}`")),
                None => return Err("unterminated list".to_string()),
            }
        }
    }

    fn object(&mut self) -> Result<Value, String> {
        self.expect('{')?;
        let mut fields = Vec::new();
        loop {
            self.skip_ws();
            if self.chars.peek() == Some(&'}') {
                self.chars.next();
                return Ok(Value::Object(fields));
            }
            let key = match self.value()? {
                Value::Text(k) => k,
                _ => return Err("object keys must be strings".to_string()),
            };
            self.expect(':')?;
            let value = self.value()?;
            fields.push((key, value));
            self.skip_ws();
            match self.chars.next() {
                Some(',') => continue,
                Some('}') => return Ok(Value::Object(fields)),
                Some(c) => return Err(format!("expected `,` or `}}`, found `{c}`")),
                None => return Err("unterminated object".to_string()),
            }
        }
    }
}

fn read_calls(body: &str) -> Result<Vec<FunctionCall>, String> {
    let mut reader = Reader { chars: body.chars().peekable() };
    let value = reader.value()?;
    reader.skip_ws();
    if reader.chars.next().is_some() {
        return Err("trailing text after function list".to_string());
    }
    let Value::List(items) = value else {
        return Err("function block must be a list".to_string());
    };
    items.into_iter().map(to_call).collect()
}

fn to_call(value: Value) -> Result<FunctionCall, String> {
    let Value::Object(fields) = value else {
        return Err("function entries must be objects".to_string());
    };
    let mut name = None;
    let mut arguments = Vec::new();
    for (key, value) in fields {
        match (key.as_str(), value) {
            ("name", Value::Text(n)) => name = Some(n),
            ("name", _) => return Err("function name must be a string".to_string()),
            ("arguments" | "args", Value::List(list)) => {
                arguments = list
                    .into_iter()
                    .map(|v| match v {
                        Value::Text(t) => Ok(t),
                        _ => Err("arguments must be strings".to_string()),
                    })
                    .collect::<Result<_, _>>()?;
            }
            ("arguments" | "args", Value::Text(t)) => arguments = vec![t],
            ("arguments" | "args", _) => return Err("arguments must be a list".to_string()),
            _ => {}
        }
    }
    match name {
        Some(name) if !name.trim().is_empty() => Ok(FunctionCall { name, arguments }),
        _ => Err("function entry has no name".to_string()),
    }
}

fn quote(s: &str) -> String {
    let escaped = s.replace('\\', "\\\\").replace('\'', "\\'");
    format!("'{escaped}'")
}

fn format_entry(call: &FunctionCall) -> String {
    let args = call.arguments.iter().map(|a| quote(a)).collect::<Vec<_>>().join(", ");
    format!("{{'name':{}, 'arguments': [{args}]}}", quote(&call.name))
}

/// Renders a call the way the prompt's examples show it, e.g.
/// `Function: [{'name':'mineBlock', 'arguments': ['oak_log']}]`.
pub fn format_call(call: &FunctionCall) -> String {
    format_calls(std::slice::from_ref(call))
}

pub fn format_calls(calls: &[FunctionCall]) -> String {
    let entries = calls.iter().map(format_entry).collect::<Vec<_>>().join(", ");
    format!("Function: [{entries}]")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(name: &str, args: &[&str]) -> FunctionCall {
        FunctionCall { name: name.to_string(), arguments: args.iter().map(|s| s.to_string()).collect() }
    }

    #[test]
    fn parses_the_prompt_example() {
        let out = parse_npc_output("Sure! Function: [{'name':'mineBlock', 'arguments': ['oak_log']}]");
        assert_eq!(out.speech, "Sure!");
        assert_eq!(out.calls, vec![call("mineBlock", &["oak_log"])]);
        assert!(out.warnings.is_empty());
    }

    #[test]
    fn plain_text_has_no_calls() {
        let out = parse_npc_output("  The island is high up in the sky, above our village. ");
        assert_eq!(out.speech, "The island is high up in the sky, above our village.");
        assert!(out.calls.is_empty());
        assert!(out.warnings.is_empty());
    }

    #[test]
    fn accepts_json_quotes_and_several_blocks() {
        let raw = "On it.\nFunction: [{\"name\": \"goToPlayer\", \"arguments\": []}]\nThen: function: [{'name':'dropItem','arguments':['iron_pickaxe'],}]";
        let out = parse_npc_output(raw);
        assert_eq!(out.calls, vec![call("goToPlayer", &[]), call("dropItem", &["iron_pickaxe"])]);
        assert_eq!(out.speech, "On it. Then:");
    }

    #[test]
    fn multiple_calls_in_one_list() {
        let out = parse_npc_output("Function: [{'name':'equipItem', 'arguments': ['iron_sword']}, {'name':'defendSelf', 'arguments': ['']}]");
        assert_eq!(out.calls, vec![call("equipItem", &["iron_sword"]), call("defendSelf", &[""])]);
        assert_eq!(out.speech, "");
    }

    #[test]
    fn malformed_blocks_warn_and_keep_speech() {
        let out = parse_npc_output("Let me help! Function: [{'name': mineBlock 'arguments': ['dirt']}] Done.");
        assert!(out.calls.is_empty());
        assert_eq!(out.warnings.len(), 1);
        assert_eq!(out.speech, "Let me help! Done.");

        let out = parse_npc_output("Hold on. Function: [{'name':'mineBlock'\nI'll be right back.");
        assert!(out.calls.is_empty());
        assert_eq!(out.warnings.len(), 1);
        assert_eq!(out.speech, "Hold on. I'll be right back.");

        let out = parse_npc_output("Function: mineBlock(dirt)");
        assert!(out.calls.is_empty());
        assert_eq!(out.warnings.len(), 1);
    }

    #[test]
    fn function_returns_lines_are_not_blocks() {
        let out = parse_npc_output("Function_Returns: mined successfully");
        assert!(out.calls.is_empty());
        assert!(out.warnings.is_empty());
    }

    #[test]
    fn format_matches_prompt_style() {
        assert_eq!(
            format_call(&call("mineBlock", &["oak_log"])),
            "Function: [{'name':'mineBlock', 'arguments': ['oak_log']}]"
        );
        assert_eq!(format_call(&call("goToPlayer", &[])), "Function: [{'name':'goToPlayer', 'arguments': []}]");
    }

    #[test]
    fn quotes_inside_arguments_survive() {
        let c = call("pointToLocation", &["Elena's \\ house"]);
        let out = parse_npc_output(&format_call(&c));
        assert_eq!(out.calls, vec![c]);
    }
}
