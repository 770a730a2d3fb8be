// SPDX-License-Identifier: Apache-2.0

//! VCD reader and writer for the subset documented in `docs/vcd.md`.

use std::collections::HashMap;
use std::io::Write;

use thiserror::Error;

use super::HierNode;
use crate::expr::{mask, Value};

#[derive(Debug, Error)]
pub enum VcdError {
    #[error("line {line}: malformed header: {message}")]
    Header { line: usize, message: String },
    #[error("line {line}: value change before $enddefinitions")]
    ChangeBeforeDefinitions { line: usize },
    #[error("line {line}: value `{value}` is wider than `{name}` ({width} bits)")]
    WidthOverflow {
        line: usize,
        name: String,
        width: u32,
        value: String,
    },
    #[error("line {line}: {message}")]
    Body { line: usize, message: String },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceSignal {
    /// Full dotted name built from the enclosing scopes.
    pub name: String,
    pub width: u32,
}

/// Parsed trace. Signals declared with the same identifier code share one
/// change list.
#[derive(Clone, Debug, Default)]
pub struct TraceStore {
    pub timescale: String,
    pub signals: Vec<TraceSignal>,
    /// Change list index of each signal.
    list_of: Vec<usize>,
    /// Strictly increasing in time.
    lists: Vec<Vec<(u64, Value)>>,
    by_name: HashMap<String, usize>,
    /// Last timestamp in the file.
    pub end_time: u64,
}

impl TraceStore {
    pub fn signal(&self, name: &str) -> Option<usize> {
        self.by_name.get(name).copied()
    }

    pub fn changes(&self, signal: usize) -> &[(u64, Value)] {
        &self.lists[self.list_of[signal]]
    }

    /// Number of distinct change lists.
    pub fn list_count(&self) -> usize {
        self.lists.len()
    }

    pub fn list_of(&self, signal: usize) -> usize {
        self.list_of[signal]
    }

    pub fn list(&self, list: usize) -> &[(u64, Value)] {
        &self.lists[list]
    }

    /// Most recent change at or before `t`; unknown before the first one.
    pub fn value_at(&self, signal: usize, t: u64) -> Value {
        let ch = self.changes(signal);
        match ch.partition_point(|(ct, _)| *ct <= t) {
            0 => Value::unknown(self.signals[signal].width),
            n => ch[n - 1].1,
        }
    }

    pub fn hierarchy(&self) -> HierNode {
        HierNode::from_signals(self.signals.iter().map(|s| s.name.as_str()))
    }
}

struct Tokens<'a> {
    lines: std::iter::Enumerate<std::str::Lines<'a>>,
    current: std::str::SplitWhitespace<'a>,
    line: usize,
}

impl<'a> Tokens<'a> {
    fn new(text: &'a str) -> Self {
        Tokens {
            lines: text.lines().enumerate(),
            current: "".split_whitespace(),
            line: 0,
        }
    }

    fn next(&mut self) -> Option<&'a str> {
        loop {
            if let Some(t) = self.current.next() {
                return Some(t);
            }
            let (n, l) = self.lines.next()?;
            self.line = n + 1;
            self.current = l.split_whitespace();
        }
    }

    /// Tokens up to the closing `$end`.
    fn until_end(&mut self) -> Option<Vec<&'a str>> {
        let mut out = Vec::new();
        loop {
            match self.next()? {
                "$end" => return Some(out),
                t => out.push(t),
            }
        }
    }
}

pub fn parse_vcd_file(path: &std::path::Path) -> Result<TraceStore, VcdError> {
    parse_vcd(&std::fs::read_to_string(path)?)
}

pub fn parse_vcd(text: &str) -> Result<TraceStore, VcdError> {
    let mut toks = Tokens::new(text);
    let mut store = TraceStore::default();
    let mut codes: HashMap<&str, usize> = HashMap::new();
    let mut list_width: Vec<u32> = Vec::new();
    let mut scopes: Vec<&str> = Vec::new();

    macro_rules! header_err {
        ($($arg:tt)*) => {
            return Err(VcdError::Header { line: toks.line, message: format!($($arg)*) })
        };
    }

    loop {
        let Some(tok) = toks.next() else {
            header_err!("missing $enddefinitions");
        };
        match tok {
            "$date" | "$version" | "$comment" => {
                if toks.until_end().is_none() {
                    header_err!("unterminated {tok}");
                }
            }
            "$timescale" => match toks.until_end() {
                Some(parts) if !parts.is_empty() => store.timescale = parts.concat(),
                _ => header_err!("bad $timescale"),
            },
            "$scope" => match toks.until_end().as_deref() {
                Some([_kind, name]) => scopes.push(name),
                _ => header_err!("bad $scope"),
            },
            "$upscope" => {
                if toks.until_end().is_none_or(|p| !p.is_empty()) || scopes.pop().is_none() {
                    header_err!("unbalanced $upscope");
                }
            }
            "$var" => {
                let Some(parts) = toks.until_end() else {
                    header_err!("unterminated $var");
                };
                let [kind, width, code, reference, ..] = parts[..] else {
                    header_err!("bad $var");
                };
                if kind == "real" || kind == "realtime" {
                    header_err!("real variables are not supported");
                }
                let width: u32 = match width.parse() {
                    Ok(w) if (1..=64).contains(&w) => w,
                    _ => header_err!("unsupported width `{width}`"),
                };
                let mut name = scopes.join(".");
                if !name.is_empty() {
                    name.push('.');
                }
                name.push_str(reference);
                if store.by_name.contains_key(&name) {
                    header_err!("`{name}` declared twice");
                }
                let list = match codes.get(code) {
                    Some(&l) => {
                        if list_width[l] != width {
                            header_err!("identifier `{code}` declared with different widths");
                        }
                        l
                    }
                    None => {
                        codes.insert(code, store.lists.len());
                        store.lists.push(Vec::new());
                        list_width.push(width);
                        store.lists.len() - 1
                    }
                };
                store.by_name.insert(name.clone(), store.signals.len());
                store.signals.push(TraceSignal { name, width });
                store.list_of.push(list);
            }
            "$enddefinitions" => {
                if toks.until_end().is_none() {
                    header_err!("unterminated $enddefinitions");
                }
                if !scopes.is_empty() {
                    header_err!("unclosed $scope");
                }
                break;
            }
            t if t.starts_with('#') || t.starts_with("$dump") || !t.starts_with('$') => {
                return Err(VcdError::ChangeBeforeDefinitions { line: toks.line });
            }
            t => header_err!("unknown command `{t}`"),
        }
    }

    // Name of one signal per list, for messages.
    let mut list_name = vec![""; store.lists.len()];
    for (s, &l) in store.list_of.iter().enumerate().rev() {
        list_name[l] = &store.signals[s].name;
    }
    let mut time = 0u64;
    while let Some(tok) = toks.next() {
        let line = toks.line;
        let body_err = |message: String| VcdError::Body { line, message };
        let (bits, code) = match tok.as_bytes()[0] {
            b'#' => {
                let t: u64 = tok[1..]
                    .parse()
                    .map_err(|_| body_err(format!("bad timestamp `{tok}`")))?;
                if t < time {
                    return Err(body_err(format!("timestamp {t} goes backwards")));
                }
                time = t;
                store.end_time = t;
                continue;
            }
            b'$' => {
                match tok {
                    "$dumpvars" | "$dumpall" | "$dumpon" | "$dumpoff" | "$end" => {}
                    "$comment" => {
                        toks.until_end().ok_or_else(|| body_err("unterminated $comment".into()))?;
                    }
                    _ => return Err(body_err(format!("unexpected `{tok}`"))),
                }
                continue;
            }
            b'b' | b'B' => {
                let code = toks
                    .next()
                    .ok_or_else(|| body_err("vector change without identifier".into()))?;
                (&tok[1..], code)
            }
            b'0' | b'1' | b'x' | b'X' | b'z' | b'Z' => (&tok[..1], &tok[1..]),
            b'r' | b'R' => return Err(body_err("real value changes are not supported".into())),
            _ => return Err(body_err(format!("unexpected `{tok}`"))),
        };
        let &list = codes
            .get(code)
            .ok_or_else(|| body_err(format!("unknown identifier `{code}`")))?;
        let width = list_width[list];
        let value = parse_bits(bits, width).map_err(|overflow| {
            if overflow {
                VcdError::WidthOverflow {
                    line,
                    name: list_name[list].to_string(),
                    width,
                    value: bits.to_string(),
                }
            } else {
                body_err(format!("bad value `{bits}`"))
            }
        })?;
        let changes = &mut store.lists[list];
        match changes.last_mut() {
            Some(last) if last.0 == time => last.1 = value,
            _ => changes.push((time, value)),
        }
    }
    Ok(store)
}

/// `Err(true)` on overflow, `Err(false)` on bad characters.
fn parse_bits(bits: &str, width: u32) -> Result<Value, bool> {
    if bits.is_empty() {
        return Err(false);
    }
    let mut v = 0u64;
    let mut unknown = false;
    for c in bits.bytes() {
        match c {
            b'0' | b'1' => v = (v << 1) | (c - b'0') as u64,
            b'x' | b'X' | b'z' | b'Z' => {
                unknown = true;
                v <<= 1;
            }
            _ => return Err(false),
        }
    }
    if bits.len() > width as usize {
        let extra = &bits[..bits.len() - width as usize];
        // Leading zeros beyond the width are harmless.
        if extra.bytes().any(|c| c != b'0') || v > mask(width) {
            return Err(true);
        }
    }
    Ok(if unknown { Value::unknown(width) } else { Value::new(width, v) })
}

fn id_code(mut n: usize) -> String {
    let mut s = String::new();
    loop {
        s.push((b'!' + (n % 94) as u8) as char);
        n /= 94;
        if n == 0 {
            return s;
        }
        n -= 1;
    }
}

/// Write `signals` and their `changes` (per timestamp, signal index and
/// value) as VCD.
pub fn write_vcd(out: &mut impl Write, signals: &[TraceSignal], changes: &[(u64, Vec<(usize, u64)>)]) -> std::io::Result<()> {
    writeln!(out, "$timescale 1ns $end")?;
    let codes: Vec<String> = (0..signals.len()).map(id_code).collect();
    let index: HashMap<&str, usize> = signals.iter().enumerate().map(|(i, s)| (s.name.as_str(), i)).collect();
    let tree = HierNode::from_signals(signals.iter().map(|s| s.name.as_str()));

    fn scope(
        out: &mut impl Write,
        node: &HierNode,
        signals: &[TraceSignal],
        codes: &[String],
        index: &HashMap<&str, usize>,
    ) -> std::io::Result<()> {
        let named = !node.name.is_empty();
        if named {
            writeln!(out, "$scope module {} $end", node.leaf_name())?;
        }
        for leaf in &node.signals {
            let full = if named { format!("{}.{leaf}", node.name) } else { leaf.clone() };
            let i = index[full.as_str()];
            writeln!(out, "$var wire {} {} {leaf} $end", signals[i].width, codes[i])?;
        }
        for c in &node.children {
            scope(out, c, signals, codes, index)?;
        }
        if named {
            writeln!(out, "$upscope $end")?;
        }
        Ok(())
    }
    scope(out, &tree, signals, &codes, &index)?;
    writeln!(out, "$enddefinitions $end")?;
    for (t, ch) in changes {
        writeln!(out, "#{t}")?;
        for &(i, v) in ch {
            if signals[i].width == 1 {
                writeln!(out, "{v}{}", codes[i])?;
            } else {
                writeln!(out, "b{v:b} {}", codes[i])?;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "$timescale 1 ns $end
$scope module tb $end
$var wire 1 ! clk $end
$scope module dut $end
$var reg 4 \" a [3:0] $end
$upscope $end
$upscope $end
$enddefinitions $end
#0
$dumpvars
0!
bx \"
$end
#5
1!
#10
b11 \"
";

    #[test]
    fn parses_minimal_trace() {
        let s = parse_vcd(MINIMAL).unwrap();
        assert_eq!(s.timescale, "1ns");
        let clk = s.signal("tb.clk").unwrap();
        assert_eq!(s.changes(clk).len(), 2);
        let a = s.signal("tb.dut.a").unwrap();
        assert!(!s.value_at(a, 0).is_known());
        assert_eq!(s.value_at(a, 15), Value::new(4, 3));
        assert_eq!(s.end_time, 10);
        let h = s.hierarchy();
        assert_eq!(h.children[0].name, "tb");
        assert_eq!(h.children[0].children[0].name, "tb.dut");
    }

    #[test]
    fn unknown_before_first_change() {
        let s = parse_vcd("$var wire 1 ! c $end $enddefinitions $end #3 1!").unwrap();
        assert!(!s.value_at(0, 0).is_known());
        assert_eq!(s.value_at(0, 3), Value::new(1, 1));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            parse_vcd("$var wire 1 ! c $end 1! $enddefinitions $end"),
            Err(VcdError::ChangeBeforeDefinitions { .. })
        ));
        assert!(matches!(
            parse_vcd("$var wire 2 ! c $end $enddefinitions $end #0 b111 !"),
            Err(VcdError::WidthOverflow { .. })
        ));
        assert!(matches!(parse_vcd("$var wire 1 ! c"), Err(VcdError::Header { .. })));
        assert!(matches!(parse_vcd("$scope module a $end $enddefinitions $end"), Err(VcdError::Header { .. })));
        assert!(matches!(
            parse_vcd("$var wire 1 ! c $end $enddefinitions $end #5 #4"),
            Err(VcdError::Body { line: 1, .. })
        ));
        assert!(matches!(
            parse_vcd("$enddefinitions $end\n#0\n1?"),
            Err(VcdError::Body { line: 3, .. })
        ));
    }

    #[test]
    fn padded_vectors_and_same_time_changes() {
        let s = parse_vcd("$var wire 2 ! c $end $enddefinitions $end #0 b0001 ! b10 !").unwrap();
        assert_eq!(s.changes(0), &[(0, Value::new(2, 2))]);
    }

    #[test]
    fn aliased_codes_share_changes() {
        let s = parse_vcd("$var wire 1 ! a $end $var wire 1 ! b $end $enddefinitions $end #0 1!").unwrap();
        assert_eq!(s.value_at(1, 0), Value::new(1, 1));
        assert_eq!(s.list_count(), 1);
    }

    #[test]
    fn id_codes_are_unique() {
        let codes: std::collections::HashSet<String> = (0..20_000).map(id_code).collect();
        assert_eq!(codes.len(), 20_000);
        assert_eq!(id_code(0), "!");
        assert_eq!(id_code(94), "!!");
    }

    #[test]
    fn header_only_for_empty_run() {
        let sig = [TraceSignal {
            name: "top.a".into(),
            width: 3,
        }];
        let mut buf = Vec::new();
        write_vcd(&mut buf, &sig, &[]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.ends_with("$enddefinitions $end\n"));
        let s = parse_vcd(&text).unwrap();
        assert!(s.changes(0).is_empty());
    }
}
